#include <iostream>
#include <string>
#include <vector>

#include "bsmix/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bsmix::cli::run(args, std::cout, std::cerr);
}
