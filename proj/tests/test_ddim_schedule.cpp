#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "bsmix/ddim_schedule.hpp"
#include "bsmix/error.hpp"
#include "golden/golden_values.hpp"
#include "support.hpp"

using namespace bsmix;

namespace {

// Two inference steps over hand-picked cumulative alphas.
DiffusionSchedule handmade(double a_t, double a_prev) {
  DiffusionSchedule s;
  s.config = {0.1, 0.1, 2, 2};
  s.betas = {0.1, 0.1};
  s.alpha_bars = {a_prev, a_t};
  s.inference_timesteps = {1, 0};
  return s;
}

}  // namespace

TEST_CASE("default schedule shape") {
  const auto s = build_schedule();
  REQUIRE(s.betas.size() == 1000);
  REQUIRE(s.num_inference_steps() == 100);
  CHECK(s.inference_timesteps.front() == 990);
  CHECK(s.inference_timesteps.back() == 0);
  for (std::size_t i = 1; i < 100; ++i) {
    CHECK(s.inference_timesteps[i - 1] - s.inference_timesteps[i] == 10);
  }
  CHECK(test::rel_close(s.betas.front(), 0.00085, 1e-15));
  CHECK(test::rel_close(s.betas.back(), 0.012, 1e-15));
  CHECK(test::rel_close(s.alpha_bars.front(), 1.0 - 0.00085, 1e-15));
  CHECK(test::rel_close(s.alpha_bars.back(), golden::kAlphaBarLast, 1e-10));
  CHECK(s.alpha_bar_prev(99) == 1.0);
  CHECK(s.alpha_bar_prev(0) == s.alpha_bars[980]);
}

TEST_CASE("default schedule matches the high-precision table") {
  const auto s = build_schedule();
  std::ifstream in(std::string(BSMIX_TEST_DIR) + "/golden/schedule_default.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  CHECK(line == "kind,index,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind, idx, val;
    std::getline(ls, kind, ',');
    std::getline(ls, idx, ',');
    std::getline(ls, val, ',');
    const std::size_t i = std::stoul(idx);
    const double ref = std::stod(val);
    double got = 0.0;
    if (kind == "beta") got = s.betas.at(i);
    else if (kind == "alpha_bar") got = s.alpha_bars.at(i);
    else if (kind == "variance") got = s.variances.at(i);
    else FAIL("unknown kind " << kind);
    CAPTURE(line);
    CHECK(test::rel_close(got, ref, 1e-10, 1e-300));
    ++rows;
  }
  CHECK(rows == 2100);
}

TEST_CASE("step variance and sigma") {
  const auto s = build_schedule();
  CHECK(step_variance(s, 99) == 0.0);
  CHECK(sigma_at(s, 99) == kSigmaFloor);
  CHECK(test::rel_close(step_variance(s, 0), golden::kVarianceStep0, 1e-12));
  CHECK(test::rel_close(sigma_at(s, 0), golden::kSigmaStep0, 1e-12));
  CHECK_THROWS_AS(step_variance(s, 100), DomainError);
  CHECK_THROWS_AS(sigma_at(s, 100), DomainError);

  SUBCASE("equal alphas give zero variance") {
    const auto h = handmade(0.5, 0.5);
    CHECK(step_variance(h, 0) == 0.0);
  }
  SUBCASE("variance 0.0025 gives sigma 0.05") {
    const auto h = handmade(0.4975 / 0.9975, 0.5);
    CHECK(step_variance(h, 0) == doctest::Approx(0.0025).epsilon(1e-12));
    CHECK(std::abs(sigma_at(h, 0) - 0.05) <= 1e-12);
  }
}

TEST_CASE("schedule invariants over random configs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    ScheduleConfig cfg;
    cfg.beta_start = 1e-5 + 0.01 * u(rng);
    cfg.beta_end = cfg.beta_start + 0.05 * u(rng);
    cfg.num_train_steps = 10 + static_cast<std::size_t>(990 * u(rng));
    cfg.num_inference_steps = 1 + static_cast<std::size_t>((cfg.num_train_steps - 1) * u(rng));
    const auto s = build_schedule(cfg);
    for (std::size_t i = 1; i < s.alpha_bars.size(); ++i) CHECK(s.alpha_bars[i] < s.alpha_bars[i - 1]);
    for (std::size_t i = 0; i < s.num_inference_steps(); ++i) {
      CHECK(s.variances[i] >= 0.0);
      CHECK(sigma_at(s, i) >= kSigmaFloor);
    }
    CHECK(step_variance(s, s.num_inference_steps() - 1) == 0.0);
    CHECK(s.inference_timesteps.back() == 0);
  }
}

TEST_CASE("predict_x0") {
  Eigen::VectorXd x(3), eps(3);
  x << 0.4, -1.2, 2.0;
  eps << 0.3, 0.1, -0.7;
  CHECK((predict_x0(x, Eigen::VectorXd::Zero(3), 0.25) - x / 0.5).norm() <= 1e-15);
  CHECK((predict_x0(x, eps, 1.0) - x).norm() == 0.0);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> ua(1e-3, 1.0);
  for (int n = 0; n < 1000; ++n) {
    Eigen::VectorXd x0(4), e(4);
    for (int k = 0; k < 4; ++k) {
      x0[k] = z(rng);
      e[k] = z(rng);
    }
    const double a = ua(rng);
    const Eigen::VectorXd xt = std::sqrt(a) * x0 + std::sqrt(1.0 - a) * e;
    CHECK((predict_x0(xt, e, a) - x0).norm() <= 1e-10 * (1.0 + x0.norm()));
  }
  CHECK_THROWS_AS(predict_x0(x, eps, 0.0), DomainError);
  CHECK_THROWS_AS(predict_x0(x, eps, 1.5), DomainError);
  CHECK_THROWS_AS(predict_x0(x, Eigen::VectorXd::Zero(2), 0.5), DomainError);
}

TEST_CASE("time to expiry") {
  CHECK(time_to_expiry(100, 0) == 100);
  CHECK(time_to_expiry(100, 99) == 1);
  CHECK(time_to_expiry(100, 100) == 0);
  CHECK_THROWS_AS(time_to_expiry(100, 101), DomainError);
}

TEST_CASE("invalid configs") {
  CHECK_THROWS_AS(build_schedule({0.0, 0.012, 1000, 100}), ConfigError);
  CHECK_THROWS_AS(build_schedule({0.02, 0.012, 1000, 100}), ConfigError);
  CHECK_THROWS_AS(build_schedule({0.00085, 1.0, 1000, 100}), ConfigError);
  CHECK_THROWS_AS(build_schedule({0.00085, 0.012, 0, 100}), ConfigError);
  CHECK_THROWS_AS(build_schedule({0.00085, 0.012, 1000, 0}), ConfigError);
  CHECK_THROWS_AS(build_schedule({0.00085, 0.012, 10, 100}), ConfigError);
}
