#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "bsmix/error.hpp"
#include "bsmix/metrics.hpp"
#include "bsmix/score_sim.hpp"
#include "oracles/oracles.hpp"

using namespace bsmix;
using nlohmann::json;

namespace {
const std::vector<double> kNoDraws{0.0, 0.0};

MixerConfig mixer_for(std::size_t steps) {
  MixerConfig m;
  m.total_steps = steps;
  return m;
}
}  // namespace

TEST_CASE("sim_step examples") {
  SimEnvConfig env{{0.2, 0.2}, 0.02, 0.005, 0.0};
  const std::vector<double> s{0.2, 0.2};
  auto next = sim_step(s, 0, env, kNoDraws);
  CHECK(next[0] == doctest::Approx(0.22).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(0.195).epsilon(1e-15));

  next = sim_step(s, kCombined, env, kNoDraws);
  CHECK(next[0] == doctest::Approx(0.21).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(0.21).epsilon(1e-15));

  const std::vector<double> top{0.999, 0.001};
  next = sim_step(top, 0, env, kNoDraws);
  CHECK(next[0] == 1.0);
  CHECK(next[1] == 0.0);

  env.noise_vol = 0.5;
  const std::vector<double> big{4.0, -4.0};
  next = sim_step(s, 1, env, big);
  CHECK(next[0] == 0.0);
  CHECK(next[1] == 0.0);

  CHECK_THROWS_AS(sim_step(s, 2, env, kNoDraws), DomainError);
  CHECK_THROWS_AS(sim_step(s, 0, env, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("noise has the configured mean increment") {
  SimEnvConfig env{{0.5, 0.5}, 0.02, 0.005, 0.01};
  ScoreSimEnvironment sim(env);
  std::vector<double> d0, d1;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    sim.reset(seed);
    const auto next = sim.step(0, 0);
    d0.push_back(next[0] - 0.5);
    d1.push_back(next[1] - 0.5);
  }
  CHECK(std::abs(oracle::brute_mean(d0) - 0.02) <= 3.0 * oracle::brute_stderr(d0));
  CHECK(std::abs(oracle::brute_mean(d1) + 0.005) <= 3.0 * oracle::brute_stderr(d1));
}

TEST_CASE("environment stays in range and is reproducible") {
  SimEnvConfig env{{0.05, 0.95, 0.5}, 0.1, 0.1, 0.2};
  ScoreSimEnvironment sim(env);
  sim.reset(3);
  std::vector<std::vector<double>> first;
  for (std::size_t i = 0; i < 200; ++i) {
    first.push_back(sim.step(i, i % 3));
    for (double v : first.back()) CHECK((v >= 0.0 && v <= 1.0));
  }
  sim.reset(3);
  for (std::size_t i = 0; i < 200; ++i) CHECK(sim.step(i, i % 3) == first[i]);
}

TEST_CASE("invalid sim configs") {
  CHECK_THROWS_AS(ScoreSimEnvironment({{0.2}, 0.02, 0.005, 0.01}), ConfigError);
  CHECK_THROWS_AS(ScoreSimEnvironment({{0.2, 1.2}, 0.02, 0.005, 0.01}), ConfigError);
  CHECK_THROWS_AS(ScoreSimEnvironment({{0.2, 0.2}, -0.02, 0.005, 0.01}), ConfigError);
  CHECK_THROWS_AS(ScoreSimEnvironment({{0.2, 0.2}, 0.02, 0.005, NAN}), ConfigError);
}

TEST_CASE("ten-step zero-noise trace matches the reference") {
  std::ifstream in(std::string(BSMIX_TEST_DIR) + "/golden/sim_trace_10step.json");
  REQUIRE(in);
  const json g = json::parse(in);
  SimEnvConfig env;
  env.initial_scores = g["initial_scores"].get<std::vector<double>>();
  env.gain = g["gain"];
  env.decay = g["decay"];
  env.noise_vol = g["noise_vol"];
  ScoreSimEnvironment sim(env);
  const auto s = build_schedule({0.00085, 0.012, 1000, 10});
  const auto t = run_strategy(sim, Strategy::black_scholes(), mixer_for(10), s, 0);
  REQUIRE(t.decisions.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& gd = g["decisions"][i];
    const auto& d = t.decisions[i];
    CHECK(d.raw_scores == gd["raw_scores"].get<std::vector<double>>());
    CHECK(d.chosen == gd["chosen"].get<std::size_t>());
    CHECK(d.tte == gd["tte"].get<double>());
    CHECK(d.conditioning ==
          (gd["conditioning"].is_null() ? kCombined : Conditioning(gd["conditioning"].get<std::size_t>())));
  }
  CHECK(t.final_scores == g["final_scores"].get<std::vector<double>>());
}

TEST_CASE("tournament") {
  const auto sched = build_schedule({0.00085, 0.012, 1000, 100});
  SimEnvConfig env;

  SUBCASE("one row per strategy with paired seeds") {
    const std::vector<Strategy> strategies{Strategy::black_scholes(), Strategy::single(0),
                                           Strategy::alternating()};
    const auto r = run_tournament(env, strategies, mixer_for(100), sched, 20, 7);
    REQUIRE(r.summaries.size() == 3);
    CHECK(r.summaries[0].strategy == "black_scholes");
    CHECK(r.summaries[1].strategy == "single:0");
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(r.summaries[s].seeds == 20);
      for (std::size_t k = 0; k < 20; ++k) CHECK(r.traces[s][k].seed == derive_seed(7, k));
    }
    CHECK(r.summaries[2].balance_mean > r.summaries[1].balance_mean);
  }

  SUBCASE("single strategy single seed") {
    const std::vector<Strategy> one{Strategy::lerp()};
    const auto r = run_tournament(env, one, mixer_for(100), sched, 1, 0);
    REQUIRE(r.summaries.size() == 1);
    CHECK(r.summaries[0].balance_se == 0.0);
  }

  SUBCASE("black-scholes and forecast clip-min agree trace for trace") {
    const std::vector<Strategy> pair{Strategy::black_scholes(),
                                     Strategy::clip_min(ScoreWiring::forecast)};
    const auto r = run_tournament(env, pair, mixer_for(100), sched, 30, 1);
    for (std::size_t k = 0; k < 30; ++k) {
      for (std::size_t i = 0; i < 100; ++i) {
        CHECK(r.traces[0][k].decisions[i].chosen == r.traces[1][k].decisions[i].chosen);
      }
    }
  }

  SUBCASE("thread count does not change results") {
    const std::vector<Strategy> strategies{Strategy::black_scholes(), Strategy::clip_min()};
    const auto a = run_tournament(env, strategies, mixer_for(100), sched, 12, 5, 1);
    const auto b = run_tournament(env, strategies, mixer_for(100), sched, 12, 5, 4);
    CHECK(a.traces == b.traces);
  }

  SUBCASE("calibrated strike") {
    auto m = mixer_for(100);
    m.strike_mode = StrikeMode::calibrated;
    m.calibration_runs = 8;
    const std::vector<Strategy> one{Strategy::black_scholes()};
    const auto r = run_tournament(env, one, m, sched, 2, 0);
    // Combined conditioning moves every score up by gain / 2 per step before clamping.
    CHECK(r.mixer.strike == doctest::Approx(100.0 * std::min(1.0, 0.2 + 100 * 0.01)).epsilon(0.05));
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(run_tournament(env, std::vector<Strategy>{}, mixer_for(100), sched, 1), ConfigError);
    const std::vector<Strategy> one{Strategy::lerp()};
    CHECK_THROWS_AS(run_tournament(env, one, mixer_for(100), sched, 0), ConfigError);
  }
}
