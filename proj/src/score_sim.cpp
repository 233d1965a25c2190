#include "bsmix/score_sim.hpp"

#include <algorithm>
#include <cmath>

#include "bsmix/error.hpp"
#include "bsmix/parallel.hpp"

namespace bsmix {

void validate(const SimEnvConfig& env) {
  if (env.initial_scores.size() < 2) throw ConfigError("sim env needs at least 2 prompts");
  for (double s : env.initial_scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("sim env initial scores must lie in [0, 1]");
  }
  auto nonneg_finite = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!nonneg_finite(env.gain) || !nonneg_finite(env.decay) || !nonneg_finite(env.noise_vol)) {
    throw ConfigError("sim env gain, decay and noise_vol must be finite and >= 0");
  }
}

std::vector<double> sim_step(std::span<const double> scores, Conditioning chosen,
                             const SimEnvConfig& env, std::span<const double> draws) {
  const std::size_t n = scores.size();
  if (draws.size() != n) throw DomainError("sim_step: one draw per prompt required");
  if (chosen && *chosen >= n) throw DomainError("sim_step: chosen prompt out of range");

  std::vector<double> next(scores.begin(), scores.end());
  for (std::size_t p = 0; p < n; ++p) {
    const double noise = env.noise_vol * draws[p];
    if (!chosen) {
      next[p] += env.gain / static_cast<double>(n) + noise;
    } else if (p == *chosen) {
      next[p] += env.gain + noise;
    } else {
      next[p] -= env.decay + noise;
    }
    next[p] = std::clamp(next[p], 0.0, 1.0);
  }
  return next;
}

ScoreSimEnvironment::ScoreSimEnvironment(SimEnvConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  scores_ = cfg_.initial_scores;
}

void ScoreSimEnvironment::reset(std::uint64_t seed) {
  scores_ = cfg_.initial_scores;
  gen_.seed(seed);
  normal_.reset();
}

std::vector<double> ScoreSimEnvironment::step(std::size_t /*step*/, Conditioning cond) {
  std::vector<double> draws(scores_.size(), 0.0);
  if (cfg_.noise_vol > 0.0) {
    for (double& z : draws) z = normal_(gen_);
  }
  scores_ = sim_step(scores_, cond, cfg_, draws);
  return scores_;
}

TournamentResult run_tournament(const SimEnvConfig& env, std::span<const Strategy> strategies,
                                const MixerConfig& mixer_cfg, const DiffusionSchedule& schedule,
                                std::size_t seeds, std::uint64_t master_seed,
                                std::size_t max_threads) {
  validate(env);
  if (strategies.empty()) throw ConfigError("tournament needs at least one strategy");
  if (seeds == 0) throw ConfigError("tournament needs at least one seed");

  TournamentResult result;
  {
    ScoreSimEnvironment calib(env);
    result.mixer = resolve_strike(calib, mixer_cfg, schedule, master_seed);
  }

  const std::size_t runs = strategies.size() * seeds;
  std::vector<Trace> flat(runs);
  parallel_for(runs, thread_budget(max_threads), [&](std::size_t job) {
    const std::size_t s = job / seeds;
    const std::size_t k = job % seeds;
    ScoreSimEnvironment local(env);
    flat[job] = run_strategy(local, strategies[s], result.mixer, schedule,
                             derive_seed(master_seed, k));
  });

  const std::size_t n = env.initial_scores.size();
  result.traces.resize(strategies.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    auto first = flat.begin() + static_cast<std::ptrdiff_t>(s * seeds);
    result.traces[s].assign(std::make_move_iterator(first),
                            std::make_move_iterator(first + static_cast<std::ptrdiff_t>(seeds)));
    const auto summary = aggregate(result.traces[s], n);
    result.summaries.push_back(summary.front());
  }
  return result;
}

}  // namespace bsmix
