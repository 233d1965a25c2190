#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsmix/ddim_schedule.hpp"

namespace bsmix {

// Conditioning applied during one denoising step: a prompt index, or
// std::nullopt for the equal-weight combination of all prompts.
using Conditioning = std::optional<std::size_t>;
inline constexpr Conditioning kCombined = std::nullopt;

enum class StrategyKind { black_scholes, clip_min, alternating, stepwise, lerp, single };

// Which scores the CLIP-min baseline consumes. `lagged` uses the scores of
// the previous iteration; `forecast` uses the same freshly extrapolated
// scores the Black-Scholes controller sees.
enum class ScoreWiring { lagged, forecast };

struct Strategy {
  StrategyKind kind = StrategyKind::black_scholes;
  std::size_t switch_step = 12;  // stepwise only
  std::size_t prompt = 0;        // single only
  ScoreWiring wiring = ScoreWiring::lagged;  // clip_min only

  static Strategy black_scholes() { return {}; }
  static Strategy clip_min(ScoreWiring w = ScoreWiring::lagged) {
    return {StrategyKind::clip_min, 12, 0, w};
  }
  static Strategy alternating() { return {StrategyKind::alternating}; }
  static Strategy stepwise(std::size_t switch_step = 12) {
    return {StrategyKind::stepwise, switch_step};
  }
  static Strategy lerp() { return {StrategyKind::lerp}; }
  static Strategy single(std::size_t prompt) { return {StrategyKind::single, 12, prompt}; }

  // Canonical names: black_scholes, clip_min, clip_min:forecast, alternating,
  // stepwise:<k>, lerp, single:<p>.
  std::string name() const;
  static Strategy parse(std::string_view text);

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

std::vector<Strategy> parse_strategy_list(std::string_view comma_separated);

enum class StrikeMode { fixed, calibrated };

struct MixerConfig {
  std::size_t num_prompts = 2;
  std::size_t total_steps = 100;
  double strike = 25.0;            // score points, 0.25 x 100
  std::optional<double> rate;      // per step; 1 / total_steps when unset
  double score_scale = 100.0;
  StrikeMode strike_mode = StrikeMode::fixed;
  std::size_t calibration_runs = 16;

  double effective_rate() const;
};

void validate(const MixerConfig& cfg);

struct StepDecision {
  std::size_t step = 0;
  Conditioning conditioning;  // what this step was conditioned on
  std::vector<double> raw_scores;
  std::vector<double> spot_prices;
  double sigma = 0.0;
  double tte = 0.0;
  std::vector<double> bs_scores;
  std::size_t chosen = 0;  // conditioning for the next step (lerp: recommendation only)

  friend bool operator==(const StepDecision&, const StepDecision&) = default;
};

struct Trace {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<StepDecision> decisions;
  std::vector<double> final_scores;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Anything that can run one denoising trajectory and report per-prompt
// alignment scores of the current x0 forecast after every update.
class ScoreEnvironment {
 public:
  virtual ~ScoreEnvironment() = default;
  virtual std::size_t num_prompts() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  // Applies one update at `step` under `cond` and returns the raw scores in
  // [0, 1] of the resulting forecast, one per prompt.
  virtual std::vector<double> step(std::size_t step, Conditioning cond) = 0;
};

/// Index of the smallest value, lowest index on ties. Throws DomainError on
/// empty input.
std::size_t argmin_index(std::span<const double> values);

/// Per-prompt call prices with spot = raw * score_scale and the shared
/// (strike, rate, sigma, tte).
std::vector<double> bs_scores(std::span<const double> raw_scores, double tte, double sigma,
                              const MixerConfig& cfg);

/// Index of the lowest Black-Scholes score. Prices that round to the same
/// double are ordered by spot (the exact order of the unrounded prices, since
/// the price is strictly increasing in spot); only equal spots fall back to
/// the lowest index.
std::size_t choose_black_scholes(std::span<const double> raw_scores, double tte, double sigma,
                                 const MixerConfig& cfg);

/// Argmin of the previous iteration's scores. std::nullopt (no previous
/// iteration) selects prompt 0; an empty span throws DomainError.
std::size_t choose_clip_min(std::optional<std::span<const double>> prev_raw_scores);

std::size_t choose_alternating(std::size_t step, std::size_t num_prompts);

std::size_t choose_stepwise(std::size_t step, std::size_t switch_step);

/// Mean of the samples times score_scale.
double calibrate_strike(std::span<const double> final_combined_scores, const MixerConfig& cfg);

/// Runs the Black-Scholes controller (or a baseline) for cfg.total_steps steps. Step 0 is
/// conditioned on the combination of all prompts; each decision picks the
/// conditioning of the following step. The schedule must have exactly
/// total_steps inference steps. Identical inputs give identical traces.
Trace run_strategy(ScoreEnvironment& env, const Strategy& strategy, const MixerConfig& cfg,
                   const DiffusionSchedule& schedule, std::uint64_t seed);

/// Strike from the average final score of combined-conditioning runs over
/// `seeds`, pooled across prompts.
double calibrated_strike(ScoreEnvironment& env, const MixerConfig& cfg,
                         const DiffusionSchedule& schedule, std::span<const std::uint64_t> seeds);

/// Returns cfg with strike replaced by the calibrated value when
/// cfg.strike_mode is calibrated; unchanged otherwise.
MixerConfig resolve_strike(ScoreEnvironment& env, MixerConfig cfg,
                           const DiffusionSchedule& schedule, std::uint64_t master_seed);

/// Deterministic per-run seed derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace bsmix
