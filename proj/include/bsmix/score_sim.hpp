#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bsmix/metrics.hpp"
#include "bsmix/mixer.hpp"

namespace bsmix {

// Synthetic score dynamics: the conditioned prompt gains, the others decay,
// every score gets independent Gaussian noise, all clamped to [0, 1].
// Under combined conditioning every prompt gains gain / N and nothing decays.
struct SimEnvConfig {
  std::vector<double> initial_scores{0.2, 0.2};
  double gain = 0.02;
  double decay = 0.005;
  double noise_vol = 0.01;
};

void validate(const SimEnvConfig& env);

/// One update. `draws` holds one standard-normal draw per prompt and is
/// scaled by noise_vol.
std::vector<double> sim_step(std::span<const double> scores, Conditioning chosen,
                             const SimEnvConfig& env, std::span<const double> draws);

class ScoreSimEnvironment final : public ScoreEnvironment {
 public:
  explicit ScoreSimEnvironment(SimEnvConfig cfg);

  std::size_t num_prompts() const override { return cfg_.initial_scores.size(); }
  void reset(std::uint64_t seed) override;
  std::vector<double> step(std::size_t step, Conditioning cond) override;

  const SimEnvConfig& config() const { return cfg_; }

 private:
  SimEnvConfig cfg_;
  std::vector<double> scores_;
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct TournamentResult {
  std::vector<AggregateSummary> summaries;  // one per strategy, input order
  std::vector<std::vector<Trace>> traces;   // [strategy][seed index]
  MixerConfig mixer;                        // with the strike actually used
};

/// Runs every strategy over `seeds` paired runs (run k of every strategy uses
/// derive_seed(master_seed, k)). Runs execute on up to max_threads threads
/// (0 = hardware default, capped by BSMIX_THREADS); output is deterministic.
TournamentResult run_tournament(const SimEnvConfig& env, std::span<const Strategy> strategies,
                                const MixerConfig& mixer_cfg, const DiffusionSchedule& schedule,
                                std::size_t seeds, std::uint64_t master_seed = 0,
                                std::size_t max_threads = 0);

}  // namespace bsmix
