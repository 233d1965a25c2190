#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsmix/ddim_schedule.hpp"
#include "bsmix/mixer.hpp"

namespace bsmix {

// A "prompt" in the toy world: a Gaussian mixture over R^d (d = 2 by default).
struct GaussianMixtureConcept {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::string label;

  std::size_t dim() const { return means.empty() ? 0 : static_cast<std::size_t>(means[0].size()); }
  std::size_t components() const { return weights.size(); }
};

/// Throws ConfigError unless weights are positive and sum to 1 (+-1e-12),
/// shapes agree and every covariance is symmetric positive-definite.
void validate(const GaussianMixtureConcept& c);

/// Isotropic single-Gaussian concept.
GaussianMixtureConcept gaussian_concept(const Eigen::VectorXd& mean, double variance,
                                        std::string label);

/// Law of sqrt(a) x0 + sqrt(1 - a) eps for x0 ~ c: means scale by sqrt(a),
/// covariances become a * Sigma + (1 - a) I.
GaussianMixtureConcept diffused_mixture(const GaussianMixtureConcept& c, double alpha_bar);

/// Log-density of the (undiffused) mixture, evaluated with log-sum-exp.
double log_density(const GaussianMixtureConcept& c, const Eigen::VectorXd& x);

/// Exact gradient of log p_t at x, where p_t is diffused_mixture(c, alpha_bar).
Eigen::VectorXd score_gradient(const GaussianMixtureConcept& c, const Eigen::VectorXd& x,
                               double alpha_bar);

/// Noise prediction implied by the exact score: -sqrt(1 - a) * grad log p_t.
Eigen::VectorXd eps_prediction(const GaussianMixtureConcept& c, const Eigen::VectorXd& x_t,
                               double alpha_bar);

/// One DDIM update from inference step i:
///   x0  = predict_x0(x_t, eps_hat, a_t)
///   out = sqrt(a_prev) x0 + sqrt(1 - a_prev - eta^2 var) eps_hat + eta sqrt(var) noise
Eigen::VectorXd ddim_reverse_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps_hat,
                                  const DiffusionSchedule& schedule, std::size_t i, double eta,
                                  const Eigen::VectorXd& noise);

/// exp(log p(x0) - peak), peak = max over component means of log p, clamped
/// to [0, 1]. The peak is exact for well-separated mixtures and an
/// approximation of the true mode otherwise.
double alignment_score(const GaussianMixtureConcept& c, const Eigen::VectorXd& x0);

struct ToyRunConfig {
  std::vector<GaussianMixtureConcept> concepts;
  DiffusionSchedule schedule;
  std::size_t samples_per_seed = 1;
  double eta = 0.0;
};

void validate(const ToyRunConfig& cfg);

/// Two isotropic Gaussians at (-1, 0) and (1, 0); variance 0.05.
std::vector<GaussianMixtureConcept> default_toy_concepts();

// One reverse-diffusion trajectory of a single point. Scores are
// alignment_score of every concept against the x0 forecast made right after
// each update under the same conditioning.
class ToyDiffusionEnvironment final : public ScoreEnvironment {
 public:
  ToyDiffusionEnvironment(std::vector<GaussianMixtureConcept> concepts, DiffusionSchedule schedule,
                          double eta);

  std::size_t num_prompts() const override { return concepts_.size(); }
  void reset(std::uint64_t seed) override;
  std::vector<double> step(std::size_t step, Conditioning cond) override;

  const Eigen::VectorXd& state() const { return x_; }
  const Eigen::VectorXd& forecast() const { return x0_hat_; }

 private:
  Eigen::VectorXd eps_for(Conditioning cond, const Eigen::VectorXd& x, double alpha_bar) const;
  Eigen::VectorXd draw_normal();

  std::vector<GaussianMixtureConcept> concepts_;
  DiffusionSchedule schedule_;
  double eta_;
  Eigen::VectorXd x_;
  Eigen::VectorXd x0_hat_;
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct ToySample {
  std::uint64_t seed = 0;
  std::size_t sample = 0;
  Eigen::VectorXd point;
  std::vector<double> scores;  // alignment to every concept
};

struct ToyResult {
  std::vector<Trace> traces;  // one per (seed, sample)
  std::vector<ToySample> samples;
};

/// Runs the strategy for one seed: samples_per_seed independent trajectories,
/// trajectory j seeded with derive_seed(seed, j) (with `seed` itself when
/// samples_per_seed is 1).
ToyResult generate(const ToyRunConfig& cfg, const Strategy& strategy, const MixerConfig& mixer_cfg,
                   std::uint64_t seed);

/// generate() over seeds first_seed .. first_seed + count - 1, concatenated
/// in seed order; parallel across seeds, deterministic output.
ToyResult generate_many(const ToyRunConfig& cfg, const Strategy& strategy,
                        const MixerConfig& mixer_cfg, std::uint64_t first_seed, std::size_t count,
                        std::size_t max_threads = 0);

}  // namespace bsmix
