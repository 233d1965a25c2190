#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace bsmix {

// Scaled-linear DDIM configuration. Defaults are the Stable Diffusion 2.1
// DDIMScheduler settings with 100 inference steps.
struct ScheduleConfig {
  double beta_start = 0.00085;
  double beta_end = 0.012;
  std::size_t num_train_steps = 1000;
  std::size_t num_inference_steps = 100;
};

// Variance floor applied by sigma_at; the final step's variance is exactly
// zero and the pricing formula needs vol > 0 to stay out of its limit branch.
inline constexpr double kSigmaFloor = 1e-6;

struct DiffusionSchedule {
  ScheduleConfig config;
  std::vector<double> betas;                    // per train step
  std::vector<double> alpha_bars;               // cumulative product of (1 - beta)
  std::vector<std::size_t> inference_timesteps; // descending, largest first
  std::vector<double> variances;                // per inference step

  std::size_t num_inference_steps() const { return inference_timesteps.size(); }

  // Cumulative alpha at inference step i.
  double alpha_bar_at(std::size_t i) const;
  // Cumulative alpha the update at inference step i lands on; 1 after the
  // final step.
  double alpha_bar_prev(std::size_t i) const;
};

void validate(const ScheduleConfig& cfg);

/// Builds betas linear in sqrt(beta) space, their cumulative alphas, the
/// integer-stride descending timesteps and the per-step DDIM variances.
/// Throws ConfigError if cfg is invalid.
DiffusionSchedule build_schedule(const ScheduleConfig& cfg = {});

/// DDIM posterior variance ((1 - a_prev) / (1 - a_t)) * (1 - a_t / a_prev).
double step_variance(const DiffusionSchedule& s, std::size_t i);

/// sqrt(step_variance), floored at kSigmaFloor.
double sigma_at(const DiffusionSchedule& s, std::size_t i);

/// Inverts the forward process: x0 = (x_t - sqrt(1 - a) eps) / sqrt(a).
Eigen::VectorXd predict_x0(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps,
                           double alpha_bar);

/// Remaining steps T - i. Throws DomainError if i > total_steps.
std::size_t time_to_expiry(std::size_t total_steps, std::size_t i);

}  // namespace bsmix
