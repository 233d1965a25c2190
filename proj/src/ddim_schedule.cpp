#include "bsmix/ddim_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsmix/error.hpp"

namespace bsmix {

namespace {

void check_index(const DiffusionSchedule& s, std::size_t i) {
  if (i >= s.num_inference_steps()) {
    throw DomainError("inference step " + std::to_string(i) + " out of range [0, " +
                      std::to_string(s.num_inference_steps()) + ")");
  }
}

}  // namespace

double DiffusionSchedule::alpha_bar_at(std::size_t i) const {
  check_index(*this, i);
  return alpha_bars[inference_timesteps[i]];
}

double DiffusionSchedule::alpha_bar_prev(std::size_t i) const {
  check_index(*this, i);
  if (i + 1 == inference_timesteps.size()) return 1.0;
  return alpha_bars[inference_timesteps[i + 1]];
}

void validate(const ScheduleConfig& cfg) {
  if (!(cfg.beta_start > 0.0) || !(cfg.beta_start <= cfg.beta_end) || !(cfg.beta_end < 1.0)) {
    throw ConfigError("schedule requires 0 < beta_start <= beta_end < 1");
  }
  if (cfg.num_train_steps < 1 || cfg.num_inference_steps < 1) {
    throw ConfigError("schedule step counts must be >= 1");
  }
  if (cfg.num_inference_steps > cfg.num_train_steps) {
    throw ConfigError("num_inference_steps cannot exceed num_train_steps");
  }
}

DiffusionSchedule build_schedule(const ScheduleConfig& cfg) {
  validate(cfg);
  DiffusionSchedule s;
  s.config = cfg;

  const std::size_t n = cfg.num_train_steps;
  const double lo = std::sqrt(cfg.beta_start);
  const double hi = std::sqrt(cfg.beta_end);
  s.betas.resize(n);
  s.alpha_bars.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    const double root = lo + frac * (hi - lo);
    s.betas[i] = root * root;
    running *= 1.0 - s.betas[i];
    s.alpha_bars[i] = running;
  }

  const std::size_t stride = n / cfg.num_inference_steps;
  s.inference_timesteps.resize(cfg.num_inference_steps);
  for (std::size_t i = 0; i < cfg.num_inference_steps; ++i) {
    s.inference_timesteps[i] = (cfg.num_inference_steps - 1 - i) * stride;
  }

  s.variances.resize(cfg.num_inference_steps);
  for (std::size_t i = 0; i < cfg.num_inference_steps; ++i) s.variances[i] = step_variance(s, i);
  return s;
}

double step_variance(const DiffusionSchedule& s, std::size_t i) {
  const double a_t = s.alpha_bar_at(i);
  const double a_prev = s.alpha_bar_prev(i);
  const double v = ((1.0 - a_prev) / (1.0 - a_t)) * (1.0 - a_t / a_prev);
  return std::max(v, 0.0);
}

double sigma_at(const DiffusionSchedule& s, std::size_t i) {
  return std::max(std::sqrt(step_variance(s, i)), kSigmaFloor);
}

Eigen::VectorXd predict_x0(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps,
                           double alpha_bar) {
  if (!(alpha_bar > 0.0) || alpha_bar > 1.0) {
    throw DomainError("predict_x0: alpha_bar must lie in (0, 1]");
  }
  if (x_t.size() != eps.size()) throw DomainError("predict_x0: dimension mismatch");
  return (x_t - std::sqrt(1.0 - alpha_bar) * eps) / std::sqrt(alpha_bar);
}

std::size_t time_to_expiry(std::size_t total_steps, std::size_t i) {
  if (i > total_steps) {
    throw DomainError("time_to_expiry: step " + std::to_string(i) + " beyond total " +
                      std::to_string(total_steps));
  }
  return total_steps - i;
}

}  // namespace bsmix
