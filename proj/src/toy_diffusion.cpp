#include "bsmix/toy_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "bsmix/error.hpp"
#include "bsmix/parallel.hpp"

namespace bsmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct ComponentEval {
  double log_weighted;          // log w_k + log N(x; m_k, C_k)
  Eigen::VectorXd neg_grad;     // C_k^{-1} (x - m_k)
};

ComponentEval eval_component(double weight, const Eigen::VectorXd& mean,
                             const Eigen::MatrixXd& cov, const Eigen::VectorXd& x) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd diff = x - mean;
  const Eigen::VectorXd solved = llt.solve(diff);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double quad = diff.dot(solved);
  const double d = static_cast<double>(x.size());
  return {std::log(weight) - 0.5 * (quad + log_det + d * kLog2Pi), solved};
}

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double e : v) acc += std::exp(e - hi);
  return hi + std::log(acc);
}

void check_alpha_bar(double alpha_bar) {
  if (!(alpha_bar > 0.0) || alpha_bar > 1.0) throw DomainError("alpha_bar must lie in (0, 1]");
}

}  // namespace

void validate(const GaussianMixtureConcept& c) {
  const std::size_t k = c.weights.size();
  if (k == 0) throw ConfigError("concept '" + c.label + "' has no components");
  if (c.means.size() != k || c.covariances.size() != k) {
    throw ConfigError("concept '" + c.label + "': weights, means and covariances differ in length");
  }
  const double sum = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("concept '" + c.label + "': weights must sum to 1");
  const auto d = c.means[0].size();
  if (d == 0) throw ConfigError("concept '" + c.label + "': zero-dimensional mean");
  for (std::size_t j = 0; j < k; ++j) {
    if (!(c.weights[j] > 0.0)) throw ConfigError("concept '" + c.label + "': weights must be positive");
    if (c.means[j].size() != d || c.covariances[j].rows() != d || c.covariances[j].cols() != d) {
      throw ConfigError("concept '" + c.label + "': inconsistent dimensions");
    }
    const auto& cov = c.covariances[j];
    if (!cov.isApprox(cov.transpose(), 1e-12)) {
      throw ConfigError("concept '" + c.label + "': covariance not symmetric");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
      throw ConfigError("concept '" + c.label + "': covariance not positive-definite");
    }
  }
}

GaussianMixtureConcept gaussian_concept(const Eigen::VectorXd& mean, double variance,
                                        std::string label) {
  const auto d = mean.size();
  return {{1.0}, {mean}, {variance * Eigen::MatrixXd::Identity(d, d)}, std::move(label)};
}

GaussianMixtureConcept diffused_mixture(const GaussianMixtureConcept& c, double alpha_bar) {
  check_alpha_bar(alpha_bar);
  GaussianMixtureConcept out = c;
  const double root = std::sqrt(alpha_bar);
  for (std::size_t j = 0; j < c.components(); ++j) {
    const auto d = c.means[j].size();
    out.means[j] = root * c.means[j];
    out.covariances[j] =
        alpha_bar * c.covariances[j] + (1.0 - alpha_bar) * Eigen::MatrixXd::Identity(d, d);
  }
  return out;
}

double log_density(const GaussianMixtureConcept& c, const Eigen::VectorXd& x) {
  std::vector<double> terms;
  terms.reserve(c.components());
  for (std::size_t j = 0; j < c.components(); ++j) {
    terms.push_back(eval_component(c.weights[j], c.means[j], c.covariances[j], x).log_weighted);
  }
  return log_sum_exp(terms);
}

Eigen::VectorXd score_gradient(const GaussianMixtureConcept& c, const Eigen::VectorXd& x,
                               double alpha_bar) {
  const auto diffused = diffused_mixture(c, alpha_bar);
  std::vector<ComponentEval> evals;
  std::vector<double> logs;
  for (std::size_t j = 0; j < diffused.components(); ++j) {
    evals.push_back(
        eval_component(diffused.weights[j], diffused.means[j], diffused.covariances[j], x));
    logs.push_back(evals.back().log_weighted);
  }
  const double norm = log_sum_exp(logs);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (const auto& e : evals) grad -= std::exp(e.log_weighted - norm) * e.neg_grad;
  return grad;
}

Eigen::VectorXd eps_prediction(const GaussianMixtureConcept& c, const Eigen::VectorXd& x_t,
                               double alpha_bar) {
  return -std::sqrt(1.0 - alpha_bar) * score_gradient(c, x_t, alpha_bar);
}

Eigen::VectorXd ddim_reverse_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps_hat,
                                  const DiffusionSchedule& schedule, std::size_t i, double eta,
                                  const Eigen::VectorXd& noise) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("ddim_reverse_step: eta must lie in [0, 1]");
  const double a_t = schedule.alpha_bar_at(i);
  const double a_prev = schedule.alpha_bar_prev(i);
  const double var = step_variance(schedule, i);
  const Eigen::VectorXd x0 = predict_x0(x_t, eps_hat, a_t);
  const double dir = std::sqrt(std::max(1.0 - a_prev - eta * eta * var, 0.0));
  Eigen::VectorXd out = std::sqrt(a_prev) * x0 + dir * eps_hat;
  if (eta > 0.0) {
    if (noise.size() != x_t.size()) throw DomainError("ddim_reverse_step: noise dimension mismatch");
    out += eta * std::sqrt(var) * noise;
  }
  return out;
}

double alignment_score(const GaussianMixtureConcept& c, const Eigen::VectorXd& x0) {
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& m : c.means) peak = std::max(peak, log_density(c, m));
  const double value = std::exp(log_density(c, x0) - peak);
  return std::clamp(std::isfinite(value) ? value : 0.0, 0.0, 1.0);
}

void validate(const ToyRunConfig& cfg) {
  if (cfg.concepts.size() < 2) throw ConfigError("toy run needs at least 2 concepts");
  for (const auto& c : cfg.concepts) {
    validate(c);
    if (c.dim() != cfg.concepts[0].dim()) throw ConfigError("toy concepts differ in dimension");
  }
  if (cfg.samples_per_seed < 1) throw ConfigError("samples_per_seed must be >= 1");
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (cfg.schedule.num_inference_steps() == 0) throw ConfigError("toy run schedule is empty");
}

std::vector<GaussianMixtureConcept> default_toy_concepts() {
  return {gaussian_concept(Eigen::Vector2d(-1.0, 0.0), 0.05, "left"),
          gaussian_concept(Eigen::Vector2d(1.0, 0.0), 0.05, "right")};
}

ToyDiffusionEnvironment::ToyDiffusionEnvironment(std::vector<GaussianMixtureConcept> concepts,
                                                 DiffusionSchedule schedule, double eta)
    : concepts_(std::move(concepts)), schedule_(std::move(schedule)), eta_(eta) {
  ToyRunConfig probe{concepts_, schedule_, 1, eta_};
  validate(probe);
  x_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(concepts_[0].dim()));
  x0_hat_ = x_;
}

Eigen::VectorXd ToyDiffusionEnvironment::draw_normal() {
  Eigen::VectorXd z(static_cast<Eigen::Index>(concepts_[0].dim()));
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal_(gen_);
  return z;
}

void ToyDiffusionEnvironment::reset(std::uint64_t seed) {
  gen_.seed(seed);
  normal_.reset();
  x_ = draw_normal();
  x0_hat_ = x_;
}

Eigen::VectorXd ToyDiffusionEnvironment::eps_for(Conditioning cond, const Eigen::VectorXd& x,
                                                 double alpha_bar) const {
  if (cond) {
    if (*cond >= concepts_.size()) throw DomainError("conditioning prompt out of range");
    return eps_prediction(concepts_[*cond], x, alpha_bar);
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (const auto& c : concepts_) acc += eps_prediction(c, x, alpha_bar);
  return acc / static_cast<double>(concepts_.size());
}

std::vector<double> ToyDiffusionEnvironment::step(std::size_t step, Conditioning cond) {
  const double a_t = schedule_.alpha_bar_at(step);
  const Eigen::VectorXd eps = eps_for(cond, x_, a_t);
  const Eigen::VectorXd noise = eta_ > 0.0 ? draw_normal() : Eigen::VectorXd();
  x_ = ddim_reverse_step(x_, eps, schedule_, step, eta_, noise);

  const double a_prev = schedule_.alpha_bar_prev(step);
  x0_hat_ = predict_x0(x_, eps_for(cond, x_, a_prev), a_prev);

  std::vector<double> scores;
  scores.reserve(concepts_.size());
  for (const auto& c : concepts_) scores.push_back(alignment_score(c, x0_hat_));
  return scores;
}

ToyResult generate(const ToyRunConfig& cfg, const Strategy& strategy, const MixerConfig& mixer_cfg,
                   std::uint64_t seed) {
  validate(cfg);
  ToyDiffusionEnvironment env(cfg.concepts, cfg.schedule, cfg.eta);
  ToyResult out;
  for (std::size_t j = 0; j < cfg.samples_per_seed; ++j) {
    // A single sample runs on the seed itself so traces stay keyed by seed.
    const std::uint64_t run_seed = cfg.samples_per_seed == 1 ? seed : derive_seed(seed, j);
    Trace t = run_strategy(env, strategy, mixer_cfg, cfg.schedule, run_seed);
    ToySample s;
    s.seed = seed;
    s.sample = j;
    s.point = env.state();
    for (const auto& c : cfg.concepts) s.scores.push_back(alignment_score(c, s.point));
    out.samples.push_back(std::move(s));
    out.traces.push_back(std::move(t));
  }
  return out;
}

ToyResult generate_many(const ToyRunConfig& cfg, const Strategy& strategy,
                        const MixerConfig& mixer_cfg, std::uint64_t first_seed, std::size_t count,
                        std::size_t max_threads) {
  std::vector<ToyResult> parts(count);
  parallel_for(count, thread_budget(max_threads), [&](std::size_t k) {
    parts[k] = generate(cfg, strategy, mixer_cfg, first_seed + k);
  });
  ToyResult all;
  for (auto& p : parts) {
    std::move(p.traces.begin(), p.traces.end(), std::back_inserter(all.traces));
    std::move(p.samples.begin(), p.samples.end(), std::back_inserter(all.samples));
  }
  return all;
}

}  // namespace bsmix
