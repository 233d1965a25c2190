#include "bsmix/option_pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "bsmix/error.hpp"

namespace bsmix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite_nonneg(double v, const char* name) {
  if (std::isnan(v) || v < 0.0 || std::isinf(v)) {
    throw DomainError(std::string("option parameter '") + name +
                      "' must be finite and nonnegative, got " + std::to_string(v));
  }
}

}  // namespace

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("std_normal_cdf: NaN argument");
  // erfc keeps full relative precision in the lower tail, where 1 + erf would cancel.
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

void validate(const OptionParams& p) {
  require_finite_nonneg(p.spot, "spot");
  require_finite_nonneg(p.strike, "strike");
  require_finite_nonneg(p.vol, "vol");
  require_finite_nonneg(p.tte, "tte");
  if (!std::isfinite(p.rate)) throw DomainError("option parameter 'rate' must be finite");
}

DTerms bs_d_terms(const OptionParams& p) {
  validate(p);
  if (p.spot == 0.0 || p.strike == 0.0 || p.vol == 0.0 || p.tte == 0.0) {
    throw DegenerateInputError(
        "bs_d_terms: spot, strike, vol and tte must be positive; "
        "use bs_call_price for the limiting cases");
  }
  const double vol_sqrt_t = p.vol * std::sqrt(p.tte);
  const double d1 =
      (std::log(p.spot / p.strike) + (p.rate + 0.5 * p.vol * p.vol) * p.tte) / vol_sqrt_t;
  return {d1, d1 - vol_sqrt_t};
}

PricingResult bs_call_price(const OptionParams& p) {
  validate(p);
  const double discounted_strike = p.strike * std::exp(-p.rate * p.tte);

  if (p.tte == 0.0) return {std::max(p.spot - p.strike, 0.0), kNaN, kNaN};
  if (p.spot == 0.0) return {0.0, kNaN, kNaN};
  if (p.strike == 0.0) return {p.spot, kNaN, kNaN};
  if (p.vol == 0.0) return {std::max(p.spot - discounted_strike, 0.0), kNaN, kNaN};

  const auto [d1, d2] = bs_d_terms(p);
  const double raw = p.spot * std_normal_cdf(d1) - discounted_strike * std_normal_cdf(d2);
  const double lower = std::max(p.spot - discounted_strike, 0.0);
  return {std::clamp(raw, lower, p.spot), d1, d2};
}

McEstimate mc_call_price(const OptionParams& p, std::size_t paths, std::uint64_t seed) {
  validate(p);
  if (paths == 0) throw DomainError("mc_call_price: paths must be >= 1");

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double drift = (p.rate - 0.5 * p.vol * p.vol) * p.tte;
  const double diffusion = p.vol * std::sqrt(p.tte);
  const double discount = std::exp(-p.rate * p.tte);

  // Welford keeps the variance exactly zero when every payoff is identical.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 1; k <= paths; ++k) {
    const double z = normal(gen);
    const double terminal = p.spot * std::exp(drift + diffusion * z);
    const double payoff = std::max(terminal - p.strike, 0.0);
    const double delta = payoff - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (payoff - mean);
  }

  const double n = static_cast<double>(paths);
  const double variance = paths > 1 ? m2 / (n - 1.0) : 0.0;
  return {discount * mean, discount * std::sqrt(variance / n)};
}

}  // namespace bsmix
