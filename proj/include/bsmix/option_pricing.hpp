#pragma once

#include <cstddef>
#include <cstdint>

namespace bsmix {

// European call inputs. All rates and times are per denoising step; tte is
// the number of remaining steps. There is no annualization.
struct OptionParams {
  double spot = 0.0;
  double strike = 0.0;
  double rate = 0.0;
  double vol = 0.0;
  double tte = 0.0;
};

struct DTerms {
  double d1;
  double d2;
};

// d1/d2 are NaN when the price came from an analytic limit.
struct PricingResult {
  double price;
  double d1;
  double d2;
};

struct McEstimate {
  double estimate;
  double std_error;
};

/// Standard normal CDF, computed as erfc(-x/sqrt(2))/2. Absolute error is at
/// the level of double rounding (well below 1e-12). Infinite arguments map to
/// the limits; NaN throws DomainError.
double std_normal_cdf(double x);

/// Throws DomainError for NaN or negative spot/strike/vol/tte.
void validate(const OptionParams& p);

/// Closed-form d1 and d2. Requires spot, strike, vol and tte strictly
/// positive; otherwise throws DegenerateInputError (use bs_call_price, which
/// handles those limits).
DTerms bs_d_terms(const OptionParams& p);

/// Black-Scholes call price S N(d1) - K e^{-rt} N(d2).
///
/// Singular inputs are replaced by their analytic limits:
///   tte == 0    -> max(S - K, 0)
///   spot == 0   -> 0
///   strike == 0 -> S
///   vol == 0    -> max(S - K e^{-rt}, 0)
/// The returned price is clamped to the no-arbitrage band
/// [max(0, S - K e^{-rt}), S] so rounding never leaves it.
PricingResult bs_call_price(const OptionParams& p);

/// Monte Carlo price under GBM with drift `rate`, used as a verification
/// oracle. Deterministic for a fixed seed. Throws DomainError if paths == 0.
McEstimate mc_call_price(const OptionParams& p, std::size_t paths, std::uint64_t seed);

}  // namespace bsmix
