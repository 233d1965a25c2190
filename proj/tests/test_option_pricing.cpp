#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bsmix/error.hpp"
#include "bsmix/option_pricing.hpp"
#include "golden/golden_values.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace bsmix;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

TEST_CASE("normal cdf fixed points") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(kInf) == 1.0);
  CHECK(std_normal_cdf(-kInf) == 0.0);
  CHECK(std::abs(std_normal_cdf(1.96) - golden::kNormalCdf196) <= 1e-12);
  CHECK_THROWS_AS(std_normal_cdf(kNaN), DomainError);
}

TEST_CASE("normal cdf matches quadrature and is symmetric") {
  for (int i = -800; i <= 800; ++i) {
    const double x = i / 100.0;
    CAPTURE(x);
    CHECK(std::abs(std_normal_cdf(x) - oracle::normal_cdf_quadrature(x)) <= 1e-12);
    CHECK(std::abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-12);
    if (i > -800) CHECK(std_normal_cdf(x) >= std_normal_cdf((i - 1) / 100.0));
  }
}

TEST_CASE("d terms") {
  SUBCASE("at the money, zero rate") {
    const auto d = bs_d_terms({1.0, 1.0, 0.0, 0.2, 1.0});
    CHECK(d.d1 == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(d.d2 == doctest::Approx(-0.1).epsilon(1e-14));
  }
  SUBCASE("controller scale") {
    const auto d = bs_d_terms({25.0, 25.0, 0.01, 0.05, 50.0});
    CHECK(std::abs(d.d1 - golden::kD1Controller) <= 1e-13);
    CHECK(std::abs(d.d2 - golden::kD2Controller) <= 1e-13);
    CHECK(std::abs(d.d1 - d.d2 - 0.05 * std::sqrt(50.0)) <= 1e-14);
  }
  SUBCASE("textbook") {
    const auto d = bs_d_terms({100.0, 100.0, 0.05, 0.2, 1.0});
    CHECK(std::abs(d.d1 - golden::kD1Textbook) <= 1e-13);
    CHECK(std::abs(d.d2 - golden::kD2Textbook) <= 1e-13);
    CHECK(std::abs((d.d2 - d.d1) + 0.2) <= 1e-15);
  }
  SUBCASE("degenerate inputs throw") {
    CHECK_THROWS_AS(bs_d_terms({0.0, 25.0, 0.01, 0.05, 50.0}), DegenerateInputError);
    CHECK_THROWS_AS(bs_d_terms({25.0, 0.0, 0.01, 0.05, 50.0}), DegenerateInputError);
    CHECK_THROWS_AS(bs_d_terms({25.0, 25.0, 0.01, 0.0, 50.0}), DegenerateInputError);
    CHECK_THROWS_AS(bs_d_terms({25.0, 25.0, 0.01, 0.05, 0.0}), DegenerateInputError);
  }
}

TEST_CASE("call price examples") {
  CHECK(bs_call_price({30.0, 25.0, 0.01, 0.05, 0.0}).price == 5.0);
  CHECK(bs_call_price({20.0, 25.0, 0.01, 0.05, 0.0}).price == 0.0);
  CHECK(bs_call_price({40.0, 0.0, 0.01, 0.1, 50.0}).price == 40.0);
  CHECK(bs_call_price({0.0, 25.0, 0.01, 0.05, 3.0}).price == 0.0);
  CHECK(bs_call_price({30.0, 25.0, 0.01, 0.0, 10.0}).price ==
        doctest::Approx(30.0 - 25.0 * std::exp(-0.1)).epsilon(1e-15));
  CHECK(bs_call_price({20.0, 25.0, 0.01, 0.0, 10.0}).price == 0.0);
  CHECK(std::isnan(bs_call_price({30.0, 25.0, 0.01, 0.05, 0.0}).d1));

  const auto textbook = bs_call_price({100.0, 100.0, 0.05, 0.2, 1.0});
  CHECK(std::abs(textbook.price - golden::kPriceTextbook) <= 1e-10);
  const auto controller = bs_call_price({25.0, 25.0, 0.01, 0.05, 50.0});
  CHECK(std::abs(controller.price - golden::kPriceController) <= 1e-10);
  CHECK(std::abs(bs_call_price({30.0, 25.0, 0.01, 0.05, 50.0}).price - golden::kPriceSpot30) <=
        1e-10);
}

TEST_CASE("price agrees with the extended-precision oracle") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 500; ++n) {
    auto p = test::random_params(rng);
    if (p.spot == 0 || p.strike == 0 || p.vol == 0 || p.tte == 0) continue;
    const double ref = oracle::bs_price_long(p.spot, p.strike, p.rate, p.vol, p.tte);
    CAPTURE(p.spot); CAPTURE(p.strike); CAPTURE(p.rate); CAPTURE(p.vol); CAPTURE(p.tte);
    CHECK(std::abs(bs_call_price(p).price - ref) <= 1e-9 * (1.0 + p.spot));
  }
}

TEST_CASE("invalid inputs throw") {
  CHECK_THROWS_AS(bs_call_price({-1.0, 25.0, 0.01, 0.05, 1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({1.0, -25.0, 0.01, 0.05, 1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({1.0, 25.0, 0.01, -0.05, 1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({1.0, 25.0, 0.01, 0.05, -1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({kNaN, 25.0, 0.01, 0.05, 1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({1.0, 25.0, kNaN, 0.05, 1.0}), DomainError);
  CHECK_THROWS_AS(bs_call_price({1.0, 25.0, 0.01, 0.05, kInf}), DomainError);
}

TEST_CASE("price properties over random inputs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam(0.01, 100.0);
  for (int n = 0; n < 2000; ++n) {
    const auto p = test::random_params(rng);
    CAPTURE(p.spot); CAPTURE(p.strike); CAPTURE(p.rate); CAPTURE(p.vol); CAPTURE(p.tte);
    const double c = bs_call_price(p).price;
    CHECK(c >= std::max(0.0, p.spot - p.strike * std::exp(-p.rate * p.tte)));
    CHECK(c <= p.spot);

    auto up = p;
    up.spot += 1e-3;
    CHECK(bs_call_price(up).price - c >= -1e-8);
    up = p;
    up.vol += 1e-3;
    CHECK(bs_call_price(up).price - c >= -1e-8);
    up = p;
    up.tte += 1e-3;
    CHECK(bs_call_price(up).price - c >= -1e-8);

    const double l = lam(rng);
    auto scaled = p;
    scaled.spot *= l;
    scaled.strike *= l;
    CHECK(test::rel_close(bs_call_price(scaled).price, l * c, 1e-10, DBL_MIN));
  }
}

TEST_CASE("monte carlo oracle") {
  SUBCASE("agrees with the closed form") {
    const OptionParams p{100.0, 100.0, 0.05, 0.2, 1.0};
    const auto mc = mc_call_price(p, 1'000'000, 11);
    CHECK(std::abs(mc.estimate - golden::kPriceTextbook) <= 3.0 * mc.std_error);
    const OptionParams q{25.0, 25.0, 0.01, 0.05, 50.0};
    const auto mq = mc_call_price(q, 1'000'000, 12);
    CHECK(std::abs(mq.estimate - golden::kPriceController) <= 3.0 * mq.std_error);
  }
  SUBCASE("zero volatility is exact") {
    const auto mc = mc_call_price({30.0, 25.0, 0.01, 0.0, 10.0}, 1000, 1);
    CHECK(mc.std_error == 0.0);
    CHECK(mc.estimate == doctest::Approx(30.0 - 25.0 * std::exp(-0.1)).epsilon(1e-13));
  }
  SUBCASE("zero strike recovers the spot") {
    const OptionParams p{40.0, 0.0, 0.02, 0.3, 2.0};
    const auto mc = mc_call_price(p, 200'000, 3);
    CHECK(std::abs(mc.estimate - 40.0) <= 3.0 * mc.std_error);
  }
  SUBCASE("deterministic per seed") {
    const OptionParams p{25.0, 25.0, 0.01, 0.05, 50.0};
    const auto a = mc_call_price(p, 5000, 99);
    const auto b = mc_call_price(p, 5000, 99);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK(mc_call_price(p, 5000, 100).estimate != a.estimate);
  }
  SUBCASE("zero paths") {
    CHECK_THROWS_AS(mc_call_price({1.0, 1.0, 0.0, 0.2, 1.0}, 0, 1), DomainError);
  }
}
