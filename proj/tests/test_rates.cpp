#include <cmath>

#include "doctest.h"
#include "gen.hpp"
#include "pexp/errors.hpp"
#include "pexp/rates.hpp"

using namespace pexp;

namespace {

Rational R(std::int64_t a, std::int64_t b = 1) { return Rational(a, b); }

// Random valid query of one case: 0 -> q >= 2, 1 -> q < 2 with p <= q,
// 2 -> q < 2 with p > q.
RateQuery random_query(gen::Rng& r, int which) {
  RateQuery rq;
  rq.d = gen::integer(r, 1, 3);
  if (which == 0) {
    rq.q = gen::uniform(r, 2.0, 6.0);
    rq.p = gen::uniform(r, 1.0, 2.0);
  } else {
    rq.q = gen::uniform(r, 1.0, 2.0);
    rq.p = which == 1 ? gen::uniform(r, 1.0, rq.q) : gen::uniform(r, rq.q, 2.0);
  }
  const double floor = std::max(0.0, rq.d / rq.q - rq.d / 2.0);
  rq.beta = floor + gen::uniform(r, 0.01, 4.0);
  rq.alpha = gen::uniform(r, 0.05, 6.0);
  return rq;
}

}  // namespace

TEST_SUITE("rates") {

TEST_CASE("rational arithmetic") {
  CHECK(R(2, 4) == R(1, 2));
  CHECK(R(1, -3) == R(-1, 3));
  CHECK(R(1, 3) + R(1, 6) == R(1, 2));
  CHECK(R(1, 3) - R(1, 2) == R(-1, 6));
  CHECK(R(2, 3) * R(3, 4) == R(1, 2));
  CHECK(R(2, 3) / R(4, 9) == R(3, 2));
  CHECK(R(1, 3) < R(1, 2));
  CHECK(R(7, 24).to_string() == "7/24");
  CHECK_THROWS_AS(R(1, 0), DegenerateValue);
  CHECK_THROWS_AS(R(INT64_MAX / 2) * R(4), std::overflow_error);
  CHECK(exact_rational(0.375) == R(3, 8));
  CHECK(exact_rational(1.5) == R(3, 2));
  CHECK_FALSE(exact_rational(std::sqrt(2.0)).has_value());
}

TEST_CASE("l2 rate examples") {
  const auto a = rate_l2({1, 1, 2, 2, 1});
  REQUIRE(a.poly_exponent.exact);
  CHECK(*a.poly_exponent.exact == R(1, 3));
  CHECK(a.log_exponent.value == 0.0);
  for (double p : {1.0, 1.3, 2.0}) {
    const auto b = rate_l2({0.5, 1, p, 2, 1});
    CHECK(b.poly_exponent.value == 0.25);
    CHECK(b.regime == RegimeLabel::smallball);
  }
  const RateQuery w{1.0, 2, 1, 1, 1};
  const double sp = rate_l2_switch_point(w);
  CHECK(sp == doctest::Approx((1 + std::sqrt(7.0)) / 2).epsilon(1e-15));
  CHECK(sp == doctest::Approx(1.822876).epsilon(1e-6));
  CHECK(sp > 1.5);
  CHECK(sp < 2.0);
  RateQuery at = w;
  at.alpha = sp;
  CHECK(rate_l2_approximation_leg(at).value == doctest::Approx(0.392375).epsilon(1e-6));
  CHECK(rate_l2_smallball_leg(at).value == doctest::Approx(0.392375).epsilon(1e-6));
}

TEST_CASE("l2 rate hypotheses") {
  CHECK_THROWS_AS(rate_l2({1, 0.4, 1, 1, 1}), OutsideHypotheses);
  CHECK_THROWS_AS(rate_l2({0, 1, 2, 2, 1}), OutsideHypotheses);
  CHECK_THROWS_AS(rate_l2({1, 1, 2.5, 2, 1}), OutsideHypotheses);
  CHECK_THROWS_AS(rate_l2({1, 1, 2, 0.5, 1}), OutsideHypotheses);
  CHECK_NOTHROW(rate_l2({1, 0.01, 2, 2, 1}));
}

TEST_CASE("legs agree at the switch point") {
  gen::Rng r(2024);
  for (int which = 0; which < 3; ++which) {
    int done = 0;
    double worst = 0;
    while (done < 2000) {
      RateQuery rq = random_query(r, which);
      const double sp = rate_l2_switch_point(rq);
      if (!(sp > 0)) continue;
      rq.alpha = sp;
      worst = std::max(worst, std::abs(rate_l2_approximation_leg(rq).value -
                                       rate_l2_smallball_leg(rq).value));
      ++done;
    }
    CAPTURE(which);
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("exponent lies in (0, 1/2] and follows the regime") {
  gen::Rng r(99);
  for (int t = 0; t < 5000; ++t) {
    const RateQuery rq = random_query(r, t % 3);
    const double sp = rate_l2_switch_point(rq);
    if (!(sp > 0)) continue;
    const auto rr = rate_l2(rq);
    CHECK(rr.poly_exponent.value > 0.0);
    CHECK(rr.poly_exponent.value <= 0.5);
    CHECK((rr.regime == RegimeLabel::approximation) == (rq.alpha >= sp));
    // Never faster than minimax.
    CHECK(rr.poly_exponent.value <= minimax(rq.beta, rq.d).value + 1e-12);
  }
}

TEST_CASE("rescaled rates") {
  const auto a = rate_l2_rescaled({7.0, 2, 1, 1, 1});
  CHECK(*a.poly_exponent.exact == R(2, 5));
  CHECK(*a.log_exponent.exact == R(0));
  CHECK(*a.lambda_poly_exponent.exact == R(1, 5));
  CHECK(*a.alpha->exact == R(1));
  CHECK(a.regime == RegimeLabel::rescaled_matched);

  const auto b = rate_l2_rescaled({1, 2, 1, 1.5, 1});
  CHECK(*b.log_exponent.exact == R(1, 15));
  CHECK(b.regime == RegimeLabel::rescaled_log);

  const auto c = rate_l2_rescaled({1, 2, 2, 1, 1});
  CHECK(c.poly_exponent.value == 0.375);
  CHECK(c.poly_exponent.value == linear_minimax(2, 1).value);
  CHECK(c.regime == RegimeLabel::rescaled_best);

  gen::Rng r(4);
  for (int t = 0; t < 500; ++t) {
    const double q = gen::uniform(r, 1.0, 1.99);
    const double beta = 1.0 / q + gen::uniform(r, 0.01, 3.0);
    CHECK(rate_l2_rescaled({1, beta, 2.0, q, 1}).poly_exponent.value ==
          doctest::Approx(linear_minimax(beta, q).value).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rate_l2_rescaled({1, 0.9, 1, 1, 1}), OutsideHypotheses);
  CHECK_THROWS_AS(rate_l2_rescaled({1, 3, 1, 2, 1}), OutsideHypotheses);
}

TEST_CASE("minimax references") {
  CHECK(*minimax(1, 1).exact == R(1, 3));
  CHECK(*linear_minimax(2, 1).exact == R(3, 8));
  for (double b : {0.3, 1.0, 2.5}) CHECK(linear_minimax(b, 2.0).value == minimax(b).value);
  for (double b : {1.0, 2.0})
    for (double q : {1.0, 1.5}) CHECK(linear_minimax(b, q).value < minimax(b).value);
}

TEST_CASE("sup-norm rates") {
  const auto s = rate_sup(1, 1, 1);
  CHECK(*s.rho.poly_exponent.exact == R(1, 3));
  CHECK(*s.rho_tilde.poly_exponent.exact == R(7, 24));
  CHECK(*s.combined.poly_exponent.exact == R(7, 24));
  CHECK(s.rho_tilde_decays);

  for (int i = 0; i < 1000; ++i) {
    const double alpha = 0.05 + 4.0 * i / 1000.0, beta = 0.05 + 4.0 * ((i * 37) % 1000) / 1000.0;
    const auto g = rate_sup(alpha, beta, 2.0);
    CHECK(std::abs(g.rho.poly_exponent.value - g.rho_tilde.poly_exponent.value) < 1e-12);
  }

  // Decay iff alpha > sqrt((2 - p)/8) when beta > alpha.
  const double ps[] = {1.0, 1.5, 1.875};
  for (double p : ps) {
    const double edge = std::sqrt((2 - p) / 8);
    for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) {
      const double alpha = edge * f;
      CHECK(rate_sup(alpha, alpha + 1.0, p).rho_tilde_decays == (f > 1));
    }
    // Exactly at the edge (p = 1.5: edge 1/4, p = 1.875: 1/8) there is no decay.
    if (p != 1.0) CHECK_FALSE(rate_sup(edge, edge + 1, p).rho_tilde_decays);
  }

  // For p < 2 the combined rate is rho exactly when beta <= alpha - 1/(2 - p + 2 alpha p).
  for (double p : {1.0, 1.2, 1.5, 1.8, 1.95}) {
    for (int i = 1; i <= 40; ++i) {
      for (int j = 1; j <= 40; ++j) {
        const double alpha = 0.15 * i, beta = 0.15 * j;
        const double bound = alpha - 1 / (2 - p + 2 * alpha * p);
        if (std::abs(beta - bound) < 1e-9) continue;
        const auto g = rate_sup(alpha, beta, p);
        CAPTURE(p);
        CAPTURE(alpha);
        CAPTURE(beta);
        CHECK((g.rho_tilde.poly_exponent.value >= g.rho.poly_exponent.value) == (beta <= bound));
      }
    }
  }

  // The combined rate is the slower of the two.
  gen::Rng r(8);
  for (int t = 0; t < 1000; ++t) {
    const auto g = rate_sup(gen::uniform(r, 0.1, 3), gen::uniform(r, 0.1, 3), gen::uniform(r, 1, 2));
    CHECK(g.combined.poly_exponent.value ==
          std::min(g.rho.poly_exponent.value, g.rho_tilde.poly_exponent.value));
  }
}

TEST_CASE("approximation-term bound") {
  const auto b = approx_term_bound({1, 3, 1, 1, 1});
  CHECK(b.kind == ApproxBound::Kind::bounded);
  const auto c = approx_term_bound({2, 1, 1, 1, 1});
  CHECK(c.kind == ApproxBound::Kind::power);
  CHECK(*c.exponent.exact == R(2 * ((1 - 2) * 1 - 1), (2 + 1) * 1 - 2));
  const auto e = approx_term_bound({1, 2, 1, 2, 1});
  CHECK(e.kind == ApproxBound::Kind::log);
  CHECK(*e.exponent.exact == R(1, 2));
  const auto f = approx_term_bound({2, 1, 2, 2, 1});
  CHECK(f.kind == ApproxBound::Kind::power);
  CHECK(*f.exponent.exact == R(-3));
}

}  // TEST_SUITE
