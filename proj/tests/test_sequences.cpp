#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "pexp/sequences.hpp"

using namespace pexp;

TEST_SUITE("sequences") {

TEST_CASE("scaling sequences") {
  const auto lin = ScalingSpec::linear(1.5, 1.0, 2, 50, 0.7);
  for (std::size_t i = 0; i < lin.length(); ++i) {
    const double ell = static_cast<double>(i + 1);
    CHECK(lin.gamma(i) == doctest::Approx(0.7 * std::pow(ell, -0.5 - 0.5)).epsilon(1e-14));
    if (i > 0) CHECK(lin.gamma(i) < lin.gamma(i - 1));
  }
  const auto dy = ScalingSpec::dyadic(1.0, 0.8, 5, 2.0);
  CHECK(dy.length() == 63);
  for (std::size_t i = 0; i < dy.length(); ++i) {
    const auto di = dyadic_index(i);
    CHECK(dy.gamma(i) == doctest::Approx(2.0 * std::exp2(-1.3 * di.k)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(ScalingSpec::linear(2.5, 1.0, 1, 10), std::invalid_argument);
  CHECK_THROWS_AS(ScalingSpec::linear(2.0, 0.0, 1, 10), std::invalid_argument);
  CHECK_THROWS_AS(ScalingSpec::linear(2.0, 1.0, 1, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ScalingSpec::linear(2.0, 1.0, 1, 0), std::invalid_argument);
}

TEST_CASE("dyadic index map is a bijection with level sizes 2^k") {
  const int K = 9;
  std::vector<int> per_level(K + 1, 0);
  for (std::size_t off = 0; off < dyadic_length(K); ++off) {
    const auto di = dyadic_index(off);
    REQUIRE(di.k <= K);
    CHECK(di.l >= 1);
    CHECK(di.l <= (std::size_t{1} << di.k));
    CHECK(dyadic_offset(di.k, di.l) == off);
    ++per_level[di.k];
  }
  for (int k = 0; k <= K; ++k) CHECK(per_level[k] == (1 << k));
  CHECK_THROWS(CoefVec(IndexScheme::dyadic, std::vector<double>(10)));
}

TEST_CASE("dyadic and linear weights are equivalent") {
  gen::Rng r(11);
  for (int t = 0; t < 50; ++t) {
    const double alpha = gen::uniform(r, 0.1, 3.0);
    const int K = gen::integer(r, 0, 12);
    const auto dy = ScalingSpec::dyadic(1.5, alpha, K);
    const auto li = ScalingSpec::linear(1.5, alpha, 1, dyadic_length(K));
    const double bound = std::exp2(0.5 + alpha);
    for (std::size_t i = 0; i < dy.length(); ++i) {
      const double ratio = dy.gamma(i) / li.gamma(i);
      CHECK(ratio >= 1.0 / bound * (1 - 1e-12));
      CHECK(ratio <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("besov norm examples") {
  const CoefVec e1(IndexScheme::linear, {1.0, 0.0, 0.0, 0.0});
  for (double s : {-0.5, 0.0, 1.3})
    for (double q : {1.0, 2.0, kInfinity}) CHECK(besov_norm(e1, {s, q, 2}) == 1.0);

  const std::size_t N = 10000;
  std::vector<double> u(N);
  for (std::size_t i = 0; i < N; ++i) u[i] = 1.0 / double(i + 1);
  long double direct = 0;
  for (std::size_t i = 0; i < N; ++i) direct += std::pow((long double)(i + 1), -1.2L);
  const double val = besov_norm(CoefVec(IndexScheme::linear, u), {0.4, 2.0, 1});
  CHECK(std::abs(val - std::sqrt((double)direct)) < 1e-12 * std::sqrt((double)direct));
}

TEST_CASE("besov norm properties") {
  gen::Rng r(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = gen::integer(r, 1, 40);
    const auto a = gen::coef(r, n), b = gen::coef(r, n);
    const BesovParams bp{gen::uniform(r, -1, 2), gen::pick(r, {1.0, 1.5, 2.0, 3.0, kInfinity}),
                         gen::integer(r, 1, 3)};
    const double c = gen::uniform(r, -3, 3);
    std::vector<double> ca(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      ca[i] = c * a[i];
      ab[i] = a[i] + b[i];
    }
    const double na = besov_norm(a, bp);
    CHECK(besov_norm(CoefVec(IndexScheme::linear, ca), bp) ==
          doctest::Approx(std::abs(c) * na).epsilon(1e-12));
    CHECK(besov_norm(CoefVec(IndexScheme::linear, ab), bp) <= na + besov_norm(b, bp) + 1e-12);
    BesovParams higher = bp;
    higher.s += gen::uniform(r, 0, 1);
    CHECK(besov_norm(a, higher) >= na * (1 - 1e-14));
  }
}

TEST_CASE("z and q norms") {
  const auto spec = ScalingSpec::linear(1.5, 1.0, 1, 30);
  CHECK(z_norm_p(CoefVec::zeros(IndexScheme::linear, 30), spec) == 0.0);
  CHECK(q_norm(CoefVec::zeros(IndexScheme::linear, 30), spec) == 0.0);
  const CoefVec g(IndexScheme::linear, spec.gammas());
  CHECK(z_norm_p(g, spec) == doctest::Approx(30.0).epsilon(1e-14));
  CHECK(q_norm(g, spec) == doctest::Approx(std::sqrt(30.0)).epsilon(1e-14));

  gen::Rng r(8);
  for (int t = 0; t < 100; ++t) {
    const double p = gen::uniform(r, 1, 2), lam = gen::uniform(r, 0.1, 5);
    const std::size_t n = gen::integer(r, 1, 50);
    const auto s1 = ScalingSpec::linear(p, gen::uniform(r, 0.2, 3), 1, n);
    const auto h = gen::coef(r, n);
    CHECK(z_norm_p(h, s1.with_lambda(lam)) ==
          doctest::Approx(std::pow(lam, -p) * z_norm_p(h, s1)).epsilon(1e-12));
    const auto s2 = ScalingSpec::linear(2.0, s1.alpha, 1, n);
    CHECK(q_norm(h, s2) * q_norm(h, s2) == doctest::Approx(z_norm_p(h, s2)).epsilon(1e-12));
  }
  CHECK(z_norm_p(g, spec.with_lambda(2.0)) ==
        doctest::Approx(std::pow(2.0, -1.5) * z_norm_p(g, spec)).epsilon(1e-14));
}

TEST_CASE("make_truth") {
  const auto w = make_truth({1.0, 2.0, 1}, 0.05, 1000, IndexScheme::linear, TruthProfile::dense);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(w[i]) == doctest::Approx(std::pow(double(i + 1), -1.55)).epsilon(1e-14));
  // Weighted terms are l^{-1-2 delta}.
  long double direct = 0;
  for (std::size_t i = 0; i < w.size(); ++i) direct += std::pow((long double)(i + 1), -1.1L);
  CHECK(besov_norm(w, {1.0, 2.0, 1}) == doctest::Approx(std::sqrt((double)direct)).epsilon(1e-12));

  const auto lac = make_truth({1.0, 1.0, 1}, 0.05, 64);
  for (std::size_t i = 0; i < 64; ++i) {
    const std::size_t ell = i + 1;
    if ((ell & (ell - 1)) == 0)
      CHECK(std::abs(lac[i]) == doctest::Approx(std::pow(double(ell), -0.55)).epsilon(1e-14));
    else
      CHECK(lac[i] == 0.0);
  }

  const auto big = make_truth({1.0, 2.0, 1}, 5.0, 100, IndexScheme::linear, TruthProfile::dense);
  CHECK(besov_norm(big, {1.0, 2.0, 1}) == doctest::Approx(1.0).epsilon(1e-3));

  const int signs[] = {1, 1, -1};
  const auto sgn = make_truth({1.0, 2.0, 1}, 0.1, 6, IndexScheme::linear, TruthProfile::dense, signs);
  CHECK(sgn[0] > 0);
  CHECK(sgn[1] > 0);
  CHECK(sgn[2] < 0);
  CHECK(sgn[3] > 0);
}

TEST_CASE("truth sits in B^s_q exactly for s < beta") {
  // Partial-sum growth over successive blocks N -> 16 N: shrinking below beta,
  // bounded away from 1 above it.
  for (auto profile : {TruthProfile::dense, TruthProfile::lacunary}) {
    for (double q : {1.0, 2.0}) {
      const BesovParams bp{1.0, q, 1};
      const auto w = make_truth(bp, 0.05, 1 << 20, IndexScheme::linear, profile);
      auto norm_at = [&](double s, std::size_t n) {
        std::vector<double> head(w.values().begin(), w.values().begin() + n);
        return besov_norm(CoefVec(IndexScheme::linear, head), {s, q, 1});
      };
      auto ratios = [&](double s) {
        return std::pair{norm_at(s, 1 << 16) / norm_at(s, 1 << 12),
                         norm_at(s, 1 << 20) / norm_at(s, 1 << 16)};
      };
      CAPTURE(q);
      const auto [a1, a2] = ratios(0.9);
      CHECK(a2 < a1);
      CHECK(a2 < 1.2);
      const auto [b1, b2] = ratios(1.1);
      CHECK(b2 > 1.15);
      CHECK(b2 >= a2 * 1.05);
    }
  }
}

TEST_CASE("tail fraction matches direct summation") {
  for (auto profile : {TruthProfile::dense, TruthProfile::lacunary}) {
    const BesovParams bp{1.0, 2.0, 1};
    const double delta = 0.3;
    const auto w = make_truth(bp, delta, 1 << 22, IndexScheme::linear, profile);
    const auto head = make_truth(bp, delta, 1000, IndexScheme::linear, profile);
    const double total = std::pow(besov_norm(w, bp), 2.0);
    const double part = std::pow(besov_norm(head, bp), 2.0);
    // The 2^22 partial sum itself misses a tail of order (2^22)^{-q delta}.
    CHECK(besov_tail_fraction(bp, delta, 1000, profile) ==
          doctest::Approx(1.0 - part / total).epsilon(0.02));
  }
}

TEST_CASE("embedding check") {
  CHECK(embedding_check({0.1, 2.0, 1}));
  CHECK_FALSE(embedding_check({0.4, 1.0, 1}));
  CHECK(embedding_check({-0.2, 4.0, 1}));
}

TEST_CASE("csv round trip") {
  gen::Rng r(2);
  for (int t = 0; t < 20; ++t) {
    const auto u = t % 2 ? gen::coef(r, gen::integer(r, 1, 70)) : gen::dyadic_coef(r, gen::integer(r, 0, 6));
    std::stringstream ss;
    write_csv(ss, u);
    CHECK(read_csv(ss) == u);
  }
  std::stringstream bad("scheme,k,l,ell,value\nlinear,,,1,abc\n");
  CHECK_THROWS(read_csv(bad));
  std::stringstream badhdr("x,y\n");
  CHECK_THROWS(read_csv(badhdr));
}

}  // TEST_SUITE
