#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "pexp/rng.hpp"
#include "pexp/univariate.hpp"

using namespace pexp;
using boost::math::quadrature::gauss_kronrod;

namespace {

// Normalizer oracle: 1 / int exp(-|x|^p/p) by adaptive quadrature.
double quad_normalizer(double p) {
  auto f = [p](double x) { return std::exp(-std::pow(std::abs(x), p) / p); };
  return 1.0 / (2.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, 60.0, 15, 1e-14));
}

double quad_cdf(double p, double x) {
  const double c = quad_normalizer(p);
  auto f = [p, c](double t) { return c * std::exp(-std::pow(std::abs(t), p) / p); };
  if (x >= 0) return 0.5 + gauss_kronrod<double, 61>::integrate(f, 0.0, x, 15, 1e-14);
  return 0.5 - gauss_kronrod<double, 61>::integrate(f, x, 0.0, 15, 1e-14);
}

double ks_distance(std::vector<double> xs, const PExpParams& pp) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(pp, xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST_SUITE("univariate") {

TEST_CASE("construction rejects p outside [1, 2]") {
  CHECK_THROWS_AS(PExpParams(0.99), std::invalid_argument);
  CHECK_THROWS_AS(PExpParams(2.01), std::invalid_argument);
  CHECK_THROWS_AS(PExpParams(std::nan("")), std::invalid_argument);
  CHECK_NOTHROW(PExpParams(1.0));
  CHECK_NOTHROW(PExpParams(2.0));
}

TEST_CASE("pdf values") {
  CHECK(pdf(PExpParams(1.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pdf(PExpParams(2.0), 0.0) == doctest::Approx(quad_normalizer(2.0)).epsilon(1e-12));
  CHECK(pdf(PExpParams(2.0), 0.0) == doctest::Approx(0.3989423).epsilon(1e-7));
  const PExpParams p15(1.5);
  for (double x : {0.1, 0.7, 2.3, 5.0}) CHECK(pdf(p15, x) == pdf(p15, -x));
  for (double p : {1.0, 1.2, 1.5, 1.8, 2.0})
    CHECK(PExpParams(p).normalizer() == doctest::Approx(quad_normalizer(p)).epsilon(1e-12));
}

TEST_CASE("pdf integrates to one") {
  for (double p : {1.0, 1.2, 1.5, 1.8, 2.0}) {
    const PExpParams pp(p);
    auto f = [&](double x) { return pdf(pp, x); };
    const double total = gauss_kronrod<double, 61>::integrate(f, -30.0, 0.0, 15, 1e-14) +
                         gauss_kronrod<double, 61>::integrate(f, 0.0, 30.0, 15, 1e-14);
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("cdf values and quadrature oracle") {
  CHECK(cdf(PExpParams(2.0), 0.0) == 0.5);
  CHECK(cdf(PExpParams(1.0), 1.0) == doctest::Approx(1.0 - std::exp(-1.0) / 2).epsilon(1e-14));
  for (double p : {1.0, 1.3, 1.5, 1.9, 2.0}) {
    const PExpParams pp(p);
    for (double x : {-4.0, -1.2, -0.3, 0.0, 0.4, 1.7, 3.5})
      CHECK(std::abs(cdf(pp, x) - quad_cdf(p, x)) < 1e-11);
  }
}

TEST_CASE("fast paths agree with the general path") {
  for (double p : {1.0, 2.0}) {
    const PExpParams pp(p);
    for (double x = -6.0; x <= 6.0; x += 0.37)
      CHECK(std::abs(cdf(pp, x) - cdf_general(pp, x)) < 1e-12);
    for (double u = 0.01; u < 1.0; u += 0.0347)
      CHECK(std::abs(quantile(pp, u) - quantile_general(pp, u)) < 1e-10);
  }
}

TEST_CASE("upper tail avoids cancellation") {
  const PExpParams pp(2.0);
  CHECK(upper_tail(pp, 10.0) == doctest::Approx(0.5 * std::erfc(10.0 / std::sqrt(2.0))).epsilon(1e-10));
  const PExpParams lap(1.0);
  CHECK(upper_tail(lap, 30.0) == doctest::Approx(0.5 * std::exp(-30.0)).epsilon(1e-12));
}

TEST_CASE("quantile inverts cdf on a 1000-point grid") {
  for (double p : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    const PExpParams pp(p);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = -5.0 + 10.0 * (i + 0.5) / 1000.0;
      worst = std::max(worst, std::abs(quantile(pp, cdf(pp, x)) - x));
    }
    CHECK(worst < 1e-9);
  }
  CHECK_THROWS_AS(quantile(PExpParams(1.5), 0.0), std::domain_error);
  CHECK_THROWS_AS(quantile(PExpParams(1.5), 1.0), std::domain_error);
}

TEST_CASE("tail-constant lower bound") {
  const PExpParams lap(1.0);
  CHECK(lap.r1() == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(prob_abs_le(lap, 0.5) >= lap.r1() * 0.5);
  for (double p : {1.0, 1.2, 1.5, 2.0}) {
    const PExpParams pp(p);
    for (int i = 1; i <= 1000; ++i) {
      const double x = i / 1000.0;
      CHECK(prob_abs_le(pp, x) >= pp.r1() * x);
    }
    for (int i = 0; i <= 1000; ++i) {
      const double x = i * 6.0 / 1000.0;
      CHECK(prob_abs_le(pp, x) >= abs_prob_lower_bound(pp, x) - 1e-15);
    }
  }
}

TEST_CASE("moments") {
  CHECK(moment(PExpParams(2.0), 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment(PExpParams(1.0), 2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(moment(PExpParams(1.4), 3) == 0.0);
  const PExpParams pp(1.3);
  const double c = quad_normalizer(1.3);
  auto f = [c](double x) { return 2.0 * c * std::pow(x, 4) * std::exp(-std::pow(x, 1.3) / 1.3); };
  const double oracle = gauss_kronrod<double, 61>::integrate(f, 0.0, 80.0, 15, 1e-14);
  CHECK(std::abs(moment(pp, 4) - oracle) < 1e-8);
}

TEST_CASE("sampler variance") {
  for (auto [p, var, tol] : {std::tuple{2.0, 1.0, 0.01}, std::tuple{1.0, 2.0, 0.02}}) {
    const PExpParams pp(p);
    PExpSampler s(pp);
    Rng rng = substream(42, {static_cast<std::uint64_t>(p * 10)});
    double sum = 0, sum2 = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
      const double x = s(rng);
      sum += x;
      sum2 += x * x;
    }
    const double v = sum2 / n - (sum / n) * (sum / n);
    CHECK(std::abs(v - var) < tol);
  }
}

TEST_CASE("sampler matches cdf (KS)") {
  const int n = 1'000'000;
  const double crit = 1.63 / std::sqrt(static_cast<double>(n));
  for (double p : {1.0, 1.2, 1.5, 1.8, 2.0}) {
    const PExpParams pp(p);
    PExpSampler s(pp);
    Rng rng = substream(7, {static_cast<std::uint64_t>(p * 100)});
    std::vector<double> xs(n);
    for (auto& x : xs) x = s(rng);
    const double d = ks_distance(xs, pp);
    CAPTURE(p);
    CHECK(d < crit);
    if (p == 1.5) CHECK(d < 0.002);
  }
}

TEST_CASE("free-function sample is deterministic in the stream") {
  const PExpParams pp(1.7);
  Rng a = substream(3, {1}), b = substream(3, {1});
  for (int i = 0; i < 100; ++i) CHECK(sample(pp, a) == sample(pp, b));
}

}  // TEST_SUITE
