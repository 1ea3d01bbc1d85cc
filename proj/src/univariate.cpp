#include "pexp/univariate.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pexp {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Upper tail P(xi > x) for x >= 0 through the regularized incomplete gamma.
double upper_tail_general(double p, double x) {
  const double t = std::pow(x, p) / p;
  return 0.5 * boost::math::gamma_q(1.0 / p, t);
}

// Solves upper_tail(x) = t for x >= 0, 0 < t <= 1/2: bisection to a coarse
// bracket then Newton with the density as derivative.
template <class Tail>
double invert_upper_tail(const PExpParams& params, double t, Tail tail) {
  double lo = 0.0;
  double hi = 1.0;
  while (tail(hi) > t) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) break;
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-6 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 60; ++i) {
    const double tx = tail(x);
    if (tx > t) {
      lo = x;
    } else {
      hi = x;
    }
    const double dens = pdf(params, x);
    if (!(dens > 0.0)) break;
    double next = x + (tx - t) / dens;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x));
    x = next;
    if (done || hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return x;
}

}  // namespace

PExpParams::PExpParams(double p) : p_(p) {
  if (!(p >= 1.0 && p <= 2.0)) {
    throw std::invalid_argument("p-exponential exponent must satisfy 1 <= p <= 2, got " +
                                std::to_string(p));
  }
  const double inv_p = 1.0 / p;
  c_p_ = 1.0 / (2.0 * std::pow(p, inv_p) * std::tgamma(1.0 + inv_p));
  r1_ = std::exp(-inv_p) * std::pow(p, -inv_p) / std::tgamma(1.0 + inv_p);
  // Smallest r2 with exp(-r2 exp(-1/p)) <= P(|xi| <= 1).
  const double mass_at_one = boost::math::gamma_p(inv_p, inv_p);
  r2_ = -std::exp(inv_p) * std::log(mass_at_one);
}

double pdf(const PExpParams& params, double x) {
  return params.normalizer() * std::exp(-std::pow(std::abs(x), params.p()) / params.p());
}

double log_pdf(const PExpParams& params, double x) {
  return std::log(params.normalizer()) - std::pow(std::abs(x), params.p()) / params.p();
}

double cdf_general(const PExpParams& params, double x) {
  if (x >= 0.0) return 1.0 - upper_tail_general(params.p(), x);
  return upper_tail_general(params.p(), -x);
}

double upper_tail(const PExpParams& params, double x) {
  if (x < 0.0) return 1.0 - upper_tail(params, -x);
  if (params.is_laplace()) return 0.5 * std::exp(-x);
  if (params.is_gaussian()) return 0.5 * std::erfc(x / kSqrt2);
  return upper_tail_general(params.p(), x);
}

double cdf(const PExpParams& params, double x) {
  if (x >= 0.0) return 1.0 - upper_tail(params, x);
  return upper_tail(params, -x);
}

double prob_abs_le(const PExpParams& params, double x) {
  if (x <= 0.0) return 0.0;
  if (params.is_laplace()) return -std::expm1(-x);
  if (params.is_gaussian()) return std::erf(x / kSqrt2);
  return boost::math::gamma_p(1.0 / params.p(), std::pow(x, params.p()) / params.p());
}

double abs_prob_lower_bound(const PExpParams& params, double x) {
  if (x <= 0.0) return 0.0;
  if (x <= 1.0) return params.r1() * x;
  return std::exp(-params.r2() * std::exp(-std::pow(x, params.p()) / params.p()));
}

namespace {

void check_unit_interval(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("quantile requires 0 < u < 1, got " + std::to_string(u));
  }
}

}  // namespace

double quantile_general(const PExpParams& params, double u) {
  check_unit_interval(u);
  const double p = params.p();
  auto tail = [p](double x) { return upper_tail_general(p, x); };
  if (u >= 0.5) return invert_upper_tail(params, 1.0 - u, tail);
  return -invert_upper_tail(params, u, tail);
}

double quantile(const PExpParams& params, double u) {
  check_unit_interval(u);
  const double t = u >= 0.5 ? 1.0 - u : u;
  double x;
  if (params.is_laplace()) {
    x = -std::log(2.0 * t);
  } else if (params.is_gaussian()) {
    x = kSqrt2 * boost::math::erfc_inv(2.0 * t);
  } else {
    auto tail = [&params](double y) { return upper_tail(params, y); };
    x = invert_upper_tail(params, t, tail);
  }
  return u >= 0.5 ? x : -x;
}

double abs_moment(const PExpParams& params, int k) {
  if (k < 1) throw std::invalid_argument("moment order must be >= 1");
  const double p = params.p();
  return std::exp(k / p * std::log(p) + std::lgamma((k + 1.0) / p) - std::lgamma(1.0 / p));
}

double moment(const PExpParams& params, int k) {
  if (k % 2 == 1) {
    if (k < 1) throw std::invalid_argument("moment order must be >= 1");
    return 0.0;
  }
  return abs_moment(params, k);
}

double sample(const PExpParams& params, Rng& rng) {
  PExpSampler s(params);
  return s(rng);
}

}  // namespace pexp
