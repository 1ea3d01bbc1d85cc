#ifndef PEXP_UNIVARIATE_HPP
#define PEXP_UNIVARIATE_HPP

#include <cmath>
#include <random>

#include "pexp/rng.hpp"

namespace pexp {

/// Parameters of the one-dimensional p-exponential law with density
/// c_p exp(-|x|^p / p), 1 <= p <= 2. p = 1 is the standard Laplace law and
/// p = 2 the standard normal. The normalizer and the tail constants of the
/// lower bound P(|xi| <= x) >= r1 x (x <= 1), exp(-r2 exp(-x^p/p)) (x > 1)
/// are computed once at construction.
class PExpParams {
 public:
  explicit PExpParams(double p);

  double p() const noexcept { return p_; }
  double normalizer() const noexcept { return c_p_; }
  double r1() const noexcept { return r1_; }
  double r2() const noexcept { return r2_; }

  bool is_laplace() const noexcept { return p_ == 1.0; }
  bool is_gaussian() const noexcept { return p_ == 2.0; }

 private:
  double p_;
  double c_p_;
  double r1_;
  double r2_;
};

double pdf(const PExpParams& params, double x);
double log_pdf(const PExpParams& params, double x);

double cdf(const PExpParams& params, double x);
/// Upper tail P(xi > x); accurate where 1 - cdf() would cancel.
double upper_tail(const PExpParams& params, double x);
/// Incomplete-gamma route without the p = 1 / p = 2 fast paths.
double cdf_general(const PExpParams& params, double x);

/// Inverse CDF; throws std::domain_error unless 0 < u < 1.
double quantile(const PExpParams& params, double u);
double quantile_general(const PExpParams& params, double u);

/// P(|xi| <= x) for x >= 0.
double prob_abs_le(const PExpParams& params, double x);

/// The tail-constant lower bound on P(|xi| <= x) described above.
double abs_prob_lower_bound(const PExpParams& params, double x);

/// E|xi|^k.
double abs_moment(const PExpParams& params, int k);
/// E xi^k (zero for odd k).
double moment(const PExpParams& params, int k);

/// Exact sampler: |xi| = (p G)^{1/p} with G ~ Gamma(1/p, 1) and an independent
/// fair sign. p = 1 draws G as -log U and p = 2 draws the normal directly (the
/// same laws). Holds its distribution objects so bulk draws stay cheap.
class PExpSampler {
 public:
  explicit PExpSampler(const PExpParams& params)
      : inv_p_(1.0 / params.p()), p_(params.p()), gamma_(1.0 / params.p(), 1.0) {}

  double operator()(Rng& rng) {
    if (p_ == 2.0) return normal_(rng);
    const double g = (p_ == 1.0) ? -std::log(uniform_open(rng)) : gamma_(rng);
    const double mag = (p_ == 1.0) ? g : std::pow(p_ * g, inv_p_);
    return (rng() >> 63) ? -mag : mag;
  }

 private:
  double inv_p_;
  double p_;
  std::gamma_distribution<double> gamma_;
  std::normal_distribution<double> normal_;
};

double sample(const PExpParams& params, Rng& rng);

}  // namespace pexp

#endif  // PEXP_UNIVARIATE_HPP
