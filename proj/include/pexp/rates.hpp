#ifndef PEXP_RATES_HPP
#define PEXP_RATES_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace pexp {

/// Reduced fraction with a positive denominator. Arithmetic throws
/// std::overflow_error when an intermediate leaves the 64-bit range.
class Rational {
 public:
  Rational(std::int64_t num = 0, std::int64_t den = 1);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator/(Rational a, Rational b);
  friend Rational operator-(Rational a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(Rational a, Rational b);

 private:
  std::int64_t num_;
  std::int64_t den_;
};

/// The fraction num/den (den <= 10^6) whose double is exactly x, if any.
std::optional<Rational> exact_rational(double x);

/// Exponent value; `exact` is set when every input was a short rational.
struct Exponent {
  double value = 0.0;
  std::optional<Rational> exact;
};

struct RateQuery {
  double alpha = 1.0;
  double beta = 1.0;
  double p = 2.0;
  double q = 2.0;
  int d = 1;
};

enum class RegimeLabel {
  approximation,        // leg governed by the approximation term (alpha at or above the switch)
  smallball,            // leg n^{-alpha/(d+2alpha)} governed by the small-ball term
  rescaled_matched,     // q = p, minimax rate
  rescaled_log,         // q > p, minimax up to a log factor
  rescaled_best,        // q < p, best achievable rate
};
std::string to_string(RegimeLabel r);

/// rate = n^{-poly_exponent} log^{log_exponent} n; for rescaled results the
/// scaling is lambda_n = n^{-lambda_poly_exponent} log^{lambda_log_exponent} n.
struct RateRegime {
  Exponent poly_exponent;
  Exponent log_exponent;
  RegimeLabel regime = RegimeLabel::approximation;
  std::optional<double> switch_point;
  Exponent lambda_poly_exponent;
  Exponent lambda_log_exponent;
  /// Prior regularity the rescaled result is stated for.
  std::optional<Exponent> alpha;
};

/// l2 contraction rate of an alpha-regular prior for a B^beta_q truth.
/// Requires beta > max(0, d/q - d/2).
RateRegime rate_l2(const RateQuery& rq);

/// The two legs of rate_l2 at the query's (beta, p, q, d), evaluated at alpha.
Exponent rate_l2_approximation_leg(const RateQuery& rq);
Exponent rate_l2_smallball_leg(const RateQuery& rq);
/// Switch point alpha* of rate_l2 (beta for q >= 2).
double rate_l2_switch_point(const RateQuery& rq);

/// Rescaled prior: the optimal alpha and lambda_n and the resulting rate.
/// rq.alpha is ignored. Requires q in [1, 2) and beta > max(d/p, d/q).
RateRegime rate_l2_rescaled(const RateQuery& rq);

struct SupRates {
  RateRegime rho;
  RateRegime rho_tilde;  // its poly exponent may be <= 0 (no decay)
  RateRegime combined;   // the slower of the two
  bool rho_tilde_decays = false;
};

/// Sup-norm (Hoelder truth, d = 1) rates for the density model.
SupRates rate_sup(double alpha, double beta, double p);

/// Minimax exponent beta/(d+2beta).
Exponent minimax(double beta, int d = 1);
/// Linear minimax exponent (beta - g/2)/(1 + 2beta - g), g = (2-q)/q; equals
/// the minimax exponent for q >= 2.
Exponent linear_minimax(double beta, double q);

/// Bound on inf ||h||_Z^p over the eps-ball around a B^beta_q truth as eps -> 0.
struct ApproxBound {
  enum class Kind { bounded, log, power } kind = Kind::bounded;
  /// power: eps^{exponent}; log: (-log eps)^{exponent}.
  Exponent exponent;
};
ApproxBound approx_term_bound(const RateQuery& rq);

}  // namespace pexp

#endif  // PEXP_RATES_HPP
