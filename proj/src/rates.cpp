#include "pexp/rates.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pexp/errors.hpp"

namespace pexp {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v) {
  if (v > INT64_MAX || v < -INT64_MAX) throw std::overflow_error("Rational: overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(i128 num, i128 den) {
  if (den == 0) throw DegenerateValue("division by zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num, b = den;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) throw DegenerateValue("division by zero");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const std::int64_t g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

std::string Rational::to_string() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(Rational a, Rational b) {
  return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}
Rational operator-(Rational a, Rational b) {
  return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}
Rational operator*(Rational a, Rational b) {
  return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
}
Rational operator/(Rational a, Rational b) {
  return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
}
bool operator<(Rational a, Rational b) { return i128(a.num_) * b.den_ < i128(b.num_) * a.den_; }

std::optional<Rational> exact_rational(double x) {
  if (!std::isfinite(x) || std::abs(x) > 1e12) return std::nullopt;
  // Continued-fraction convergents.
  double r = x;
  std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(r);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h = ai * h0 + h1, k = ai * k0 + k1;
    if (k > 1'000'000) break;
    if (static_cast<double>(h) / static_cast<double>(k) == x) return Rational(h, k);
    h1 = h0;
    h0 = h;
    k1 = k0;
    k0 = k;
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

std::string to_string(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::approximation: return "approximation";
    case RegimeLabel::smallball: return "smallball";
    case RegimeLabel::rescaled_matched: return "rescaled_matched";
    case RegimeLabel::rescaled_log: return "rescaled_log";
    case RegimeLabel::rescaled_best: return "rescaled_best";
  }
  return "unknown";
}

namespace {

// Evaluates f in double and, when all inputs are short rationals, exactly.
template <class F, class... Args>
Exponent evaluate(F f, Args... args) {
  Exponent e;
  e.value = f(static_cast<double>(args)...);
  std::optional<Rational> rs[] = {exact_rational(static_cast<double>(args))...};
  bool all = true;
  for (const auto& r : rs) all = all && r.has_value();
  if (all) {
    try {
      e.exact = f(*exact_rational(static_cast<double>(args))...);
      e.value = e.exact->to_double();
    } catch (const std::overflow_error&) {
      e.exact.reset();
    }
  }
  if (!std::isfinite(e.value)) throw DegenerateValue("rate formula degenerates at these parameters");
  return e;
}

Exponent zero_exponent() {
  Exponent e;
  e.exact = Rational(0);
  return e;
}

void check_common(const RateQuery& rq) {
  if (!(rq.alpha > 0.0)) throw OutsideHypotheses("alpha must be positive");
  if (!(rq.p >= 1.0 && rq.p <= 2.0)) throw OutsideHypotheses("p must lie in [1, 2]");
  if (!(rq.q >= 1.0)) throw OutsideHypotheses("q must be at least 1");
  if (rq.d < 1) throw OutsideHypotheses("d must be at least 1");
}

void check_l2(const RateQuery& rq) {
  check_common(rq);
  const double floor = std::max(0.0, rq.d / rq.q - rq.d / 2.0);
  if (!(rq.beta > floor))
    throw OutsideHypotheses("beta must exceed max(0, d/q - d/2) = " + std::to_string(floor));
}

}  // namespace

double rate_l2_switch_point(const RateQuery& rq) {
  check_l2(rq);
  const double b = rq.beta, p = rq.p, q = rq.q, d = rq.d;
  if (q >= 2.0) return b;
  double a2, sp;
  if (p <= q) {
    a2 = 2 * b * d * p + b * b * p * p + d * d * (1 + 2 * p - 4 * p / q);
    sp = (b * p - d + std::sqrt(a2)) / (2 * p);
  } else {
    a2 = (2 * b * d * q * (2 * q - p) + b * b * p * q * q + d * d * (p + 2 * q * q - 4 * q)) / p;
    sp = (b * q - d + std::sqrt(a2)) / (2 * q);
  }
  if (!(a2 >= 0.0) || !std::isfinite(sp)) throw DegenerateValue("switch point is not real");
  return sp;
}

Exponent rate_l2_approximation_leg(const RateQuery& rq) {
  check_l2(rq);
  const int di = rq.d;
  if (rq.q >= 2.0)
    return evaluate([](auto a, auto b, auto p, auto d) { return b / (d + decltype(a)(2) * b + p * (a - b)); },
                    rq.alpha, rq.beta, rq.p, static_cast<double>(di));
  if (rq.p <= rq.q)
    return evaluate(
        [](auto a, auto b, auto p, auto q, auto d) {
          using T = decltype(a);
          return (T(2) * b * q + d * (q - T(2))) /
                 (T(4) * d * (q - T(1)) + T(4) * b * q + T(2) * p * q * (a - b));
        },
        rq.alpha, rq.beta, rq.p, rq.q, static_cast<double>(di));
  return evaluate(
      [](auto a, auto b, auto p, auto q, auto d) {
        using T = decltype(a);
        return (T(2) * b * q + d * (q - T(2))) /
               (T(2) * d * (p + q - T(2)) + T(4) * b * q + T(2) * p * q * (a - b));
      },
      rq.alpha, rq.beta, rq.p, rq.q, static_cast<double>(di));
}

Exponent rate_l2_smallball_leg(const RateQuery& rq) {
  check_l2(rq);
  return evaluate([](auto a, auto d) { return a / (d + decltype(a)(2) * a); }, rq.alpha,
                  static_cast<double>(rq.d));
}

RateRegime rate_l2(const RateQuery& rq) {
  check_l2(rq);
  RateRegime r;
  const double sp = rate_l2_switch_point(rq);
  r.switch_point = sp;
  const bool approx = rq.q >= 2.0 ? rq.alpha >= rq.beta : rq.alpha >= sp;
  r.regime = approx ? RegimeLabel::approximation : RegimeLabel::smallball;
  r.poly_exponent = approx ? rate_l2_approximation_leg(rq) : rate_l2_smallball_leg(rq);
  r.log_exponent = zero_exponent();
  r.lambda_poly_exponent = zero_exponent();
  r.lambda_log_exponent = zero_exponent();
  return r;
}

RateRegime rate_l2_rescaled(const RateQuery& rq) {
  RateQuery chk = rq;
  chk.alpha = 1.0;
  check_common(chk);
  if (rq.q >= 2.0) throw OutsideHypotheses("the rescaled result needs q < 2");
  const double b = rq.beta, p = rq.p, q = rq.q, d = rq.d;
  if (!(b > std::max(d / p, d / q)))
    throw OutsideHypotheses("beta must exceed max(d/p, d/q)");
  RateRegime r;
  r.log_exponent = zero_exponent();
  r.lambda_log_exponent = zero_exponent();
  auto m = [](auto b, auto d) { return b / (d + decltype(b)(2) * b); };
  auto lam = [](auto b, auto p, auto d) { return d / (p * (d + decltype(b)(2) * b)); };
  if (q >= p) {
    r.alpha = evaluate([](auto b, auto p, auto d) { return b - d / p; }, b, p, d);
    r.poly_exponent = evaluate(m, b, d);
    r.lambda_poly_exponent = evaluate(lam, b, p, d);
    if (q == p) {
      r.regime = RegimeLabel::rescaled_matched;
    } else {
      r.regime = RegimeLabel::rescaled_log;
      r.log_exponent = evaluate(
          [](auto b, auto p, auto q, auto d) { return d * (q - p) / (p * q * (d + decltype(b)(2) * b)); },
          b, p, q, d);
      r.lambda_log_exponent = evaluate(
          [](auto b, auto p, auto q, auto d) {
            using T = decltype(b);
            return (p - T(2) * d / (d + T(2) * b)) * (q - p) / (p * p * q);
          },
          b, p, q, d);
    }
  } else {
    r.regime = RegimeLabel::rescaled_best;
    r.alpha = evaluate([](auto b, auto q, auto d) { return b - d / q; }, b, q, d);
    r.poly_exponent = evaluate(
        [](auto b, auto p, auto q, auto d) {
          using T = decltype(b);
          return -(d * (p - q) - b * p * q) / (T(2) * d * (q - p) + T(2) * b * p * q + p * q * d);
        },
        b, p, q, d);
    r.lambda_poly_exponent = evaluate(
        [](auto b, auto p, auto q, auto d) {
          using T = decltype(b);
          return q * d / (T(2) * q * d + T(2) * b * p * q - T(2) * p * d + p * q * d);
        },
        b, p, q, d);
  }
  return r;
}

SupRates rate_sup(double alpha, double beta, double p) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw OutsideHypotheses("alpha and beta must be positive");
  if (!(p >= 1.0 && p <= 2.0)) throw OutsideHypotheses("p must lie in [1, 2]");
  SupRates s;
  const bool smooth_prior = beta <= alpha;
  auto& rho = s.rho;
  rho.regime = smooth_prior ? RegimeLabel::approximation : RegimeLabel::smallball;
  rho.switch_point = beta;
  if (smooth_prior)
    rho.poly_exponent = evaluate(
        [](auto a, auto b, auto p) {
          using T = decltype(a);
          return b / (T(1) + T(2) * b + p * (a - b));
        },
        alpha, beta, p);
  else
    rho.poly_exponent = evaluate([](auto a) { return a / (decltype(a)(1) + decltype(a)(2) * a); }, alpha);
  rho.log_exponent = rho.lambda_poly_exponent = rho.lambda_log_exponent = zero_exponent();

  auto& rt = s.rho_tilde;
  rt.regime = rho.regime;
  rt.switch_point = beta;
  // Stored as a decay exponent: rate = n^{-poly}.
  if (smooth_prior)
    rt.poly_exponent = evaluate(
        [](auto a, auto b, auto p) {
          using T = decltype(a);
          return -((T(2) - p) * (T(1) - T(2) * a) / (T(8) * a) -
                   p * b / (T(2) * (T(1) + T(2) * b + p * (a - b))));
        },
        alpha, beta, p);
  else
    rt.poly_exponent = evaluate(
        [](auto a, auto p) {
          using T = decltype(a);
          return -(T(2) - p - T(8) * a * a) / (T(8) * a * (T(1) + T(2) * a));
        },
        alpha, p);
  rt.log_exponent = rt.lambda_poly_exponent = rt.lambda_log_exponent = zero_exponent();
  s.rho_tilde_decays = rt.poly_exponent.exact ? Rational(0) < *rt.poly_exponent.exact
                                              : rt.poly_exponent.value > 0.0;
  const bool tilde_slower = rt.poly_exponent.exact && rho.poly_exponent.exact
                                ? *rt.poly_exponent.exact < *rho.poly_exponent.exact
                                : rt.poly_exponent.value < rho.poly_exponent.value;
  s.combined = tilde_slower ? rt : rho;
  return s;
}

Exponent minimax(double beta, int d) {
  if (!(beta > 0.0) || d < 1) throw OutsideHypotheses("minimax needs beta > 0, d >= 1");
  return evaluate([](auto b, auto d) { return b / (d + decltype(b)(2) * b); }, beta,
                  static_cast<double>(d));
}

Exponent linear_minimax(double beta, double q) {
  if (!(q >= 1.0)) throw OutsideHypotheses("q must be at least 1");
  if (q >= 2.0) return minimax(beta, 1);
  if (!(beta > 1.0 / q - 0.5)) throw OutsideHypotheses("beta must exceed 1/q - 1/2");
  return evaluate(
      [](auto b, auto q) {
        using T = decltype(b);
        const T g = (T(2) - q) / q;
        return (b - g / T(2)) / (T(1) + T(2) * b - g);
      },
      beta, q);
}

ApproxBound approx_term_bound(const RateQuery& rq) {
  check_l2(rq);
  const double a = rq.alpha, b = rq.beta, p = rq.p, q = rq.q, d = rq.d;
  ApproxBound out;
  if (q <= p) {
    if (b >= a + d / q) return out;
    out.kind = ApproxBound::Kind::power;
    out.exponent = evaluate(
        [](auto a, auto b, auto p, auto q, auto d) {
          using T = decltype(a);
          return T(2) * p * ((b - a) * q - d) / ((T(2) * b + d) * q - T(2) * d);
        },
        a, b, p, q, d);
    return out;
  }
  const double edge = a + d / p;
  if (b > edge) return out;
  if (b == edge) {
    out.kind = ApproxBound::Kind::log;
    out.exponent = evaluate([](auto p, auto q) { return (q - p) / q; }, p, q);
    return out;
  }
  out.kind = ApproxBound::Kind::power;
  if (q >= 2.0)
    out.exponent = evaluate([](auto a, auto b, auto p, auto d) { return (b * p - a * p - d) / b; },
                            a, b, p, d);
  else
    out.exponent = evaluate(
        [](auto a, auto b, auto p, auto q, auto d) {
          using T = decltype(a);
          return T(2) * q * ((b - a) * p - d) / ((T(2) * b + d) * q - T(2) * d);
        },
        a, b, p, q, d);
  return out;
}

}  // namespace pexp
