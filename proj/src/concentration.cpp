#include "pexp/concentration.hpp"

#include <omp.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "pexp/errors.hpp"

namespace pexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// argmin over h in [0, a] of c h^p + mu (h - a)^2.
double coord_solve(double p, double c, double mu, double a) {
  if (a == 0.0) return 0.0;
  if (p == 1.0) return std::max(0.0, a - c / (2.0 * mu));
  if (p == 2.0) return mu * a / (c + mu);
  auto g = [&](double h) { return p * c * std::pow(h, p - 1.0) + 2.0 * mu * (h - a); };
  double lo = 0.0, hi = a;
  // Small-h approximation where the penalty dominates.
  double h = std::min(a, std::pow(2.0 * mu * a / (p * c), 1.0 / (p - 1.0)));
  if (!(h > 0.0) || h >= a) h = 0.5 * a;
  for (int it = 0; it < 200; ++it) {
    const double gv = g(h);
    if (gv > 0.0) hi = h; else lo = h;
    if (gv == 0.0 || hi - lo <= 1e-16 * hi) break;
    const double dg = p * (p - 1.0) * c * std::pow(h, p - 2.0) + 2.0 * mu;
    double next = h - gv / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - h) <= 1e-16 * h) { h = next; break; }
    h = next;
  }
  return h;
}

struct InnerSolve {
  std::vector<double> h;
  double dist = 0.0;
};

InnerSolve solve_for_mu(std::span<const double> w, std::span<const double> c, double p,
                        double mu) {
  InnerSolve s;
  s.h.resize(w.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = std::abs(w[i]);
    const double h = coord_solve(p, c[i], mu, a);
    s.h[i] = std::copysign(h, w[i]);
    d2 += (a - h) * (a - h);
  }
  s.dist = std::sqrt(d2);
  return s;
}

double kkt_residual(std::span<const double> w, std::span<const double> h,
                    std::span<const double> c, double p, double mu, double eps, double dist) {
  double r = std::abs(dist - eps) / eps;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = std::abs(w[i]);
    const double hv = std::abs(h[i]);
    if (a == 0.0) continue;
    if (hv == 0.0) {
      if (p == 1.0) r = std::max(r, std::max(0.0, 2.0 * mu * a - c[i]) / c[i]);
      continue;
    }
    const double pen = p * c[i] * std::pow(hv, p - 1.0);
    const double pull = 2.0 * mu * (a - hv);
    // Relative to the magnitudes of the terms of p c h^{p-1} + 2 mu h - 2 mu a.
    const double scale = pen + 2.0 * mu * (hv + a);
    if (scale > 0.0) r = std::max(r, std::abs(pen - pull) / scale);
  }
  return r;
}

}  // namespace

InfTermResult inf_term_exact(const CoefVec& w, double eps, const ScalingSpec& spec) {
  if (!(eps > 0.0)) throw std::invalid_argument("inf_term_exact: eps must be positive");
  if (w.size() != spec.length() || w.scheme() != spec.scheme)
    throw std::invalid_argument("inf_term_exact: w does not match the scaling");
  const double p = spec.p;
  const auto gam = spec.gammas();
  std::vector<double> c(gam.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::pow(gam[i], -p);

  InfTermResult res;
  const auto wv = w.values();
  if (l2_norm(w.values()) <= eps) {
    res.argmin = CoefVec::zeros(w.scheme(), w.size());
    return res;
  }
  // D(mu) decreases from ||w|| (mu -> 0) to 0 (mu -> inf).
  double lo = -50.0, hi = 50.0;
  while (solve_for_mu(wv, c, p, std::exp(lo)).dist < eps && lo > -700.0) lo -= 50.0;
  while (solve_for_mu(wv, c, p, std::exp(hi)).dist > eps && hi < 700.0) hi += 50.0;

  InnerSolve best;
  double best_mu = 0.0, best_gap = kInf;
  int it = 0;
  for (; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mu = std::exp(mid);
    auto s = solve_for_mu(wv, c, p, mu);
    const double gap = std::abs(s.dist - eps);
    const bool too_far = s.dist > eps;
    if (gap < best_gap) {
      best_gap = gap;
      best_mu = mu;
      best = std::move(s);
      if (best_gap <= 1e-10 * eps) break;
    }
    if (too_far) lo = mid; else hi = mid;
    if (hi - lo < 1e-15) break;
  }
  res.multiplier = best_mu;
  res.iterations = it + 1;
  res.kkt_residual = kkt_residual(wv, best.h, c, p, best_mu, eps, best.dist);
  if (res.kkt_residual > 1e-9)
    throw ConvergenceError("inf_term_exact: KKT conditions not met", res.kkt_residual);
  double v = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * std::pow(std::abs(best.h[i]), p);
  res.value = v;
  res.argmin = CoefVec(w.scheme(), std::move(best.h));
  return res;
}

TruncationBound inf_term_truncation_ub(const CoefVec& w, double eps, const ScalingSpec& spec) {
  if (!(eps > 0.0)) throw std::invalid_argument("inf_term_truncation_ub: eps must be positive");
  if (w.size() != spec.length() || w.scheme() != spec.scheme)
    throw std::invalid_argument("inf_term_truncation_ub: w does not match the scaling");
  const auto wv = w.values();
  const auto gam = spec.gammas();
  const std::size_t n = wv.size();
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) tail[i] = tail[i + 1] + wv[i] * wv[i];
  std::size_t L = 0;
  while (L < n && tail[L] > eps * eps) ++L;
  TruncationBound b;
  b.cutoff = L;
  for (std::size_t i = 0; i < L; ++i) b.value += std::pow(std::abs(wv[i] / gam[i]), spec.p);
  return b;
}

std::string to_string(BallNorm n) { return n == BallNorm::l2 ? "l2" : "sup"; }

BallNorm parse_ball_norm(const std::string& text) {
  if (text == "l2") return BallNorm::l2;
  if (text == "sup") return BallNorm::sup;
  throw std::invalid_argument("unknown norm '" + text + "' (expected l2 or sup)");
}

namespace {

constexpr std::size_t kBlock = 4096;

struct CurveSetup {
  std::vector<double> thresholds;  // ascending; squared radii for l2
  std::vector<std::size_t> order;  // order[j] = caller index of thresholds[j]
};

CurveSetup curve_setup(const PExpMeasure& m, std::span<const double> eps, BallNorm norm,
                       std::size_t samples) {
  if (samples == 0) throw std::invalid_argument("smallball: need samples > 0");
  if (norm == BallNorm::sup && m.spec().scheme != IndexScheme::dyadic)
    throw std::invalid_argument("smallball: the sup norm needs the dyadic scheme");
  CurveSetup s;
  s.order.resize(eps.size());
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  for (double e : eps)
    if (!(e > 0.0)) throw std::invalid_argument("smallball: eps must be positive");
  std::sort(s.order.begin(), s.order.end(), [&](auto a, auto b) { return eps[a] < eps[b]; });
  for (auto i : s.order) s.thresholds.push_back(norm == BallNorm::l2 ? eps[i] * eps[i] : eps[i]);
  return s;
}

void curve_block(const PExpMeasure& m, BallNorm norm, std::span<const double> thr,
                 std::size_t count, std::uint64_t seed, std::uint64_t block,
                 std::vector<std::uint64_t>& bins) {
  Rng rng = substream(seed, {block});
  PExpSampler xi(m.params());
  std::vector<double> u(m.dimension());
  std::vector<double> nodes;
  std::unique_ptr<FaberSchauderBasis> basis;
  if (norm == BallNorm::sup) {
    basis = std::make_unique<FaberSchauderBasis>(m.spec().max_level());
    nodes.resize(basis->node_intervals() + 1);
  }
  for (std::size_t i = 0; i < count; ++i) {
    sample_prior_into(m, xi, rng, u);
    double v = 0.0;
    if (norm == BallNorm::l2) {
      for (double x : u) v += x * x;
    } else {
      basis->nodal_values(u, nodes);
      for (double x : nodes) v = std::max(v, std::abs(x));
    }
    ++bins[std::lower_bound(thr.begin(), thr.end(), v) - thr.begin()];
  }
}

SmallBallEstimate make_estimate(double eps, std::uint64_t hits, std::uint64_t n) {
  SmallBallEstimate e;
  e.eps = eps;
  e.hits = hits;
  e.samples = n;
  const double nn = static_cast<double>(n);
  e.p_hat = static_cast<double>(hits) / nn;
  constexpr double z = 1.959963984540054;
  const double denom = 1.0 + z * z / nn;
  const double centre = (e.p_hat + z * z / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(e.p_hat * (1.0 - e.p_hat) / nn + z * z / (4.0 * nn * nn)) / denom;
  const double up = std::min(1.0, centre + half);
  const double low = std::max(0.0, centre - half);
  e.neglog = hits == 0 ? kInf : -std::log(e.p_hat);
  e.neglog_lo = -std::log(up);
  e.neglog_hi = low > 0.0 ? -std::log(low) : kInf;
  e.below_guard = e.p_hat < kSmallBallGuard;
  return e;
}

std::vector<SmallBallEstimate> curve_finish(const CurveSetup& s, std::span<const double> eps,
                                            const std::vector<std::uint64_t>& bins,
                                            std::size_t samples) {
  std::vector<SmallBallEstimate> out(eps.size());
  std::uint64_t cum = 0;
  for (std::size_t j = 0; j < s.order.size(); ++j) {
    cum += bins[j];
    out[s.order[j]] = make_estimate(eps[s.order[j]], cum, samples);
  }
  return out;
}

}  // namespace

std::vector<SmallBallEstimate> smallball_curve(const PExpMeasure& m, std::span<const double> eps,
                                               BallNorm norm, std::size_t samples,
                                               std::uint64_t seed) {
  const auto s = curve_setup(m, eps, norm, samples);
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint64_t>> per(blocks,
                                              std::vector<std::uint64_t>(s.thresholds.size() + 1));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t count = std::min(samples, (b + 1) * kBlock) - b * kBlock;
    curve_block(m, norm, s.thresholds, count, seed, b, per[b]);
  }
  std::vector<std::uint64_t> bins(s.thresholds.size() + 1, 0);
  for (const auto& v : per)
    for (std::size_t j = 0; j < v.size(); ++j) bins[j] += v[j];
  return curve_finish(s, eps, bins, samples);
}

std::vector<SmallBallEstimate> smallball_curve_serial(const PExpMeasure& m,
                                                      std::span<const double> eps, BallNorm norm,
                                                      std::size_t samples, std::uint64_t seed) {
  const auto s = curve_setup(m, eps, norm, samples);
  std::vector<std::uint64_t> bins(s.thresholds.size() + 1, 0);
  for (std::size_t b = 0; b * kBlock < samples; ++b) {
    const std::size_t count = std::min(samples, (b + 1) * kBlock) - b * kBlock;
    curve_block(m, norm, s.thresholds, count, seed, b, bins);
  }
  return curve_finish(s, eps, bins, samples);
}

SmallBallEstimate smallball_mc(const PExpMeasure& m, double eps, BallNorm norm,
                               std::size_t samples, std::uint64_t seed) {
  const double e[1] = {eps};
  auto c = smallball_curve(m, e, norm, samples, seed);
  if (c[0].hits == 0) throw ZeroHits(eps, samples);
  return c[0];
}

namespace {

// Moments of xi^2 under the tilted law exp(-s xi^2) dP / M(s).
struct Tilted {
  double log_m = 0.0;  // log E exp(-s xi^2)
  double mean = 0.0;
  double var = 0.0;
};

class TiltedMoments {
 public:
  explicit TiltedMoments(double p) : p_(p) {
    if (p_ != 2.0) base_ = integral(0.0, 0);
  }

  Tilted operator()(double s) const {
    Tilted t;
    if (p_ == 2.0) {
      const double a = 1.0 + 2.0 * s;
      t.log_m = -0.5 * std::log(a);
      t.mean = 1.0 / a;
      t.var = 2.0 / (a * a);
      return t;
    }
    const double m0 = integral(s, 0);
    const double m2 = integral(s, 2);
    const double m4 = integral(s, 4);
    t.log_m = std::log(m0 / base_);
    t.mean = m2 / m0;
    t.var = std::max(0.0, m4 / m0 - t.mean * t.mean);
    return t;
  }

 private:
  // int_0^inf x^k exp(-x^p/p - s x^2) dx, in the variable y = x sqrt(1 + 2s).
  double integral(double s, int k) const {
    const double sigma = 1.0 / std::sqrt(1.0 + 2.0 * s);
    const double b = s * sigma * sigma;
    auto f = [&](double y) {
      const double x = sigma * y;
      const double e = std::exp(-std::pow(x, p_) / p_ - b * y * y);
      if (e == 0.0 || k == 0) return e;
      return std::exp(k * std::log(y) - std::pow(x, p_) / p_ - b * y * y);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    const double v = integrator.integrate(f, std::sqrt(std::numeric_limits<double>::epsilon()));
    return std::pow(sigma, k + 1) * v;
  }

  double p_;
  double base_ = 1.0;
};

double normal_log_cdf_with_correction(double w, double u) {
  // -log of Phi(w) + phi(w) (1/w - 1/u), both arguments negative.
  double mills;
  if (w > -8.0) {
    const double phi = std::exp(-0.5 * w * w) / std::sqrt(2.0 * M_PI);
    mills = 0.5 * std::erfc(-w / std::sqrt(2.0)) / phi;
  } else {
    const double w2 = w * w;
    mills = (-1.0 / w) * (1.0 - 1.0 / w2 + 3.0 / (w2 * w2) - 15.0 / (w2 * w2 * w2));
  }
  const double bracket = mills + 1.0 / w - 1.0 / u;
  if (!(bracket > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * w * w + 0.5 * std::log(2.0 * M_PI) - std::log(bracket);
}

}  // namespace

SaddlePointEstimate smallball_saddlepoint(const PExpMeasure& m, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("smallball_saddlepoint: eps must be positive");
  SaddlePointEstimate out;
  out.eps = eps;
  const auto& gam = m.gammas();
  const double x = eps * eps;
  const double e2 = abs_moment(m.params(), 2);
  double mean0 = 0.0;
  for (double g : gam) mean0 += g * g * e2;
  if (x >= mean0) return out;

  const TiltedMoments tm(m.params().p());
  auto eval = [&](double t, double& k, double& mean, double& var) {
    k = mean = var = 0.0;
    for (double g : gam) {
      const auto r = tm(t * g * g);
      k += r.log_m;
      mean += g * g * r.mean;
      var += g * g * g * g * r.var;
    }
  };
  double k, mean, var;
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    eval(std::exp(mid), k, mean, var);
    if (mean > x) lo = mid; else hi = mid;
  }
  const double t = std::exp(0.5 * (lo + hi));
  eval(t, k, mean, var);
  const double rate = std::max(0.0, -t * x - k);
  const double w = -std::sqrt(2.0 * rate);
  const double u = -t * std::sqrt(var);
  double nl = w < 0.0 ? normal_log_cdf_with_correction(w, u) : std::log(2.0);
  if (!std::isfinite(nl)) nl = rate;
  out.neglog = std::max(0.0, nl);
  out.tilt = t;
  out.valid = true;
  return out;
}

SlopeFit fit_smallball_slope(std::span<const SmallBallEstimate> curve) {
  std::vector<double> xs, ys;
  for (const auto& e : curve) {
    if (e.hits == 0 || e.below_guard || !(e.neglog > 0.0)) continue;
    xs.push_back(std::log(e.eps));
    ys.push_back(std::log(e.neglog));
  }
  SlopeFit f;
  f.points = xs.size();
  if (xs.size() < 2) throw std::invalid_argument("fit_smallball_slope: fewer than two usable points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  f.slope = sxy / sxx;
  if (xs.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - my - f.slope * (xs[i] - mx);
      rss += r * r;
    }
    f.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

std::vector<ConcEstimate> concentration_curve(const CoefVec& w, std::span<const double> eps,
                                              const PExpMeasure& m, std::size_t mc_samples,
                                              std::uint64_t seed) {
  const auto sb = smallball_curve(m, eps, BallNorm::l2, mc_samples, seed);
  std::vector<ConcEstimate> out(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    auto inf = inf_term_exact(w, eps[i], m.spec());
    auto& c = out[i];
    c.eps = eps[i];
    c.inf_term = inf.value;
    c.argmin = std::move(inf.argmin);
    c.neglog_smallball = sb[i].neglog;
    c.neglog_lo = sb[i].neglog_lo;
    c.neglog_hi = sb[i].neglog_hi;
    c.phi = c.inf_term / m.params().p() + c.neglog_smallball;
  }
  return out;
}

ConcEstimate concentration_fn(const CoefVec& w, double eps, const PExpMeasure& m,
                              std::size_t mc_samples, std::uint64_t seed) {
  const double e[1] = {eps};
  auto c = concentration_curve(w, e, m, mc_samples, seed);
  if (!std::isfinite(c[0].neglog_smallball)) throw ZeroHits(eps, mc_samples);
  return std::move(c[0]);
}

FgValues fg_values(double p, double alpha, int d, FgSetting setting, double a, double eps) {
  if (p < 1.0 || p > 2.0) throw std::invalid_argument("fg_values: p must lie in [1, 2]");
  if (!(alpha > 0.0)) throw std::invalid_argument("fg_values: alpha must be positive");
  if (!(a >= 0.0) || !(eps > 0.0)) throw std::invalid_argument("fg_values: need a >= 0, eps > 0");
  FgValues v;
  const double dd = d;
  if (setting == FgSetting::l2) {
    v.f = std::pow(a, p) * std::max(1.0, std::pow(a, (2.0 * dd - p * dd) / (dd + 2.0 * alpha)));
    v.g = 2.0 * std::max(1.0, std::pow(eps, -2.0 * dd / (dd + 2.0 * alpha)));
  } else {
    if (d != 1) throw std::invalid_argument("fg_values: the sup setting is one-dimensional");
    v.f = std::pow(a, (2.0 - p + 2.0 * alpha * p) / (2.0 * alpha));
    v.g = std::pow(eps, -1.0 / alpha);
  }
  return v;
}

RateSolveResult rate_solve_numeric(const CoefVec& w, const PExpMeasure& m, double n,
                                   const RateSolveOptions& opt) {
  if (!(n > 0.0)) throw std::invalid_argument("rate_solve_numeric: n must be positive");
  if (opt.grid_points < 2 || !(opt.eps_min > 0.0) || !(opt.eps_max > opt.eps_min))
    throw std::invalid_argument("rate_solve_numeric: bad eps grid");
  const int G = opt.grid_points;
  const double step = std::pow(opt.eps_max / opt.eps_min, 1.0 / (G - 1));
  std::vector<double> grid(G);
  for (int i = 0; i < G; ++i) grid[i] = opt.eps_min * std::pow(step, i);

  std::vector<SmallBallEstimate> mc;
  if (opt.method == SmallBallMethod::monte_carlo)
    mc = smallball_curve(m, grid, BallNorm::l2, opt.mc_samples, opt.seed);
  auto smallball = [&](int i) {
    if (opt.method == SmallBallMethod::monte_carlo) return mc[i].neglog_hi;
    const auto sp = smallball_saddlepoint(m, grid[i]);
    return sp.valid ? sp.neglog : 0.0;
  };
  auto phi = [&](int i) {
    return inf_term_exact(w, grid[i], m.spec()).value / m.params().p() + smallball(i);
  };
  auto ok = [&](int i, double& ph) {
    ph = phi(i);
    return ph <= n * grid[i] * grid[i];
  };

  RateSolveResult r;
  r.grid_step = step;
  double ph = 0.0;
  if (!ok(G - 1, ph)) throw std::runtime_error("rate_solve_numeric: no crossing below eps_max");
  if (ok(0, ph)) {
    r.eps_n = grid[0];
    r.phi = ph;
    return r;
  }
  int lo = 0, hi = G - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    double tmp;
    if (ok(mid, tmp)) hi = mid; else lo = mid;
  }
  if (opt.method == SmallBallMethod::monte_carlo && mc[lo].hits == 0)
    throw ZeroHits(grid[lo], opt.mc_samples);
  ok(hi, ph);
  r.eps_n = grid[hi];
  r.phi = ph;
  return r;
}

}  // namespace pexp
