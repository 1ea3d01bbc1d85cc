#include "pexp/measure.hpp"

#include <omp.h>

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pexp/errors.hpp"

namespace pexp {

PExpMeasure::PExpMeasure(const ScalingSpec& spec)
    : params_(spec.p), spec_(spec), gammas_((spec.validate(), spec.gammas())) {}

void sample_prior_into(const PExpMeasure& m, PExpSampler& xi, Rng& rng, std::span<double> out) {
  const auto& g = m.gammas();
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * xi(rng);
}

CoefVec sample_prior(const PExpMeasure& m, Rng& rng) {
  PExpSampler xi(m.params());
  std::vector<double> u(m.dimension());
  sample_prior_into(m, xi, rng, u);
  return CoefVec(m.spec().scheme, std::move(u));
}

// ---------------------------------------------------------------------------
// Faber-Schauder basis

FaberSchauderBasis::FaberSchauderBasis(int max_level) : max_level_(max_level) {
  if (max_level < 0 || max_level > 30) {
    throw std::invalid_argument("Faber-Schauder basis: max level must be in [0, 30]");
  }
}

double FaberSchauderBasis::psi(int k, std::size_t l, double x) const {
  const double t = std::ldexp(x, k) - static_cast<double>(l - 1);
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp2(0.5 * k) * (1.0 - std::abs(2.0 * t - 1.0));
}

FaberSchauderBasis::Touch FaberSchauderBasis::touch(int k, double x) const {
  const std::size_t count = std::size_t{1} << k;
  const double t = std::ldexp(std::clamp(x, 0.0, 1.0), k);
  std::size_t l = static_cast<std::size_t>(std::floor(t)) + 1;
  if (l > count) l = count;
  const double local = t - static_cast<double>(l - 1);
  const double value = std::exp2(0.5 * k) * std::max(0.0, 1.0 - std::abs(2.0 * local - 1.0));
  return {dyadic_offset(k, l), value};
}

void FaberSchauderBasis::nodal_values(std::span<const double> u, std::span<double> out) const {
  const std::size_t m = node_intervals();
  if (out.size() != m + 1) throw std::invalid_argument("nodal_values: output size mismatch");
  const int levels = std::bit_width(u.size() + 1) - 2;
  if (levels > max_level_) throw std::invalid_argument("nodal_values: vector finer than basis");
  std::fill(out.begin(), out.end(), 0.0);
  for (int k = 0; k <= levels; ++k) {
    const std::size_t stride = m >> k;
    const std::size_t half = stride / 2;
    const double scale = std::exp2(0.5 * k);
    const std::size_t base = dyadic_offset(k, 1);
    const std::size_t count = std::size_t{1} << k;
    for (std::size_t l = 0; l < count; ++l) {
      const std::size_t left = l * stride;
      out[left + half] = 0.5 * (out[left] + out[left + stride]) + scale * u[base + l];
    }
  }
  // Levels coarser than the basis leave interior nodes unset; fill them by
  // linear interpolation (the expansion is linear there).
  for (int k = levels + 1; k <= max_level_; ++k) {
    const std::size_t stride = m >> k;
    const std::size_t half = stride / 2;
    for (std::size_t left = 0; left < m; left += stride) {
      out[left + half] = 0.5 * (out[left] + out[left + stride]);
    }
  }
}

std::vector<double> FaberSchauderBasis::nodal_values(const CoefVec& u) const {
  if (u.scheme() != IndexScheme::dyadic) {
    throw std::invalid_argument("nodal_values: dyadic coefficient vector required");
  }
  std::vector<double> out(node_intervals() + 1);
  nodal_values(u.values(), out);
  return out;
}

std::vector<double> evaluate_function(const CoefVec& u, const FaberSchauderBasis& basis,
                                      std::span<const double> xgrid) {
  if (u.scheme() != IndexScheme::dyadic) {
    throw std::invalid_argument("evaluate_function: dyadic coefficient vector required");
  }
  const int levels = u.max_level();
  if (levels > basis.max_level()) {
    throw std::invalid_argument("evaluate_function: vector finer than basis");
  }
  std::vector<double> out(xgrid.size(), 0.0);
  for (std::size_t j = 0; j < xgrid.size(); ++j) {
    double acc = 0.0;
    for (int k = 0; k <= levels; ++k) {
      const auto t = basis.touch(k, xgrid[j]);
      acc += u[t.offset] * t.value;
    }
    out[j] = acc;
  }
  return out;
}

double sup_norm(const CoefVec& u, const FaberSchauderBasis& basis) {
  const auto nodes = basis.nodal_values(u);
  double m = 0.0;
  for (double v : nodes) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// Regularity of draws

std::string to_string(RegularityVerdict v) {
  switch (v) {
    case RegularityVerdict::converged: return "CONVERGED";
    case RegularityVerdict::diverging: return "DIVERGING";
    default: return "UNDECIDED";
  }
}

std::vector<RegularityRow> regularity_scan(const PExpMeasure& m, std::span<const double> s_grid,
                                           double q, int trials, std::uint64_t seed) {
  if (trials < 30) throw std::invalid_argument("regularity_scan: need at least 30 trials");
  if (!(q >= 1.0) || std::isinf(q)) throw std::invalid_argument("regularity_scan: need finite q >= 1");
  const ScalingSpec& base = m.spec();
  if (base.scheme != IndexScheme::linear) {
    throw std::invalid_argument("regularity_scan: linear scheme required");
  }
  constexpr int kMinPow = 6;
  constexpr int kMaxPow = 14;
  const std::size_t n_max = std::size_t{1} << kMaxPow;
  const PExpMeasure big(ScalingSpec::linear(base.p, base.alpha, base.d, n_max, base.lambda));

  std::vector<std::size_t> truncations;
  for (int e = kMinPow; e <= kMaxPow; ++e) truncations.push_back(std::size_t{1} << e);

  // norms[s][trial][N]
  const std::size_t ns = s_grid.size();
  const std::size_t nt = truncations.size();
  std::vector<double> norms(ns * trials * nt);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    Rng rng = substream(seed, {static_cast<std::uint64_t>(t)});
    PExpSampler xi(big.params());
    std::vector<double> u(n_max);
    sample_prior_into(big, xi, rng, u);
    for (std::size_t si = 0; si < ns; ++si) {
      const double expo = q * (s_grid[si] / base.d + 0.5) - 1.0;
      double acc = 0.0;
      std::size_t next = 0;
      for (std::size_t i = 0; i < n_max; ++i) {
        acc += std::pow(double(i + 1), expo) * std::pow(std::abs(u[i]), q);
        if (i + 1 == truncations[next]) {
          norms[(si * trials + t) * nt + next] = std::pow(acc, 1.0 / q);
          ++next;
        }
      }
    }
  }

  std::vector<RegularityRow> rows;
  for (std::size_t si = 0; si < ns; ++si) {
    RegularityRow row;
    row.s = s_grid[si];
    row.truncations = truncations;
    std::vector<double> col(trials);
    for (std::size_t j = 0; j < nt; ++j) {
      for (int t = 0; t < trials; ++t) col[t] = norms[(si * trials + t) * nt + j];
      std::nth_element(col.begin(), col.begin() + trials / 2, col.end());
      double med = col[trials / 2];
      if (trials % 2 == 0) {
        med = 0.5 * (med + *std::max_element(col.begin(), col.begin() + trials / 2));
      }
      row.median_norms.push_back(med);
    }
    // OLS slope of log norm vs log N.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < nt; ++j) {
      const double x = std::log(double(truncations[j]));
      const double y = std::log(row.median_norms[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    row.growth_slope = (nt * sxy - sx * sy) / (nt * sxx - sx * sx);
    row.last_increment = row.median_norms[nt - 1] / row.median_norms[nt - 2] - 1.0;
    if (row.growth_slope > 0.05) {
      row.verdict = RegularityVerdict::diverging;
    } else if (row.last_increment < 0.01) {
      row.verdict = RegularityVerdict::converged;
    } else {
      row.verdict = RegularityVerdict::undecided;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Anderson inequality

namespace {

constexpr std::size_t kBlock = 4096;

struct AndersonCounts {
  std::uint64_t centered = 0, shifted = 0, both = 0;
};

AndersonCounts anderson_block(const PExpMeasure& m, double eps2, std::span<const double> shift,
                              std::size_t begin, std::size_t end, std::uint64_t seed,
                              std::uint64_t block) {
  Rng rng = substream(seed, {block});
  PExpSampler xi(m.params());
  std::vector<double> u(m.dimension());
  AndersonCounts c;
  for (std::size_t s = begin; s < end; ++s) {
    sample_prior_into(m, xi, rng, u);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      a += u[i] * u[i];
      const double d = u[i] - shift[i];
      b += d * d;
    }
    const bool in_a = a <= eps2;
    const bool in_b = b <= eps2;
    c.centered += in_a;
    c.shifted += in_b;
    c.both += in_a && in_b;
  }
  return c;
}

AndersonResult anderson_finish(const AndersonCounts& c, std::size_t samples) {
  AndersonResult r;
  const double n = static_cast<double>(samples);
  r.p_centered = c.centered / n;
  r.p_shifted = c.shifted / n;
  const double p12 = c.both / n;
  const double diff = r.p_centered - r.p_shifted;
  const double var = std::max(0.0, r.p_centered + r.p_shifted - 2.0 * p12 - diff * diff);
  r.joint_stderr = std::sqrt(var / n);
  r.pass = r.p_shifted <= r.p_centered + 3.0 * r.joint_stderr;
  return r;
}

void anderson_validate(const PExpMeasure& m, std::span<const double> shift, std::size_t samples) {
  if (m.dimension() > 50) throw std::invalid_argument("anderson_check: dimension must be <= 50");
  if (shift.size() != m.dimension()) throw std::invalid_argument("anderson_check: shift length");
  if (samples == 0) throw std::invalid_argument("anderson_check: need samples > 0");
}

}  // namespace

AndersonResult anderson_check(const PExpMeasure& m, double eps, std::span<const double> shift,
                              std::size_t samples, std::uint64_t seed) {
  anderson_validate(m, shift, samples);
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<AndersonCounts> per(blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < blocks; ++b) {
    per[b] = anderson_block(m, eps * eps, shift, b * kBlock, std::min(samples, (b + 1) * kBlock),
                            seed, b);
  }
  AndersonCounts total;
  for (const auto& c : per) {
    total.centered += c.centered;
    total.shifted += c.shifted;
    total.both += c.both;
  }
  return anderson_finish(total, samples);
}

AndersonResult anderson_check_serial(const PExpMeasure& m, double eps,
                                     std::span<const double> shift, std::size_t samples,
                                     std::uint64_t seed) {
  anderson_validate(m, shift, samples);
  AndersonCounts total;
  for (std::size_t b = 0; b * kBlock < samples; ++b) {
    const auto c = anderson_block(m, eps * eps, shift, b * kBlock,
                                  std::min(samples, (b + 1) * kBlock), seed, b);
    total.centered += c.centered;
    total.shifted += c.shifted;
    total.both += c.both;
  }
  return anderson_finish(total, samples);
}

// ---------------------------------------------------------------------------
// Decentering bound by nested quadrature

namespace {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) {
    const auto pos = boost::math::legendre_p_zeros<double>(n);
    for (double x : pos) {
      const double dp = boost::math::legendre_p_prime<double>(n, x);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes.push_back(x);
      weights.push_back(w);
      if (x != 0.0) {
        nodes.push_back(-x);
        weights.push_back(w);
      }
    }
  }
};

struct Coordinate {
  const PExpParams* params;
  double gamma;
  double center;

  double density(double x) const { return pdf(*params, x / gamma) / gamma; }
  // P(|u - center| <= r) for u = gamma * xi.
  double interval(double r) const {
    const double a = (center - r) / gamma;
    const double b = (center + r) / gamma;
    if (a >= 0.0) return upper_tail(*params, a) - upper_tail(*params, b);
    if (b <= 0.0) return upper_tail(*params, -b) - upper_tail(*params, -a);
    return 1.0 - upper_tail(*params, -a) - upper_tail(*params, b);
  }
};

// Probability that the coordinates [first, end) lie in the l2 ball of radius r
// about their centers.
double nested_ball(const std::vector<Coordinate>& c, std::size_t first, double r,
                   const GaussLegendre& gl) {
  if (r <= 0.0) return 0.0;
  if (first + 1 == c.size()) return c[first].interval(r);
  const Coordinate& cur = c[first];
  // Breakpoints in theta where the integrand loses smoothness: the density
  // kink at u = 0 and the interval kinks of the next coordinate.
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  std::vector<double> cuts{-kHalfPi, kHalfPi};
  if (std::abs(cur.center) < r) cuts.push_back(std::asin(-cur.center / r));
  for (std::size_t j = first + 1; j < c.size(); ++j) {
    if (std::abs(c[j].center) < r && c[j].center != 0.0) {
      const double t = std::acos(std::abs(c[j].center) / r);
      cuts.push_back(t);
      cuts.push_back(-t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double lo = cuts[piece], hi = cuts[piece + 1];
    if (hi - lo <= 0.0) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double theta = mid + half * gl.nodes[i];
      const double cs = std::cos(theta);
      const double x = cur.center + r * std::sin(theta);
      const double inner = nested_ball(c, first + 1, r * cs, gl);
      total += gl.weights[i] * half * cur.density(x) * inner * r * cs;
    }
  }
  return total;
}

}  // namespace

double ball_probability(const PExpMeasure& m, double eps, std::span<const double> center,
                        int nodes) {
  if (m.dimension() < 1 || m.dimension() > 3) {
    throw std::invalid_argument("ball_probability: dimension must be 1, 2 or 3");
  }
  if (center.size() != m.dimension()) throw std::invalid_argument("ball_probability: center length");
  std::vector<Coordinate> c;
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    c.push_back({&m.params(), m.gammas()[i], center[i]});
  }
  const GaussLegendre gl(nodes);
  return nested_ball(c, 0, eps, gl);
}

DecenteringResult decentering_check(const PExpMeasure& m, double eps, const CoefVec& h) {
  if (!(eps > 0.0)) throw std::invalid_argument("decentering_check: need eps > 0");
  const std::vector<double> zero(m.dimension(), 0.0);
  const double z = z_norm_p(h, m.spec());
  DecenteringResult r;
  const double shifted_lo = ball_probability(m, eps, h.values(), 200);
  const double shifted_hi = ball_probability(m, eps, h.values(), 400);
  const double centered_lo = ball_probability(m, eps, zero, 200);
  const double centered_hi = ball_probability(m, eps, zero, 400);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  r.achieved_tol = std::max(rel(shifted_lo, shifted_hi), rel(centered_lo, centered_hi));
  if (r.achieved_tol > 1e-9) {
    throw QuadratureError("decentering_check: quadrature did not converge", r.achieved_tol);
  }
  r.lhs = shifted_hi;
  r.rhs = std::exp(-z / m.params().p()) * centered_hi;
  r.pass = r.lhs >= r.rhs * (1.0 - 1e-6);
  return r;
}

}  // namespace pexp
