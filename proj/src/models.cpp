#include "pexp/models.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pexp {

WhiteNoiseData wn_simulate(const CoefVec& w0, double n, Rng& rng) {
  if (!(n > 0.0)) throw std::invalid_argument("wn_simulate: n must be positive");
  std::normal_distribution<double> z;
  std::vector<double> y(w0.size());
  const double s = 1.0 / std::sqrt(n);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = w0[i] + s * z(rng);
  return {n, CoefVec(w0.scheme(), std::move(y))};
}

CoefVec PosteriorChain::draw_u(std::size_t s) const {
  const auto& xi = draws.at(s);
  std::vector<double> u(xi.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = scaling[i] * xi[i];
  return CoefVec(xi.scheme(), std::move(u));
}

CoordinatePosterior::CoordinatePosterior(double p, double gamma, double n, double y)
    : p_(p), gamma_(gamma), n_(n), y_(y) {
  // Mode: root of the decreasing score n gamma (y - gamma xi) - sign(xi)|xi|^{p-1}.
  auto score = [&](double xi) {
    const double prior = xi == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(xi), p_ - 1.0), xi);
    return n_ * gamma_ * (y_ - gamma_ * xi) - prior;
  };
  const double t = y_ / gamma_;
  if (t != 0.0 && !(p_ == 1.0 && std::abs(n_ * gamma_ * y_) <= 1.0)) {
    double a = std::min(0.0, t), b = std::max(0.0, t);
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (score(mid) > 0.0) a = mid; else b = mid;
    }
    mode_ = 0.5 * (a + b);
  }
  const double sigma = 1.0 / std::sqrt(n_ * gamma_ * gamma_ + 1.0);
  const double top = log_density(mode_);
  double lo = mode_ - 12.0 * sigma, hi = mode_ + 12.0 * sigma;
  for (int it = 0; it < 60 && log_density(lo) > top - 40.0; ++it) lo = mode_ - 2.0 * (mode_ - lo);
  for (int it = 0; it < 60 && log_density(hi) > top - 40.0; ++it) hi = mode_ + 2.0 * (hi - mode_);
  if (log_density(lo) > top - 40.0 || log_density(hi) > top - 40.0)
    throw std::runtime_error("CoordinatePosterior: grid could not cover the posterior mass");
  x0_ = lo;
  step_ = (hi - lo) / static_cast<double>(kNodes - 1);
  dens_.resize(kNodes);
  cum_.resize(kNodes);
  for (std::size_t i = 0; i < kNodes; ++i)
    dens_[i] = std::exp(log_density(x0_ + step_ * static_cast<double>(i)) - top);
  cum_[0] = 0.0;
  for (std::size_t i = 1; i < kNodes; ++i)
    cum_[i] = cum_[i - 1] + 0.5 * step_ * (dens_[i - 1] + dens_[i]);
}

double CoordinatePosterior::log_density(double xi) const {
  const double r = y_ - gamma_ * xi;
  return -0.5 * n_ * r * r - std::pow(std::abs(xi), p_) / p_;
}

double CoordinatePosterior::mean() const {
  // Cell-wise exact moments in local coordinates about x0.
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j + 1 < kNodes; ++j) {
    const double a = dens_[j], b = dens_[j + 1];
    const double xj = step_ * static_cast<double>(j);
    m0 += step_ * (a + b) / 2.0;
    m1 += step_ * (xj * (a + b) / 2.0 + step_ * (a + 2.0 * b) / 6.0);
  }
  return x0_ + m1 / m0;
}

double CoordinatePosterior::variance() const {
  const double mu = mean() - x0_;
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j + 1 < kNodes; ++j) {
    const double a = dens_[j], b = dens_[j + 1];
    const double xj = step_ * static_cast<double>(j) - mu;
    m0 += step_ * (a + b) / 2.0;
    m2 += step_ * (xj * xj * (a + b) / 2.0 + 2.0 * xj * step_ * (a + 2.0 * b) / 6.0 +
                   step_ * step_ * (a + 3.0 * b) / 12.0);
  }
  return m2 / m0;
}

double CoordinatePosterior::draw(double u) const {
  const double target = u * cum_.back();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  std::size_t j = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
  if (j >= kNodes - 1) j = kNodes - 2;
  const double r = std::max(0.0, target - cum_[j]);
  const double a = dens_[j], b = dens_[j + 1];
  // Solve a t + (b - a) t^2 / 2 = r / step for t in [0, 1].
  const double rr = r / step_;
  const double disc = std::max(0.0, a * a + 2.0 * (b - a) * rr);
  const double denom = a + std::sqrt(disc);
  const double t = denom > 0.0 ? std::clamp(2.0 * rr / denom, 0.0, 1.0) : 0.5;
  return x0_ + step_ * (static_cast<double>(j) + t);
}

namespace {

void wn_coordinate(const WhiteNoiseData& data, const PExpMeasure& m, std::size_t l,
                   std::size_t draws, std::uint64_t seed, bool force_grid,
                   std::vector<CoefVec>& out) {
  Rng rng = substream(seed, {static_cast<std::uint64_t>(l)});
  const double g = m.gammas()[l];
  const double n = data.n, y = data.y[l];
  if (m.params().is_gaussian() && !force_grid) {
    const double prec = n * g * g + 1.0;
    const double mean = n * g * y / prec;
    const double sd = 1.0 / std::sqrt(prec);
    std::normal_distribution<double> z;
    for (std::size_t s = 0; s < draws; ++s) out[s][l] = mean + sd * z(rng);
    return;
  }
  const CoordinatePosterior post(m.params().p(), g, n, y);
  for (std::size_t s = 0; s < draws; ++s) out[s][l] = post.draw(uniform_open(rng));
}

PosteriorChain wn_prepare(const WhiteNoiseData& data, const PExpMeasure& m, std::size_t draws) {
  if (data.y.size() != m.dimension())
    throw std::invalid_argument("wn_posterior_sample: data length differs from the prior truncation");
  if (draws == 0) throw std::invalid_argument("wn_posterior_sample: need at least one draw");
  PosteriorChain c;
  c.draws.assign(draws, CoefVec::zeros(data.y.scheme(), data.y.size()));
  c.scaling = m.gammas();
  return c;
}

}  // namespace

PosteriorChain wn_posterior_sample(const WhiteNoiseData& data, const PExpMeasure& m,
                                   std::size_t draws, std::uint64_t seed,
                                   const WnSamplerOptions& opt) {
  auto c = wn_prepare(data, m, draws);
  const auto dim = static_cast<std::ptrdiff_t>(m.dimension());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t l = 0; l < dim; ++l)
    wn_coordinate(data, m, static_cast<std::size_t>(l), draws, seed, opt.force_grid, c.draws);
  return c;
}

PosteriorChain wn_posterior_sample_serial(const WhiteNoiseData& data, const PExpMeasure& m,
                                          std::size_t draws, std::uint64_t seed,
                                          const WnSamplerOptions& opt) {
  auto c = wn_prepare(data, m, draws);
  for (std::size_t l = 0; l < m.dimension(); ++l)
    wn_coordinate(data, m, l, draws, seed, opt.force_grid, c.draws);
  return c;
}

ErrorStats quantile_stats(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("quantile_stats: no values");
  std::sort(v.begin(), v.end());
  auto q = [&](double prob) {
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
  };
  return {q(0.5), q(0.9)};
}

ErrorStats wn_error_stats(const PosteriorChain& chain, const CoefVec& w0, double truth_tail2) {
  if (chain.draws.empty()) throw std::invalid_argument("wn_error_stats: empty chain");
  std::vector<double> err(chain.draws.size());
  for (std::size_t s = 0; s < err.size(); ++s) {
    const auto& xi = chain.draws[s];
    if (xi.size() != w0.size()) throw std::invalid_argument("wn_error_stats: length mismatch");
    double e2 = truth_tail2;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const double d = chain.scaling[i] * xi[i] - w0[i];
      e2 += d * d;
    }
    err[s] = std::sqrt(e2);
  }
  return quantile_stats(std::move(err));
}

std::vector<double> uniform_grid(std::size_t points) {
  if (points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

namespace {

double trapezoid(std::span<const double> f, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

}  // namespace

std::vector<double> de_density(const CoefVec& u, const FaberSchauderBasis& basis,
                               std::span<const double> grid) {
  if (grid.size() < (std::size_t{1} << (basis.max_level() + 2)))
    throw std::invalid_argument("de_density: grid needs at least 2^{K+2} points");
  if (grid.front() != 0.0 || grid.back() != 1.0)
    throw std::invalid_argument("de_density: grid must span [0, 1]");
  auto w = evaluate_function(u, basis, grid);
  const double top = *std::max_element(w.begin(), w.end());
  for (double& v : w) v = std::exp(v - top);
  const double z = trapezoid(w, grid);
  for (double& v : w) v /= z;
  return w;
}

DensitySample de_simulate(const CoefVec& w0, const FaberSchauderBasis& basis, std::size_t n,
                          Rng& rng) {
  if (n == 0) throw std::invalid_argument("de_simulate: n must be at least 1");
  const auto grid = uniform_grid((std::size_t{1} << 12) + 1);
  const auto dens = de_density(w0, basis, grid);
  std::vector<double> cdf(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (dens[i] + dens[i - 1]);
  for (double& c : cdf) c /= cdf.back();
  DensitySample s;
  s.points.resize(n);
  for (auto& x : s.points) {
    const double u = uniform_open(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cdf.begin());
    j = std::clamp<std::size_t>(j, 1, cdf.size() - 1);
    const double c0 = cdf[j - 1], c1 = cdf[j];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    x = std::clamp(grid[j - 1] + t * (grid[j] - grid[j - 1]), 0.0, 1.0);
  }
  return s;
}

double log_normalizer(std::span<const double> nodal) {
  if (nodal.size() < 2) throw std::invalid_argument("log_normalizer: need two nodes");
  const double top = *std::max_element(nodal.begin(), nodal.end());
  const double h = 1.0 / static_cast<double>(nodal.size() - 1);
  double s = 0.0;
  for (std::size_t i = 1; i < nodal.size(); ++i) {
    const double a = nodal[i - 1] - top, b = nodal[i] - top;
    const double d = b - a;
    if (std::abs(d) < 1e-6)
      s += h * std::exp(a) * (1.0 + d / 2.0 + d * d / 6.0 + d * d * d / 24.0);
    else
      s += h * (std::exp(b) - std::exp(a)) / d;
  }
  return top + std::log(s);
}

std::vector<double> de_sufficient_stats(const DensitySample& sample,
                                        const FaberSchauderBasis& basis) {
  std::vector<double> a(basis.size(), 0.0);
  for (double x : sample.points) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("density sample outside [0, 1]");
    for (int k = 0; k <= basis.max_level(); ++k) {
      const auto t = basis.touch(k, x);
      a[t.offset] += t.value;
    }
  }
  return a;
}

double de_log_posterior(std::span<const double> xi, const PExpMeasure& m,
                        const FaberSchauderBasis& basis, std::span<const double> stats,
                        std::size_t n) {
  const auto& g = m.gammas();
  const double p = m.params().p();
  std::vector<double> u(xi.size());
  double lp = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    u[i] = g[i] * xi[i];
    lp += u[i] * stats[i] - std::pow(std::abs(xi[i]), p) / p;
  }
  if (n > 0) {
    std::vector<double> nodes(basis.node_intervals() + 1);
    basis.nodal_values(u, nodes);
    lp -= static_cast<double>(n) * log_normalizer(nodes);
  }
  return lp;
}

PosteriorChain de_posterior_mcmc(const DensitySample& sample, const PExpMeasure& m,
                                 const FaberSchauderBasis& basis, const McmcConfig& cfg) {
  if (m.spec().scheme != IndexScheme::dyadic || m.dimension() != basis.size())
    throw std::invalid_argument("de_posterior_mcmc: prior must be dyadic and match the basis");
  if (cfg.thin == 0) throw std::invalid_argument("de_posterior_mcmc: thin must be positive");
  const int K = basis.max_level();
  const auto stats = de_sufficient_stats(sample, basis);
  const std::size_t n = sample.n();
  const std::size_t dim = m.dimension();

  Rng rng = substream(cfg.seed, {0});
  std::normal_distribution<double> z;
  std::vector<double> xi(dim, 0.0), prop(dim);
  double lp = de_log_posterior(xi, m, basis, stats, n);

  std::vector<double> log_scale(K + 1);
  for (int k = 0; k <= K; ++k)
    log_scale[k] = std::log(2.38 / std::sqrt(static_cast<double>(std::size_t{1} << k)));
  std::vector<std::size_t> batch_acc(K + 1, 0), post_acc(K + 1, 0);
  constexpr std::size_t kBatch = 50;

  PosteriorChain chain;
  chain.scaling = m.gammas();
  const std::size_t total = cfg.burn_in + cfg.iterations;
  for (std::size_t it = 0; it < total; ++it) {
    for (int k = 0; k <= K; ++k) {
      const std::size_t b = dyadic_offset(k, 1), e = b + (std::size_t{1} << k);
      prop = xi;
      const double s = std::exp(log_scale[k]);
      for (std::size_t i = b; i < e; ++i) prop[i] += s * z(rng);
      const double lq = de_log_posterior(prop, m, basis, stats, n);
      if (!std::isfinite(lq)) {
        std::size_t worst = b;
        for (std::size_t i = b; i < e; ++i)
          if (std::abs(prop[i]) > std::abs(prop[worst])) worst = i;
        throw std::runtime_error("de_posterior_mcmc: non-finite log posterior at coefficient " +
                                 std::to_string(worst) + " (xi = " + std::to_string(prop[worst]) +
                                 ")");
      }
      if (std::log(uniform_open(rng)) < lq - lp) {
        xi.swap(prop);
        lp = lq;
        if (it < cfg.burn_in) ++batch_acc[k]; else ++post_acc[k];
      }
    }
    if (it < cfg.burn_in && (it + 1) % kBatch == 0) {
      const double step = std::min(0.5, 1.0 / std::sqrt(static_cast<double>((it + 1) / kBatch)));
      for (int k = 0; k <= K; ++k) {
        const double rate = static_cast<double>(batch_acc[k]) / kBatch;
        log_scale[k] += step * (rate - cfg.target_acceptance) * 4.0;
        batch_acc[k] = 0;
      }
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thin == 0)
      chain.draws.emplace_back(IndexScheme::dyadic, xi);
  }
  chain.level_acceptance.resize(K + 1);
  std::size_t acc_all = 0;
  for (int k = 0; k <= K; ++k) {
    chain.level_acceptance[k] =
        cfg.iterations ? static_cast<double>(post_acc[k]) / static_cast<double>(cfg.iterations) : 0.0;
    chain.step_log.push_back(std::exp(log_scale[k]));
    acc_all += post_acc[k];
    if (cfg.iterations && (chain.level_acceptance[k] < 0.1 || chain.level_acceptance[k] > 0.5))
      chain.warnings.push_back("level " + std::to_string(k) + " acceptance " +
                               std::to_string(chain.level_acceptance[k]) + " outside [0.1, 0.5]");
  }
  chain.acceptance_rate =
      cfg.iterations ? static_cast<double>(acc_all) / static_cast<double>(cfg.iterations * (K + 1))
                     : 0.0;
  return chain;
}

double hellinger(std::span<const double> pi1, std::span<const double> pi2,
                 std::span<const double> grid) {
  if (pi1.size() != grid.size() || pi2.size() != grid.size())
    throw std::invalid_argument("hellinger: size mismatch");
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (pi1[i] < 0.0 || pi2[i] < 0.0) throw std::invalid_argument("hellinger: negative density");
    const double d = std::sqrt(pi1[i]) - std::sqrt(pi2[i]);
    f[i] = d * d;
  }
  return std::sqrt(trapezoid(f, grid));
}

}  // namespace pexp
