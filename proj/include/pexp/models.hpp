#ifndef PEXP_MODELS_HPP
#define PEXP_MODELS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pexp/measure.hpp"
#include "pexp/rng.hpp"
#include "pexp/sequences.hpp"

namespace pexp {

// ---------------------------------------------------------------------------
// White noise in sequence form: y_l = w0_l + z_l / sqrt(n)

struct WhiteNoiseData {
  double n = 0.0;
  CoefVec y;
};

WhiteNoiseData wn_simulate(const CoefVec& w0, double n, Rng& rng);

/// Posterior draws in whitened coordinates xi (u = gamma * xi).
struct PosteriorChain {
  std::vector<CoefVec> draws;
  std::vector<double> scaling;
  double acceptance_rate = 1.0;
  std::vector<double> level_acceptance;  // density model: per level, after burn-in
  std::vector<double> step_log;          // density model: frozen per-level proposal scales
  std::vector<std::string> warnings;

  CoefVec draw_u(std::size_t s) const;
};

struct WnSamplerOptions {
  bool force_grid = false;  // use the grid sampler even for p = 2
};

/// S independent joint posterior draws. The posterior is a product over
/// coordinates; each coordinate is drawn exactly (conjugate normal for p = 2)
/// or from a 4096-node piecewise-linear fit of its log-concave density.
/// Coordinate l uses the sub-stream (seed, l). OpenMP over coordinates.
PosteriorChain wn_posterior_sample(const WhiteNoiseData& data, const PExpMeasure& m,
                                   std::size_t draws, std::uint64_t seed,
                                   const WnSamplerOptions& opt = {});
/// Serial reference (bit-identical).
PosteriorChain wn_posterior_sample_serial(const WhiteNoiseData& data, const PExpMeasure& m,
                                          std::size_t draws, std::uint64_t seed,
                                          const WnSamplerOptions& opt = {});

/// One coordinate: draws of xi with density proportional to
/// exp(-n (y - gamma xi)^2 / 2 - |xi|^p / p).
class CoordinatePosterior {
 public:
  static constexpr std::size_t kNodes = 4096;

  CoordinatePosterior(double p, double gamma, double n, double y);

  double mode() const noexcept { return mode_; }
  double lo() const noexcept { return x0_; }
  double hi() const noexcept { return x0_ + step_ * (kNodes - 1); }
  /// Exact moments of the fitted piecewise-linear density.
  double mean() const;
  double variance() const;
  /// Draw by inversion of the piecewise-linear CDF.
  double draw(double u) const;
  double log_density(double xi) const;

 private:
  double p_, gamma_, n_, y_;
  double mode_ = 0.0;
  double x0_ = 0.0, step_ = 0.0;
  std::vector<double> dens_;  // unnormalized, max 1
  std::vector<double> cum_;   // cumulative trapezoid mass, cum_[0] = 0
};

struct ErrorStats {
  double median = 0.0;
  double q90 = 0.0;
};

/// ||u^(s) - w0||_2 over draws; median and 90th percentile. `truth_tail2` is
/// the squared l2 norm of truth coefficients beyond the chain's truncation.
ErrorStats wn_error_stats(const PosteriorChain& chain, const CoefVec& w0, double truth_tail2 = 0.0);

/// Median and 90th percentile of arbitrary values.
ErrorStats quantile_stats(std::vector<double> values);

// ---------------------------------------------------------------------------
// Density estimation on [0, 1]: pi = exp(W) / int exp(W), W = sum u_kl psi_kl

std::vector<double> uniform_grid(std::size_t points);

/// Density values on a uniform grid of [0, 1] (>= 2^{K+2} points). Normalized
/// by the trapezoid rule on that grid.
std::vector<double> de_density(const CoefVec& u, const FaberSchauderBasis& basis,
                               std::span<const double> grid);

struct DensitySample {
  std::vector<double> points;
  std::size_t n() const noexcept { return points.size(); }
};

/// Inverse-CDF sampling from de_density on a 2^12 grid with a linearly
/// interpolated CDF.
DensitySample de_simulate(const CoefVec& w0, const FaberSchauderBasis& basis, std::size_t n,
                          Rng& rng);

struct McmcConfig {
  std::size_t iterations = 20000;  // after burn-in
  std::size_t burn_in = 5000;
  std::size_t thin = 10;
  double target_acceptance = 0.234;
  std::uint64_t seed = 1;
};

/// Exact log of int_0^1 exp(W) for W piecewise linear between the nodes.
double log_normalizer(std::span<const double> nodal);

/// Unnormalized log posterior of whitened coordinates xi given the
/// sufficient statistics A_kl = sum_i psi_kl(X_i).
double de_log_posterior(std::span<const double> xi, const PExpMeasure& m,
                        const FaberSchauderBasis& basis, std::span<const double> stats,
                        std::size_t n);
std::vector<double> de_sufficient_stats(const DensitySample& sample,
                                        const FaberSchauderBasis& basis);

/// Adaptive random-walk Metropolis in xi, one block per level, scales tuned
/// toward the target acceptance during burn-in then frozen. Throws
/// std::runtime_error on a non-finite log posterior.
PosteriorChain de_posterior_mcmc(const DensitySample& sample, const PExpMeasure& m,
                                 const FaberSchauderBasis& basis, const McmcConfig& cfg);

/// sqrt(int (sqrt(pi1) - sqrt(pi2))^2) by the trapezoid rule on `grid`.
double hellinger(std::span<const double> pi1, std::span<const double> pi2,
                 std::span<const double> grid);

}  // namespace pexp

#endif  // PEXP_MODELS_HPP
