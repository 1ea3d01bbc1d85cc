#ifndef PEXP_CONCENTRATION_HPP
#define PEXP_CONCENTRATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pexp/measure.hpp"
#include "pexp/sequences.hpp"

namespace pexp {

// ---------------------------------------------------------------------------
// Approximation term: inf ||h||_Z^p subject to ||h - w||_2 <= eps

struct InfTermResult {
  double value = 0.0;  // inf ||h||_Z^p, without the 1/p factor
  CoefVec argmin;
  double multiplier = 0.0;  // Lagrange multiplier of the ball constraint
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Exact convex solve. The objective is coordinate-separable, so for a fixed
/// multiplier each coordinate is a 1-D problem (soft threshold for p = 1,
/// bracketed Newton otherwise); the multiplier is found by bisection on
/// log(multiplier) until the constraint is tight to 1e-10 eps.
/// Throws ConvergenceError if the KKT residual stays above 1e-9.
InfTermResult inf_term_exact(const CoefVec& w, double eps, const ScalingSpec& spec);

struct TruncationBound {
  double value = 0.0;
  std::size_t cutoff = 0;  // L: h keeps w_1..w_L
};

/// ||w_{1:L}||_Z^p for the smallest L with ||w_{1:L} - w||_2 <= eps.
TruncationBound inf_term_truncation_ub(const CoefVec& w, double eps, const ScalingSpec& spec);

// ---------------------------------------------------------------------------
// Centered small-ball probabilities

enum class BallNorm { l2, sup };
std::string to_string(BallNorm n);
BallNorm parse_ball_norm(const std::string& text);

/// Estimates below this probability are flagged as outside the resolvable range.
constexpr double kSmallBallGuard = 1e-4;

struct SmallBallEstimate {
  double eps = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  double p_hat = 0.0;
  double neglog = 0.0;     // -log p_hat
  double neglog_lo = 0.0;  // -log of the Wilson upper limit
  double neglog_hi = 0.0;  // -log of the Wilson lower limit
  bool below_guard = false;
};

/// Monte Carlo estimate of -log mu(eps B) for one radius. Throws ZeroHits.
SmallBallEstimate smallball_mc(const PExpMeasure& m, double eps, BallNorm norm,
                               std::size_t samples, std::uint64_t seed);

/// One pass of draws scored against every radius in `eps` (any order). Entries
/// with zero hits carry neglog = +inf. OpenMP over blocks of draws, each block
/// on its own sub-stream; counts are merged so the result does not depend on
/// the thread count.
std::vector<SmallBallEstimate> smallball_curve(const PExpMeasure& m, std::span<const double> eps,
                                               BallNorm norm, std::size_t samples,
                                               std::uint64_t seed);
/// Serial reference of smallball_curve (bit-identical).
std::vector<SmallBallEstimate> smallball_curve_serial(const PExpMeasure& m,
                                                      std::span<const double> eps, BallNorm norm,
                                                      std::size_t samples, std::uint64_t seed);

/// Lugannani-Rice saddle-point approximation of -log mu(eps B_{l2}); usable
/// far below the Monte Carlo guard. `valid` is false when eps^2 exceeds the
/// prior mean of ||u||^2 (no small-ball regime).
struct SaddlePointEstimate {
  double eps = 0.0;
  double neglog = 0.0;
  double tilt = 0.0;
  bool valid = false;
};
SaddlePointEstimate smallball_saddlepoint(const PExpMeasure& m, double eps);

/// Least-squares slope of log(neglog) against log(eps) over the estimates that
/// have hits and are not below the guard.
struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;
};
SlopeFit fit_smallball_slope(std::span<const SmallBallEstimate> curve);

// ---------------------------------------------------------------------------
// Concentration function

struct ConcEstimate {
  double eps = 0.0;
  double inf_term = 0.0;  // inf ||h||_Z^p (Z-norm of the measure's own scaling)
  CoefVec argmin;
  double neglog_smallball = 0.0;
  double neglog_lo = 0.0;
  double neglog_hi = 0.0;
  double phi = 0.0;  // inf_term / p + neglog_smallball
};

/// phi_w(eps) for the l2 norm. A rescaled measure (lambda != 1) is handled
/// through its own scaling; the identity
///   phi = lambda^{-p} inf ||h||^p_{Z(lambda=1)} - log mu_1((eps/lambda) B)
/// holds exactly.
ConcEstimate concentration_fn(const CoefVec& w, double eps, const PExpMeasure& m,
                              std::size_t mc_samples, std::uint64_t seed);

/// Same on a grid of radii, sharing one Monte Carlo pass.
std::vector<ConcEstimate> concentration_curve(const CoefVec& w, std::span<const double> eps,
                                              const PExpMeasure& m, std::size_t mc_samples,
                                              std::uint64_t seed);

enum class FgSetting { l2, sup };

struct FgValues {
  double f = 0.0;
  double g = 0.0;
};

/// Complexity-bound functions f(a), g(eps). The sup-setting constant is 1.
FgValues fg_values(double p, double alpha, int d, FgSetting setting, double a, double eps);

// ---------------------------------------------------------------------------
// Numeric rate equation phi_w(eps) <= n eps^2

enum class SmallBallMethod { monte_carlo, saddlepoint };

struct RateSolveOptions {
  SmallBallMethod method = SmallBallMethod::monte_carlo;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 1;
  double eps_min = 1e-4;
  double eps_max = 10.0;
  int grid_points = 161;
};

struct RateSolveResult {
  double eps_n = 0.0;
  double phi = 0.0;     // phi (upper CI for Monte Carlo) at eps_n
  double grid_step = 0.0;  // multiplicative grid spacing
};

/// Smallest grid eps with phi_w(eps) <= n eps^2, using the Monte Carlo upper
/// confidence limit for the small-ball term. Throws ZeroHits when the crossing
/// lies where the small-ball probability is not estimable.
RateSolveResult rate_solve_numeric(const CoefVec& w, const PExpMeasure& m, double n,
                                   const RateSolveOptions& opt = {});

}  // namespace pexp

#endif  // PEXP_CONCENTRATION_HPP
