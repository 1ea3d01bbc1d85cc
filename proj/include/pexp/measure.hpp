#ifndef PEXP_MEASURE_HPP
#define PEXP_MEASURE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pexp/rng.hpp"
#include "pexp/sequences.hpp"
#include "pexp/univariate.hpp"

namespace pexp {

/// Law of the sequence (gamma_ell xi_ell), xi_ell iid p-exponential.
class PExpMeasure {
 public:
  explicit PExpMeasure(const ScalingSpec& spec);

  const PExpParams& params() const noexcept { return params_; }
  const ScalingSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& gammas() const noexcept { return gammas_; }
  std::size_t dimension() const noexcept { return gammas_.size(); }

 private:
  PExpParams params_;
  ScalingSpec spec_;
  std::vector<double> gammas_;
};

CoefVec sample_prior(const PExpMeasure& m, Rng& rng);
/// Writes one prior draw into `out` (length m.dimension()) without allocating.
void sample_prior_into(const PExpMeasure& m, PExpSampler& xi, Rng& rng, std::span<double> out);

/// Faber-Schauder hats psi_kl(x) = 2^{k/2} Lambda(2^k x - (l - 1)), Lambda the
/// unit triangle on [0, 1] peaking at 1 in the middle. Hats of one level have
/// disjoint supports, so a level sum is bounded by 2^{k/2} max_l |u_kl|.
class FaberSchauderBasis {
 public:
  explicit FaberSchauderBasis(int max_level);

  int max_level() const noexcept { return max_level_; }
  std::size_t size() const noexcept { return dyadic_length(max_level_); }
  /// Hoelder-type constant C1 for exponent 1: |psi(x)-psi(y)| <= C1 2^{3k/2}|x-y|.
  static constexpr double holder_constant = 2.0;
  static constexpr double holder_exponent = 1.0;
  /// Level sup constant C2.
  static constexpr double levelsup_constant = 1.0;

  double psi(int k, std::size_t l, double x) const;

  /// Offset of the level-k hat whose support contains x, and its value there.
  struct Touch {
    std::size_t offset;
    double value;
  };
  Touch touch(int k, double x) const;

  /// Number of intervals of the finest node grid, 2^{K+1}.
  std::size_t node_intervals() const noexcept { return std::size_t{1} << (max_level_ + 1); }

  /// Exact values at the nodes j 2^{-(K+1)}, j = 0..2^{K+1}. The expansion is
  /// piecewise linear between these nodes.
  void nodal_values(std::span<const double> u, std::span<double> out) const;
  std::vector<double> nodal_values(const CoefVec& u) const;

 private:
  int max_level_;
};

/// Pointwise value of sum_kl u_kl psi_kl on `xgrid` (points in [0, 1]).
std::vector<double> evaluate_function(const CoefVec& u, const FaberSchauderBasis& basis,
                                      std::span<const double> xgrid);

/// Exact sup norm of the expansion (attained at a node).
double sup_norm(const CoefVec& u, const FaberSchauderBasis& basis);

enum class RegularityVerdict { converged, diverging, undecided };
std::string to_string(RegularityVerdict v);

struct RegularityRow {
  double s = 0.0;
  std::vector<std::size_t> truncations;
  std::vector<double> median_norms;
  /// Least-squares slope of log median norm against log N.
  double growth_slope = 0.0;
  /// Relative change of the median norm over the last truncation step.
  double last_increment = 0.0;
  RegularityVerdict verdict = RegularityVerdict::undecided;
};

/// Growth of B^s_q norms of prior draws along N = 2^6 .. 2^14. Uses the
/// linear-scheme alpha, d, p and lambda of `m`; its own truncation is ignored.
std::vector<RegularityRow> regularity_scan(const PExpMeasure& m, std::span<const double> s_grid,
                                           double q, int trials, std::uint64_t seed);

struct AndersonResult {
  double p_centered = 0.0;
  double p_shifted = 0.0;
  double joint_stderr = 0.0;
  bool pass = false;
};

/// Monte Carlo comparison of mu(eps B) and mu(eps B + x) for the l2 ball,
/// using the same draws for both events. OpenMP over sample blocks.
AndersonResult anderson_check(const PExpMeasure& m, double eps, std::span<const double> shift,
                              std::size_t samples, std::uint64_t seed);
/// Serial reference; bit-identical to anderson_check.
AndersonResult anderson_check_serial(const PExpMeasure& m, double eps,
                                     std::span<const double> shift, std::size_t samples,
                                     std::uint64_t seed);

struct DecenteringResult {
  double lhs = 0.0;        // mu(eps B + h)
  double rhs = 0.0;        // exp(-||h||_Z^p / p) mu(eps B)
  double achieved_tol = 0.0;
  bool pass = false;
};

/// Deterministic quadrature check of mu(eps B + h) >= exp(-||h||_Z^p/p) mu(eps B)
/// in dimension 1..3. Throws pexp::QuadratureError if two resolutions disagree
/// by more than 1e-9 relative.
DecenteringResult decentering_check(const PExpMeasure& m, double eps, const CoefVec& h);

/// Probability of the l2 ball {|u - center| <= eps} under the product law, by
/// nested Gauss-Legendre quadrature with `nodes` points per angular axis.
double ball_probability(const PExpMeasure& m, double eps, std::span<const double> center,
                        int nodes);

}  // namespace pexp

#endif  // PEXP_MEASURE_HPP
