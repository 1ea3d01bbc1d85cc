#ifndef PEXP_SEQUENCES_HPP
#define PEXP_SEQUENCES_HPP

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pexp {

enum class IndexScheme { linear, dyadic };

std::string to_string(IndexScheme scheme);
IndexScheme parse_scheme(const std::string& text);

/// Position of a dyadic coefficient: level k >= 0 and location 1 <= l <= 2^k.
struct DyadicIndex {
  int k;
  std::size_t l;
};

/// Dyadic (k, l) <-> storage offset. Storage follows the linear index
/// ell = 2^k + l - 1, so offset = ell - 1.
DyadicIndex dyadic_index(std::size_t offset);
std::size_t dyadic_offset(int k, std::size_t l);
std::size_t dyadic_length(int max_level);

/// Hyperparameters of an alpha-regular p-exponential prior.
///   linear:  gamma_ell = lambda * ell^{-1/2 - alpha/d}, ell = 1..N
///   dyadic:  gamma_kl  = lambda * 2^{-(1/2 + alpha) k}, k = 0..K (d = 1)
struct ScalingSpec {
  double p = 2.0;
  double alpha = 1.0;
  int d = 1;
  double lambda = 1.0;
  IndexScheme scheme = IndexScheme::linear;
  /// N for the linear scheme, K (max level) for the dyadic scheme.
  std::size_t truncation = 1;

  static ScalingSpec linear(double p, double alpha, int d, std::size_t n, double lambda = 1.0);
  static ScalingSpec dyadic(double p, double alpha, int max_level, double lambda = 1.0);

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  std::size_t length() const;
  int max_level() const;
  double gamma(std::size_t offset) const;
  std::vector<double> gammas() const;
  ScalingSpec with_lambda(double new_lambda) const;
};

/// Finite coefficient vector. Dyadic vectors hold exactly 2^{K+1} - 1 values.
class CoefVec {
 public:
  CoefVec() = default;
  CoefVec(IndexScheme scheme, std::vector<double> values);

  static CoefVec zeros(IndexScheme scheme, std::size_t length);

  IndexScheme scheme() const noexcept { return scheme_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  int max_level() const;

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool operator==(const CoefVec&) const = default;

 private:
  IndexScheme scheme_ = IndexScheme::linear;
  std::vector<double> values_;
};

/// Smoothness s, integrability q (may be +infinity) and dimension d.
struct BesovParams {
  double s = 1.0;
  double q = 2.0;
  int d = 1;
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();

double l2_norm(std::span<const double> u);
double l2_distance(std::span<const double> a, std::span<const double> b);

/// (sum ell^{q(s/d + 1/2) - 1} |u_ell|^q)^{1/q}; sup_ell ell^{s/d+1/2}|u_ell|
/// for q = infinity. Dyadic vectors use ell = 2^k + l - 1.
double besov_norm(const CoefVec& u, const BesovParams& bp);

/// ||h||_Z^p = sum |h_ell / gamma_ell|^p  (note: the p-th power).
double z_norm_p(const CoefVec& h, const ScalingSpec& spec);

/// ||h||_Q = (sum h_ell^2 / gamma_ell^2)^{1/2}.
double q_norm(const CoefVec& h, const ScalingSpec& spec);

/// Shape of generated truths.
enum class TruthProfile {
  /// Extremal magnitude ell^{-beta/d - 1/2 + 1/q - delta} on ell = 2^j only.
  lacunary,
  /// Magnitude ell^{-beta/d - 1/2 - delta} on every index.
  dense,
};

/// Test function inside B^beta_q (bp.s plays the role of beta).
/// `signs` empty means alternating +,-,+,... over the nonzero entries.
/// Dyadic truths use ell = 2^k + l - 1, i.e. the lacunary profile keeps l = 1.
CoefVec make_truth(const BesovParams& bp, double delta, std::size_t length,
                   IndexScheme scheme = IndexScheme::linear,
                   TruthProfile profile = TruthProfile::lacunary,
                   std::span<const int> signs = {});

/// Fraction of the (infinite) B^beta_q sum of make_truth(bp, delta, ...)
/// lying beyond the first `length` coefficients.
double besov_tail_fraction(const BesovParams& bp, double delta, std::size_t length,
                           TruthProfile profile = TruthProfile::lacunary);

/// B^beta_q subset of l2: beta > d/q - d/2.
bool embedding_check(const BesovParams& bp);

/// CSV with header `scheme,k,l,ell,value`; values printed with 17 significant
/// digits so that read_csv(write_csv(u)) == u.
void write_csv(std::ostream& out, const CoefVec& u);
CoefVec read_csv(std::istream& in);
void write_csv_file(const std::string& path, const CoefVec& u);
CoefVec read_csv_file(const std::string& path);

}  // namespace pexp

#endif  // PEXP_SEQUENCES_HPP
