#ifndef PEXP_EXPERIMENTS_HPP
#define PEXP_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pexp/models.hpp"
#include "pexp/sequences.hpp"

namespace pexp {

enum class ModelKind { white_noise, density };
std::string to_string(ModelKind m);

enum class TheorySetting { l2, l2_rescaled, sup };
std::string to_string(TheorySetting s);
TheorySetting parse_theory_setting(const std::string& text);

struct ExperimentConfig {
  ModelKind model = ModelKind::white_noise;

  // Prior
  double p = 2.0;
  double alpha = 1.0;
  int d = 1;
  double lambda = 1.0;
  /// lambda_n = lambda * n^{-lambda_poly} * log(n)^{lambda_log}
  double lambda_poly = 0.0;
  double lambda_log = 0.0;
  /// Density model: max level K. White noise: 0 means "per-n rule".
  std::size_t truncation = 0;

  // Truth
  double beta = 1.0;
  double q = 2.0;  // may be infinity ("inf" in JSON)
  double delta = 0.05;
  TruthProfile profile = TruthProfile::lacunary;
  std::string truth_file;  // explicit CoefVec CSV instead of make_truth

  std::vector<double> n_grid;
  int replicates = 20;
  std::size_t posterior_draws = 200;
  std::uint64_t seed = 1;
  std::string output;

  double tolerance = 0.1;
  int min_replicates = 3;
  TheorySetting theory = TheorySetting::l2;
  std::optional<double> theory_exponent;  // overrides the rates module

  McmcConfig mcmc;

  /// Canonical text the content hash is computed from.
  std::string source_text;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

/// Parses JSON; unknown keys are rejected with std::invalid_argument.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Hex SHA-1 of "blob <len>\0<text>", as git hashes file contents.
std::string git_blob_hash(const std::string& text);

/// Truncation N for the linear scheme such that the prior tail
/// sum_{l > N} gamma_l^2 stays below (0.01 n^{-beta/(d+2beta)})^2.
std::size_t truncation_for(const ExperimentConfig& cfg, double n);
double lambda_for(const ExperimentConfig& cfg, double n);
double theory_exponent(const ExperimentConfig& cfg);

struct ResultRow {
  double n = 0.0;
  int rep = 0;
  double error_median = 0.0;
  double q90 = 0.0;
  double lo = 0.0;  // 5% quantile of the posterior error
  double hi = 0.0;  // 95% quantile
  std::size_t truncation = 0;
  std::string note;  // e.g. MCMC warnings
  bool operator==(const ResultRow&) const = default;
};

struct SlopeResult {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
};

/// OLS of log(value) on log(x). Needs >= 4 rows with positive entries.
SlopeResult fit_slope(std::span<const double> x, std::span<const double> value);

enum class Verdict { consistent, inconsistent, underpowered };
std::string to_string(Verdict v);

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<double> n_values;
  std::vector<double> median_q90;  // per n, median over replicates
  double fitted_slope = 0.0;
  double std_error = 0.0;
  double theory_exponent = 0.0;
  Verdict verdict = Verdict::underpowered;
};

Verdict decide(double slope, double std_error, double theory, double tol, int replicates,
               int min_replicates, std::size_t points);

/// One (n, replicate) cell; deterministic in (seed, n index, replicate).
ResultRow run_cell(const ExperimentConfig& cfg, const CoefVec& truth, std::size_t n_index,
                   int rep);

/// The truth coefficients for the configuration (long enough for every n).
CoefVec experiment_truth(const ExperimentConfig& cfg);

/// OpenMP over (n, replicate) cells.
ExperimentResult run_contraction(const ExperimentConfig& cfg);
/// Serial reference (bit-identical).
ExperimentResult run_contraction_serial(const ExperimentConfig& cfg);

/// Per-draw errors of one cell (L2 or Hellinger) and, for the density model,
/// the per-level acceptance rates.
std::string chain_summary_csv(const ExperimentConfig& cfg, std::size_t n_index, int rep);

/// results.csv, summary.json and plotdata.csv in `dir`.
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& res,
                              const std::string& dir);
std::string results_csv(const ExperimentResult& res);

// ---------------------------------------------------------------------------
// Inequality battery

struct InequalityConfig {
  std::uint64_t seed = 1;
  std::size_t anderson_samples = 200000;
  int shifts = 20;
  double eps = 1.0;
  std::vector<double> p_values = {1.0, 1.5, 2.0};
  std::vector<double> tail_p_values = {1.0, 1.2, 1.5, 2.0};
  int tail_grid_points = 1000;
  double tail_grid_max = 6.0;
};
InequalityConfig parse_inequality_config(const nlohmann::json& j);

struct InequalityRow {
  std::string check;  // anderson | decentering | tail_lower_bound
  double p = 0.0;
  int dim = 0;
  std::string detail;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
};

std::vector<InequalityRow> run_inequalities(const InequalityConfig& cfg);
std::string inequality_csv(std::span<const InequalityRow> rows);

}  // namespace pexp

#endif  // PEXP_EXPERIMENTS_HPP
