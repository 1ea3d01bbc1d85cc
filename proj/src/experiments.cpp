#include "pexp/experiments.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pexp/concentration.hpp"
#include "pexp/measure.hpp"
#include "pexp/rates.hpp"

namespace pexp {

using nlohmann::json;

std::string to_string(ModelKind m) { return m == ModelKind::white_noise ? "white-noise" : "density"; }

std::string to_string(TheorySetting s) {
  switch (s) {
    case TheorySetting::l2: return "l2";
    case TheorySetting::l2_rescaled: return "l2-rescaled";
    case TheorySetting::sup: return "sup";
  }
  return "l2";
}

TheorySetting parse_theory_setting(const std::string& text) {
  if (text == "l2") return TheorySetting::l2;
  if (text == "l2-rescaled") return TheorySetting::l2_rescaled;
  if (text == "sup") return TheorySetting::sup;
  throw std::invalid_argument("unknown theory setting '" + text + "'");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "CONSISTENT";
    case Verdict::inconsistent: return "INCONSISTENT";
    case Verdict::underpowered: return "UNDERPOWERED";
  }
  return "UNDERPOWERED";
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

double read_q(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return kInfinity;
    throw std::invalid_argument("truth.q: expected a number or \"inf\"");
  }
  return v.get<double>();
}

}  // namespace

void ExperimentConfig::validate() const {
  ScalingSpec probe = ScalingSpec::linear(p, alpha, d, 1, lambda);
  probe.validate();
  if (n_grid.size() < 2) throw std::invalid_argument("n_grid needs at least two values");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(n_grid[i] >= 1.0)) throw std::invalid_argument("n_grid values must be >= 1");
    if (i > 0 && !(n_grid[i] > n_grid[i - 1]))
      throw std::invalid_argument("n_grid must be strictly increasing");
  }
  if (replicates < 1) throw std::invalid_argument("replicates must be positive");
  if (posterior_draws < 1) throw std::invalid_argument("posterior_draws must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("truth.beta must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("truth.delta must be positive");
  if (model == ModelKind::density) {
    if (d != 1) throw std::invalid_argument("the density model is one-dimensional");
    if (truncation < 1 || truncation > 12)
      throw std::invalid_argument("density model: prior.truncation is the max level K in 1..12");
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  reject_unknown(j, {"model", "prior", "truth", "n_grid", "replicates", "posterior_draws", "seed",
                     "output", "tolerance", "min_replicates", "theory", "theory_exponent", "mcmc"},
                 "config");
  ExperimentConfig c;
  c.source_text = j.dump(2);
  if (j.contains("model")) {
    const auto m = j.at("model").get<std::string>();
    if (m == "white-noise") c.model = ModelKind::white_noise;
    else if (m == "density") c.model = ModelKind::density;
    else throw std::invalid_argument("model: expected white-noise or density");
  }
  if (j.contains("prior")) {
    const auto& pr = j.at("prior");
    reject_unknown(pr, {"p", "alpha", "d", "lambda", "lambda_rule", "truncation"}, "prior");
    c.p = pr.value("p", c.p);
    c.alpha = pr.value("alpha", c.alpha);
    c.d = pr.value("d", c.d);
    c.lambda = pr.value("lambda", c.lambda);
    c.truncation = pr.value("truncation", c.truncation);
    if (pr.contains("lambda_rule")) {
      const auto& lr = pr.at("lambda_rule");
      reject_unknown(lr, {"poly", "log"}, "prior.lambda_rule");
      c.lambda_poly = lr.value("poly", 0.0);
      c.lambda_log = lr.value("log", 0.0);
    }
  }
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    reject_unknown(t, {"beta", "q", "delta", "profile", "file"}, "truth");
    c.beta = t.value("beta", c.beta);
    if (t.contains("q")) c.q = read_q(t.at("q"));
    c.delta = t.value("delta", c.delta);
    if (t.contains("profile")) {
      const auto pf = t.at("profile").get<std::string>();
      if (pf == "lacunary") c.profile = TruthProfile::lacunary;
      else if (pf == "dense") c.profile = TruthProfile::dense;
      else throw std::invalid_argument("truth.profile: expected lacunary or dense");
    }
    c.truth_file = t.value("file", std::string{});
  }
  if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<double>>();
  c.replicates = j.value("replicates", c.replicates);
  c.posterior_draws = j.value("posterior_draws", c.posterior_draws);
  c.seed = j.value("seed", c.seed);
  c.output = j.value("output", c.output);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.min_replicates = j.value("min_replicates", c.min_replicates);
  if (j.contains("theory")) c.theory = parse_theory_setting(j.at("theory").get<std::string>());
  if (j.contains("theory_exponent")) c.theory_exponent = j.at("theory_exponent").get<double>();
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    reject_unknown(m, {"iterations", "burn_in", "thin", "target_acceptance"}, "mcmc");
    c.mcmc.iterations = m.value("iterations", c.mcmc.iterations);
    c.mcmc.burn_in = m.value("burn_in", c.mcmc.burn_in);
    c.mcmc.thin = m.value("thin", c.mcmc.thin);
    c.mcmc.target_acceptance = m.value("target_acceptance", c.mcmc.target_acceptance);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  auto c = parse_experiment_config(j);
  c.source_text = text;
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["prior"] = {{"p", c.p},
                {"alpha", c.alpha},
                {"d", c.d},
                {"lambda", c.lambda},
                {"lambda_rule", {{"poly", c.lambda_poly}, {"log", c.lambda_log}}},
                {"truncation", c.truncation}};
  j["truth"] = {{"beta", c.beta},
                {"delta", c.delta},
                {"profile", c.profile == TruthProfile::lacunary ? "lacunary" : "dense"}};
  if (std::isinf(c.q)) j["truth"]["q"] = "inf"; else j["truth"]["q"] = c.q;
  if (!c.truth_file.empty()) j["truth"]["file"] = c.truth_file;
  j["n_grid"] = c.n_grid;
  j["replicates"] = c.replicates;
  j["posterior_draws"] = c.posterior_draws;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["tolerance"] = c.tolerance;
  j["min_replicates"] = c.min_replicates;
  j["theory"] = to_string(c.theory);
  if (c.theory_exponent) j["theory_exponent"] = *c.theory_exponent;
  j["mcmc"] = {{"iterations", c.mcmc.iterations},
               {"burn_in", c.mcmc.burn_in},
               {"thin", c.mcmc.thin},
               {"target_acceptance", c.mcmc.target_acceptance}};
  return j;
}

std::string git_blob_hash(const std::string& text) {
  const std::string header = "blob " + std::to_string(text.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("git_blob_hash: EVP context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, text.data(), text.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

double lambda_for(const ExperimentConfig& cfg, double n) {
  double l = cfg.lambda * std::pow(n, -cfg.lambda_poly);
  if (cfg.lambda_log != 0.0) l *= std::pow(std::log(n), cfg.lambda_log);
  return l;
}

std::size_t truncation_for(const ExperimentConfig& cfg, double n) {
  if (cfg.model == ModelKind::density || cfg.truncation > 0) return cfg.truncation;
  const double lam = lambda_for(cfg, n);
  const double mn = std::pow(n, -cfg.beta / (cfg.d + 2.0 * cfg.beta));
  const double budget = 0.01 * mn;
  // sum_{l>N} l^{-1-2a/d} <= (d/(2a)) N^{-2a/d}
  const double ratio = lam * lam * cfg.d / (2.0 * cfg.alpha) / (budget * budget);
  const double nn = std::ceil(std::pow(ratio, cfg.d / (2.0 * cfg.alpha)));
  return static_cast<std::size_t>(std::clamp(nn, 8.0, 4194304.0));
}

double theory_exponent(const ExperimentConfig& cfg) {
  if (cfg.theory_exponent) return *cfg.theory_exponent;
  RateQuery rq{cfg.alpha, cfg.beta, cfg.p, cfg.q, cfg.d};
  switch (cfg.theory) {
    case TheorySetting::l2: return rate_l2(rq).poly_exponent.value;
    case TheorySetting::l2_rescaled: return rate_l2_rescaled(rq).poly_exponent.value;
    case TheorySetting::sup: return rate_sup(cfg.alpha, cfg.beta, cfg.p).combined.poly_exponent.value;
  }
  return 0.0;
}

namespace {

struct Ols {
  double slope = 0.0, intercept = 0.0, std_error = 0.0;
};

Ols ols(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Ols o;
  o.slope = sxy / sxx;
  o.intercept = my - o.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - o.intercept - o.slope * x[i];
      rss += r * r;
    }
    o.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  } else {
    o.std_error = std::numeric_limits<double>::infinity();
  }
  return o;
}

std::pair<std::vector<double>, std::vector<double>> logs(std::span<const double> x,
                                                         std::span<const double> v) {
  if (x.size() != v.size()) throw std::invalid_argument("fit_slope: size mismatch");
  std::vector<double> lx, lv;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(v[i] > 0.0)) throw std::invalid_argument("fit_slope: nonpositive value");
    lx.push_back(std::log(x[i]));
    lv.push_back(std::log(v[i]));
  }
  return {lx, lv};
}

}  // namespace

SlopeResult fit_slope(std::span<const double> x, std::span<const double> value) {
  if (x.size() < 4) throw std::invalid_argument("fit_slope: need at least four rows");
  const auto [lx, lv] = logs(x, value);
  const auto o = ols(lx, lv);
  return {o.slope, o.std_error, o.intercept};
}

Verdict decide(double slope, double std_error, double theory, double tol, int replicates,
               int min_replicates, std::size_t points) {
  if (points < 4 || replicates < min_replicates || !(std_error <= tol)) return Verdict::underpowered;
  return std::abs(slope + theory) <= tol ? Verdict::consistent : Verdict::inconsistent;
}

CoefVec experiment_truth(const ExperimentConfig& cfg) {
  if (!cfg.truth_file.empty()) return read_csv_file(cfg.truth_file);
  const BesovParams bp{cfg.beta, cfg.q, cfg.d};
  if (cfg.model == ModelKind::density)
    return make_truth(bp, cfg.delta, dyadic_length(static_cast<int>(cfg.truncation)),
                      IndexScheme::dyadic, cfg.profile);
  std::size_t len = 0;
  for (double n : cfg.n_grid) len = std::max(len, truncation_for(cfg, n));
  return make_truth(bp, cfg.delta, len, IndexScheme::linear, cfg.profile);
}

namespace {

struct Quantiles {
  double q05, q50, q90, q95;
};

Quantiles quantiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto q = [&](double prob) {
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
  };
  return {q(0.05), q(0.5), q(0.9), q(0.95)};
}

struct CellTrace {
  std::vector<double> errors;
  std::vector<double> level_acceptance;
};

ResultRow cell(const ExperimentConfig& cfg, const CoefVec& truth, std::size_t ni, int rep,
               bool serial, CellTrace* trace = nullptr) {
  const double n = cfg.n_grid.at(ni);
  const double lam = lambda_for(cfg, n);
  const auto r = static_cast<std::uint64_t>(rep);
  Rng data_rng = substream(cfg.seed, {ni, r, 0});
  const std::uint64_t post_seed = derive_seed(cfg.seed, {ni, r, 1});
  ResultRow row;
  row.n = n;
  row.rep = rep;
  std::vector<double> errors;

  if (cfg.model == ModelKind::white_noise) {
    const std::size_t N = std::min(truncation_for(cfg, n), truth.size());
    row.truncation = N;
    const auto tv = truth.values();
    CoefVec w0(IndexScheme::linear, std::vector<double>(tv.begin(), tv.begin() + N));
    double tail2 = 0.0;
    for (std::size_t i = N; i < tv.size(); ++i) tail2 += tv[i] * tv[i];
    const PExpMeasure m(ScalingSpec::linear(cfg.p, cfg.alpha, cfg.d, N, lam));
    const auto data = wn_simulate(w0, n, data_rng);
    const auto chain = serial ? wn_posterior_sample_serial(data, m, cfg.posterior_draws, post_seed)
                              : wn_posterior_sample(data, m, cfg.posterior_draws, post_seed);
    errors.reserve(chain.draws.size());
    for (std::size_t s = 0; s < chain.draws.size(); ++s) {
      double e2 = tail2;
      const auto& xi = chain.draws[s];
      for (std::size_t i = 0; i < N; ++i) {
        const double d = chain.scaling[i] * xi[i] - w0[i];
        e2 += d * d;
      }
      errors.push_back(std::sqrt(e2));
    }
  } else {
    const int K = static_cast<int>(cfg.truncation);
    row.truncation = cfg.truncation;
    const FaberSchauderBasis basis(K);
    const PExpMeasure m(ScalingSpec::dyadic(cfg.p, cfg.alpha, K, lam));
    const auto sample = de_simulate(truth, basis, static_cast<std::size_t>(n), data_rng);
    McmcConfig mc = cfg.mcmc;
    mc.seed = post_seed;
    const auto chain = de_posterior_mcmc(sample, m, basis, mc);
    if (trace) trace->level_acceptance = chain.level_acceptance;
    for (const auto& w : chain.warnings) row.note += (row.note.empty() ? "" : "; ") + w;
    const auto grid = uniform_grid((std::size_t{1} << 12) + 1);
    const auto pi0 = de_density(truth, basis, grid);
    for (std::size_t s = 0; s < chain.draws.size(); ++s)
      errors.push_back(hellinger(de_density(chain.draw_u(s), basis, grid), pi0, grid));
  }
  if (errors.empty()) throw std::runtime_error("experiment cell produced no posterior draws");
  if (trace) trace->errors = errors;
  const auto q = quantiles(std::move(errors));
  row.error_median = q.q50;
  row.q90 = q.q90;
  row.lo = q.q05;
  row.hi = q.q95;
  return row;
}

ExperimentResult finish(const ExperimentConfig& cfg, std::vector<ResultRow> rows) {
  ExperimentResult res;
  res.rows = std::move(rows);
  res.n_values = cfg.n_grid;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    std::vector<double> v;
    for (int r = 0; r < cfg.replicates; ++r) v.push_back(res.rows[ni * cfg.replicates + r].q90);
    res.median_q90.push_back(quantiles(v).q50);
  }
  res.theory_exponent = theory_exponent(cfg);
  const auto [lx, lv] = logs(res.n_values, res.median_q90);
  const auto o = ols(lx, lv);
  res.fitted_slope = o.slope;
  res.std_error = o.std_error;
  res.verdict = decide(res.fitted_slope, res.std_error, res.theory_exponent, cfg.tolerance,
                       cfg.replicates, cfg.min_replicates, res.n_values.size());
  return res;
}

void persist_partial(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows,
                     const std::vector<char>& done) {
  if (cfg.output.empty()) return;
  ExperimentResult partial;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (done[i]) partial.rows.push_back(rows[i]);
  std::filesystem::create_directories(cfg.output);
  std::ofstream(std::filesystem::path(cfg.output) / "results.csv") << results_csv(partial);
}

ExperimentResult run(const ExperimentConfig& cfg, bool serial) {
  cfg.validate();
  const CoefVec truth = experiment_truth(cfg);
  const std::size_t R = static_cast<std::size_t>(cfg.replicates);
  const std::size_t cells = cfg.n_grid.size() * R;
  std::vector<ResultRow> rows(cells);
  std::vector<char> done(cells, 0);
  std::exception_ptr failure;
  if (serial) {
    for (std::size_t c = 0; c < cells && !failure; ++c) {
      try {
        rows[c] = cell(cfg, truth, c / R, static_cast<int>(c % R), true);
        done[c] = 1;
      } catch (...) {
        failure = std::current_exception();
      }
    }
  } else {
    const auto total = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < total; ++c) {
      try {
        const auto cu = static_cast<std::size_t>(c);
        rows[cu] = cell(cfg, truth, cu / R, static_cast<int>(cu % R), false);
        done[cu] = 1;
      } catch (...) {
#pragma omp critical(pexp_experiment_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) {
    persist_partial(cfg, rows, done);
    std::rethrow_exception(failure);
  }
  return finish(cfg, std::move(rows));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ResultRow run_cell(const ExperimentConfig& cfg, const CoefVec& truth, std::size_t n_index,
                   int rep) {
  return cell(cfg, truth, n_index, rep, true);
}

std::string chain_summary_csv(const ExperimentConfig& cfg, std::size_t n_index, int rep) {
  const CoefVec truth = experiment_truth(cfg);
  CellTrace t;
  cell(cfg, truth, n_index, rep, true, &t);
  std::string s = cfg.model == ModelKind::white_noise ? "draw,l2_error" : "draw,hellinger";
  for (std::size_t k = 0; k < t.level_acceptance.size(); ++k)
    s += ",acceptance_level_" + std::to_string(k);
  s += "\n";
  for (std::size_t i = 0; i < t.errors.size(); ++i) {
    s += std::to_string(i) + "," + fmt(t.errors[i]);
    for (double a : t.level_acceptance) s += "," + fmt(a);
    s += "\n";
  }
  return s;
}

ExperimentResult run_contraction(const ExperimentConfig& cfg) { return run(cfg, false); }
ExperimentResult run_contraction_serial(const ExperimentConfig& cfg) { return run(cfg, true); }

std::string results_csv(const ExperimentResult& res) {
  std::string s = "n,rep,error_median,q90,lo,hi\n";
  for (const auto& r : res.rows)
    s += fmt(r.n) + "," + std::to_string(r.rep) + "," + fmt(r.error_median) + "," + fmt(r.q90) +
         "," + fmt(r.lo) + "," + fmt(r.hi) + "\n";
  return s;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& res,
                              const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / "results.csv") << results_csv(res);

  std::ofstream plot(fs::path(dir) / "plotdata.csv");
  plot << "log_n,log_q90\n";
  for (std::size_t i = 0; i < res.n_values.size(); ++i)
    plot << fmt(std::log(res.n_values[i])) << "," << fmt(std::log(res.median_q90[i])) << "\n";

  json s;
  s["fitted_slope"] = res.fitted_slope;
  s["stderr"] = std::isfinite(res.std_error) ? json(res.std_error) : json(nullptr);
  s["theory_exponent"] = res.theory_exponent;
  s["verdict"] = to_string(res.verdict);
  s["tolerance"] = cfg.tolerance;
  s["n"] = res.n_values;
  s["median_q90"] = res.median_q90;
  s["config"] = to_json(cfg);
  s["config_hash"] = git_blob_hash(cfg.source_text.empty() ? to_json(cfg).dump(2) : cfg.source_text);
  json notes = json::array();
  for (const auto& r : res.rows)
    if (!r.note.empty()) notes.push_back({{"n", r.n}, {"rep", r.rep}, {"note", r.note}});
  if (!notes.empty()) s["warnings"] = notes;
  std::ofstream(fs::path(dir) / "summary.json") << s.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

InequalityConfig parse_inequality_config(const json& j) {
  reject_unknown(j, {"seed", "anderson_samples", "shifts", "eps", "p_values", "tail_p_values",
                     "tail_grid_points", "tail_grid_max"},
                 "inequality config");
  InequalityConfig c;
  c.seed = j.value("seed", c.seed);
  c.anderson_samples = j.value("anderson_samples", c.anderson_samples);
  c.shifts = j.value("shifts", c.shifts);
  c.eps = j.value("eps", c.eps);
  if (j.contains("p_values")) c.p_values = j.at("p_values").get<std::vector<double>>();
  if (j.contains("tail_p_values")) c.tail_p_values = j.at("tail_p_values").get<std::vector<double>>();
  c.tail_grid_points = j.value("tail_grid_points", c.tail_grid_points);
  c.tail_grid_max = j.value("tail_grid_max", c.tail_grid_max);
  if (c.shifts < 1 || c.tail_grid_points < 2 || !(c.eps > 0.0) || !(c.tail_grid_max > 0.0))
    throw std::invalid_argument("inequality config: invalid values");
  return c;
}

std::vector<InequalityRow> run_inequalities(const InequalityConfig& cfg) {
  std::vector<InequalityRow> rows;
  for (int dim = 1; dim <= 3; ++dim) {
    for (std::size_t pi = 0; pi < cfg.p_values.size(); ++pi) {
      const double p = cfg.p_values[pi];
      const PExpMeasure m(ScalingSpec::linear(p, 1.0, 1, static_cast<std::size_t>(dim)));
      Rng rng = substream(cfg.seed, {static_cast<std::uint64_t>(dim), pi});
      std::normal_distribution<double> z;

      for (int s = 0; s < cfg.shifts; ++s) {
        std::vector<double> x(dim);
        for (double& v : x) v = z(rng);
        const auto a = anderson_check(m, cfg.eps, x, cfg.anderson_samples,
                                      derive_seed(cfg.seed, {7, static_cast<std::uint64_t>(dim), pi,
                                                             static_cast<std::uint64_t>(s)}));
        InequalityRow r{"anderson", p, dim, "shift " + std::to_string(s), a.p_shifted,
                        a.p_centered + 3.0 * a.joint_stderr, 0.0, a.pass};
        r.margin = r.rhs - r.lhs;
        rows.push_back(r);
      }

      for (int variant = 0; variant < 2; ++variant) {
        std::vector<double> h(dim, 0.0);
        if (variant == 1)
          for (double& v : h) v = 0.5 * z(rng);
        const auto d = decentering_check(m, cfg.eps, CoefVec(IndexScheme::linear, h));
        InequalityRow r{"decentering", p, dim, variant == 0 ? "h = 0" : "random h", d.lhs, d.rhs,
                        d.lhs - d.rhs * (1.0 - 1e-6), d.pass};
        rows.push_back(r);
      }
    }
  }
  for (double p : cfg.tail_p_values) {
    const PExpParams params(p);
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    double worst_x = 0.0, worst_l = 0.0, worst_r = 0.0;
    for (int i = 1; i <= cfg.tail_grid_points; ++i) {
      const double x = cfg.tail_grid_max * i / cfg.tail_grid_points;
      const double lhs = prob_abs_le(params, x);
      const double rhs = abs_prob_lower_bound(params, x);
      const double margin = lhs - rhs;
      if (margin < worst) {
        worst = margin;
        worst_x = x;
        worst_l = lhs;
        worst_r = rhs;
      }
      ok = ok && lhs >= rhs;
    }
    rows.push_back({"tail_lower_bound", p, 1, "worst x = " + fmt(worst_x), worst_l, worst_r, worst,
                    ok});
  }
  return rows;
}

std::string inequality_csv(std::span<const InequalityRow> rows) {
  std::string s = "check,p,dim,detail,lhs,rhs,margin,verdict\n";
  for (const auto& r : rows)
    s += r.check + "," + fmt(r.p) + "," + std::to_string(r.dim) + "," + r.detail + "," + fmt(r.lhs) +
         "," + fmt(r.rhs) + "," + fmt(r.margin) + "," + (r.pass ? "PASS" : "FAIL") + "\n";
  return s;
}

}  // namespace pexp
