// pexp: command line front end for the p-exponential prior toolkit.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pexp/concentration.hpp"
#include "pexp/errors.hpp"
#include "pexp/experiments.hpp"
#include "pexp/measure.hpp"
#include "pexp/rates.hpp"
#include "pexp/rng.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--seed", c.seed, "Master seed")->each([&c](const std::string&) { c.seed_set = true; });
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--threads", c.threads, "OpenMP threads (PEXP_THREADS overrides)");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json exponent_json(const pexp::Exponent& e) {
  json j = e.value;
  return j;
}

json exact_json(const pexp::Exponent& e) {
  return e.exact ? json(e.exact->to_string()) : json(nullptr);
}

json regime_json(const pexp::RateRegime& r) {
  json j;
  j["poly_exponent"] = exponent_json(r.poly_exponent);
  j["poly_exponent_exact"] = exact_json(r.poly_exponent);
  j["log_exponent"] = exponent_json(r.log_exponent);
  j["regime"] = pexp::to_string(r.regime);
  j["switch_point"] = r.switch_point ? json(*r.switch_point) : json(nullptr);
  j["lambda_poly_exponent"] = exponent_json(r.lambda_poly_exponent);
  j["lambda_log_exponent"] = exponent_json(r.lambda_log_exponent);
  if (r.alpha) j["alpha"] = r.alpha->value;
  return j;
}

// "a,b,c" or "lo:hi:count" (log-spaced).
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo, hi;
    int count;
    char c1, c2;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1 || !(lo > 0) ||
        !(hi >= lo))
      throw std::invalid_argument("grid '" + text + "': expected lo:hi:count with 0 < lo <= hi");
    for (int i = 0; i < count; ++i)
      out.push_back(count == 1 ? lo : lo * std::pow(hi / lo, double(i) / (count - 1)));
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

std::ostream& open_out(const std::string& dir, const std::string& name, std::ofstream& file) {
  if (dir.empty()) return std::cout;
  fs::create_directories(dir);
  file.open(fs::path(dir) / name);
  if (!file) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  return file;
}

pexp::ScalingSpec spec_from(const std::string& scheme, double p, double alpha, int d,
                            double lambda, std::size_t n, int levels) {
  if (pexp::parse_scheme(scheme) == pexp::IndexScheme::dyadic)
    return pexp::ScalingSpec::dyadic(p, alpha, levels, lambda);
  return pexp::ScalingSpec::linear(p, alpha, d, n, lambda);
}

int run_experiment(const Common& c, pexp::ModelKind expected) {
  if (c.config.empty()) throw std::invalid_argument("--config is required");
  auto cfg = pexp::load_experiment_config(c.config);
  if (cfg.model != expected)
    throw std::invalid_argument("config model is '" + pexp::to_string(cfg.model) +
                                "' but the subcommand expects '" + pexp::to_string(expected) + "'");
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.output = c.out;
  if (cfg.output.empty()) cfg.output = "results";
  const auto res = pexp::run_contraction(cfg);
  pexp::write_experiment_outputs(cfg, res, cfg.output);
  std::ofstream(fs::path(cfg.output) / "chain.csv")
      << pexp::chain_summary_csv(cfg, cfg.n_grid.size() - 1, 0);
  std::printf("fitted_slope %.6f  stderr %.6f  theory %.6f  verdict %s\n", res.fitted_slope,
              res.std_error, -res.theory_exponent, pexp::to_string(res.verdict).c_str());
  std::printf("outputs in %s\n", cfg.output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contraction-rate toolkit for p-exponential priors"};
  app.require_subcommand(1);

  // rate
  Common rate_c;
  std::string setting = "l2";
  double r_alpha = 1, r_beta = 1, r_p = 2, r_q = 2;
  int r_d = 1;
  bool r_grid = false;
  double g_lo = 0.05, g_hi = 5;
  int g_steps = 100;
  auto* rate = app.add_subcommand("rate", "Closed-form contraction-rate exponents");
  add_common(rate, rate_c);
  rate->add_option("--setting", setting, "l2 | l2-rescaled | sup")
      ->check(CLI::IsMember({"l2", "l2-rescaled", "sup"}));
  rate->add_option("--alpha", r_alpha);
  rate->add_option("--beta", r_beta);
  rate->add_option("--p", r_p);
  rate->add_option("--q", r_q);
  rate->add_option("--d", r_d);
  rate->add_flag("--grid", r_grid, "Sweep alpha and emit CSV");
  rate->add_option("--alpha-min", g_lo);
  rate->add_option("--alpha-max", g_hi);
  rate->add_option("--alpha-steps", g_steps);

  // conc
  Common conc_c;
  std::string w_file, eps_grid = "0.01:1:21", norm = "l2";
  double c_p = 2, c_alpha = 1, c_lambda = 1;
  int c_d = 1;
  std::size_t mc = 1'000'000;
  auto* conc = app.add_subcommand("conc", "Concentration function on an eps grid");
  add_common(conc, conc_c);
  conc->add_option("--w-file", w_file, "CoefVec CSV")->required();
  conc->add_option("--eps-grid", eps_grid, "a,b,c or lo:hi:count");
  conc->add_option("--p", c_p);
  conc->add_option("--alpha", c_alpha);
  conc->add_option("--d", c_d);
  conc->add_option("--lambda", c_lambda);
  conc->add_option("--norm", norm)->check(CLI::IsMember({"l2"}));
  conc->add_option("--mc-samples", mc);

  // smallball
  Common sb_c;
  std::string sb_grid = "0.3:1.5:13", sb_norm = "l2", sb_scheme = "linear";
  double s_p = 2, s_alpha = 1, s_lambda = 1;
  int s_d = 1, s_levels = 7;
  std::size_t s_n = 512, s_mc = 1'000'000;
  bool fit = false, saddle = false;
  auto* sb = app.add_subcommand("smallball", "Centered small-ball probabilities");
  add_common(sb, sb_c);
  sb->add_option("--eps-grid", sb_grid);
  sb->add_option("--p", s_p);
  sb->add_option("--alpha", s_alpha);
  sb->add_option("--d", s_d);
  sb->add_option("--lambda", s_lambda);
  sb->add_option("--scheme", sb_scheme)->check(CLI::IsMember({"linear", "dyadic"}));
  sb->add_option("--n", s_n, "Truncation N (linear)");
  sb->add_option("--levels", s_levels, "Max level K (dyadic)");
  sb->add_option("--norm", sb_norm)->check(CLI::IsMember({"l2", "sup"}));
  sb->add_option("--mc-samples", s_mc);
  sb->add_flag("--fit-slope", fit, "Also emit the fitted log-log slope");
  sb->add_flag("--saddlepoint", saddle, "Add a saddle-point column (l2 only)");

  // sample-prior
  Common sp_c;
  std::string sp_scheme = "linear";
  double sp_p = 2, sp_alpha = 1, sp_lambda = 1;
  int sp_d = 1, sp_levels = 7, sp_count = 1;
  std::size_t sp_n = 256;
  auto* sp = app.add_subcommand("sample-prior", "Draw coefficient vectors from the prior");
  add_common(sp, sp_c);
  sp->add_option("--p", sp_p);
  sp->add_option("--alpha", sp_alpha);
  sp->add_option("--d", sp_d);
  sp->add_option("--lambda", sp_lambda);
  sp->add_option("--scheme", sp_scheme)->check(CLI::IsMember({"linear", "dyadic"}));
  sp->add_option("--levels", sp_levels);
  sp->add_option("--n", sp_n);
  sp->add_option("--count", sp_count);

  Common wn_c, de_c, ineq_c;
  auto* wn = app.add_subcommand("wn-experiment", "White-noise contraction sweep");
  add_common(wn, wn_c);
  auto* de = app.add_subcommand("de-experiment", "Density-estimation contraction sweep");
  add_common(de, de_c);
  auto* ineq = app.add_subcommand("check-inequalities", "Anderson, decentering and tail checks");
  add_common(ineq, ineq_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (rate->parsed()) {
      pexp::set_threads(rate_c.threads);
      auto one = [&](double a) {
        pexp::RateQuery rq{a, r_beta, r_p, r_q, r_d};
        json j;
        if (setting == "l2") {
          j = regime_json(pexp::rate_l2(rq));
        } else if (setting == "l2-rescaled") {
          j = regime_json(pexp::rate_l2_rescaled(rq));
        } else {
          const auto s = pexp::rate_sup(a, r_beta, r_p);
          j = regime_json(s.combined);
          j["rho"] = regime_json(s.rho);
          j["rho_tilde"] = regime_json(s.rho_tilde);
          j["rho_tilde_decays"] = s.rho_tilde_decays;
        }
        j["minimax"] = pexp::minimax(r_beta, r_d).value;
        j["linear_minimax"] =
            r_d == 1 ? json(pexp::linear_minimax(r_beta, r_q).value) : json(nullptr);
        return j;
      };
      std::ofstream file;
      if (!r_grid) {
        open_out(rate_c.out, "rate.json", file) << one(r_alpha).dump(2) << "\n";
      } else {
        auto& o = open_out(rate_c.out, "rate_grid.csv", file);
        o << "alpha,poly_exponent,log_exponent,regime,switch_point\n";
        for (int i = 0; i < g_steps; ++i) {
          const double a = g_steps == 1 ? g_lo : g_lo + (g_hi - g_lo) * i / (g_steps - 1);
          try {
            const auto j = one(a);
            o << num(a) << "," << num(j["poly_exponent"].get<double>()) << ","
              << num(j["log_exponent"].get<double>()) << "," << j["regime"].get<std::string>() << ","
              << (j["switch_point"].is_null() ? "" : num(j["switch_point"].get<double>())) << "\n";
          } catch (const pexp::DegenerateValue&) {
            o << num(a) << ",,,degenerate,\n";
          }
        }
      }
    } else if (conc->parsed()) {
      pexp::set_threads(conc_c.threads);
      const auto w = pexp::read_csv_file(w_file);
      const auto spec = w.scheme() == pexp::IndexScheme::dyadic
                            ? pexp::ScalingSpec::dyadic(c_p, c_alpha, w.max_level(), c_lambda)
                            : pexp::ScalingSpec::linear(c_p, c_alpha, c_d, w.size(), c_lambda);
      const pexp::PExpMeasure m(spec);
      const auto eps = parse_grid(eps_grid);
      const auto curve = pexp::concentration_curve(w, eps, m, mc, conc_c.seed);
      std::ofstream file;
      auto& o = open_out(conc_c.out, "conc.csv", file);
      o << "eps,inf_term,inf_argmin_l2norm,neglog,neglog_lo,neglog_hi,phi\n";
      for (const auto& c : curve)
        o << num(c.eps) << "," << num(c.inf_term) << "," << num(pexp::l2_norm(c.argmin.values()))
          << "," << num(c.neglog_smallball) << "," << num(c.neglog_lo) << "," << num(c.neglog_hi)
          << "," << num(c.phi) << "\n";
    } else if (sb->parsed()) {
      pexp::set_threads(sb_c.threads);
      const pexp::PExpMeasure m(spec_from(sb_scheme, s_p, s_alpha, s_d, s_lambda, s_n, s_levels));
      const auto eps = parse_grid(sb_grid);
      const auto nb = pexp::parse_ball_norm(sb_norm);
      const auto curve = pexp::smallball_curve(m, eps, nb, s_mc, sb_c.seed);
      std::ofstream file;
      auto& o = open_out(sb_c.out, "smallball.csv", file);
      o << "eps,hits,samples,p_hat,neglog,neglog_lo,neglog_hi,below_guard";
      if (saddle) o << ",saddlepoint_neglog";
      o << "\n";
      for (const auto& e : curve) {
        o << num(e.eps) << "," << e.hits << "," << e.samples << "," << num(e.p_hat) << ","
          << num(e.neglog) << "," << num(e.neglog_lo) << "," << num(e.neglog_hi) << ","
          << (e.below_guard ? 1 : 0);
        if (saddle) {
          const auto s = pexp::smallball_saddlepoint(m, e.eps);
          o << "," << (s.valid ? num(s.neglog) : "");
        }
        o << "\n";
      }
      if (fit) {
        const auto f = pexp::fit_smallball_slope(curve);
        const double theory = nb == pexp::BallNorm::l2 ? -s_d / s_alpha : -1.0 / s_alpha;
        std::ofstream ffile;
        auto& fo = open_out(sb_c.out, "smallball_slope.csv", ffile);
        fo << "slope,stderr,theory_slope\n" << num(f.slope) << "," << num(f.std_error) << ","
           << num(theory) << "\n";
      }
    } else if (sp->parsed()) {
      pexp::set_threads(sp_c.threads);
      const pexp::PExpMeasure m(
          spec_from(sp_scheme, sp_p, sp_alpha, sp_d, sp_lambda, sp_n, sp_levels));
      const std::string dir = sp_c.out.empty() ? "." : sp_c.out;
      fs::create_directories(dir);
      for (int i = 0; i < sp_count; ++i) {
        pexp::Rng rng = pexp::substream(sp_c.seed, {static_cast<std::uint64_t>(i)});
        const auto u = pexp::sample_prior(m, rng);
        pexp::write_csv_file((fs::path(dir) / ("draw_" + std::to_string(i) + ".csv")).string(), u);
        if (u.scheme() == pexp::IndexScheme::dyadic) {
          const pexp::FaberSchauderBasis basis(u.max_level());
          const auto grid = pexp::uniform_grid(1024);
          const auto f = pexp::evaluate_function(u, basis, grid);
          std::ofstream fo(fs::path(dir) / ("function_" + std::to_string(i) + ".csv"));
          fo << "x,value\n";
          for (std::size_t k = 0; k < grid.size(); ++k) fo << num(grid[k]) << "," << num(f[k]) << "\n";
        }
      }
      std::printf("wrote %d draw(s) to %s\n", sp_count, dir.c_str());
    } else if (wn->parsed()) {
      pexp::set_threads(wn_c.threads);
      return run_experiment(wn_c, pexp::ModelKind::white_noise);
    } else if (de->parsed()) {
      pexp::set_threads(de_c.threads);
      return run_experiment(de_c, pexp::ModelKind::density);
    } else if (ineq->parsed()) {
      pexp::set_threads(ineq_c.threads);
      pexp::InequalityConfig cfg;
      if (!ineq_c.config.empty()) {
        std::ifstream in(ineq_c.config);
        if (!in) throw std::runtime_error("cannot open config " + ineq_c.config);
        cfg = pexp::parse_inequality_config(json::parse(in));
      }
      if (ineq_c.seed_set) cfg.seed = ineq_c.seed;
      const auto rows = pexp::run_inequalities(cfg);
      std::ofstream file;
      open_out(ineq_c.out, "inequalities.csv", file) << pexp::inequality_csv(rows);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.pass ? 0 : 1;
      std::fprintf(stderr, "%zu checks, %zu failed\n", rows.size(), failed);
      return failed ? 1 : 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
