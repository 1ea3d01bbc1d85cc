#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "pexp/experiments.hpp"

using namespace pexp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_wn() {
  return json::parse(R"({
    "model": "white-noise",
    "prior": {"p": 2, "alpha": 1},
    "truth": {"beta": 1, "q": 2},
    "n_grid": [100, 400, 1600, 6400],
    "replicates": 4,
    "posterior_draws": 50,
    "seed": 3
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config parsing") {
  const auto c = parse_experiment_config(small_wn());
  CHECK(c.model == ModelKind::white_noise);
  CHECK(c.n_grid.size() == 4);
  CHECK(c.replicates == 4);

  auto j = small_wn();
  j["truth"]["q"] = "inf";
  CHECK(std::isinf(parse_experiment_config(j).q));

  j = small_wn();
  j["bogus"] = 1;
  CHECK_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
  j = small_wn();
  j["prior"]["gamma"] = 1;
  CHECK_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
  j = small_wn();
  j["prior"]["p"] = 3;
  CHECK_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
  j = small_wn();
  j["model"] = "regression";
  CHECK_THROWS_AS(parse_experiment_config(j), std::invalid_argument);

  // Round trip through the canonical JSON form.
  const auto back = parse_experiment_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("content hash matches git") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("lambda rule and truncation") {
  auto c = parse_experiment_config(small_wn());
  CHECK(lambda_for(c, 1000) == 1.0);
  c.lambda_poly = 0.2;
  CHECK(lambda_for(c, 1e5) == doctest::Approx(std::pow(1e5, -0.2)));
  c.lambda_log = 0.5;
  CHECK(lambda_for(c, 1e5) == doctest::Approx(std::pow(1e5, -0.2) * std::sqrt(std::log(1e5))));

  c = parse_experiment_config(small_wn());
  for (double n : {256.0, 4096.0, 65536.0}) {
    const std::size_t N = truncation_for(c, n);
    const double budget = 0.01 * std::pow(n, -1.0 / 3.0);
    double tail = 0;
    for (std::size_t l = N + 1; l <= 40 * N; ++l) tail += std::pow(double(l), -3.0);
    CHECK(tail <= budget * budget);
    CHECK(N >= 8);
  }
  c.truncation = 77;
  CHECK(truncation_for(c, 1e6) == 77);
}

TEST_CASE("theory exponent") {
  auto c = parse_experiment_config(small_wn());
  CHECK(theory_exponent(c) == doctest::Approx(1.0 / 3.0));
  c.theory_exponent = 0.25;
  CHECK(theory_exponent(c) == 0.25);
}

TEST_CASE("slope fit") {
  std::vector<double> n, v;
  for (int k = 8; k <= 16; ++k) {
    n.push_back(std::exp2(k));
    v.push_back(std::pow(std::exp2(k), -0.4));
  }
  auto f = fit_slope(n, v);
  CHECK(f.slope == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(f.std_error < 1e-12);
  for (auto& x : v) x *= 7.3;
  CHECK(fit_slope(n, v).slope == doctest::Approx(-0.4).epsilon(1e-12));

  gen::Rng r(42);
  std::normal_distribution<double> z(0.0, 0.05);
  std::vector<double> noisy;
  for (double x : n) noisy.push_back(std::pow(x, -1.0 / 3.0) * std::exp(z(r)));
  const auto g = fit_slope(n, noisy);
  CHECK(std::abs(g.slope + 1.0 / 3.0) < 2 * g.std_error);

  CHECK_THROWS(fit_slope(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}));
  CHECK_THROWS(fit_slope(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, -2, 3, 4}));
}

TEST_CASE("verdict rules") {
  CHECK(decide(-0.33, 0.01, 1.0 / 3.0, 0.05, 20, 3, 9) == Verdict::consistent);
  CHECK(decide(-0.50, 0.01, 1.0 / 3.0, 0.05, 20, 3, 9) == Verdict::inconsistent);
  CHECK(decide(-0.33, 0.20, 1.0 / 3.0, 0.05, 20, 3, 9) == Verdict::underpowered);
  CHECK(decide(-0.33, 0.01, 1.0 / 3.0, 0.05, 2, 3, 9) == Verdict::underpowered);
  CHECK(decide(-0.33, 0.01, 1.0 / 3.0, 0.05, 20, 3, 3) == Verdict::underpowered);
}

TEST_CASE("small experiment end to end") {
  auto j = small_wn();
  j["replicates"] = 2;
  const auto cfg = parse_experiment_config(j);
  const auto res = run_contraction(cfg);
  CHECK(res.rows.size() == 8);
  CHECK(res.verdict == Verdict::underpowered);
  for (const auto& row : res.rows) {
    CHECK(row.lo <= row.error_median);
    CHECK(row.error_median <= row.q90);
    CHECK(row.q90 <= row.hi);
  }
  // A single cell is reproducible on its own.
  const auto truth = experiment_truth(cfg);
  CHECK(run_cell(cfg, truth, 2, 1) == res.rows[2 * 2 + 1]);

  const fs::path dir = fs::temp_directory_path() / "pexp_test_outputs";
  fs::remove_all(dir);
  write_experiment_outputs(cfg, res, dir.string());
  const auto csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("n,rep,error_median,q90,lo,hi\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  const auto summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["verdict"] == "UNDERPOWERED");
  CHECK(summary["config_hash"].get<std::string>().size() == 40);
  CHECK(fs::exists(dir / "plotdata.csv"));

  const auto chain = chain_summary_csv(cfg, 3, 0);
  CHECK(chain.rfind("draw,l2_error\n", 0) == 0);
  CHECK(std::count(chain.begin(), chain.end(), '\n') == 51);
}

TEST_CASE("density experiment cell and chain summary") {
  const auto cfg = parse_experiment_config(json::parse(R"({
    "model": "density",
    "prior": {"p": 1, "alpha": 1, "truncation": 3},
    "truth": {"beta": 1, "q": "inf", "profile": "dense"},
    "n_grid": [100, 200, 400, 800],
    "replicates": 1,
    "seed": 2,
    "theory": "sup",
    "mcmc": {"iterations": 500, "burn_in": 200, "thin": 10}
  })"));
  const auto truth = experiment_truth(cfg);
  CHECK(truth.scheme() == IndexScheme::dyadic);
  CHECK(truth.max_level() == 3);
  const auto row = run_cell(cfg, truth, 0, 0);
  CHECK(row.error_median > 0);
  CHECK(row.error_median < std::sqrt(2.0));
  const auto chain = chain_summary_csv(cfg, 0, 0);
  CHECK(chain.rfind("draw,hellinger,acceptance_level_0,acceptance_level_1,acceptance_level_2,"
                    "acceptance_level_3\n", 0) == 0);
  CHECK(std::count(chain.begin(), chain.end(), '\n') == 51);
}

TEST_CASE("missing truth file is reported") {
  auto j = small_wn();
  j["truth"]["file"] = "/nonexistent/truth.csv";
  const auto cfg = parse_experiment_config(j);
  CHECK_THROWS(run_contraction(cfg));
}

TEST_CASE("inequality battery") {
  InequalityConfig cfg;
  cfg.anderson_samples = 20000;
  cfg.shifts = 3;
  cfg.p_values = {1.0, 2.0};
  const auto rows = run_inequalities(cfg);
  std::size_t anderson = 0, dec = 0, tail = 0;
  for (const auto& r : rows) {
    CHECK(r.pass);
    if (r.check == "anderson") ++anderson;
    if (r.check == "decentering") {
      ++dec;
      if (r.detail == "h = 0") CHECK(r.lhs == r.rhs);
    }
    if (r.check == "tail_lower_bound") ++tail;
  }
  CHECK(anderson == 3 * 2 * 3);
  CHECK(dec == 3 * 2 * 2);
  CHECK(tail == 4);
  const auto csv = inequality_csv(rows);
  CHECK(csv.rfind("check,p,dim,detail,lhs,rhs,margin,verdict\n", 0) == 0);
  CHECK_THROWS(parse_inequality_config(json::parse(R"({"shift": 3})")));
}

}  // TEST_SUITE
