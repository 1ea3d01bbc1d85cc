#include <omp.h>

#include "doctest.h"
#include "gen.hpp"
#include "pexp/concentration.hpp"
#include "pexp/experiments.hpp"
#include "pexp/measure.hpp"
#include "pexp/models.hpp"

using namespace pexp;

namespace {

struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

bool same(const SmallBallEstimate& a, const SmallBallEstimate& b) {
  return a.hits == b.hits && a.samples == b.samples && a.p_hat == b.p_hat && a.neglog == b.neglog &&
         a.neglog_lo == b.neglog_lo && a.neglog_hi == b.neglog_hi;
}

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("small-ball curve is thread-count independent") {
  const std::vector<double> eps = {0.3, 0.5, 0.8, 1.2};
  for (auto norm : {BallNorm::l2, BallNorm::sup}) {
    const PExpMeasure m(norm == BallNorm::l2 ? ScalingSpec::linear(1.5, 1.0, 1, 64)
                                             : ScalingSpec::dyadic(1.5, 1.0, 5));
    const auto ref = smallball_curve_serial(m, eps, norm, 50000, 9);
    for (int t : {1, 3, 8}) {
      ThreadScope scope(t);
      const auto par = smallball_curve(m, eps, norm, 50000, 9);
      for (std::size_t i = 0; i < eps.size(); ++i) CHECK(same(ref[i], par[i]));
    }
  }
}

TEST_CASE("Anderson check is thread-count independent") {
  const PExpMeasure m(ScalingSpec::linear(1.0, 1.0, 1, 3));
  const std::vector<double> x = {0.4, -0.2, 0.9};
  const auto ref = anderson_check_serial(m, 1.0, x, 30000, 5);
  for (int t : {1, 4, 8}) {
    ThreadScope scope(t);
    const auto par = anderson_check(m, 1.0, x, 30000, 5);
    CHECK(ref.p_centered == par.p_centered);
    CHECK(ref.p_shifted == par.p_shifted);
    CHECK(ref.joint_stderr == par.joint_stderr);
  }
}

TEST_CASE("white-noise sampler is thread-count independent") {
  gen::Rng r(1);
  for (double p : {1.0, 1.5, 2.0}) {
    const PExpMeasure m(ScalingSpec::linear(p, 1.0, 1, 40));
    const auto w0 = gen::coef(r, 40, 0.3);
    Rng rng = substream(2, {});
    const auto data = wn_simulate(w0, 500, rng);
    const auto ref = wn_posterior_sample_serial(data, m, 30, 11);
    for (int t : {1, 8}) {
      ThreadScope scope(t);
      const auto par = wn_posterior_sample(data, m, 30, 11);
      REQUIRE(par.draws.size() == ref.draws.size());
      for (std::size_t s = 0; s < ref.draws.size(); ++s) CHECK(ref.draws[s] == par.draws[s]);
    }
  }
}

TEST_CASE("experiment results are thread-count independent") {
  const auto cfg = parse_experiment_config(nlohmann::json::parse(R"({
    "model": "white-noise",
    "prior": {"p": 1.5, "alpha": 1},
    "truth": {"beta": 1, "q": 2},
    "n_grid": [100, 300, 900, 2700],
    "replicates": 3,
    "posterior_draws": 40,
    "seed": 8
  })"));
  const auto ref = results_csv(run_contraction_serial(cfg));
  for (int t : {1, 2, 8}) {
    ThreadScope scope(t);
    CHECK(results_csv(run_contraction(cfg)) == ref);
  }
}

}  // TEST_SUITE
