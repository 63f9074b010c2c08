#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "greyforce/errors.hpp"
#include "greyforce/qpso.hpp"

using namespace greyforce;

namespace {

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

QPSOConfig small(std::size_t dim, std::uint64_t seed) {
  QPSOConfig c = QPSOConfig::for_static_gp(dim, -5.0, 5.0);
  c.swarm_size = 40;
  c.n_repeat_runs = 2;
  c.stability_tol = 1e-8;
  c.max_iters = 300;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("sphere minimum is found") {
  const OptimResult r = qpso_minimize(sphere, small(3, 1));
  CHECK(r.best_cost < 1e-6);
  CHECK(r.runs.size() == 2);
  CHECK(r.cost_trace.size() == r.runs[r.best_run].iterations + 1);
  for (std::size_t i = 1; i < r.cost_trace.size(); ++i) CHECK(r.cost_trace[i] <= r.cost_trace[i - 1]);
}

TEST_CASE("shifted minimum inside asymmetric bounds") {
  QPSOConfig c = small(2, 4);
  c.bounds = {{0.0, 10.0}, {-3.0, -1.0}};
  const OptimResult r = qpso_minimize(
      [](const Eigen::VectorXd& x) { return std::pow(x(0) - 7.0, 2) + std::pow(x(1) + 2.5, 2); }, c);
  CHECK(r.best_position(0) == doctest::Approx(7.0).epsilon(1e-3));
  CHECK(r.best_position(1) == doctest::Approx(-2.5).epsilon(1e-3));
}

TEST_CASE("same seed, same result") {
  const OptimResult a = qpso_minimize(sphere, small(4, 9));
  const OptimResult b = qpso_minimize(sphere, small(4, 9));
  CHECK(a.best_position == b.best_position);
  CHECK(a.cost_trace == b.cost_trace);
}

TEST_CASE("throwing and non-finite costs are treated as infeasible") {
  auto guarded = [](const Eigen::VectorXd& x) {
    if (x(0) > 1.0) throw std::runtime_error("outside model domain");
    if (x(1) > 1.0) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(x(0) + 1.0, 2) + std::pow(x(1) + 1.0, 2);
  };
  const OptimResult r = qpso_minimize(guarded, small(2, 2));
  CHECK(r.best_cost < 1e-6);
  CHECK_THROWS_AS(qpso_minimize([](const Eigen::VectorXd&) { return std::numeric_limits<double>::infinity(); },
                                small(2, 2)),
                  InfeasibleError);
}

TEST_CASE("default settings for the two model classes") {
  const QPSOConfig s = QPSOConfig::for_static_gp(5);
  CHECK(s.swarm_size == 200);
  CHECK(s.stability_tol == 1e-3);
  const QPSOConfig n = QPSOConfig::for_gp_narx(5);
  CHECK(n.swarm_size == 1000);
  CHECK(n.stability_tol == 1e-5);
  CHECK(n.bounds.size() == 5);
  QPSOConfig bad = s;
  bad.swarm_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.bounds[0] = {1.0, -1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stability report flags an outlier run") {
  OptimResult r;
  for (int i = 0; i < 4; ++i) {
    QPSORun run;
    run.position = Eigen::Vector2d(0.01 * i, 0.0);
    run.cost = 1.0 + 0.01 * i;
    r.runs.push_back(run);
  }
  QPSORun outlier;
  outlier.position = Eigen::Vector2d(4.0, 4.0);
  outlier.cost = 9.0;
  r.runs.push_back(outlier);
  r.best_run = 0;
  r.best_cost = 1.0;
  const StabilityVerdict v = stability_report(r, 0.5, 0.5);
  CHECK_FALSE(v.stable);
  REQUIRE(v.outlier_runs.size() == 1);
  CHECK(v.outlier_runs[0] == 4);
  CHECK(v.max_cost_gap == doctest::Approx(8.0));
  r.runs.pop_back();
  CHECK(stability_report(r, 0.5, 0.5).stable);
}
