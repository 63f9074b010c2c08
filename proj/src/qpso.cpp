#include "greyforce/qpso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "greyforce/errors.hpp"
#include "greyforce/rng.hpp"

namespace greyforce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_cost(const CostFunction& cost, const Eigen::VectorXd& x) {
  try {
    const double c = cost(x);
    return std::isfinite(c) ? c : kInf;
  } catch (...) {
    return kInf;
  }
}

void evaluate_swarm(const CostFunction& cost, const Eigen::MatrixXd& positions,
                    std::vector<double>& out) {
  const auto n = static_cast<std::ptrdiff_t>(positions.cols());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = safe_cost(cost, positions.col(i));
  }
}

QPSORun single_run(const CostFunction& cost, const QPSOConfig& cfg, std::uint64_t seed,
                   std::size_t& evaluations) {
  const auto dim = static_cast<Eigen::Index>(cfg.bounds.size());
  const auto swarm = static_cast<Eigen::Index>(cfg.swarm_size);
  Eigen::VectorXd lo(dim), hi(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    lo(j) = cfg.bounds[static_cast<std::size_t>(j)].first;
    hi(j) = cfg.bounds[static_cast<std::size_t>(j)].second;
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // One particle per column.
  Eigen::MatrixXd x(dim, swarm);
  for (Eigen::Index i = 0; i < swarm; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) x(j, i) = lo(j) + (hi(j) - lo(j)) * unit(rng);
  }
  std::vector<double> costs(static_cast<std::size_t>(swarm));
  evaluate_swarm(cost, x, costs);
  evaluations += costs.size();

  Eigen::MatrixXd pbest = x;
  std::vector<double> pbest_cost = costs;
  std::size_t g = static_cast<std::size_t>(
      std::min_element(pbest_cost.begin(), pbest_cost.end()) - pbest_cost.begin());
  Eigen::VectorXd gbest = pbest.col(static_cast<Eigen::Index>(g));
  double gbest_cost = pbest_cost[g];

  QPSORun run;
  run.cost_trace.push_back(gbest_cost);

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    const double frac = cfg.max_iters > 1 ? static_cast<double>(it - 1) / static_cast<double>(cfg.max_iters - 1) : 0.0;
    const double beta = cfg.contraction_start + (cfg.contraction_end - cfg.contraction_start) * frac;
    const Eigen::VectorXd mbest = pbest.rowwise().mean();

    for (Eigen::Index i = 0; i < swarm; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double phi = unit(rng);
        const double attractor = phi * pbest(j, i) + (1.0 - phi) * gbest(j);
        double u = unit(rng);
        while (u <= 0.0) u = unit(rng);
        const double step = beta * std::abs(mbest(j) - x(j, i)) * std::log(1.0 / u);
        const double v = unit(rng) < 0.5 ? attractor + step : attractor - step;
        x(j, i) = std::clamp(v, lo(j), hi(j));
      }
    }
    evaluate_swarm(cost, x, costs);
    evaluations += costs.size();

    for (Eigen::Index i = 0; i < swarm; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (costs[k] < pbest_cost[k]) {
        pbest_cost[k] = costs[k];
        pbest.col(i) = x.col(i);
        if (costs[k] < gbest_cost) {
          gbest_cost = costs[k];
          gbest = x.col(i);
        }
      }
    }
    run.cost_trace.push_back(gbest_cost);

    if (it >= cfg.patience) {
      const double earlier = run.cost_trace[it - cfg.patience];
      const double improvement = earlier - gbest_cost;
      // inf - inf is NaN; an all-infeasible window is not "stable".
      if (std::isfinite(gbest_cost) && improvement < cfg.stability_tol) break;
    }
  }
  run.position = gbest;
  run.cost = gbest_cost;
  run.iterations = run.cost_trace.size() - 1;
  return run;
}

}  // namespace

void QPSOConfig::validate() const {
  if (swarm_size < 2) throw ConfigError("QPSO swarm size must be at least 2");
  if (!(stability_tol > 0.0)) throw ConfigError("QPSO stability tolerance must be positive");
  if (n_repeat_runs < 1) throw ConfigError("QPSO needs at least one run");
  if (patience < 1) throw ConfigError("QPSO patience must be at least 1");
  if (bounds.empty()) throw ConfigError("QPSO needs at least one search dimension");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("QPSO bounds must be finite with lo < hi");
    }
  }
}

QPSOConfig QPSOConfig::for_static_gp(std::size_t dim, double lo, double hi) {
  QPSOConfig c;
  c.swarm_size = 200;
  c.stability_tol = 1e-3;
  c.bounds.assign(dim, {lo, hi});
  return c;
}

QPSOConfig QPSOConfig::for_gp_narx(std::size_t dim, double lo, double hi) {
  QPSOConfig c;
  c.swarm_size = 1000;
  c.stability_tol = 1e-5;
  c.bounds.assign(dim, {lo, hi});
  return c;
}

OptimResult qpso_minimize(const CostFunction& cost, const QPSOConfig& cfg) {
  cfg.validate();
  OptimResult result;
  result.best_cost = kInf;
  for (std::size_t r = 0; r < cfg.n_repeat_runs; ++r) {
    QPSORun run = single_run(cost, cfg, derive_seed(cfg.seed, r), result.evaluations);
    if (run.cost < result.best_cost || result.runs.empty()) {
      result.best_cost = run.cost;
      result.best_position = run.position;
      result.cost_trace = run.cost_trace;
      result.best_run = r;
    }
    result.runs.push_back(std::move(run));
  }
  if (!std::isfinite(result.best_cost)) {
    throw InfeasibleError("every QPSO run produced only non-finite costs");
  }
  return result;
}

StabilityVerdict stability_report(const OptimResult& result, double position_tol, double cost_tol) {
  StabilityVerdict v;
  const auto& best = result.runs.at(result.best_run);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& run = result.runs[r];
    const double cost_gap = std::isfinite(run.cost) ? run.cost - result.best_cost : kInf;
    const double pos_gap = (run.position - best.position).cwiseAbs().maxCoeff();
    v.max_cost_gap = std::max(v.max_cost_gap, cost_gap);
    v.max_position_gap = std::max(v.max_position_gap, pos_gap);
    if (cost_gap > cost_tol || pos_gap > position_tol) {
      v.stable = false;
      v.outlier_runs.push_back(r);
    }
  }
  return v;
}

}  // namespace greyforce
