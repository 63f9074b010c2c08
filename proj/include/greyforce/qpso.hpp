#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace greyforce {

struct QPSOConfig {
  std::size_t swarm_size = 200;
  double stability_tol = 1e-3;   // absolute cost improvement over `patience` iterations
  std::size_t max_iters = 500;
  std::size_t patience = 20;
  std::vector<std::pair<double, double>> bounds;  // per dimension (lo, hi)
  double contraction_start = 1.0;  // contraction-expansion coefficient, annealed linearly
  double contraction_end = 0.5;
  std::size_t n_repeat_runs = 12;
  std::uint64_t seed = 0;

  void validate() const;

  // Swarm and tolerance settings for the two model classes, over `dim`
  // log-hyperparameters bounded by [lo, hi].
  static QPSOConfig for_static_gp(std::size_t dim, double lo = -6.0, double hi = 6.0);
  static QPSOConfig for_gp_narx(std::size_t dim, double lo = -6.0, double hi = 6.0);
};

struct QPSORun {
  Eigen::VectorXd position;
  double cost = 0.0;
  std::size_t iterations = 0;
  std::vector<double> cost_trace;  // global-best cost at initialisation, then after each iteration
};

struct OptimResult {
  Eigen::VectorXd best_position;
  double best_cost = 0.0;
  std::vector<double> cost_trace;  // trace of the best run
  std::vector<QPSORun> runs;
  std::size_t best_run = 0;
  std::size_t evaluations = 0;
};

using CostFunction = std::function<double(const Eigen::VectorXd&)>;

// Quantum-behaved PSO with mean-of-personal-bests attractor. Non-finite costs
// and exceptions thrown by `cost` count as +inf. The cost function is called
// concurrently from several threads and must be safe for that.
OptimResult qpso_minimize(const CostFunction& cost, const QPSOConfig& cfg);

struct StabilityVerdict {
  bool stable = true;
  std::vector<std::size_t> outlier_runs;
  double max_cost_gap = 0.0;
  double max_position_gap = 0.0;  // infinity norm in search coordinates
};

StabilityVerdict stability_report(const OptimResult& result, double position_tol, double cost_tol);

}  // namespace greyforce
