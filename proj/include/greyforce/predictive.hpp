#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace greyforce {

// OSA feeds measured lagged outputs; MPO feeds back the predictive mean;
// MC-MPO feeds back samples from the predictive distribution.
enum class PredictionMode { osa, mpo, mc_mpo };

// Per-step predictive mean and variance. first_index is the position of
// element 0 in the source series (the warm-up lags consumed before it).
struct PredictiveSeries {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::size_t first_index = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

// Sampled trajectories (one path per row) with their per-step statistics.
struct MCPredictiveSeries {
  Eigen::MatrixXd paths;  // n_samples x n_steps
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::size_t first_index = 0;

  std::size_t n_samples() const noexcept { return static_cast<std::size_t>(paths.rows()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }
  PredictiveSeries summary() const { return {mean, variance, first_index}; }
};

// Fills mean/variance (population variance across paths) from paths.
void summarize_paths(MCPredictiveSeries& mc);

}  // namespace greyforce
