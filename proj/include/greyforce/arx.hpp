#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greyforce/dataset.hpp"
#include "greyforce/predictive.hpp"

namespace greyforce {

// y_t = sum_k alpha . [U|U|_{t-k}, Udot_{t-k}] + sum_i beta_i y_{t-i} + e_t
struct ARXModel {
  Eigen::VectorXd exogenous;       // alpha, ordered [U|U|_t, Udot_t, U|U|_{t-1}, ...]; empty for pure AR
  Eigen::VectorXd autoregressive;  // beta_1..beta_ly
  LagSpec spec;
  double residual_variance = 0.0;  // SSR / n_effective on the training set
  std::size_t n_effective = 0;

  bool has_exogenous() const noexcept { return exogenous.size() > 0; }
  // alpha + beta + the residual variance
  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(exogenous.size() + autoregressive.size()) + 1;
  }
};

struct ARXOptions {
  bool exogenous = true;  // false fits a pure AR model on the target channel
};

ARXModel fit_arx(const TimeSeriesDataset& ds, const LagSpec& spec, const ARXOptions& options = {});

// Predictions for t = max_lag .. n-1. MPO warm-starts from the first max_lag
// measured outputs. Variance is the homoscedastic residual variance.
PredictiveSeries predict_arx(const ARXModel& model, const TimeSeriesDataset& ds, PredictionMode mode);

double aic(double k, double n, double log_likelihood);
double aicc(double k, double n, double log_likelihood);
double bic(double k, double n, double log_likelihood);

// Sum of log N(r_t | 0, variance).
double gaussian_log_likelihood(std::span<const double> residuals, double variance);

enum class LagMetric { aicc_osa, aicc_mpo, bic_osa, bic_mpo };
inline constexpr std::array<LagMetric, 4> kLagMetrics{LagMetric::aicc_osa, LagMetric::aicc_mpo,
                                                      LagMetric::bic_osa, LagMetric::bic_mpo};
std::string metric_name(LagMetric m);

struct LagCell {
  LagSpec lags;
  bool ok = false;
  std::string error;
  std::array<double, 4> score{};  // raw criterion per LagMetric
  std::array<double, 4> delta{};  // score minus the per-metric grid minimum
};

struct LagSearchResult {
  std::vector<LagCell> cells;  // l_u-major, then l_y ascending
  std::array<LagSpec, 4> best{};
  std::size_t n_scored = 0;    // validation points scored in every cell

  const LagSpec& best_for(LagMetric m) const { return best[static_cast<std::size_t>(m)]; }
  // Cells with delta <= threshold (2 = "substantial support").
  std::vector<LagSpec> supported(LagMetric m, double threshold = 2.0) const;
};

// Fits every (l_u, l_y) in [0, max_lu] x [1, max_ly] on train and scores OSA
// and MPO likelihoods on the same validation indices (t >= max(max_lu, max_ly)).
LagSearchResult lag_search(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                           int max_lu, int max_ly);

// Long format: l_u,l_y,metric,delta (failed cells have an empty delta).
void write_lag_heatmap_csv(const std::filesystem::path& path, const LagSearchResult& result);

}  // namespace greyforce
