#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greyforce/dataset.hpp"
#include "greyforce/gp.hpp"
#include "greyforce/predictive.hpp"
#include "greyforce/qpso.hpp"

namespace greyforce {

// How the black-box inputs/targets were derived from a TimeSeriesDataset.
enum class ExogenousTransform { raw, morison_augmented, residual_target };

std::string transform_name(ExogenousTransform t);
ExogenousTransform parse_transform(const std::string& name);

// Exogenous channels plus the (fed-back) target series, all equal length.
struct NarxData {
  std::vector<std::string> exogenous_names;
  std::vector<std::vector<double>> exogenous;
  std::string target_name = "F";
  std::vector<double> target;

  std::size_t size() const noexcept { return target.size(); }
  void validate() const;

  // Exogenous [U, Udot], target F.
  static NarxData from_dataset(const TimeSeriesDataset& ds);
};

DesignMatrix narx_design(const NarxData& data, const LagSpec& spec);

struct GPNARXModel {
  GPModel gp;
  LagSpec spec;
  Channel target_channel = Channel::force;
  ExogenousTransform transform = ExogenousTransform::raw;
  std::size_t n_exogenous = 2;

  std::size_t input_dim() const noexcept {
    return n_exogenous * static_cast<std::size_t>(spec.exogenous + 1) +
           static_cast<std::size_t>(spec.autoregressive);
  }
};

// Every prediction covers source indices max_lag .. n-1 (first_index = max_lag).
// include_noise adds sigma_n^2 to the predictive variance (noisy-output form).
PredictiveSeries osa_predict(const GPNARXModel& model, const NarxData& data, bool include_noise = true);
PredictiveSeries mpo_predict(const GPNARXModel& model, const NarxData& data, bool include_noise = true);
MCPredictiveSeries mc_mpo_predict(const GPNARXModel& model, const NarxData& data, std::size_t n_samples,
                                  std::uint64_t seed, bool include_noise = true);

PredictiveSeries osa_predict(const GPNARXModel& model, const TimeSeriesDataset& ds);
PredictiveSeries mpo_predict(const GPNARXModel& model, const TimeSeriesDataset& ds);
MCPredictiveSeries mc_mpo_predict(const GPNARXModel& model, const TimeSeriesDataset& ds,
                                  std::size_t n_samples, std::uint64_t seed);

// 0.5 sum[(y - E)^2 / V + log V] + n/2 log 2 pi, with y aligned to pred.first_index.
double negative_log_predictive_likelihood(std::span<const double> y, const PredictiveSeries& pred);

// Fits a GP on the training embedding with `hyper`, runs the MPO over the
// validation set and returns its NLPL.
double mpo_nlpl(const GPHyperparams& hyper, const NarxData& train, const NarxData& validation,
                const LagSpec& spec, const GPFitOptions& fit = {});
double mpo_nlpl(const GPHyperparams& hyper, const TimeSeriesDataset& train,
                const TimeSeriesDataset& validation, const LagSpec& spec);

enum class TrainingObjective { automatic, mpo_nlpl, nlml };

std::string objective_name(TrainingObjective o);

struct GPNARXTrainingConfig {
  // Unset: per-class defaults (static GP or GP-NARX).
  std::optional<QPSOConfig> qpso;
  // Overrides the QPSO seed (defaulted or explicit).
  std::optional<std::uint64_t> seed;
  TrainingObjective objective = TrainingObjective::automatic;
  GPFitOptions fit;
  double search_lo = -6.0;
  double search_hi = 6.0;
  // Hyperparameters used when there are no training rows at all.
  double zero_data_signal_variance = 1.0;
  double zero_data_noise_variance = 1e-2;
  // Stability cross-check between repeat runs.
  double stability_cost_tol = 1.0;
  double stability_position_tol = std::numeric_limits<double>::infinity();  // positions unchecked by default
};

struct GPNARXTrainingReport {
  TrainingObjective objective = TrainingObjective::automatic;  // the objective actually used
  QPSOConfig qpso;
  std::optional<OptimResult> optim;  // empty in zero-data mode
  StabilityVerdict stability;
  GPHyperparams hyper;
  double target_scale = 1.0;  // signal/noise variances are searched relative to this
  std::size_t n_train_rows = 0;
  std::size_t n_validation_rows = 0;
};

// Maps a search vector [log s_f, log l_1..log l_d, log s_n] to hyperparameters
// with sigma_f^2 = exp(log s_f) * target_scale, sigma_n^2 = exp(log s_n) * target_scale.
GPHyperparams hyper_from_search(const Eigen::VectorXd& position, double target_scale);

// Minimizes the MPO NLPL (or NLML) over log-hyperparameters with QPSO and
// returns the model fitted at the optimum. With no training rows the model
// is the zero-data prior. When the validation set is too short for the MPO,
// the NLML objective is used instead.
GPNARXModel train_gpnarx(const NarxData& train, const NarxData& validation, const LagSpec& spec,
                         const GPNARXTrainingConfig& cfg, GPNARXTrainingReport* report = nullptr,
                         ExogenousTransform transform = ExogenousTransform::raw);
GPNARXModel train_gpnarx(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                         const LagSpec& spec, const GPNARXTrainingConfig& cfg,
                         GPNARXTrainingReport* report = nullptr);

struct MCConvergenceStep {
  std::size_t n_samples = 0;
  double nmse = 0.0;
  double mean_std = 0.0;
};

struct MCConvergence {
  bool converged = false;
  std::vector<MCConvergenceStep> steps;
  MCPredictiveSeries final;
};

// Doubles N from start_samples until NMSE of the MC mean moves by less than
// nmse_tol percentage points and the mean predictive std by less than std_tol.
MCConvergence mc_convergence(const GPNARXModel& model, const NarxData& data, std::size_t start_samples,
                             std::size_t max_samples, std::uint64_t seed, double nmse_tol = 1e-3,
                             double std_tol = 1e-2);

}  // namespace greyforce
