#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "greyforce/dataset.hpp"
#include "greyforce/predictive.hpp"

namespace greyforce {

// Morison's equation per unit length: F = 0.5 rho D Cd U|U| + 0.25 pi rho D^2 Cm Udot.
struct PhysicalConfig {
  double rho = 1025.0;      // kg/m^3, seawater
  double diameter = 0.48;   // m
  double cd = 0.6;
  double cm = 1.2;

  void validate() const;
};

struct GroupedCoefficients {
  double drag = 0.0;     // N s^2 / m^2, multiplies U|U|
  double inertia = 0.0;  // N s^2 / m, multiplies Udot
};

GroupedCoefficients grouped_coefficients(const PhysicalConfig& cfg);

// Normal prior on beta = (C_d', C_m') and Inverse-Gamma(shape, scale) prior on
// the noise variance.
struct NIGPrior {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  double shape = 2.0;
  double scale = 1.0;

  void validate() const;

  // Mean from the grouped coefficients of cfg; independent components with
  // standard deviation relative_sd * |mean|.
  static NIGPrior from_physical(const PhysicalConfig& cfg, double relative_sd = 0.5,
                                double shape = 2.0, double scale = 1.0);
};

struct GibbsOptions {
  std::size_t n_draws = 10000;  // kept after burn-in
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  // Holds sigma_n^2 at this value instead of sampling it.
  std::optional<double> fixed_noise_variance;
};

struct MorisonPosterior {
  Eigen::MatrixX2d beta_draws;            // n_draws x 2, columns (C_d', C_m')
  Eigen::VectorXd noise_variance_draws;   // n_draws
  NIGPrior prior;
  std::uint64_t seed = 0;

  std::size_t n_draws() const noexcept { return static_cast<std::size_t>(beta_draws.rows()); }
  Eigen::Vector2d beta_mean() const;
  Eigen::Matrix2d beta_covariance() const;  // population covariance of the draws
  double mean_noise_variance() const;
  void validate() const;
};

// Rows [U|U|, Udot].
Eigen::MatrixX2d morison_design(std::span<const double> velocity, std::span<const double> acceleration);

// Two-block Gibbs sampler for the semiconjugate Normal-Inverse-Gamma model
// F = X beta + eps. X may have zero rows, in which case the draws follow the prior.
MorisonPosterior gibbs_fit(const Eigen::MatrixX2d& design, std::span<const double> force,
                           const NIGPrior& prior, const GibbsOptions& options);

MorisonPosterior fit_whitebox(const TimeSeriesDataset& ds, const NIGPrior& prior,
                              const GibbsOptions& options);

// Mean and variance over draws of beta_k . [U|U|, Udot]; include_noise adds
// the mean sampled noise variance to every step.
PredictiveSeries predict_whitebox(const MorisonPosterior& post, std::span<const double> velocity,
                                  std::span<const double> acceleration, bool include_noise);

PredictiveSeries predict_whitebox(const MorisonPosterior& post, const TimeSeriesDataset& ds,
                                  bool include_noise);

// Posterior-mean force series (the point estimate fed to grey-box models).
Eigen::VectorXd whitebox_mean_force(const MorisonPosterior& post, std::span<const double> velocity,
                                    std::span<const double> acceleration);

}  // namespace greyforce
