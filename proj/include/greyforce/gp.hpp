#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "greyforce/predictive.hpp"

namespace greyforce {

// ARD squared-exponential hyperparameters. Length scales are expressed in
// the model's (standardized) input units.
struct GPHyperparams {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;
  double noise_variance = 0.0;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(length_scales.size()); }
  void validate() const;

  // Packs [log sigma_f^2, log l_1..log l_d, log sigma_n^2].
  Eigen::VectorXd to_log() const;
  static GPHyperparams from_log(const Eigen::VectorXd& log_params);
};

// sigma_f^2 exp(-0.5 sum_i (x_i - x2_i)^2 / l_i^2)
double kernel_ard_se(std::span<const double> x, std::span<const double> x2, const GPHyperparams& hyper);

// Cross-covariance between the rows of a and b (no noise term).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GPHyperparams& hyper);

struct GPFitOptions {
  bool standardize_inputs = true;  // per-column training mean / std
  bool center_targets = true;      // subtract the training mean, restore at prediction
  double empty_prior_mean = 0.0;   // prior mean used when there are no training rows
};

struct Standardization {
  Eigen::RowVectorXd input_mean;
  Eigen::RowVectorXd input_scale;
  double target_offset = 0.0;
};

// Exact GP regression with a cached Cholesky factor of K + (sigma_n^2 + jitter) I.
class GPModel {
 public:
  GPModel() = default;

  const Eigen::MatrixXd& train_inputs() const noexcept { return x_train_; }
  const Eigen::VectorXd& train_targets() const noexcept { return y_train_; }
  const GPHyperparams& hyper() const noexcept { return hyper_; }
  const GPFitOptions& options() const noexcept { return options_; }
  const Standardization& standardization() const noexcept { return standardization_; }
  const Eigen::MatrixXd& cholesky() const noexcept { return chol_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  double jitter() const noexcept { return jitter_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(x_train_.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(x_train_.cols()); }

  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;

  // Predictive mean and variance at the rows of x (raw input units).
  void predict(const Eigen::MatrixXd& x, bool include_noise, Eigen::VectorXd& mean,
               Eigen::VectorXd& variance) const;

  // 0.5 y^T A^{-1} y + 0.5 log|A| + n/2 log 2 pi over the (centered) targets.
  double negative_log_marginal_likelihood() const;

  friend GPModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const GPHyperparams& hyper, const GPFitOptions& options);

 private:
  Eigen::MatrixXd x_train_;
  Eigen::VectorXd y_train_;
  GPHyperparams hyper_;
  GPFitOptions options_;
  Standardization standardization_;
  Eigen::MatrixXd z_train_;  // standardized inputs
  Eigen::MatrixXd chol_;     // lower-triangular
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

// x may have zero rows (zero-data mode): predictions are then the prior.
GPModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GPHyperparams& hyper,
               const GPFitOptions& options = {});

PredictiveSeries gp_predict(const GPModel& model, const Eigen::MatrixXd& x_star, bool include_noise);

double nlml(const GPHyperparams& hyper, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
            const GPFitOptions& options = {});

// Analytic gradient of nlml with respect to to_log() coordinates.
Eigen::VectorXd nlml_gradient(const GPHyperparams& hyper, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y, const GPFitOptions& options = {});

}  // namespace greyforce
