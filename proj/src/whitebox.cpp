#include "greyforce/whitebox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "greyforce/errors.hpp"
#include "greyforce/rng.hpp"

namespace greyforce {

void PhysicalConfig::validate() const {
  if (!(rho > 0.0) || !(diameter > 0.0)) throw ConfigError("rho and diameter must be positive");
  if (!(cd >= 0.0) || !(cm >= 0.0)) throw ConfigError("Cd and Cm must be non-negative");
}

GroupedCoefficients grouped_coefficients(const PhysicalConfig& cfg) {
  cfg.validate();
  return {0.5 * cfg.rho * cfg.diameter * cfg.cd,
          0.25 * std::numbers::pi * cfg.rho * cfg.diameter * cfg.diameter * cfg.cm};
}

void NIGPrior::validate() const {
  if (!mean.allFinite() || !covariance.allFinite()) throw ConfigError("prior must be finite");
  if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12 * covariance.cwiseAbs().maxCoeff()) {
    throw ConfigError("prior covariance must be symmetric");
  }
  Eigen::LLT<Eigen::Matrix2d> llt(covariance);
  if (llt.info() != Eigen::Success) throw ConfigError("prior covariance must be positive definite");
  if (!(shape > 0.0) || !(scale > 0.0)) throw ConfigError("Inverse-Gamma shape and scale must be positive");
}

NIGPrior NIGPrior::from_physical(const PhysicalConfig& cfg, double relative_sd, double shape,
                                 double scale) {
  const auto g = grouped_coefficients(cfg);
  NIGPrior p;
  p.mean << g.drag, g.inertia;
  const double sd_drag = relative_sd * std::abs(g.drag);
  const double sd_inertia = relative_sd * std::abs(g.inertia);
  p.covariance = Eigen::Vector2d(sd_drag * sd_drag, sd_inertia * sd_inertia).asDiagonal();
  p.shape = shape;
  p.scale = scale;
  p.validate();
  return p;
}

Eigen::Vector2d MorisonPosterior::beta_mean() const {
  return beta_draws.colwise().mean().transpose();
}

Eigen::Matrix2d MorisonPosterior::beta_covariance() const {
  const Eigen::MatrixX2d centered = beta_draws.rowwise() - beta_draws.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(beta_draws.rows());
}

double MorisonPosterior::mean_noise_variance() const { return noise_variance_draws.mean(); }

void MorisonPosterior::validate() const {
  if (beta_draws.rows() < 1) throw ConfigError("posterior needs at least one draw");
  if (noise_variance_draws.size() != beta_draws.rows()) {
    throw ShapeError("posterior draw counts disagree");
  }
  if (!beta_draws.allFinite() || !(noise_variance_draws.array() > 0.0).all()) {
    throw DataError("posterior draws must be finite with positive noise variance", 0);
  }
}

Eigen::MatrixX2d morison_design(std::span<const double> velocity,
                                std::span<const double> acceleration) {
  if (velocity.size() != acceleration.size()) {
    throw ShapeError("velocity and acceleration lengths differ");
  }
  Eigen::MatrixX2d x(static_cast<Eigen::Index>(velocity.size()), 2);
  for (std::size_t i = 0; i < velocity.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = velocity[i] * std::abs(velocity[i]);
    x(r, 1) = acceleration[i];
  }
  return x;
}

MorisonPosterior gibbs_fit(const Eigen::MatrixX2d& design, std::span<const double> force,
                           const NIGPrior& prior, const GibbsOptions& options) {
  prior.validate();
  if (static_cast<std::size_t>(design.rows()) != force.size()) {
    throw ShapeError("design rows and force length differ");
  }
  if (options.n_draws < 1) throw ConfigError("n_draws must be at least 1");
  if (options.fixed_noise_variance && !(*options.fixed_noise_variance > 0.0)) {
    throw ConfigError("fixed noise variance must be positive");
  }
  const Eigen::Map<const Eigen::VectorXd> f(force.data(), static_cast<Eigen::Index>(force.size()));
  const auto n = static_cast<double>(force.size());

  const Eigen::Matrix2d xtx = design.transpose() * design;
  const Eigen::Vector2d xtf = design.transpose() * f;
  const Eigen::Matrix2d prior_precision = prior.covariance.inverse();
  const Eigen::Vector2d prior_shift = prior_precision * prior.mean;

  Rng rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto sample_beta = [&](double noise_variance) -> Eigen::Vector2d {
    const Eigen::Matrix2d precision = prior_precision + xtx / noise_variance;
    Eigen::LLT<Eigen::Matrix2d> llt(precision);
    if (llt.info() != Eigen::Success || !precision.allFinite()) {
      throw NumericalError(
          "conditional covariance of (Cd', Cm') is singular; increase the prior variance");
    }
    const Eigen::Vector2d mu = llt.solve(prior_shift + xtf / noise_variance);
    const Eigen::Vector2d z(normal(rng), normal(rng));
    // precision = R R^T, so R^{-T} z has covariance precision^{-1}.
    return mu + llt.matrixU().solve(z);
  };
  auto residual_ss = [&](const Eigen::Vector2d& beta) { return (f - design * beta).squaredNorm(); };

  const double post_shape = prior.shape + 0.5 * n;
  auto sample_noise = [&](const Eigen::Vector2d& beta) {
    const double rate = prior.scale + 0.5 * residual_ss(beta);
    std::gamma_distribution<double> gamma(post_shape, 1.0 / rate);
    double precision = gamma(rng);
    // Guard against underflow to zero for essentially noise-free data.
    precision = std::min(precision, 1e300);
    return 1.0 / precision;
  };

  double noise_variance = options.fixed_noise_variance.value_or(
      (prior.scale + 0.5 * residual_ss(prior.mean)) / (post_shape + 1.0));

  MorisonPosterior post;
  post.prior = prior;
  post.seed = options.seed;
  post.beta_draws.resize(static_cast<Eigen::Index>(options.n_draws), 2);
  post.noise_variance_draws.resize(static_cast<Eigen::Index>(options.n_draws));

  const std::size_t total = options.burn_in + options.n_draws;
  for (std::size_t it = 0; it < total; ++it) {
    const Eigen::Vector2d beta = sample_beta(noise_variance);
    if (!options.fixed_noise_variance) noise_variance = sample_noise(beta);
    if (it >= options.burn_in) {
      const auto k = static_cast<Eigen::Index>(it - options.burn_in);
      post.beta_draws.row(k) = beta.transpose();
      post.noise_variance_draws(k) = noise_variance;
    }
  }
  return post;
}

MorisonPosterior fit_whitebox(const TimeSeriesDataset& ds, const NIGPrior& prior,
                              const GibbsOptions& options) {
  return gibbs_fit(morison_design(ds.velocity(), ds.acceleration()), ds.force(), prior, options);
}

PredictiveSeries predict_whitebox(const MorisonPosterior& post, std::span<const double> velocity,
                                  std::span<const double> acceleration, bool include_noise) {
  if (post.n_draws() == 0) throw ConfigError("posterior has no draws");
  const Eigen::MatrixX2d x = morison_design(velocity, acceleration);
  const Eigen::Vector2d mean_beta = post.beta_mean();
  const Eigen::Matrix2d cov_beta = post.beta_covariance();
  PredictiveSeries out;
  out.mean = x * mean_beta;
  out.variance = ((x * cov_beta).cwiseProduct(x)).rowwise().sum().cwiseMax(0.0);
  if (include_noise) out.variance.array() += post.mean_noise_variance();
  return out;
}

PredictiveSeries predict_whitebox(const MorisonPosterior& post, const TimeSeriesDataset& ds,
                                  bool include_noise) {
  return predict_whitebox(post, ds.velocity(), ds.acceleration(), include_noise);
}

Eigen::VectorXd whitebox_mean_force(const MorisonPosterior& post, std::span<const double> velocity,
                                    std::span<const double> acceleration) {
  return morison_design(velocity, acceleration) * post.beta_mean();
}

}  // namespace greyforce
