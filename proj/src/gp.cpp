#include "greyforce/gp.hpp"

#include <cmath>
#include <numbers>

#include "greyforce/errors.hpp"

namespace greyforce {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

// Squared distance scaled by the length scales; exact zero for identical rows.
inline double scaled_sqdist(const double* a, const double* b, std::ptrdiff_t a_stride,
                            std::ptrdiff_t b_stride, const Eigen::VectorXd& inv_l2) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < inv_l2.size(); ++k) {
    const double d = a[k * a_stride] - b[k * b_stride];
    s += d * d * inv_l2(k);
  }
  return s;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GPHyperparams& hyper) {
  const Eigen::VectorXd inv_l2 = hyper.length_scales.array().square().inverse();
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double d2 = scaled_sqdist(&a(i, 0), &b(j, 0), a.outerStride(), b.outerStride(), inv_l2);
      k(i, j) = hyper.signal_variance * std::exp(-0.5 * d2);
    }
  }
  return k;
}

Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& a, const GPHyperparams& hyper) {
  const Eigen::VectorXd inv_l2 = hyper.length_scales.array().square().inverse();
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = hyper.signal_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d2 = scaled_sqdist(&a(i, 0), &a(j, 0), a.outerStride(), a.outerStride(), inv_l2);
      k(i, j) = k(j, i) = hyper.signal_variance * std::exp(-0.5 * d2);
    }
  }
  return k;
}

}  // namespace

void GPHyperparams::validate() const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw DomainError("signal variance must be positive and finite");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw DomainError("noise variance must be non-negative and finite");
  }
  for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
    if (!(length_scales(i) > 0.0) || !std::isfinite(length_scales(i))) {
      throw DomainError("length scales must be positive and finite");
    }
  }
}

Eigen::VectorXd GPHyperparams::to_log() const {
  Eigen::VectorXd p(length_scales.size() + 2);
  p(0) = std::log(signal_variance);
  p.segment(1, length_scales.size()) = length_scales.array().log();
  p(p.size() - 1) = std::log(noise_variance);
  return p;
}

GPHyperparams GPHyperparams::from_log(const Eigen::VectorXd& log_params) {
  if (log_params.size() < 2) throw ShapeError("log hyperparameter vector needs at least 2 entries");
  GPHyperparams h;
  h.signal_variance = std::exp(log_params(0));
  h.length_scales = log_params.segment(1, log_params.size() - 2).array().exp();
  h.noise_variance = std::exp(log_params(log_params.size() - 1));
  return h;
}

double kernel_ard_se(std::span<const double> x, std::span<const double> x2, const GPHyperparams& hyper) {
  if (x.size() != x2.size() || x.size() != hyper.input_dim()) {
    throw ShapeError("kernel input dimensions do not match the length scales");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (x[i] - x2[i]) / hyper.length_scales(static_cast<Eigen::Index>(i));
    s += d * d;
  }
  return hyper.signal_variance * std::exp(-0.5 * s);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GPHyperparams& hyper) {
  if (a.cols() != b.cols() || static_cast<std::size_t>(a.cols()) != hyper.input_dim()) {
    throw ShapeError("kernel input dimensions do not match the length scales");
  }
  return gram(a, b, hyper);
}

Eigen::MatrixXd GPModel::standardize(const Eigen::MatrixXd& x) const {
  if (x.cols() != x_train_.cols()) {
    throw ShapeError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(x_train_.cols()));
  }
  return (x.rowwise() - standardization_.input_mean).array().rowwise() /
         standardization_.input_scale.array();
}

void GPModel::predict(const Eigen::MatrixXd& x, bool include_noise, Eigen::VectorXd& mean,
                      Eigen::VectorXd& variance) const {
  const Eigen::MatrixXd z = standardize(x);
  const double noise = include_noise ? hyper_.noise_variance : 0.0;
  if (x_train_.rows() == 0) {
    mean = Eigen::VectorXd::Constant(x.rows(), standardization_.target_offset);
    variance = Eigen::VectorXd::Constant(x.rows(), hyper_.signal_variance + noise);
    return;
  }
  const Eigen::MatrixXd k_star = gram(z, z_train_, hyper_);  // m x n
  mean = (k_star * alpha_).array() + standardization_.target_offset;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(k_star.transpose());
  variance = (hyper_.signal_variance - v.colwise().squaredNorm().array()).max(0.0).transpose();
  variance.array() += noise;
}

double GPModel::negative_log_marginal_likelihood() const {
  const auto n = static_cast<double>(y_train_.size());
  if (y_train_.size() == 0) return 0.0;
  const Eigen::VectorXd yc = y_train_.array() - standardization_.target_offset;
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  return 0.5 * yc.dot(alpha_) + 0.5 * log_det + 0.5 * n * kLog2Pi;
}

GPModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GPHyperparams& hyper,
               const GPFitOptions& options) {
  hyper.validate();
  if (x.rows() != y.size()) throw ShapeError("input rows and target length differ");
  if (static_cast<std::size_t>(x.cols()) != hyper.input_dim()) {
    throw ShapeError("input dimension " + std::to_string(x.cols()) + " does not match " +
                     std::to_string(hyper.input_dim()) + " length scales");
  }
  if (!x.allFinite() || !y.allFinite()) throw DataError("GP training data must be finite", 0);

  GPModel m;
  m.x_train_ = x;
  m.y_train_ = y;
  m.hyper_ = hyper;
  m.options_ = options;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  auto& st = m.standardization_;
  st.input_mean = Eigen::RowVectorXd::Zero(d);
  st.input_scale = Eigen::RowVectorXd::Ones(d);
  if (options.standardize_inputs && n > 0) {
    st.input_mean = x.colwise().mean();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt((x.col(c).array() - st.input_mean(c)).square().mean());
      if (sd > 1e-12 * std::max(1.0, std::abs(st.input_mean(c)))) st.input_scale(c) = sd;
    }
  }
  if (n == 0) {
    st.target_offset = options.empty_prior_mean;
  } else {
    st.target_offset = options.center_targets ? y.mean() : 0.0;
  }
  m.z_train_ = m.standardize(x);
  if (n == 0) {
    m.chol_.resize(0, 0);
    m.alpha_.resize(0);
    return m;
  }

  Eigen::MatrixXd k = symmetric_gram(m.z_train_, hyper);
  k.diagonal().array() += hyper.noise_variance;

  Eigen::LLT<Eigen::MatrixXd> llt;
  auto attempt = [&](double jitter, double min_pivot) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && diag.array().square().minCoeff() > min_pivot;
  };

  const double sf2 = hyper.signal_variance;
  bool ok = attempt(0.0, 1e-10 * sf2);
  double jitter = 0.0;
  for (double j = 1e-10 * sf2; !ok && j <= 1e-4 * sf2 * (1.0 + 1e-9); j *= 10.0) {
    jitter = j;
    ok = attempt(j, 0.0);
  }
  if (!ok) {
    throw ConditioningError("kernel matrix is not positive definite even with jitter 1e-4 * sigma_f^2");
  }
  m.jitter_ = jitter;
  m.chol_ = llt.matrixL();
  const Eigen::VectorXd yc = y.array() - st.target_offset;
  m.alpha_ = llt.solve(yc);
  return m;
}

PredictiveSeries gp_predict(const GPModel& model, const Eigen::MatrixXd& x_star, bool include_noise) {
  PredictiveSeries out;
  model.predict(x_star, include_noise, out.mean, out.variance);
  return out;
}

double nlml(const GPHyperparams& hyper, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
            const GPFitOptions& options) {
  return gp_fit(x, y, hyper, options).negative_log_marginal_likelihood();
}

Eigen::VectorXd nlml_gradient(const GPHyperparams& hyper, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y, const GPFitOptions& options) {
  const GPModel m = gp_fit(x, y, hyper, options);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 2);
  if (n == 0) return grad;

  const Eigen::MatrixXd z = m.standardize(x);
  const Eigen::MatrixXd kf = symmetric_gram(z, hyper);
  const Eigen::MatrixXd k_inv =
      m.cholesky().transpose().triangularView<Eigen::Upper>().solve(
          m.cholesky().triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)));
  // d NLML / d theta = 0.5 tr((K^{-1} - alpha alpha^T) dK/dtheta)
  const Eigen::MatrixXd w = k_inv - m.alpha() * m.alpha().transpose();

  grad(0) = 0.5 * (w.cwiseProduct(kf)).sum();
  for (Eigen::Index c = 0; c < d; ++c) {
    const double l2 = hyper.length_scales(c) * hyper.length_scales(c);
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = z(i, c) - z(j, c);
        s += w(i, j) * kf(i, j) * diff * diff / l2;
      }
    }
    grad(1 + c) = 0.5 * s;
  }
  grad(d + 1) = 0.5 * hyper.noise_variance * w.trace();
  return grad;
}

}  // namespace greyforce
