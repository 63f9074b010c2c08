#include "greyforce/arx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "greyforce/errors.hpp"

namespace greyforce {

namespace {

struct ArxChannels {
  std::vector<double> drag;  // U|U|
  std::vector<NamedSeries> named;
};

ArxChannels exogenous_channels(const TimeSeriesDataset& ds, bool include) {
  ArxChannels ch;
  if (!include) return ch;
  ch.drag.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) ch.drag[i] = ds.velocity()[i] * std::abs(ds.velocity()[i]);
  ch.named = {NamedSeries{"U|U|", ch.drag}, NamedSeries{"Udot", ds.acceleration()}};
  return ch;
}

// lagged_design orders channels major ([U|U| lags..., Udot lags...]); alpha is
// stored lag-major ([U|U|_t, Udot_t, U|U|_{t-1}, ...]).
Eigen::Index design_column(std::size_t lag, std::size_t channel, std::size_t lu) {
  return static_cast<Eigen::Index>(channel * (lu + 1) + lag);
}

}  // namespace

ARXModel fit_arx(const TimeSeriesDataset& ds, const LagSpec& spec, const ARXOptions& options) {
  spec.validate();
  const auto ch = exogenous_channels(ds, options.exogenous);
  const DesignMatrix d = lagged_design(ch.named, NamedSeries{"F", ds.force()}, spec);
  const Eigen::Index rows = d.inputs.rows();
  const Eigen::Index cols = d.inputs.cols();
  if (cols == 0) throw SingularityError("ARX model has no regressors");
  if (rows < cols) {
    throw SingularityError("ARX design has " + std::to_string(rows) + " rows for " +
                           std::to_string(cols) + " parameters");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.inputs);
  if (qr.rank() < cols) throw SingularityError("ARX design is rank deficient");
  const Eigen::VectorXd coef = qr.solve(d.targets);

  ARXModel m;
  m.spec = spec;
  m.n_effective = static_cast<std::size_t>(rows);
  const auto lu = static_cast<std::size_t>(spec.exogenous);
  if (options.exogenous) {
    m.exogenous.resize(static_cast<Eigen::Index>(2 * (lu + 1)));
    for (std::size_t k = 0; k <= lu; ++k) {
      m.exogenous(static_cast<Eigen::Index>(2 * k)) = coef(design_column(k, 0, lu));
      m.exogenous(static_cast<Eigen::Index>(2 * k + 1)) = coef(design_column(k, 1, lu));
    }
  }
  m.autoregressive = coef.tail(spec.autoregressive);
  m.residual_variance = (d.targets - d.inputs * coef).squaredNorm() / static_cast<double>(rows);
  return m;
}

PredictiveSeries predict_arx(const ARXModel& model, const TimeSeriesDataset& ds, PredictionMode mode) {
  const auto lag = static_cast<std::size_t>(model.spec.max_lag());
  const std::size_t n = ds.size();
  if (n <= lag) throw BoundsError("series too short for the model's lags");
  if (mode == PredictionMode::mc_mpo) throw ConfigError("ARX supports OSA and MPO prediction only");
  const auto lu = static_cast<std::size_t>(model.spec.exogenous);
  const auto ly = static_cast<std::size_t>(model.spec.autoregressive);
  const auto& u = ds.velocity();
  const auto& a = ds.acceleration();
  const auto& y = ds.force();

  // Output history seen by the model: measured for OSA, fed back for MPO.
  std::vector<double> fed(y.begin(), y.end());
  PredictiveSeries out;
  out.first_index = lag;
  out.mean.resize(static_cast<Eigen::Index>(n - lag));
  out.variance = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n - lag), model.residual_variance);
  for (std::size_t t = lag; t < n; ++t) {
    double v = 0.0;
    if (model.has_exogenous()) {
      for (std::size_t k = 0; k <= lu; ++k) {
        v += model.exogenous(static_cast<Eigen::Index>(2 * k)) * u[t - k] * std::abs(u[t - k]);
        v += model.exogenous(static_cast<Eigen::Index>(2 * k + 1)) * a[t - k];
      }
    }
    const std::vector<double>& hist = mode == PredictionMode::osa ? y : fed;
    for (std::size_t i = 1; i <= ly; ++i) {
      v += model.autoregressive(static_cast<Eigen::Index>(i - 1)) * hist[t - i];
    }
    out.mean(static_cast<Eigen::Index>(t - lag)) = v;
    if (mode == PredictionMode::mpo) fed[t] = v;
  }
  return out;
}

double aic(double k, double n, double log_likelihood) {
  (void)n;
  return 2.0 * k - 2.0 * log_likelihood;
}

double aicc(double k, double n, double log_likelihood) {
  if (!(n - k - 1.0 > 0.0)) {
    throw DomainError("AICc requires n > k + 1 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  return aic(k, n, log_likelihood) + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

double bic(double k, double n, double log_likelihood) {
  return k * std::log(n) - 2.0 * log_likelihood;
}

double gaussian_log_likelihood(std::span<const double> residuals, double variance) {
  if (!(variance > 0.0)) throw DomainError("log-likelihood variance must be positive");
  double ssr = 0.0;
  for (double r : residuals) ssr += r * r;
  const auto n = static_cast<double>(residuals.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * variance) - 0.5 * ssr / variance;
}

std::string metric_name(LagMetric m) {
  switch (m) {
    case LagMetric::aicc_osa: return "AICc_OSA";
    case LagMetric::aicc_mpo: return "AICc_MPO";
    case LagMetric::bic_osa: return "BIC_OSA";
    case LagMetric::bic_mpo: return "BIC_MPO";
  }
  return "?";
}

std::vector<LagSpec> LagSearchResult::supported(LagMetric m, double threshold) const {
  std::vector<LagSpec> out;
  const auto k = static_cast<std::size_t>(m);
  for (const auto& c : cells) {
    if (c.ok && c.delta[k] <= threshold) out.push_back(c.lags);
  }
  return out;
}

LagSearchResult lag_search(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                           int max_lu, int max_ly) {
  if (max_lu < 0 || max_ly < 1) throw ConfigError("lag search needs max_lu >= 0 and max_ly >= 1");
  const auto global_lag = static_cast<std::size_t>(std::max(max_lu, max_ly));
  if (validation.size() <= global_lag + 1) {
    throw BoundsError("validation set too short for the lag search bounds");
  }

  LagSearchResult result;
  result.n_scored = validation.size() - global_lag;
  for (int lu = 0; lu <= max_lu; ++lu) {
    for (int ly = 1; ly <= max_ly; ++ly) {
      LagCell cell;
      cell.lags = LagSpec{lu, ly};
      result.cells.push_back(cell);
    }
  }

  const auto n_cells = static_cast<std::ptrdiff_t>(result.cells.size());
  const auto& y = validation.force();
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
    LagCell& cell = result.cells[static_cast<std::size_t>(c)];
    try {
      const ARXModel m = fit_arx(train, cell.lags);
      const double k = static_cast<double>(m.parameter_count());
      const double n = static_cast<double>(result.n_scored);
      const double variance = std::max(m.residual_variance, std::numeric_limits<double>::min());
      const std::array<PredictionMode, 2> modes{PredictionMode::osa, PredictionMode::mpo};
      for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        const PredictiveSeries p = predict_arx(m, validation, modes[mi]);
        std::vector<double> residuals(result.n_scored);
        for (std::size_t t = global_lag; t < validation.size(); ++t) {
          residuals[t - global_lag] = y[t] - p.mean(static_cast<Eigen::Index>(t - p.first_index));
        }
        const double ll = gaussian_log_likelihood(residuals, variance);
        cell.score[mi == 0 ? 0 : 1] = aicc(k, n, ll);
        cell.score[mi == 0 ? 2 : 3] = bic(k, n, ll);
      }
      cell.ok = std::all_of(cell.score.begin(), cell.score.end(), [](double s) { return std::isfinite(s); });
      if (!cell.ok) cell.error = "non-finite criterion";
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  }

  for (std::size_t mi = 0; mi < kLagMetrics.size(); ++mi) {
    const LagCell* best = nullptr;
    for (const auto& cell : result.cells) {
      if (!cell.ok) continue;
      const auto order = [](const LagSpec& s) { return std::pair{s.exogenous + s.autoregressive, s.autoregressive}; };
      if (best == nullptr || cell.score[mi] < best->score[mi] ||
          (cell.score[mi] == best->score[mi] && order(cell.lags) < order(best->lags))) {
        best = &cell;
      }
    }
    if (best == nullptr) throw NumericalError("every lag-search cell failed");
    result.best[mi] = best->lags;
    const double minimum = best->score[mi];
    for (auto& cell : result.cells) {
      cell.delta[mi] = cell.ok ? cell.score[mi] - minimum : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return result;
}

void write_lag_heatmap_csv(const std::filesystem::path& path, const LagSearchResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "l_u,l_y,metric,delta\n";
  for (LagMetric m : kLagMetrics) {
    const auto mi = static_cast<std::size_t>(m);
    for (const auto& c : result.cells) {
      out << c.lags.exogenous << ',' << c.lags.autoregressive << ',' << metric_name(m) << ',';
      if (c.ok) out << format_double(c.delta[mi]);
      out << '\n';
    }
  }
}

}  // namespace greyforce
