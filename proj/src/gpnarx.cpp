#include "greyforce/gpnarx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "greyforce/errors.hpp"
#include "greyforce/metrics.hpp"
#include "greyforce/rng.hpp"

namespace greyforce {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::size_t kPathBlock = 64;

void check_model_data(const GPNARXModel& model, const NarxData& data) {
  data.validate();
  if (data.exogenous.size() != model.n_exogenous) {
    throw ShapeError("model expects " + std::to_string(model.n_exogenous) + " exogenous channels, data has " +
                     std::to_string(data.exogenous.size()));
  }
  if (data.size() <= static_cast<std::size_t>(model.spec.max_lag())) {
    throw BoundsError("series of length " + std::to_string(data.size()) + " is too short for max lag " +
                      std::to_string(model.spec.max_lag()));
  }
}

// Free-run recursion for a block of paths. history holds one target series
// per row; columns >= max_lag are overwritten with the fed-back values.
// With rngs empty the predictive mean is fed back; otherwise a Gaussian draw.
void run_recursion(const GPNARXModel& model, const NarxData& data, bool include_noise,
                   Eigen::MatrixXd& history, std::vector<Rng>* rngs, Eigen::MatrixXd* step_mean,
                   Eigen::MatrixXd* step_var) {
  const auto lag = static_cast<std::size_t>(model.spec.max_lag());
  const auto lu = static_cast<std::size_t>(model.spec.exogenous);
  const auto ly = static_cast<std::size_t>(model.spec.autoregressive);
  const std::size_t n = data.size();
  const Eigen::Index paths = history.rows();
  const auto dim = static_cast<Eigen::Index>(model.input_dim());

  Eigen::MatrixXd x(paths, dim);
  Eigen::VectorXd mean, var;
  for (std::size_t t = lag; t < n; ++t) {
    Eigen::Index c = 0;
    for (const auto& ch : data.exogenous) {
      for (std::size_t k = 0; k <= lu; ++k) x.col(c++).setConstant(ch[t - k]);
    }
    for (std::size_t k = 1; k <= ly; ++k) x.col(c++) = history.col(static_cast<Eigen::Index>(t - k));
    model.gp.predict(x, include_noise, mean, var);
    const auto col = static_cast<Eigen::Index>(t);
    if (rngs == nullptr) {
      history.col(col) = mean;
    } else {
      for (Eigen::Index p = 0; p < paths; ++p) {
        // fresh distribution: no cached deviate may leak between paths
        std::normal_distribution<double> normal(0.0, 1.0);
        history(p, col) = mean(p) + std::sqrt(var(p)) * normal((*rngs)[static_cast<std::size_t>(p)]);
      }
    }
    if (step_mean != nullptr) step_mean->col(static_cast<Eigen::Index>(t - lag)) = mean;
    if (step_var != nullptr) step_var->col(static_cast<Eigen::Index>(t - lag)) = var;
  }
}

Eigen::MatrixXd warm_history(const NarxData& data, Eigen::Index paths) {
  Eigen::MatrixXd h(paths, static_cast<Eigen::Index>(data.size()));
  for (std::size_t t = 0; t < data.size(); ++t) h.col(static_cast<Eigen::Index>(t)).setConstant(data.target[t]);
  return h;
}

double target_scale_of(const Eigen::VectorXd& y, bool centered) {
  if (y.size() == 0) return 1.0;
  const double offset = centered ? y.mean() : 0.0;
  const double s = (y.array() - offset).square().mean();
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

}  // namespace

std::string transform_name(ExogenousTransform t) {
  switch (t) {
    case ExogenousTransform::raw: return "raw";
    case ExogenousTransform::morison_augmented: return "morison-augmented";
    case ExogenousTransform::residual_target: return "residual-target";
  }
  return "?";
}

ExogenousTransform parse_transform(const std::string& name) {
  if (name == "raw") return ExogenousTransform::raw;
  if (name == "morison-augmented") return ExogenousTransform::morison_augmented;
  if (name == "residual-target") return ExogenousTransform::residual_target;
  throw ConfigError("unknown exogenous transform \"" + name + "\"");
}

std::string objective_name(TrainingObjective o) {
  switch (o) {
    case TrainingObjective::automatic: return "automatic";
    case TrainingObjective::mpo_nlpl: return "mpo_nlpl";
    case TrainingObjective::nlml: return "nlml";
  }
  return "?";
}

void NarxData::validate() const {
  if (exogenous.size() != exogenous_names.size()) throw ShapeError("exogenous names/channels mismatch");
  for (const auto& ch : exogenous) {
    if (ch.size() != target.size()) throw ShapeError("exogenous channel length differs from target");
  }
}

NarxData NarxData::from_dataset(const TimeSeriesDataset& ds) {
  NarxData d;
  d.exogenous_names = {"U", "Udot"};
  d.exogenous = {ds.velocity(), ds.acceleration()};
  d.target_name = "F";
  d.target = ds.force();
  return d;
}

DesignMatrix narx_design(const NarxData& data, const LagSpec& spec) {
  data.validate();
  std::vector<NamedSeries> exog;
  for (std::size_t i = 0; i < data.exogenous.size(); ++i) {
    exog.push_back(NamedSeries{data.exogenous_names[i], data.exogenous[i]});
  }
  return lagged_design(exog, NamedSeries{data.target_name, data.target}, spec);
}

PredictiveSeries osa_predict(const GPNARXModel& model, const NarxData& data, bool include_noise) {
  check_model_data(model, data);
  const DesignMatrix d = narx_design(data, model.spec);
  PredictiveSeries out = gp_predict(model.gp, d.inputs, include_noise);
  out.first_index = d.first_valid_index;
  return out;
}

PredictiveSeries mpo_predict(const GPNARXModel& model, const NarxData& data, bool include_noise) {
  check_model_data(model, data);
  const auto lag = static_cast<std::size_t>(model.spec.max_lag());
  const auto steps = static_cast<Eigen::Index>(data.size() - lag);
  Eigen::MatrixXd history = warm_history(data, 1);
  Eigen::MatrixXd mean(1, steps), var(1, steps);
  run_recursion(model, data, include_noise, history, nullptr, &mean, &var);
  return PredictiveSeries{mean.row(0).transpose(), var.row(0).transpose(), lag};
}

MCPredictiveSeries mc_mpo_predict(const GPNARXModel& model, const NarxData& data, std::size_t n_samples,
                                  std::uint64_t seed, bool include_noise) {
  if (n_samples < 1) throw ConfigError("MC-MPO needs at least one sample");
  check_model_data(model, data);
  const auto lag = static_cast<std::size_t>(model.spec.max_lag());
  const auto steps = static_cast<Eigen::Index>(data.size() - lag);

  MCPredictiveSeries out;
  out.first_index = lag;
  out.paths.resize(static_cast<Eigen::Index>(n_samples), steps);
  const auto n_blocks = static_cast<std::ptrdiff_t>((n_samples + kPathBlock - 1) / kPathBlock);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < n_blocks; ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * kPathBlock;
    const std::size_t count = std::min(kPathBlock, n_samples - first);
    std::vector<Rng> rngs;
    rngs.reserve(count);
    for (std::size_t p = 0; p < count; ++p) rngs.emplace_back(derive_seed(seed, first + p));
    Eigen::MatrixXd history = warm_history(data, static_cast<Eigen::Index>(count));
    run_recursion(model, data, include_noise, history, &rngs, nullptr, nullptr);
    out.paths.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)) =
        history.rightCols(steps);
  }
  summarize_paths(out);
  if (model.gp.size() == 0) {
    // Without training data every step is an independent draw from the prior,
    // so its moments are known exactly.
    Eigen::VectorXd mean, var;
    model.gp.predict(Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(model.input_dim())), include_noise, mean, var);
    out.mean.setConstant(mean(0));
    out.variance.setConstant(var(0));
  }
  return out;
}

PredictiveSeries osa_predict(const GPNARXModel& model, const TimeSeriesDataset& ds) {
  return osa_predict(model, NarxData::from_dataset(ds));
}

PredictiveSeries mpo_predict(const GPNARXModel& model, const TimeSeriesDataset& ds) {
  return mpo_predict(model, NarxData::from_dataset(ds));
}

MCPredictiveSeries mc_mpo_predict(const GPNARXModel& model, const TimeSeriesDataset& ds,
                                  std::size_t n_samples, std::uint64_t seed) {
  return mc_mpo_predict(model, NarxData::from_dataset(ds), n_samples, seed);
}

double negative_log_predictive_likelihood(std::span<const double> y, const PredictiveSeries& pred) {
  if (y.size() != pred.first_index + pred.size()) throw ShapeError("NLPL target/prediction alignment");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double v = pred.variance(k);
    if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = y[pred.first_index + i] - pred.mean(k);
    total += 0.5 * (r * r / v + std::log(v));
  }
  return total + 0.5 * static_cast<double>(pred.size()) * kLog2Pi;
}

double mpo_nlpl(const GPHyperparams& hyper, const NarxData& train, const NarxData& validation,
                const LagSpec& spec, const GPFitOptions& fit) {
  const DesignMatrix d = narx_design(train, spec);
  GPNARXModel model;
  model.gp = gp_fit(d.inputs, d.targets, hyper, fit);
  model.spec = spec;
  model.n_exogenous = train.exogenous.size();
  const PredictiveSeries pred = mpo_predict(model, validation, true);
  return negative_log_predictive_likelihood(validation.target, pred);
}

double mpo_nlpl(const GPHyperparams& hyper, const TimeSeriesDataset& train,
                const TimeSeriesDataset& validation, const LagSpec& spec) {
  return mpo_nlpl(hyper, NarxData::from_dataset(train), NarxData::from_dataset(validation), spec);
}

GPHyperparams hyper_from_search(const Eigen::VectorXd& position, double target_scale) {
  GPHyperparams h = GPHyperparams::from_log(position);
  h.signal_variance *= target_scale;
  h.noise_variance *= target_scale;
  return h;
}

GPNARXModel train_gpnarx(const NarxData& train, const NarxData& validation, const LagSpec& spec,
                         const GPNARXTrainingConfig& cfg, GPNARXTrainingReport* report,
                         ExogenousTransform transform) {
  spec.validate();
  train.validate();
  validation.validate();
  if (validation.exogenous.size() != train.exogenous.size()) {
    throw ShapeError("training and validation sets have different exogenous channels");
  }
  GPNARXModel model;
  model.spec = spec;
  model.transform = transform;
  model.n_exogenous = train.exogenous.size();
  const auto dim = model.input_dim();

  GPNARXTrainingReport rep;
  rep.n_train_rows = effective_rows(train.size(), spec);
  rep.n_validation_rows = effective_rows(validation.size(), spec);

  if (rep.n_train_rows == 0) {
    GPHyperparams h;
    h.signal_variance = cfg.zero_data_signal_variance;
    h.noise_variance = cfg.zero_data_noise_variance;
    h.length_scales = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim));
    model.gp = gp_fit(Eigen::MatrixXd(0, static_cast<Eigen::Index>(dim)), Eigen::VectorXd(0), h, cfg.fit);
    rep.hyper = h;
    rep.objective = cfg.objective;
    if (report != nullptr) *report = std::move(rep);
    return model;
  }

  const DesignMatrix d = narx_design(train, spec);
  TrainingObjective objective = cfg.objective;
  if (objective == TrainingObjective::automatic) {
    objective = spec.autoregressive > 0 ? TrainingObjective::mpo_nlpl : TrainingObjective::nlml;
  }
  if (objective == TrainingObjective::mpo_nlpl && rep.n_validation_rows == 0) objective = TrainingObjective::nlml;
  rep.objective = objective;
  rep.target_scale = target_scale_of(d.targets, cfg.fit.center_targets);

  QPSOConfig qcfg = cfg.qpso.value_or(spec.autoregressive > 0
                                          ? QPSOConfig::for_gp_narx(dim + 2, cfg.search_lo, cfg.search_hi)
                                          : QPSOConfig::for_static_gp(dim + 2, cfg.search_lo, cfg.search_hi));
  if (cfg.seed) qcfg.seed = *cfg.seed;
  if (qcfg.bounds.empty()) qcfg.bounds.assign(dim + 2, {cfg.search_lo, cfg.search_hi});
  if (qcfg.bounds.size() != dim + 2) throw ConfigError("QPSO bounds must cover d + 2 log-hyperparameters");
  rep.qpso = qcfg;

  const double scale = rep.target_scale;
  CostFunction cost;
  if (objective == TrainingObjective::nlml) {
    cost = [&](const Eigen::VectorXd& p) { return nlml(hyper_from_search(p, scale), d.inputs, d.targets, cfg.fit); };
  } else {
    cost = [&](const Eigen::VectorXd& p) {
      GPNARXModel trial;
      trial.gp = gp_fit(d.inputs, d.targets, hyper_from_search(p, scale), cfg.fit);
      trial.spec = spec;
      trial.n_exogenous = model.n_exogenous;
      return negative_log_predictive_likelihood(validation.target, mpo_predict(trial, validation, true));
    };
  }

  OptimResult optim;
  try {
    optim = qpso_minimize(cost, qcfg);
  } catch (const InfeasibleError&) {
    throw NumericalError("GP-NARX hyperparameter optimization found no finite " + objective_name(objective) +
                         " cost; widen the search bounds or check the data");
  }
  rep.stability = optim.runs.size() >= 2
                      ? stability_report(optim, cfg.stability_position_tol, cfg.stability_cost_tol)
                      : StabilityVerdict{};
  rep.hyper = hyper_from_search(optim.best_position, scale);
  model.gp = gp_fit(d.inputs, d.targets, rep.hyper, cfg.fit);
  rep.optim = std::move(optim);
  if (report != nullptr) *report = std::move(rep);
  return model;
}

GPNARXModel train_gpnarx(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                         const LagSpec& spec, const GPNARXTrainingConfig& cfg, GPNARXTrainingReport* report) {
  return train_gpnarx(NarxData::from_dataset(train), NarxData::from_dataset(validation), spec, cfg, report,
                      ExogenousTransform::raw);
}

MCConvergence mc_convergence(const GPNARXModel& model, const NarxData& data, std::size_t start_samples,
                             std::size_t max_samples, std::uint64_t seed, double nmse_tol, double std_tol) {
  if (start_samples < 1 || max_samples < start_samples) throw ConfigError("invalid MC sample range");
  MCConvergence result;
  const auto lag = static_cast<std::size_t>(model.spec.max_lag());
  const std::span<const double> truth(data.target.data() + lag, data.size() - lag);
  for (std::size_t n = start_samples; n <= max_samples; n *= 2) {
    MCPredictiveSeries mc = mc_mpo_predict(model, data, n, seed);
    MCConvergenceStep step;
    step.n_samples = n;
    step.nmse = nmse(truth, as_span(mc.mean));
    step.mean_std = mc.variance.array().sqrt().mean();
    if (!result.steps.empty()) {
      const auto& prev = result.steps.back();
      if (std::abs(step.nmse - prev.nmse) < nmse_tol && std::abs(step.mean_std - prev.mean_std) < std_tol) {
        result.converged = true;
      }
    }
    result.steps.push_back(step);
    result.final = std::move(mc);
    if (result.converged) break;
  }
  return result;
}

}  // namespace greyforce
