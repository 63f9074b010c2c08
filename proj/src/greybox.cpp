#include "greyforce/greybox.hpp"

#include "greyforce/errors.hpp"

namespace greyforce {

std::string architecture_name(Architecture a) {
  return a == Architecture::residual ? "residual" : "input-augmentation";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "residual") return Architecture::residual;
  if (name == "input-augmentation" || name == "augmented") return Architecture::input_augmentation;
  throw ConfigError("unknown grey-box architecture \"" + name + "\"");
}

NarxData greybox_data(const MorisonPosterior& whitebox, const TimeSeriesDataset& ds, Architecture arch) {
  NarxData d = NarxData::from_dataset(ds);
  if (ds.empty()) {
    if (arch == Architecture::input_augmentation) {
      d.exogenous_names.push_back("Fmor");
      d.exogenous.emplace_back();
    } else {
      d.target_name = "r";
    }
    return d;
  }
  const Eigen::VectorXd fmor = whitebox_mean_force(whitebox, ds.velocity(), ds.acceleration());
  if (arch == Architecture::input_augmentation) {
    d.exogenous_names.push_back("Fmor");
    d.exogenous.emplace_back(fmor.data(), fmor.data() + fmor.size());
  } else {
    d.target_name = "r";
    for (std::size_t i = 0; i < d.target.size(); ++i) d.target[i] -= fmor(static_cast<Eigen::Index>(i));
  }
  return d;
}

GreyBoxModel train_residual(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                            const MorisonPosterior& whitebox, const LagSpec& spec, GPNARXTrainingConfig cfg,
                            GPNARXTrainingReport* report) {
  whitebox.validate();
  cfg.fit.center_targets = false;
  cfg.fit.empty_prior_mean = 0.0;
  GreyBoxModel m;
  m.whitebox = whitebox;
  m.architecture = Architecture::residual;
  m.blackbox = train_gpnarx(greybox_data(whitebox, train, Architecture::residual),
                            greybox_data(whitebox, validation, Architecture::residual), spec, cfg, report,
                            ExogenousTransform::residual_target);
  return m;
}

GreyBoxModel train_augmented(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                             const MorisonPosterior& whitebox, const LagSpec& spec,
                             const GPNARXTrainingConfig& cfg, GPNARXTrainingReport* report) {
  whitebox.validate();
  GreyBoxModel m;
  m.whitebox = whitebox;
  m.architecture = Architecture::input_augmentation;
  m.include_whitebox_uncertainty = false;
  m.blackbox = train_gpnarx(greybox_data(whitebox, train, Architecture::input_augmentation),
                            greybox_data(whitebox, validation, Architecture::input_augmentation), spec, cfg,
                            report, ExogenousTransform::morison_augmented);
  return m;
}

GreyBoxPrediction predict_greybox(const GreyBoxModel& model, const TimeSeriesDataset& ds, PredictionMode mode,
                                  std::size_t n_samples, std::uint64_t seed) {
  const NarxData data = greybox_data(model.whitebox, ds, model.architecture);
  GreyBoxPrediction out;
  switch (mode) {
    case PredictionMode::osa: out.series = osa_predict(model.blackbox, data); break;
    case PredictionMode::mpo: out.series = mpo_predict(model.blackbox, data); break;
    case PredictionMode::mc_mpo:
      out.mc = mc_mpo_predict(model.blackbox, data, n_samples, seed);
      out.series = out.mc->summary();
      break;
  }
  if (model.architecture == Architecture::input_augmentation) return out;

  const PredictiveSeries wb = predict_whitebox(model.whitebox, ds, false);
  const auto first = static_cast<Eigen::Index>(out.series.first_index);
  const auto steps = static_cast<Eigen::Index>(out.series.size());
  const auto wb_mean = wb.mean.segment(first, steps);
  out.series.mean += wb_mean;
  if (model.include_whitebox_uncertainty) out.series.variance += wb.variance.segment(first, steps);
  if (out.mc) {
    out.mc->paths.rowwise() += wb_mean.transpose();
    out.mc->mean += wb_mean;
    out.mc->variance = out.series.variance;
  }
  return out;
}

}  // namespace greyforce
