#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "greyforce/dataset.hpp"
#include "greyforce/gpnarx.hpp"
#include "greyforce/predictive.hpp"
#include "greyforce/whitebox.hpp"

namespace greyforce {

enum class Architecture { residual, input_augmentation };

std::string architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

// White-box posterior fixed at composition time plus a black-box trained on
// either the white-box residual or on inputs augmented with F_mor.
// A static black-box is a GP-NARX with spec.autoregressive == 0.
struct GreyBoxModel {
  MorisonPosterior whitebox;
  GPNARXModel blackbox;
  Architecture architecture = Architecture::residual;
  // Residual architecture only: adds the white-box parameter variance to the
  // black-box variance (components treated as independent).
  bool include_whitebox_uncertainty = true;

  const LagSpec& spec() const noexcept { return blackbox.spec; }
};

// Black-box data seen by a grey-box model: [U, Udot] -> F - F_mor for the
// residual architecture, [U, Udot, F_mor] -> F for input augmentation.
NarxData greybox_data(const MorisonPosterior& whitebox, const TimeSeriesDataset& ds, Architecture arch);

// Centering is forced off so an uninformed black-box reverts to a zero residual.
GreyBoxModel train_residual(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                            const MorisonPosterior& whitebox, const LagSpec& spec, GPNARXTrainingConfig cfg,
                            GPNARXTrainingReport* report = nullptr);

GreyBoxModel train_augmented(const TimeSeriesDataset& train, const TimeSeriesDataset& validation,
                             const MorisonPosterior& whitebox, const LagSpec& spec,
                             const GPNARXTrainingConfig& cfg, GPNARXTrainingReport* report = nullptr);

struct GreyBoxPrediction {
  PredictiveSeries series;                // force-space mean and variance
  std::optional<MCPredictiveSeries> mc;   // force-space paths, MC-MPO only
};

GreyBoxPrediction predict_greybox(const GreyBoxModel& model, const TimeSeriesDataset& ds, PredictionMode mode,
                                  std::size_t n_samples = 0, std::uint64_t seed = 0);

}  // namespace greyforce
