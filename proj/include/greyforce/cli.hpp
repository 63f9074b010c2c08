#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "greyforce/arx.hpp"
#include "greyforce/coverage.hpp"
#include "greyforce/dataset.hpp"
#include "greyforce/gpnarx.hpp"
#include "greyforce/serialize.hpp"
#include "greyforce/whitebox.hpp"

namespace greyforce::cli {

inline const std::vector<std::string> kModelNames{
    "whitebox",       "static-gp",            "static-grey-residual",  "static-grey-augmented",
    "gpnarx",         "gpnarx-grey-residual", "gpnarx-grey-augmented"};

// Any field left unset keeps the per-class default.
struct QPSOOverrides {
  std::optional<std::size_t> swarm_size;
  std::optional<double> stability_tol;
  std::optional<std::size_t> max_iters;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> n_repeat_runs;
  std::optional<double> contraction_start;
  std::optional<double> contraction_end;
};

struct OptimizerSettings {
  double search_lo = -6.0;
  double search_hi = 6.0;
  TrainingObjective objective = TrainingObjective::automatic;
  QPSOOverrides static_gp;
  QPSOOverrides gp_narx;
  double stability_cost_tol = 1.0;
  double stability_position_tol = std::numeric_limits<double>::infinity();  // positions unchecked by default
  bool fail_on_instability = true;
};

struct WhiteboxSettings {
  PhysicalConfig physical;
  double relative_sd = 0.5;
  double shape = 2.0;
  double scale = 1.0;
  std::size_t n_draws = 10000;
  std::size_t burn_in = 1000;
};

struct LagSearchSettings {
  int max_exogenous = 20;
  int max_autoregressive = 20;
  LagMetric metric = LagMetric::bic_mpo;
  bool use_for_training = false;
};

struct CoverageSettings {
  std::vector<double> targets;  // default 0, 5, ..., 80
  double tolerance = 2.5;
  CoverageOptions geometry;
  std::vector<std::string> models{"whitebox", "gpnarx", "gpnarx-grey-residual", "gpnarx-grey-augmented"};
  std::vector<WhiteboxMode> whitebox_modes{WhiteboxMode::refit_per_subset, WhiteboxMode::fixed_external};
  std::optional<std::size_t> mc_samples;
};

struct RunConfig {
  std::variant<std::filesystem::path, SyntheticConfig> data;
  SplitSizes splits{1000, 1000, 1000};
  LagSpec lags{1, 3};
  LagSearchSettings lag_search;
  WhiteboxSettings whitebox;
  std::vector<std::string> models = kModelNames;
  std::vector<PredictionMode> modes{PredictionMode::osa, PredictionMode::mpo, PredictionMode::mc_mpo};
  OptimizerSettings optimizer;
  std::size_t mc_samples = 1000;
  std::size_t posterior_paths = 0;  // sampled paths written next to MC-MPO posteriors
  CoverageSettings coverage;
  std::size_t spectra_windows = 16;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "out";
  Json source;  // the parsed document, echoed into manifests
};

// Relative csv paths resolve against base_dir. Throws ConfigError on any
// unknown key, wrong type or out-of-range value.
RunConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

void cmd_synth(const RunConfig& cfg);
void cmd_lagsearch(const RunConfig& cfg);
// Returns false when a QPSO stability check failed and fail_on_instability is set.
bool cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_coverage(const RunConfig& cfg);
void cmd_spectra(const RunConfig& cfg);

// Exit codes: 0 success, 1 numerical or optimizer failure, 2 configuration or I/O error.
// args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace greyforce::cli
