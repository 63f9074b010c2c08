#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "greyforce/dataset.hpp"
#include "greyforce/gpnarx.hpp"
#include "greyforce/greybox.hpp"
#include "greyforce/predictive.hpp"
#include "greyforce/qpso.hpp"
#include "greyforce/whitebox.hpp"

namespace greyforce {

using Json = nlohmann::ordered_json;

Json to_json(const LagSpec& spec);
LagSpec lag_spec_from_json(const Json& j);

Json to_json(const MorisonPosterior& post);
MorisonPosterior posterior_from_json(const Json& j);

// Stores training data, hyperparameters and options; loading refits, which
// reproduces the factorization exactly.
Json to_json(const GPModel& model);
GPModel gp_from_json(const Json& j);

Json to_json(const GPNARXModel& model);
GPNARXModel gpnarx_from_json(const Json& j);

Json to_json(const GreyBoxModel& model);
GreyBoxModel greybox_from_json(const Json& j);

Json to_json(const QPSOConfig& cfg);
Json to_json(const StabilityVerdict& v);
Json to_json(const GPNARXTrainingReport& report);

// Pretty-printed with a trailing newline.
void save_json(const std::filesystem::path& path, const Json& j);
Json load_json(const std::filesystem::path& path);

// Columns t, mean, variance, then path_0..path_{k-1} for the first k paths.
void write_predictive_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds,
                          const PredictiveSeries& pred, const MCPredictiveSeries* mc = nullptr,
                          std::size_t max_paths = 0);

// Columns run, iteration, best_cost.
void write_cost_trace_csv(const std::filesystem::path& path, const OptimResult& result);

}  // namespace greyforce
