#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greyforce/dataset.hpp"
#include "greyforce/gpnarx.hpp"
#include "greyforce/predictive.hpp"
#include "greyforce/whitebox.hpp"

namespace greyforce {

// Star polygon about `center`: vertex k sits at the centre angle of bin k.
struct RadialBoundary {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::VectorXd angles;  // ascending in [0, 2 pi)
  Eigen::VectorXd radii;

  std::size_t n_bins() const noexcept { return static_cast<std::size_t>(radii.size()); }
  Eigen::Vector2d vertex(std::size_t k) const;
  // Radius of the polygon edge along direction theta.
  double radius_at(double theta) const;
  bool contains(const Eigen::Vector2d& p) const;
  double area() const;
};

// (U, Udot) pairs, one row per sample.
Eigen::MatrixX2d input_points(const TimeSeriesDataset& ds);

// Radius per angular bin is the largest distance of a member point. Bin k is
// then raised to min(largest radius within fill_window bins on its left,
// largest within fill_window on its right), which closes gaps between
// populated bins without leaking past the edge of the support.
// fill_window 0 selects n_bins / 36.
RadialBoundary radial_boundary(const Eigen::MatrixX2d& points, std::size_t n_bins = 360,
                               std::size_t fill_window = 0);

struct CoverageOptions {
  std::size_t n_bins = 360;
  std::size_t grid_resolution = 512;
  std::size_t fill_window = 0;
};

struct CoverageResult {
  double coverage_percent = 0.0;
  double area_test = 0.0;
  double area_overlap = 0.0;
};

// Areas are counted on a grid_resolution^2 raster spanning the test
// polygon's bounding box.
CoverageResult compute_coverage(const RadialBoundary& train, const RadialBoundary& validation,
                                const RadialBoundary& test, std::size_t grid_resolution = 512);
CoverageResult compute_coverage(const Eigen::MatrixX2d& train, const Eigen::MatrixX2d& validation,
                                const Eigen::MatrixX2d& test, const CoverageOptions& options = {});

struct SubsampleResult {
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  double achieved_percent = 0.0;
  bool reached = false;  // |achieved - target| <= tolerance
};

// Equal-proportion prefixes of train/validation. Fewer than 3 points, or
// points only at the centre, count as 0% coverage.
SubsampleResult subsample_for_coverage(const Eigen::MatrixX2d& full_train, const Eigen::MatrixX2d& full_validation,
                                       const Eigen::MatrixX2d& test, double target_percent, double tolerance,
                                       const CoverageOptions& options = {});

enum class WhiteboxMode { refit_per_subset, fixed_external };

std::string whitebox_mode_name(WhiteboxMode m);

struct SweepContext {
  const TimeSeriesDataset* train = nullptr;       // subset
  const TimeSeriesDataset* validation = nullptr;  // subset
  const TimeSeriesDataset* test = nullptr;
  const MorisonPosterior* whitebox = nullptr;
  double prior_mean = 0.0;      // force mean of the full training split
  double prior_variance = 1.0;  // force variance of the full training split
  std::uint64_t seed = 0;
};

struct SweepModel {
  std::string name;
  // Returns test-set predictions; first_index must not exceed the sweep's eval_start.
  std::function<PredictiveSeries(const SweepContext&)> build;
};

struct SweepConfig {
  std::vector<double> targets;
  double tolerance = 2.5;
  CoverageOptions coverage;
  WhiteboxMode whitebox_mode = WhiteboxMode::refit_per_subset;
  // Required in fixed_external mode.
  std::optional<MorisonPosterior> external_whitebox;
  NIGPrior prior;
  GibbsOptions gibbs;
  std::size_t eval_start = 0;  // first scored test index, shared by all models
  std::uint64_t seed = 0;
};

struct SweepRow {
  double target_percent = 0.0;
  double coverage_percent = 0.0;
  bool reached = false;
  std::string model_name;
  double nmse = 0.0;
  double msll = 0.0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  bool ok = true;
  std::string error;
};

std::vector<SweepRow> coverage_sweep(const Splits& splits, const std::vector<SweepModel>& models,
                                     const SweepConfig& cfg);

SweepModel whitebox_sweep_model();
// Pure GP-NARX (static when spec.autoregressive == 0). MC-MPO with n_samples
// paths for dynamic models, deterministic prediction for static ones.
SweepModel blackbox_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples);
SweepModel residual_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples);
SweepModel augmented_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_boundary_csv(const std::filesystem::path& path, const RadialBoundary& boundary);

}  // namespace greyforce
