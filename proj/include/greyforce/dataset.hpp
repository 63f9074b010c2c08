#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace greyforce {

enum class Channel { velocity, acceleration, force };

std::string_view channel_name(Channel c) noexcept;

// Uniformly sampled wave-particle kinematics and measured in-line force.
//
// t is reconstructed as start_time + i / sample_rate_hz, so the grid is
// uniform by construction. An empty dataset is allowed; it stands for "no
// data" in coverage experiments and zero-data diagnostics.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset() = default;
  TimeSeriesDataset(std::vector<double> velocity, std::vector<double> acceleration,
                    std::vector<double> force, double sample_rate_hz, double start_time = 0.0);

  // Builds a dataset from explicit time stamps, inferring the sample rate
  // from their spacing and rejecting non-uniform grids.
  static TimeSeriesDataset from_columns(std::span<const double> t, std::vector<double> velocity,
                                        std::vector<double> acceleration, std::vector<double> force);

  std::size_t size() const noexcept { return force_.size(); }
  bool empty() const noexcept { return force_.empty(); }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double start_time() const noexcept { return start_time_; }
  double time(std::size_t i) const noexcept {
    return start_time_ + static_cast<double>(i) / sample_rate_hz_;
  }
  std::vector<double> times() const;

  const std::vector<double>& velocity() const noexcept { return velocity_; }
  const std::vector<double>& acceleration() const noexcept { return acceleration_; }
  const std::vector<double>& force() const noexcept { return force_; }
  const std::vector<double>& channel(Channel c) const noexcept;

  // Contiguous sub-range [first, first + count); time stamps are preserved.
  TimeSeriesDataset slice(std::size_t first, std::size_t count) const;
  TimeSeriesDataset with_force(std::vector<double> force) const;

 private:
  std::vector<double> velocity_;
  std::vector<double> acceleration_;
  std::vector<double> force_;
  double sample_rate_hz_ = 1.0;
  double start_time_ = 0.0;
};

// Exogenous and autoregressive lag counts. autoregressive == 0 is a static
// (non-feedback) model.
struct LagSpec {
  int exogenous = 0;
  int autoregressive = 0;

  int max_lag() const noexcept { return exogenous > autoregressive ? exogenous : autoregressive; }
  void validate() const;
  friend bool operator==(const LagSpec&, const LagSpec&) = default;
};

struct DesignMatrix {
  Eigen::MatrixXd inputs;   // n_effective x d
  Eigen::VectorXd targets;  // n_effective
  std::vector<std::string> column_labels;
  std::size_t first_valid_index = 0;
};

struct NamedSeries {
  std::string name;
  std::span<const double> values;
};

// Lag embedding over an arbitrary set of exogenous channels. Row r (source
// index t = first_valid_index + r) holds every exogenous channel at lags
// 0..spec.exogenous, channel-major, followed by target[t-1..t-spec.autoregressive].
DesignMatrix lagged_design(std::span<const NamedSeries> exogenous, const NamedSeries& target,
                           const LagSpec& spec);

// Number of rows lagged_design would produce; 0 when the series is too short.
std::size_t effective_rows(std::size_t length, const LagSpec& spec) noexcept;

// NARX embedding [U_t..U_{t-lu}, Udot_t..Udot_{t-lu}, y_{t-1}..y_{t-ly}] with
// y the chosen target channel.
DesignMatrix build_lagged_design(const TimeSeriesDataset& ds, const LagSpec& spec,
                                 Channel target = Channel::force);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct Splits {
  TimeSeriesDataset train;
  TimeSeriesDataset validation;
  TimeSeriesDataset test;
};

Splits split_sequential(const TimeSeriesDataset& ds, const SplitSizes& sizes);

struct WaveComponent {
  double amplitude = 1.0;     // m/s
  double frequency_hz = 0.1;
  double phase_rad = 0.0;
};

enum class ResidualKind { none, autoregressive_nonlinear };

// r_t = ar1 * r_{t-1} + ar2 * r_{t-2} + gain * |U_t|^3
struct ResidualConfig {
  ResidualKind kind = ResidualKind::autoregressive_nonlinear;
  double gain = 20.0;
  double ar1 = 0.6;
  double ar2 = -0.2;
};

// Replaces the Morison force with a linear ARX process driven by
// [U|U|, Udot] with equation-error noise of standard deviation noise_std.
struct ArxTruth {
  LagSpec lags{1, 3};
  std::vector<double> exogenous;      // 2 * (lags.exogenous + 1), ordered [U|U|_t, Udot_t, U|U|_{t-1}, ...]
  std::vector<double> autoregressive; // lags.autoregressive
};

struct SyntheticConfig {
  std::size_t n_points = 3000;
  double sample_rate_hz = 13.25;
  std::vector<WaveComponent> waves{{0.6, 0.08, 0.3}, {0.4, 0.13, 1.7}, {0.25, 0.21, 4.1}};
  double cd_prime = 147.6;
  double cm_prime = 222.67;
  ResidualConfig residual;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::optional<ArxTruth> arx;

  void validate() const;
};

TimeSeriesDataset synthesize(const SyntheticConfig& cfg);

// Header row must name t, U, Udot, F (any order, case-insensitive); other
// columns are ignored.
TimeSeriesDataset load_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds);

// Shortest representation that parses back to the identical double.
std::string format_double(double v);

}  // namespace greyforce
