#include "greyforce/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "greyforce/errors.hpp"
#include "greyforce/rng.hpp"

namespace greyforce {

namespace {

void require_finite(std::span<const double> v, std::string_view name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DataError("non-finite value in channel " + std::string(name) + " at index " +
                          std::to_string(i),
                      i);
    }
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string_view channel_name(Channel c) noexcept {
  switch (c) {
    case Channel::velocity: return "U";
    case Channel::acceleration: return "Udot";
    case Channel::force: return "F";
  }
  return "?";
}

TimeSeriesDataset::TimeSeriesDataset(std::vector<double> velocity, std::vector<double> acceleration,
                                     std::vector<double> force, double sample_rate_hz,
                                     double start_time)
    : velocity_(std::move(velocity)),
      acceleration_(std::move(acceleration)),
      force_(std::move(force)),
      sample_rate_hz_(sample_rate_hz),
      start_time_(start_time) {
  if (velocity_.size() != force_.size() || acceleration_.size() != force_.size()) {
    throw ShapeError("dataset channels must have equal length");
  }
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
    throw DataError("sample rate must be positive and finite", 0);
  }
  if (!std::isfinite(start_time_)) throw DataError("start time must be finite", 0);
  require_finite(velocity_, "U");
  require_finite(acceleration_, "Udot");
  require_finite(force_, "F");
}

TimeSeriesDataset TimeSeriesDataset::from_columns(std::span<const double> t,
                                                  std::vector<double> velocity,
                                                  std::vector<double> acceleration,
                                                  std::vector<double> force) {
  if (t.size() != force.size()) throw ShapeError("time column length differs from channels");
  require_finite(t, "t");
  if (t.size() < 2) throw GridError("at least two samples are needed to infer the sample rate");
  const std::size_t n = t.size();
  const double span = t[n - 1] - t[0];
  if (!(span > 0.0)) throw GridError("time stamps must be strictly increasing");
  const double dt = span / static_cast<double>(n - 1);
  const double scale = std::max({std::abs(t[0]), std::abs(t[n - 1]), span});
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) {
      throw GridError("time stamps must be strictly increasing (row " + std::to_string(i + 1) + ")");
    }
    const double expected = t[0] + dt * static_cast<double>(i);
    if (std::abs(t[i] - expected) > 1e-9 * scale) {
      throw GridError("non-uniform time grid at row " + std::to_string(i + 1));
    }
  }
  return TimeSeriesDataset(std::move(velocity), std::move(acceleration), std::move(force), 1.0 / dt,
                           t[0]);
}

std::vector<double> TimeSeriesDataset::times() const {
  std::vector<double> t(size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
  return t;
}

const std::vector<double>& TimeSeriesDataset::channel(Channel c) const noexcept {
  switch (c) {
    case Channel::velocity: return velocity_;
    case Channel::acceleration: return acceleration_;
    case Channel::force: break;
  }
  return force_;
}

TimeSeriesDataset TimeSeriesDataset::slice(std::size_t first, std::size_t count) const {
  if (first > size() || count > size() - first) {
    throw BoundsError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                      ") exceeds dataset length " + std::to_string(size()));
  }
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                               v.begin() + static_cast<std::ptrdiff_t>(first + count));
  };
  return TimeSeriesDataset(cut(velocity_), cut(acceleration_), cut(force_), sample_rate_hz_,
                           time(first));
}

TimeSeriesDataset TimeSeriesDataset::with_force(std::vector<double> force) const {
  return TimeSeriesDataset(velocity_, acceleration_, std::move(force), sample_rate_hz_, start_time_);
}

void LagSpec::validate() const {
  if (exogenous < 0 || autoregressive < 0) throw ConfigError("lag counts must be non-negative");
}

std::size_t effective_rows(std::size_t length, const LagSpec& spec) noexcept {
  const auto lag = static_cast<std::size_t>(spec.max_lag());
  return length > lag ? length - lag : 0;
}

DesignMatrix lagged_design(std::span<const NamedSeries> exogenous, const NamedSeries& target,
                           const LagSpec& spec) {
  spec.validate();
  const std::size_t n = target.values.size();
  for (const auto& ch : exogenous) {
    if (ch.values.size() != n) throw ShapeError("exogenous channel " + ch.name + " length mismatch");
  }
  const auto lag = static_cast<std::size_t>(spec.max_lag());
  if (n <= lag) {
    throw BoundsError("series of length " + std::to_string(n) + " is too short for max lag " +
                      std::to_string(lag));
  }
  const std::size_t rows = n - lag;
  const auto lu = static_cast<std::size_t>(spec.exogenous);
  const auto ly = static_cast<std::size_t>(spec.autoregressive);
  const std::size_t cols = exogenous.size() * (lu + 1) + ly;

  DesignMatrix out;
  out.first_valid_index = lag;
  out.inputs.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  out.targets.resize(static_cast<Eigen::Index>(rows));
  for (const auto& ch : exogenous) {
    for (std::size_t k = 0; k <= lu; ++k) {
      out.column_labels.push_back(ch.name + (k == 0 ? "[t]" : "[t-" + std::to_string(k) + "]"));
    }
  }
  for (std::size_t k = 1; k <= ly; ++k) {
    out.column_labels.push_back(target.name + "[t-" + std::to_string(k) + "]");
  }

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = lag + r;
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::Index c = 0;
    for (const auto& ch : exogenous) {
      for (std::size_t k = 0; k <= lu; ++k) out.inputs(row, c++) = ch.values[t - k];
    }
    for (std::size_t k = 1; k <= ly; ++k) out.inputs(row, c++) = target.values[t - k];
    out.targets(row) = target.values[t];
  }
  return out;
}

DesignMatrix build_lagged_design(const TimeSeriesDataset& ds, const LagSpec& spec, Channel target) {
  const std::array<NamedSeries, 2> exog{NamedSeries{"U", ds.velocity()},
                                        NamedSeries{"Udot", ds.acceleration()}};
  return lagged_design(exog, NamedSeries{std::string(channel_name(target)), ds.channel(target)},
                       spec);
}

Splits split_sequential(const TimeSeriesDataset& ds, const SplitSizes& sizes) {
  if (sizes.train == 0 || sizes.validation == 0 || sizes.test == 0) {
    throw BoundsError("each split must contain at least one point");
  }
  const std::size_t total = sizes.train + sizes.validation + sizes.test;
  if (total > ds.size()) {
    throw BoundsError("split sizes sum to " + std::to_string(total) + " but dataset has " +
                      std::to_string(ds.size()) + " points");
  }
  return Splits{ds.slice(0, sizes.train), ds.slice(sizes.train, sizes.validation),
                ds.slice(sizes.train + sizes.validation, sizes.test)};
}

void SyntheticConfig::validate() const {
  if (n_points < 10) throw ConfigError("synthetic n_points must be at least 10");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("synthetic sample_rate_hz must be positive");
  if (!(noise_std >= 0.0)) throw ConfigError("synthetic noise_std must be non-negative");
  if (waves.empty()) throw ConfigError("synthetic config needs at least one wave component");
  for (const auto& w : waves) {
    if (!(w.frequency_hz >= 0.0) || !(w.frequency_hz < sample_rate_hz / 2.0)) {
      throw ConfigError("wave frequencies must lie in [0, sample_rate_hz / 2)");
    }
    if (!std::isfinite(w.amplitude) || !std::isfinite(w.phase_rad)) {
      throw ConfigError("wave amplitude and phase must be finite");
    }
  }
  if (arx) {
    arx->lags.validate();
    if (arx->exogenous.size() != 2 * static_cast<std::size_t>(arx->lags.exogenous + 1) ||
        arx->autoregressive.size() != static_cast<std::size_t>(arx->lags.autoregressive)) {
      throw ConfigError("ARX truth coefficient counts do not match its lags");
    }
  }
}

TimeSeriesDataset synthesize(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_points;
  std::vector<double> u(n), udot(n), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate_hz;
    double v = 0.0;
    double a = 0.0;
    for (const auto& w : cfg.waves) {
      const double omega = 2.0 * std::numbers::pi * w.frequency_hz;
      v += w.amplitude * std::sin(omega * t + w.phase_rad);
      a += w.amplitude * omega * std::cos(omega * t + w.phase_rad);
    }
    u[i] = v;
    udot[i] = a;
  }

  Rng rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  if (cfg.arx) {
    const auto& truth = *cfg.arx;
    const auto lu = static_cast<std::size_t>(truth.lags.exogenous);
    const auto ly = static_cast<std::size_t>(truth.lags.autoregressive);
    for (std::size_t i = 0; i < n; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k <= lu && k <= i; ++k) {
        y += truth.exogenous[2 * k] * u[i - k] * std::abs(u[i - k]);
        y += truth.exogenous[2 * k + 1] * udot[i - k];
      }
      for (std::size_t k = 1; k <= ly && k <= i; ++k) y += truth.autoregressive[k - 1] * f[i - k];
      f[i] = y + cfg.noise_std * noise(rng);
    }
    return TimeSeriesDataset(std::move(u), std::move(udot), std::move(f), cfg.sample_rate_hz);
  }

  double r1 = 0.0;
  double r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double residual = 0.0;
    if (cfg.residual.kind == ResidualKind::autoregressive_nonlinear) {
      const double au = std::abs(u[i]);
      residual = cfg.residual.ar1 * r1 + cfg.residual.ar2 * r2 + cfg.residual.gain * au * au * au;
      r2 = r1;
      r1 = residual;
    }
    f[i] = cfg.cd_prime * u[i] * std::abs(u[i]) + cfg.cm_prime * udot[i] + residual;
    if (cfg.noise_std > 0.0) f[i] += cfg.noise_std * noise(rng);
  }
  return TimeSeriesDataset(std::move(u), std::move(udot), std::move(f), cfg.sample_rate_hz);
}

TimeSeriesDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

  const auto header = split_fields(line);
  constexpr std::array<std::string_view, 4> required{"t", "u", "udot", "f"};
  constexpr std::array<std::string_view, 4> display{"t", "U", "Udot", "F"};
  std::array<std::size_t, 4> index{};
  for (std::size_t r = 0; r < required.size(); ++r) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return lower(h) == required[r]; });
    if (it == header.end()) {
      throw SchemaError("missing column \"" + std::string(display[r]) + "\" in " + path.string());
    }
    index[r] = static_cast<std::size_t>(it - header.begin());
  }

  std::array<std::vector<double>, 4> cols;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    for (std::size_t r = 0; r < 4; ++r) {
      if (index[r] >= fields.size()) {
        throw SchemaError("row " + std::to_string(row) + " has too few fields");
      }
      const std::string& cell = fields[index[r]];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      const bool parsed = ec == std::errc() && ptr == cell.data() + cell.size();
      if (!parsed || !std::isfinite(v)) {
        throw DataError("non-finite or unparsable value \"" + cell + "\" in column " +
                            std::string(display[r]) + " at row " + std::to_string(row),
                        row);
      }
      cols[r].push_back(v);
    }
  }
  if (row == 0) throw SchemaError("no data rows in " + path.string());
  return TimeSeriesDataset::from_columns(cols[0], std::move(cols[1]), std::move(cols[2]),
                                         std::move(cols[3]));
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,U,Udot,F\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << format_double(ds.time(i)) << ',' << format_double(ds.velocity()[i]) << ','
        << format_double(ds.acceleration()[i]) << ',' << format_double(ds.force()[i]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace greyforce
