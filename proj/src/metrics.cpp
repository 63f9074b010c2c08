#include "greyforce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "greyforce/errors.hpp"

namespace greyforce {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": series lengths differ");
}

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double nmse(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_length(y_true, y_pred, "nmse");
  const std::size_t n = y_true.size();
  if (n < 2) throw DomainError("nmse needs at least two points");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (y_true[i] - mean) * (y_true[i] - mean);
    sse += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (!(var > 0.0)) throw DomainError("nmse undefined for a constant reference series");
  return 100.0 * sse / var;
}

double msll(std::span<const double> y_true, std::span<const double> pred_mean,
            std::span<const double> pred_var, double train_mean, double train_var) {
  require_same_length(y_true, pred_mean, "msll");
  require_same_length(y_true, pred_var, "msll");
  if (y_true.empty()) throw DomainError("msll needs at least one point");
  if (!(train_var > 0.0)) throw DomainError("msll baseline variance must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double v = pred_var[i];
    if (!(v > 0.0)) throw DomainError("msll predictive variance must be positive");
    const double r = y_true[i] - pred_mean[i];
    const double r0 = y_true[i] - train_mean;
    const double model_loss = 0.5 * std::log(2.0 * std::numbers::pi * v) + 0.5 * r * r / v;
    const double base_loss = 0.5 * std::log(2.0 * std::numbers::pi * train_var) + 0.5 * r0 * r0 / train_var;
    total += model_loss - base_loss;
  }
  return total / static_cast<double>(y_true.size());
}

Spectrum welch_psd(std::span<const double> x, double sample_rate_hz, std::size_t n_windows) {
  if (n_windows < 1) throw DomainError("welch needs at least one window");
  if (!(sample_rate_hz > 0.0)) throw DomainError("sample rate must be positive");
  if (x.size() < n_windows || x.size() / n_windows < 2) {
    throw BoundsError("signal too short for " + std::to_string(n_windows) + " Welch windows");
  }
  const std::size_t len = x.size() / n_windows;
  const std::size_t bins = len / 2 + 1;

  std::vector<double> window(len);
  for (std::size_t k = 0; k < len; ++k) {
    window[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                       static_cast<double>(len - 1));
  }
  const double window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);

  std::vector<double> segment(len);
  std::vector<fftw_complex> spectrum(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), segment.data(), spectrum.data(), FFTW_ESTIMATE);
  }
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, void (*)(fftw_plan)> guard(plan, [](fftw_plan p) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  });

  Spectrum out;
  out.power.assign(bins, 0.0);
  out.frequencies.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out.frequencies[b] = sample_rate_hz * static_cast<double>(b) / static_cast<double>(len);
  }
  for (std::size_t w = 0; w < n_windows; ++w) {
    for (std::size_t k = 0; k < len; ++k) segment[k] = x[w * len + k] * window[k];
    fftw_execute(plan);
    for (std::size_t b = 0; b < bins; ++b) {
      out.power[b] += spectrum[b][0] * spectrum[b][0] + spectrum[b][1] * spectrum[b][1];
    }
  }
  const double norm = 1.0 / (sample_rate_hz * window_power * static_cast<double>(n_windows));
  for (std::size_t b = 0; b < bins; ++b) {
    const bool edge = b == 0 || (len % 2 == 0 && b == bins - 1);
    out.power[b] *= norm * (edge ? 1.0 : 2.0);
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "pearson");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) throw DomainError("pearson needs at least two points");
  double sa = 0.0, sb = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  const double va = n * saa - sa * sa;
  const double vb = n * sbb - sb * sb;
  if (!(va > 0.0) || !(vb > 0.0)) throw DomainError("pearson undefined for a constant series");
  return std::clamp((n * sab - sa * sb) / (std::sqrt(va) * std::sqrt(vb)), -1.0, 1.0);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "cosine_similarity");
  const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
  if (!(aa > 0.0) || !(bb > 0.0)) throw DomainError("cosine similarity undefined for a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

SpectraComparison spectra_comparison(std::span<const NamedDataset> datasets, std::size_t n_windows) {
  if (datasets.size() < 2) throw ConfigError("spectra comparison needs at least two datasets");
  std::size_t len = datasets.front().data.size();
  for (const auto& d : datasets) len = std::min(len, d.data.size());

  constexpr std::array<Channel, 3> channels{Channel::velocity, Channel::acceleration, Channel::force};
  SpectraComparison cmp;
  for (const auto& d : datasets) {
    cmp.dataset_names.push_back(d.name);
    auto& per = cmp.spectra.emplace_back();
    for (Channel c : channels) {
      const auto& v = d.data.channel(c);
      per.push_back(welch_psd(std::span<const double>(v.data(), len), d.data.sample_rate_hz(), n_windows));
    }
  }
  const std::size_t n = datasets.size();
  const auto pairs = static_cast<Eigen::Index>(n * (n - 1) / 2);
  cmp.pearson.resize(pairs, 3);
  cmp.cosine.resize(pairs, 3);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++row) {
      cmp.pair_names.push_back(cmp.dataset_names[i] + "-" + cmp.dataset_names[j]);
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& pi = cmp.spectra[i][c].power;
        const auto& pj = cmp.spectra[j][c].power;
        cmp.pearson(row, static_cast<Eigen::Index>(c)) = pearson(pi, pj);
        cmp.cosine(row, static_cast<Eigen::Index>(c)) = cosine_similarity(pi, pj);
      }
    }
  }
  return cmp;
}

void write_similarity_csv(const std::filesystem::path& path, const SpectraComparison& cmp, bool use_pearson) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const Eigen::MatrixXd& m = use_pearson ? cmp.pearson : cmp.cosine;
  out << "pair,velocity,acceleration,force\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << cmp.pair_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
}

void write_spectra_csv(const std::filesystem::path& path, const SpectraComparison& cmp) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  constexpr std::array<const char*, 3> names{"U", "Udot", "F"};
  out << "frequency_hz";
  for (const auto& d : cmp.dataset_names) {
    for (const char* c : names) out << ',' << d << '_' << c;
  }
  out << '\n';
  const auto& grid = cmp.spectra.front().front().frequencies;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    out << format_double(grid[b]);
    for (const auto& per : cmp.spectra) {
      for (const auto& s : per) out << ',' << format_double(s.power[b]);
    }
    out << '\n';
  }
}

}  // namespace greyforce
