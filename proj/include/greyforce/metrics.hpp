#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greyforce/dataset.hpp"

namespace greyforce {

inline std::span<const double> as_span(const Eigen::VectorXd& v) noexcept {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Normalised mean square error in percent; 100 equals predicting the mean.
// Uses the population variance of y_true.
double nmse(std::span<const double> y_true, std::span<const double> y_pred);

// Mean standardised log loss against a N(train_mean, train_var) baseline;
// 0 for the baseline, negative for better predictions.
double msll(std::span<const double> y_true, std::span<const double> pred_mean,
            std::span<const double> pred_var, double train_mean, double train_var);

struct Spectrum {
  std::vector<double> frequencies;  // Hz, ascending from 0
  std::vector<double> power;        // one-sided density, units^2 / Hz
};

// Welch estimate: n_windows equal non-overlapping segments (trailing samples
// dropped), symmetric Hamming window, averaged periodograms.
Spectrum welch_psd(std::span<const double> x, double sample_rate_hz, std::size_t n_windows = 16);

double pearson(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct NamedDataset {
  std::string name;
  TimeSeriesDataset data;
};

struct SpectraComparison {
  std::vector<std::string> dataset_names;
  std::vector<std::string> pair_names;  // "A-B" for every unordered pair, in input order
  // rows: pairs, columns: velocity, acceleration, force
  Eigen::MatrixXd pearson;
  Eigen::MatrixXd cosine;
  // spectra[dataset][channel]
  std::vector<std::vector<Spectrum>> spectra;
};

// Datasets are truncated to the shortest length so every spectrum shares a
// frequency grid.
SpectraComparison spectra_comparison(std::span<const NamedDataset> datasets, std::size_t n_windows = 16);

// pair,velocity,acceleration,force
void write_similarity_csv(const std::filesystem::path& path, const SpectraComparison& cmp, bool use_pearson);
// frequency_hz,<dataset>_<channel>...
void write_spectra_csv(const std::filesystem::path& path, const SpectraComparison& cmp);

}  // namespace greyforce
