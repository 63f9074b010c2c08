#include "greyforce/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "greyforce/errors.hpp"
#include "greyforce/greybox.hpp"
#include "greyforce/metrics.hpp"
#include "greyforce/rng.hpp"

namespace greyforce {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

double coverage_or_zero(const Eigen::MatrixX2d& train, const Eigen::MatrixX2d& val, const RadialBoundary& test,
                        const CoverageOptions& opt) {
  if (train.rows() < 3 || val.rows() < 3) return 0.0;
  try {
    return compute_coverage(radial_boundary(train, opt.n_bins, opt.fill_window),
                            radial_boundary(val, opt.n_bins, opt.fill_window), test, opt.grid_resolution)
        .coverage_percent;
  } catch (const DegeneracyError&) {
    return 0.0;
  }
}

std::size_t proportional(std::size_t k, std::size_t n_from, std::size_t n_to) {
  if (n_from == 0) return 0;
  return static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n_to) /
                                               static_cast<double>(n_from)));
}

PredictiveSeries blackbox_prediction(const GPNARXModel& model, const NarxData& test, std::size_t n_samples,
                                     std::uint64_t seed) {
  if (model.spec.autoregressive == 0) return mpo_predict(model, test);
  return mc_mpo_predict(model, test, n_samples, derive_seed(seed, "mc")).summary();
}

}  // namespace

Eigen::Vector2d RadialBoundary::vertex(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return center + radii(i) * Eigen::Vector2d(std::cos(angles(i)), std::sin(angles(i)));
}

double RadialBoundary::radius_at(double theta) const {
  const std::size_t n = n_bins();
  const double delta = kTwoPi / static_cast<double>(n);
  const double u = wrap_angle(theta) / delta - 0.5;
  const double fl = std::floor(u);
  const auto k = static_cast<std::size_t>((static_cast<long long>(fl) + static_cast<long long>(n)) %
                                          static_cast<long long>(n));
  const double phi = (u - fl) * delta;
  const double r0 = radii(static_cast<Eigen::Index>(k));
  const double r1 = radii(static_cast<Eigen::Index>((k + 1) % n));
  if (phi == 0.0) return r0;
  const double denom = r0 * std::sin(phi) + r1 * std::sin(delta - phi);
  if (!(denom > 0.0)) return 0.0;
  return r0 * r1 * std::sin(delta) / denom;
}

bool RadialBoundary::contains(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d d = p - center;
  const double rho = d.norm();
  return rho < radius_at(std::atan2(d.y(), d.x()));
}

double RadialBoundary::area() const {
  const std::size_t n = n_bins();
  const double s = std::sin(kTwoPi / static_cast<double>(n));
  double a = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    a += radii(static_cast<Eigen::Index>(k)) * radii(static_cast<Eigen::Index>((k + 1) % n));
  }
  return 0.5 * s * a;
}

Eigen::MatrixX2d input_points(const TimeSeriesDataset& ds) {
  Eigen::MatrixX2d p(static_cast<Eigen::Index>(ds.size()), 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    p(static_cast<Eigen::Index>(i), 0) = ds.velocity()[i];
    p(static_cast<Eigen::Index>(i), 1) = ds.acceleration()[i];
  }
  return p;
}

RadialBoundary radial_boundary(const Eigen::MatrixX2d& points, std::size_t n_bins, std::size_t fill_window) {
  if (n_bins < 3) throw ConfigError("radial boundary needs at least 3 angular bins");
  if (points.rows() < 3) {
    throw DegeneracyError("radial boundary needs at least 3 points, got " + std::to_string(points.rows()));
  }
  if (!points.allFinite()) throw DataError("boundary points must be finite", 0);
  const std::size_t window = fill_window == 0 ? std::max<std::size_t>(1, n_bins / 36) : fill_window;
  const double delta = kTwoPi / static_cast<double>(n_bins);

  RadialBoundary b;
  b.angles.resize(static_cast<Eigen::Index>(n_bins));
  for (std::size_t k = 0; k < n_bins; ++k) b.angles(static_cast<Eigen::Index>(k)) = (static_cast<double>(k) + 0.5) * delta;

  Eigen::VectorXd own = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bins));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double r = points.row(i).norm();
    if (r == 0.0) continue;
    auto k = static_cast<std::size_t>(wrap_angle(std::atan2(points(i, 1), points(i, 0))) / delta);
    k = std::min(k, n_bins - 1);
    own(static_cast<Eigen::Index>(k)) = std::max(own(static_cast<Eigen::Index>(k)), r);
  }
  if (own.maxCoeff() == 0.0) throw DegeneracyError("all boundary points lie at the centre");

  b.radii = own;
  for (std::size_t k = 0; k < n_bins; ++k) {
    double left = 0.0, right = 0.0;
    for (std::size_t j = 1; j <= window && j < n_bins; ++j) {
      left = std::max(left, own(static_cast<Eigen::Index>((k + n_bins - j) % n_bins)));
      right = std::max(right, own(static_cast<Eigen::Index>((k + j) % n_bins)));
    }
    b.radii(static_cast<Eigen::Index>(k)) = std::max(own(static_cast<Eigen::Index>(k)), std::min(left, right));
  }
  return b;
}

CoverageResult compute_coverage(const RadialBoundary& train, const RadialBoundary& validation,
                                const RadialBoundary& test, std::size_t grid_resolution) {
  if (grid_resolution < 2) throw ConfigError("grid resolution must be at least 2");
  Eigen::Vector2d lo = test.center, hi = test.center;
  for (std::size_t k = 0; k < test.n_bins(); ++k) {
    lo = lo.cwiseMin(test.vertex(k));
    hi = hi.cwiseMax(test.vertex(k));
  }
  const Eigen::Vector2d step = (hi - lo) / static_cast<double>(grid_resolution);
  if (!(step.x() > 0.0) || !(step.y() > 0.0)) throw DegeneracyError("test boundary encloses no area");

  const auto res = static_cast<std::ptrdiff_t>(grid_resolution);
  std::vector<std::size_t> in_test(grid_resolution, 0), in_both(grid_resolution, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < res; ++i) {
    const double x = lo.x() + (static_cast<double>(i) + 0.5) * step.x();
    for (std::ptrdiff_t j = 0; j < res; ++j) {
      const Eigen::Vector2d p(x, lo.y() + (static_cast<double>(j) + 0.5) * step.y());
      if (!test.contains(p)) continue;
      ++in_test[static_cast<std::size_t>(i)];
      if (train.contains(p) && validation.contains(p)) ++in_both[static_cast<std::size_t>(i)];
    }
  }
  std::size_t n_test = 0, n_both = 0;
  for (std::size_t i = 0; i < grid_resolution; ++i) {
    n_test += in_test[i];
    n_both += in_both[i];
  }
  if (n_test == 0) throw DegeneracyError("test boundary covers no raster cell");
  const double cell = step.x() * step.y();
  CoverageResult r;
  r.area_test = static_cast<double>(n_test) * cell;
  r.area_overlap = static_cast<double>(n_both) * cell;
  r.coverage_percent = 100.0 * static_cast<double>(n_both) / static_cast<double>(n_test);
  return r;
}

CoverageResult compute_coverage(const Eigen::MatrixX2d& train, const Eigen::MatrixX2d& validation,
                                const Eigen::MatrixX2d& test, const CoverageOptions& options) {
  return compute_coverage(radial_boundary(train, options.n_bins, options.fill_window),
                          radial_boundary(validation, options.n_bins, options.fill_window),
                          radial_boundary(test, options.n_bins, options.fill_window), options.grid_resolution);
}

SubsampleResult subsample_for_coverage(const Eigen::MatrixX2d& full_train, const Eigen::MatrixX2d& full_validation,
                                       const Eigen::MatrixX2d& test, double target_percent, double tolerance,
                                       const CoverageOptions& options) {
  if (!(target_percent >= 0.0 && target_percent <= 100.0)) throw ConfigError("coverage target must be in [0, 100]");
  if (!(tolerance >= 0.0)) throw ConfigError("coverage tolerance must be non-negative");
  SubsampleResult out;
  if (target_percent == 0.0) {
    out.reached = true;
    return out;
  }
  const RadialBoundary test_boundary = radial_boundary(test, options.n_bins, options.fill_window);
  const auto n_tr = static_cast<std::size_t>(full_train.rows());
  const auto n_va = static_cast<std::size_t>(full_validation.rows());
  auto cov = [&](std::size_t k) {
    const std::size_t kv = proportional(k, n_tr, n_va);
    return coverage_or_zero(full_train.topRows(static_cast<Eigen::Index>(k)),
                            full_validation.topRows(static_cast<Eigen::Index>(kv)), test_boundary, options);
  };
  auto finish = [&](std::size_t k, double c) {
    out.n_train = k;
    out.n_validation = proportional(k, n_tr, n_va);
    out.achieved_percent = c;
    out.reached = std::abs(c - target_percent) <= tolerance;
    return out;
  };

  const double full = cov(n_tr);
  if (full < target_percent) return finish(n_tr, full);
  // Smallest prefix reaching the target, then the closer of it and its predecessor.
  std::size_t lo = 0, hi = n_tr;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cov(mid) >= target_percent) hi = mid; else lo = mid;
  }
  const double c_hi = hi == n_tr ? full : cov(hi);
  const double c_lo = cov(lo);
  if (std::abs(c_lo - target_percent) < std::abs(c_hi - target_percent)) return finish(lo, c_lo);
  return finish(hi, c_hi);
}

std::string whitebox_mode_name(WhiteboxMode m) {
  return m == WhiteboxMode::refit_per_subset ? "refit-per-subset" : "fixed-external";
}

std::vector<SweepRow> coverage_sweep(const Splits& splits, const std::vector<SweepModel>& models,
                                     const SweepConfig& cfg) {
  if (!std::is_sorted(cfg.targets.begin(), cfg.targets.end())) throw ConfigError("coverage targets must be ascending");
  if (cfg.whitebox_mode == WhiteboxMode::fixed_external && !cfg.external_whitebox) {
    throw ConfigError("fixed-external white-box mode needs an external posterior");
  }
  if (cfg.eval_start >= splits.test.size()) throw BoundsError("evaluation start lies beyond the test set");
  if (splits.train.size() < 2) throw BoundsError("coverage sweep needs a training split");

  const Eigen::MatrixX2d p_train = input_points(splits.train);
  const Eigen::MatrixX2d p_val = input_points(splits.validation);
  const Eigen::MatrixX2d p_test = input_points(splits.test);
  const auto& f_train = splits.train.force();
  const Eigen::Map<const Eigen::VectorXd> ftr(f_train.data(), static_cast<Eigen::Index>(f_train.size()));
  const double train_mean = ftr.mean();
  const double train_var = (ftr.array() - train_mean).square().mean();
  const std::span<const double> truth(splits.test.force().data() + cfg.eval_start,
                                      splits.test.size() - cfg.eval_start);

  std::vector<SweepRow> rows;
  for (double target : cfg.targets) {
    const SubsampleResult sub = subsample_for_coverage(p_train, p_val, p_test, target, cfg.tolerance, cfg.coverage);
    const TimeSeriesDataset train = splits.train.slice(0, sub.n_train);
    const TimeSeriesDataset val = splits.validation.slice(0, sub.n_validation);

    MorisonPosterior wb;
    if (cfg.whitebox_mode == WhiteboxMode::fixed_external) {
      wb = *cfg.external_whitebox;
    } else {
      GibbsOptions g = cfg.gibbs;
      g.seed = derive_seed(cfg.seed, "whitebox");
      wb = fit_whitebox(train, cfg.prior, g);
    }

    for (const auto& model : models) {
      SweepRow row;
      row.target_percent = target;
      row.coverage_percent = sub.achieved_percent;
      row.reached = sub.reached;
      row.model_name = model.name;
      row.n_train = sub.n_train;
      row.n_validation = sub.n_validation;
      try {
        SweepContext ctx{&train, &val, &splits.test, &wb, train_mean, train_var > 0.0 ? train_var : 1.0,
                         derive_seed(cfg.seed, model.name)};
        const PredictiveSeries pred = model.build(ctx);
        if (pred.first_index > cfg.eval_start || pred.first_index + pred.size() != splits.test.size()) {
          throw ShapeError("model \"" + model.name + "\" predictions do not cover the scored test range");
        }
        const auto off = static_cast<Eigen::Index>(cfg.eval_start - pred.first_index);
        const auto n = static_cast<Eigen::Index>(truth.size());
        const Eigen::VectorXd mean = pred.mean.segment(off, n);
        const Eigen::VectorXd var = pred.variance.segment(off, n);
        row.nmse = nmse(truth, as_span(mean));
        row.msll = msll(truth, as_span(mean), as_span(var), train_mean, train_var);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

SweepModel whitebox_sweep_model() {
  return {"whitebox", [](const SweepContext& ctx) { return predict_whitebox(*ctx.whitebox, *ctx.test, true); }};
}

SweepModel blackbox_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples) {
  return {std::move(name), [spec, cfg, n_samples](const SweepContext& ctx) {
            GPNARXTrainingConfig c = cfg;
            c.fit.empty_prior_mean = ctx.prior_mean;
            c.zero_data_signal_variance = ctx.prior_variance;
            c.zero_data_noise_variance = 1e-2 * ctx.prior_variance;
            c.seed = derive_seed(ctx.seed, "qpso");
            const GPNARXModel m = train_gpnarx(*ctx.train, *ctx.validation, spec, c);
            return blackbox_prediction(m, NarxData::from_dataset(*ctx.test), n_samples, ctx.seed);
          }};
}

SweepModel residual_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples) {
  return {std::move(name), [spec, cfg, n_samples](const SweepContext& ctx) {
            GPNARXTrainingConfig c = cfg;
            c.seed = derive_seed(ctx.seed, "qpso");
            const GreyBoxModel m = train_residual(*ctx.train, *ctx.validation, *ctx.whitebox, spec, c);
            const bool mc = spec.autoregressive > 0;
            return predict_greybox(m, *ctx.test, mc ? PredictionMode::mc_mpo : PredictionMode::mpo, n_samples,
                                   derive_seed(ctx.seed, "mc"))
                .series;
          }};
}

SweepModel augmented_sweep_model(std::string name, LagSpec spec, GPNARXTrainingConfig cfg, std::size_t n_samples) {
  return {std::move(name), [spec, cfg, n_samples](const SweepContext& ctx) {
            GPNARXTrainingConfig c = cfg;
            c.fit.empty_prior_mean = ctx.prior_mean;
            c.zero_data_signal_variance = ctx.prior_variance;
            c.zero_data_noise_variance = 1e-2 * ctx.prior_variance;
            c.seed = derive_seed(ctx.seed, "qpso");
            const GreyBoxModel m = train_augmented(*ctx.train, *ctx.validation, *ctx.whitebox, spec, c);
            const bool mc = spec.autoregressive > 0;
            return predict_greybox(m, *ctx.test, mc ? PredictionMode::mc_mpo : PredictionMode::mpo, n_samples,
                                   derive_seed(ctx.seed, "mc"))
                .series;
          }};
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "coverage_percent,model_name,nmse,msll,n_train,n_val,target_percent,reached,error\n";
  for (const auto& r : rows) {
    out << format_double(r.coverage_percent) << ',' << r.model_name << ',';
    if (r.ok) out << format_double(r.nmse) << ',' << format_double(r.msll);
    else out << ',';
    out << ',' << r.n_train << ',' << r.n_validation << ',' << format_double(r.target_percent) << ','
        << (r.reached ? "true" : "false") << ',';
    std::string e = r.error;
    std::replace(e.begin(), e.end(), ',', ';');
    std::replace(e.begin(), e.end(), '\n', ' ');
    out << e << '\n';
  }
}

void write_boundary_csv(const std::filesystem::path& path, const RadialBoundary& boundary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "angle,radius,x,y\n";
  for (std::size_t k = 0; k < boundary.n_bins(); ++k) {
    const Eigen::Vector2d v = boundary.vertex(k);
    out << format_double(boundary.angles(static_cast<Eigen::Index>(k))) << ','
        << format_double(boundary.radii(static_cast<Eigen::Index>(k))) << ',' << format_double(v.x()) << ','
        << format_double(v.y()) << '\n';
  }
}

}  // namespace greyforce
