#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "greyforce/coverage.hpp"
#include "greyforce/errors.hpp"
#include "greyforce/metrics.hpp"
#include "support.hpp"

using namespace greyforce;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixX2d ring(std::size_t n, double r, double a0 = 0.0, double a1 = 2.0 * kPi) {
  Eigen::MatrixX2d p(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = a0 + (a1 - a0) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    p.row(static_cast<Eigen::Index>(i)) << r * std::cos(a), r * std::sin(a);
  }
  return p;
}

// Uniform points in a disc sector, in random order.
Eigen::MatrixX2d disc(std::size_t n, double r, std::uint64_t seed, double a0 = 0.0, double a1 = 2.0 * kPi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixX2d p(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = a0 + (a1 - a0) * u(rng);
    const double rho = r * std::sqrt(u(rng));
    p.row(static_cast<Eigen::Index>(i)) << rho * std::cos(a), rho * std::sin(a);
  }
  return p;
}

Eigen::MatrixX2d rotate(const Eigen::MatrixX2d& p, double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return p * r.transpose();
}

}  // namespace

TEST_CASE("a dense circle gives a polygon of the circle's area") {
  const RadialBoundary b = radial_boundary(ring(3600, 2.0), 360);
  CHECK(b.n_bins() == 360);
  CHECK(b.area() == doctest::Approx(4.0 * kPi).epsilon(0.01));
  CHECK(b.contains(Eigen::Vector2d(1.9, 0.3)));
  CHECK_FALSE(b.contains(Eigen::Vector2d(2.1, 0.0)));
  for (std::size_t k = 0; k < 360; ++k) CHECK(b.vertex(k).norm() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("bin radii are the largest member distance, gaps wider than the window stay empty") {
  Eigen::MatrixX2d p(4, 2);
  p << 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0;
  const RadialBoundary b = radial_boundary(p, 360);
  int nonzero = 0;
  for (std::size_t k = 0; k < 360; ++k) nonzero += b.radii(static_cast<Eigen::Index>(k)) > 0.0;
  CHECK(nonzero == 4);
  CHECK(b.radii(45) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(b.radii(225) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(b.angles(45) == doctest::Approx(45.5 * kPi / 180.0));
}

TEST_CASE("the fill window closes gaps between populated bins only") {
  Eigen::MatrixX2d p(4, 2);
  p.row(0) << 1.0, 0.0;
  p.row(1) << 2.0 * std::cos(4.5 * kPi / 180.0), 2.0 * std::sin(4.5 * kPi / 180.0);
  p.row(2) << -1.0, 0.05;
  p.row(3) << 0.0, -1.0;
  const RadialBoundary b = radial_boundary(p, 360, 10);
  // Bins 1..3 lie between populated bins 0 and 4 and take min(max left, max right).
  for (int k = 1; k <= 3; ++k) CHECK(b.radii(k) == doctest::Approx(1.0));
  CHECK(b.radii(4) == doctest::Approx(2.0));
  CHECK(b.radii(5) == 0.0);
}

TEST_CASE("degenerate boundaries are rejected") {
  CHECK_THROWS_AS(radial_boundary(ring(2, 1.0)), DegeneracyError);
  CHECK_THROWS_AS(radial_boundary(Eigen::MatrixX2d::Zero(5, 2)), DegeneracyError);
  CHECK_THROWS_AS(radial_boundary(ring(10, 1.0), 2), ConfigError);
}

TEST_CASE("coverage of identical and angularly disjoint supports") {
  const Eigen::MatrixX2d a = disc(2000, 1.0, 1);
  CHECK(compute_coverage(a, a, a).coverage_percent == 100.0);
  const Eigen::MatrixX2d right = disc(2000, 1.0, 2, -0.4 * kPi, 0.4 * kPi);
  const Eigen::MatrixX2d left = disc(2000, 1.0, 3, 0.6 * kPi, 1.4 * kPi);
  CHECK(compute_coverage(right, right, left).coverage_percent == 0.0);
}

TEST_CASE("half of a disc covers half of it and coverage needs both train and validation") {
  const Eigen::MatrixX2d full = disc(20000, 1.0, 4);
  const Eigen::MatrixX2d half = disc(10000, 1.0, 5, -0.5 * kPi, 0.5 * kPi);
  const CoverageResult r = compute_coverage(half, full, full);
  CHECK(r.coverage_percent == doctest::Approx(50.0).epsilon(0.04));
  CHECK(r.area_overlap == doctest::Approx(0.5 * r.area_test).epsilon(0.04));
  CHECK(compute_coverage(full, half, full).coverage_percent == doctest::Approx(r.coverage_percent).epsilon(0.02));
}

TEST_CASE("coverage is invariant to rotating every set") {
  const Eigen::MatrixX2d tr = disc(3000, 1.0, 6, 0.0, 1.2 * kPi);
  const Eigen::MatrixX2d va = disc(3000, 1.3, 7, 0.3 * kPi, 1.8 * kPi);
  const Eigen::MatrixX2d te = disc(3000, 1.1, 8);
  const double base = compute_coverage(tr, va, te).coverage_percent;
  for (double a : {0.7, 2.0, 4.1}) {
    CHECK(compute_coverage(rotate(tr, a), rotate(va, a), rotate(te, a)).coverage_percent ==
          doctest::Approx(base).epsilon(0.02));
  }
}

TEST_CASE("coverage never decreases along growing prefixes") {
  const Eigen::MatrixX2d tr = disc(400, 1.2, 9);
  const Eigen::MatrixX2d te = disc(400, 1.0, 10);
  const RadialBoundary test = radial_boundary(te);
  double prev = -1.0;
  for (Eigen::Index k = 5; k <= 400; k += 15) {
    const RadialBoundary b = radial_boundary(tr.topRows(k));
    const double c = compute_coverage(b, b, test, 128).coverage_percent;
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("raster area converges to the polygon area") {
  const RadialBoundary b = radial_boundary(disc(1500, 1.0, 11, 0.0, 1.5 * kPi));
  const double exact = b.area();
  const double coarse = std::abs(compute_coverage(b, b, b, 32).area_test - exact);
  const double fine = std::abs(compute_coverage(b, b, b, 1024).area_test - exact);
  CHECK(fine < coarse);
  CHECK(fine < 2e-3 * exact);
}

TEST_CASE("subsampling hits reachable targets and flags unreachable ones") {
  const Eigen::MatrixX2d tr = disc(600, 1.0, 12);
  const Eigen::MatrixX2d va = disc(300, 1.0, 13);
  const Eigen::MatrixX2d te = disc(600, 1.0, 14);
  CoverageOptions opt;
  opt.grid_resolution = 128;

  const SubsampleResult zero = subsample_for_coverage(tr, va, te, 0.0, 2.5, opt);
  CHECK(zero.n_train == 0);
  CHECK(zero.n_validation == 0);
  CHECK(zero.reached);

  const SubsampleResult mid = subsample_for_coverage(tr, va, te, 60.0, 2.5, opt);
  CHECK(mid.reached);
  CHECK(mid.n_validation == static_cast<std::size_t>(std::llround(mid.n_train * 0.5)));
  const RadialBoundary tb = radial_boundary(te, opt.n_bins);
  const double direct =
      compute_coverage(radial_boundary(tr.topRows(static_cast<Eigen::Index>(mid.n_train))),
                       radial_boundary(va.topRows(static_cast<Eigen::Index>(mid.n_validation))), tb, 128)
          .coverage_percent;
  CHECK(direct == mid.achieved_percent);

  const Eigen::MatrixX2d small = disc(600, 0.5, 15);
  const SubsampleResult far = subsample_for_coverage(small, small, te, 90.0, 2.5, opt);
  CHECK_FALSE(far.reached);
  CHECK(far.n_train == 600);
  CHECK(far.achieved_percent < 40.0);
  CHECK_THROWS_AS(subsample_for_coverage(tr, va, te, 120.0, 2.5, opt), ConfigError);
}

TEST_CASE("sweep at zero coverage: residual model equals the white-box") {
  const TimeSeriesDataset ds = testing::small_synthetic(330, 16);
  const Splits s = split_sequential(ds, SplitSizes{110, 110, 110});
  GPNARXTrainingConfig gp;
  QPSOConfig q = QPSOConfig::for_gp_narx(8, -4.0, 4.0);
  q.swarm_size = 8;
  q.max_iters = 4;
  q.n_repeat_runs = 1;
  gp.qpso = q;

  SweepConfig cfg;
  cfg.targets = {0.0, 50.0};
  cfg.coverage.grid_resolution = 96;
  cfg.prior = NIGPrior::from_physical(PhysicalConfig{});
  cfg.gibbs.n_draws = 300;
  cfg.gibbs.burn_in = 50;
  cfg.eval_start = 2;
  cfg.seed = 3;
  const std::vector<SweepModel> models{whitebox_sweep_model(), blackbox_sweep_model("gpnarx", LagSpec{1, 2}, gp, 16),
                                       residual_sweep_model("residual", LagSpec{1, 2}, gp, 16)};
  const std::vector<SweepRow> rows = coverage_sweep(s, models, cfg);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) CHECK_MESSAGE(r.ok, r.error);
  CHECK(rows[0].n_train == 0);
  CHECK(rows[2].nmse == doctest::Approx(rows[0].nmse).epsilon(1e-12));
  CHECK(rows[1].nmse == doctest::Approx(100.0).epsilon(0.5));
  CHECK(rows[3].target_percent == 50.0);
  CHECK(rows[3].n_train > 0);

  testing::TempDir dir("coverage");
  write_sweep_csv(dir.path / "sweep.csv", rows);
  std::ifstream in(dir.path / "sweep.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "coverage_percent,model_name,nmse,msll,n_train,n_val,target_percent,reached,error");

  SweepConfig bad = cfg;
  bad.whitebox_mode = WhiteboxMode::fixed_external;
  CHECK_THROWS_AS(coverage_sweep(s, models, bad), ConfigError);
}
