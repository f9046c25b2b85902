#include "support/test_data.hpp"

#include "romforge/report.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace romforge;
using namespace romforge::testing;

namespace {

ErrorSeries make_series(const Vector& times, const Vector& eps, double dt) {
  ErrorSeries s;
  s.times = times;
  s.eps_u = eps;
  s.eps_p = 2.0 * eps;
  s.dt = dt;
  return s;
}

RomTrajectory coefficient_trajectory(const SnapshotSet& set, const PodBasis& vel, const PodBasis& pres) {
  RomTrajectory t;
  const CoeffSeries a = project_coeffs(set, vel, vel.size());
  t.times = a.times;
  t.a = a.values;
  t.b = project_coeffs(set, pres, pres.size()).values;
  return t;
}

PipelineConfig small_pipeline() {
  PipelineConfig cfg;
  cfg.nx = 32;
  cfg.ny = 16;
  cfg.fom = small_fom_config();
  cfg.train_fraction = 1.0;
  cfg.d_max = 10;
  cfg.n_nut_modes = 3;
  cfg.mlp.hidden = {16, 8};
  cfg.mlp.epochs = 50;
  return cfg;
}

bool dir_empty(const std::string& dir) { return std::filesystem::is_empty(dir); }

}  // namespace

TEST_SUITE("report") {

TEST_CASE("the full reference basis reproduces the reference with zero error") {
  const SnapshotSet& set = small_dataset();
  const PodBasis vel = pod(set, FieldKind::velocity, 10), pres = pod(set, FieldKind::pressure, 10);
  const ErrorReference ref(set, vel, pres);
  const ErrorSeries s = error_series(coefficient_trajectory(set, vel, pres), vel, pres, ref);
  REQUIRE(s.size() == set.n_frames());
  CHECK(s.eps_u.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(s.eps_p.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(s.dt == doctest::Approx(set.dt_snap));
}

TEST_CASE("a zero trajectory has an error of one hundred percent") {
  const SnapshotSet& set = small_dataset();
  const PodBasis vel = pod(set, FieldKind::velocity, 6), pres = pod(set, FieldKind::pressure, 6);
  const ErrorReference ref(set, vel, pres);
  RomTrajectory t = coefficient_trajectory(set, vel, pres);
  t.a.setZero();
  t.b.setZero();
  const ErrorSeries s = error_series(t, vel, pres, ref);
  CHECK((s.eps_u.array() - 100.0).abs().maxCoeff() <= 1e-12);
  CHECK((s.eps_p.array() - 100.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection errors shrink as modes are added") {
  const SnapshotSet& set = small_dataset();
  const PodBasis vel = pod(set, FieldKind::velocity, 10), pres = pod(set, FieldKind::pressure, 10);
  const ErrorReference ref(set, vel, pres);
  const Vector w = field_weights(set.grid, FieldKind::pressure);
  Vector prev_p = Vector::Constant(set.n_frames(), INFINITY);
  for (Index n = 1; n <= 10; ++n) {
    const PodBasis vn = vel.head(n), pn = pres.head(n);
    const RomTrajectory t = coefficient_trajectory(set, vn, pn);
    const ErrorSeries s = error_series(t, vn, pn, ref);
    for (Index j = 0; j < s.size(); ++j) {
      CHECK(s.eps_p(j) <= prev_p(j) * (1.0 + 1e-12) + 1e-12);
      // the speed error is bounded by the vector error, which is monotone in n
      const Vector diff = vel.modes * project_coeffs(set, vel, 10).values.row(j).transpose() -
                          vn.modes * t.a.row(j).transpose();
      const Index nf = diff.size() / 2;
      const double vec_err = std::sqrt(ip(Vector(diff.head(nf)), Vector(diff.head(nf)), w) +
                                       ip(Vector(diff.tail(nf)), Vector(diff.tail(nf)), w));
      CHECK(s.eps_u(j) <= 100.0 * vec_err / ref.speed_norm(j) * (1.0 + 1e-10) + 1e-12);
    }
    prev_p = s.eps_p;
  }
}

TEST_CASE("integral of a constant five percent error over two time units") {
  const ErrorSeries s = make_series(Vector::LinSpaced(20, 0.0, 1.9), Vector::Constant(20, 5.0), 0.1);
  const ErrorIntegral i = error_integral(s);
  CHECK(i.u == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(i.p == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("left Riemann sums over a ramp and a sub-window") {
  const ErrorSeries s = make_series(Vector::LinSpaced(4, 0.0, 0.75), Vector::LinSpaced(4, 0.0, 0.75), 0.25);
  CHECK(error_integral(s).u == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(error_integral(s, 0.5, 1.0).u == doctest::Approx(0.3125).epsilon(1e-14));
  CHECK(error_integral(s, 0.25, 0.75).u == doctest::Approx(0.1875).epsilon(1e-14));
}

TEST_CASE("a single-sample window integrates one interval") {
  const ErrorSeries s = make_series(Vector::Constant(1, 3.0), Vector::Constant(1, 3.0), 0.1);
  CHECK(error_integral(s).u == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(error_integral(s, 3.0, 3.1).p == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("left sum and trapezoid rule differ by half a step times the end-point difference") {
  std::mt19937_64 rng(1);
  const Index n = 30;
  const double dt = 0.05;
  const Vector eps = random_matrix(n, 1, rng).cwiseAbs() * 10.0;
  const ErrorSeries s = make_series(Vector::LinSpaced(n, 0.0, dt * double(n - 1)), eps, dt);
  double trap = 0.0;
  for (Index j = 0; j + 1 < n; ++j) trap += 0.5 * dt * (eps(j) + eps(j + 1));
  const double left = error_integral(s, 0.0, dt * double(n - 1)).u;
  CHECK(left - trap == doctest::Approx(0.5 * dt * (eps(0) - eps(n - 1))).epsilon(1e-10));
}

TEST_CASE("empty series and windows outside the data are errors") {
  CHECK_THROWS_AS(error_integral(ErrorSeries{}), ConfigError);
  const ErrorSeries s = make_series(Vector::LinSpaced(4, 0.0, 0.3), Vector::Ones(4), 0.1);
  CHECK_THROWS_AS(error_integral(s, -1.0, 0.2), ConfigError);
  CHECK_THROWS_AS(error_integral(s, 0.0, 2.0), ConfigError);
  CHECK_THROWS_AS(error_integral(s, 0.12, 0.18), ConfigError);
}

TEST_CASE("empty reports raise an error and write nothing") {
  const std::string dir = scratch_dir("report_empty");
  CHECK_THROWS_AS(write_series_csv({}, {}, dir + "/series.csv"), ConfigError);
  CHECK_THROWS_AS(write_series_csv({"none"}, {ErrorSeries{}}, dir + "/series.csv"), ConfigError);
  CHECK_THROWS_AS(emit_sweep_report(SweepResult{}, dir), ConfigError);
  CHECK(dir_empty(dir));
}

TEST_CASE("reference frames are matched by time") {
  const SnapshotSet& set = small_dataset();
  const PodBasis vel = pod(set, FieldKind::velocity, 3), pres = pod(set, FieldKind::pressure, 3);
  const ErrorReference ref(set, vel, pres);
  CHECK(ref.frame_at(set.frames[4].t) == 4);
  CHECK(ref.frame_at(set.frames[4].t + 0.3 * set.dt_snap) == 4);
  CHECK_THROWS_AS(ref.frame_at(set.frames.back().t + set.dt_snap), ConfigError);
}

TEST_CASE("sweep tables round-trip through CSV including failed cells") {
  SweepResult s;
  s.n = {1, 2, 3};
  s.labels = {"projection", "none", "hybrid"};
  std::mt19937_64 rng(2);
  s.int_u = random_matrix(3, 3, rng).cwiseAbs();
  s.int_p = random_matrix(3, 3, rng).cwiseAbs();
  s.int_u(1, 1) = std::numeric_limits<double>::quiet_NaN();
  s.int_p(2, 0) = 1.0 / 3.0;
  const std::string path = scratch_dir("sweep_csv") + "/sweep.csv";
  write_sweep_csv(s, path);
  const SweepResult back = read_sweep_csv(path);
  CHECK(back.n == s.n);
  CHECK(back.labels == s.labels);
  for (Index i = 0; i < 3; ++i)
    for (Index k = 0; k < 3; ++k) {
      if (std::isnan(s.int_u(i, k)))
        CHECK(std::isnan(back.int_u(i, k)));
      else
        CHECK(back.int_u(i, k) == s.int_u(i, k));
      CHECK(back.int_p(i, k) == s.int_p(i, k));
    }
  CHECK(back.column("hybrid") == 2);
  CHECK_THROWS_AS(back.column("data"), ConfigError);
  const std::string table = sweep_table(s);
  CHECK(table.find("| projection") != std::string::npos);
}

TEST_CASE("plots are well-formed XML") {
  std::string err;
  const Vector x = Vector::LinSpaced(5, 1.0, 5.0);
  Vector y = (Vector(5) << 3.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 0.5, 0.25).finished();
  const std::string line = svg_line_plot("errors <n> & more", "n", "eps \"percent\"",
                                         {{"a<b", x, y}, {"b&c", x, Vector(2.0 * y)}}, true);
  CHECK_MESSAGE(xml_well_formed(line, &err), err);
  CHECK(line.find("<svg") != std::string::npos);
  const GridSpec& grid = small_dataset().grid;
  const FieldFrame& f = small_dataset().frames.back();
  const std::string heat = svg_heatmap_pair(grid, f.p, Vector(0.5 * f.p), "pressure", "FOM", "ROM");
  CHECK_MESSAGE(xml_well_formed(heat, &err), err);
  CHECK_FALSE(xml_well_formed("<a><b></a></b>"));
  CHECK_FALSE(xml_well_formed("<a x=1/>"));
}

TEST_CASE("sweep projection column equals the directly integrated projection errors") {
  const SnapshotSet& set = small_dataset();
  const PipelineConfig cfg = small_pipeline();
  const FineBases bases = compute_bases(set, cfg);
  const SweepResult sweep = mode_sweep(set, bases, cfg, {2, 3});
  const ErrorReference ref(set, bases.velocity, bases.pressure);
  const Index m = training_count(set, cfg);
  const Index col = sweep.column("projection");
  for (std::size_t i = 0; i < sweep.n.size(); ++i) {
    const ReducedModel model = build_reduced(set, bases, cfg, sweep.n[i], sweep.n[i]);
    const ErrorIntegral direct =
        error_integral(error_series(projection_trajectory(set, model, m), model.velocity, model.pressure, ref));
    CHECK(sweep.int_u(Index(i), col) == doctest::Approx(direct.u).epsilon(1e-12));
    CHECK(sweep.int_p(Index(i), col) == doctest::Approx(direct.p).epsilon(1e-12));
  }
  const std::string dir = scratch_dir("sweep_report");
  emit_sweep_report(sweep, dir);
  for (const char* name : {"sweep.csv", "sweep.md", "sweep.json", "sweep_u.svg", "sweep_p.svg"})
    CHECK(std::filesystem::exists(dir + "/" + name));
  std::string err;
  CHECK_MESSAGE(xml_well_formed(read_file(dir + "/sweep_u.svg"), &err), err);
}

}  // TEST_SUITE
