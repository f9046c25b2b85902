// romforge: command-line driver of the offline and online stages.

#include "romforge/config.hpp"
#include "romforge/fom.hpp"
#include "romforge/pipeline.hpp"
#include "romforge/report.hpp"
#include "romforge/snapshots.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace romforge;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string out, snap, bases, ops, closure, ev, flags = "none";
  int scheme = 0;
};

PipelineConfig load(const Options& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) cfg.mlp.seed = *o.seed;
  cfg.validate();
  return cfg;
}

std::string in_out_dir(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
  return value;
}

SnapshotSet load_snapshots(const Options& o) { return read_snapshots(require(o.snap, "--snap")); }

std::string bases_path(const Options& o, const char* name) {
  return (fs::path(require(o.bases, "--bases")) / name).string();
}

FineBases load_bases(const Options& o, const GridSpec& grid) {
  return {read_basis(bases_path(o, "velocity.bas"), grid), read_basis(bases_path(o, "pressure.bas"), grid),
          read_basis(bases_path(o, "nut.bas"), grid)};
}

ReducedModel load_reduced(const std::string& dir, const GridSpec& grid, const PipelineConfig& cfg) {
  const auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
  ReducedModel m;
  m.formulation = cfg.formulation;
  m.velocity = read_basis(at("rom_velocity.bas"), grid);
  m.pressure = read_basis(at("rom_pressure.bas"), grid);
  m.velocity_fine = read_basis(at("rom_velocity_fine.bas"), grid);
  m.pressure_fine = read_basis(at("rom_pressure_fine.bas"), grid);
  m.n = m.velocity.size() - m.velocity.n_sup;
  m.ops = read_operators(at("rom.ops"));
  m.fine = read_operators(at("fine.ops"));
  return m;
}

void cmd_fom(const Options& o) {
  const PipelineConfig cfg = load(o);
  const GridSpec grid = cfg.make_grid();
  FomDiagnostics diag;
  const SnapshotSet set = run_fom(grid, cfg.fom, &diag);
  const std::string out = o.out.empty() ? in_out_dir(o, "snapshots.snap") : o.out;
  write_snapshots(set, out);
  double worst = 0.0;
  for (double d : diag.max_divergence) worst = std::max(worst, d);
  std::printf("wrote %s: %ld frames, %d solver steps, max divergence %.3e\n", out.c_str(), long(set.n_frames()),
              diag.total_steps, worst);
}

void cmd_pod(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const FineBases b = compute_bases(set, cfg);
  write_basis(b.velocity, set.grid, in_out_dir(o, "velocity.bas"));
  write_basis(b.pressure, set.grid, in_out_dir(o, "pressure.bas"));
  write_basis(b.nut, set.grid, in_out_dir(o, "nut.bas"));
  write_coeff_csv(project_coeffs(set, b.velocity, b.velocity.size()), in_out_dir(o, "a.csv"));
  write_coeff_csv(project_coeffs(set, b.pressure, b.pressure.size()), in_out_dir(o, "b.csv"));
  write_coeff_csv(project_coeffs(set, b.nut, b.nut.size()), in_out_dir(o, "g.csv"));
  std::printf("bases: velocity %ld, pressure %ld, eddy viscosity %ld modes\n", long(b.velocity.size()),
              long(b.pressure.size()), long(b.nut.size()));
}

void cmd_ops(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const FineBases b = load_bases(o, set.grid);
  const ReducedModel m = build_reduced(set, b, cfg, cfg.n_modes, cfg.n_pressure_modes);
  write_basis(m.velocity, set.grid, in_out_dir(o, "rom_velocity.bas"));
  write_basis(m.pressure, set.grid, in_out_dir(o, "rom_pressure.bas"));
  write_basis(m.velocity_fine, set.grid, in_out_dir(o, "rom_velocity_fine.bas"));
  write_basis(m.pressure_fine, set.grid, in_out_dir(o, "rom_pressure_fine.bas"));
  write_operators(m.ops, in_out_dir(o, "rom.ops"));
  write_operators(m.fine, in_out_dir(o, "fine.ops"));
  std::printf("operators: r = %ld (%ld supremizers), q = %ld, eddy-viscosity modes %ld, fine order %ld\n",
              long(m.ops.r), long(m.ops.n_sup), long(m.ops.q), long(m.ops.n_nut), long(m.fine.r));
}

void cmd_fit_closure(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const ReducedModel m = load_reduced(require(o.ops, "--ops"), set.grid, cfg);
  const ClosureModel c = fit_closure(set, m, cfg);
  const std::string out = o.out.empty() ? in_out_dir(o, "closure.cls") : o.out;
  write_closure(c, out);
  std::printf("closure %s: residual %.6e, ridge %.3e, max eig sym(A) %.3e\n", to_string(c.variant), c.residual,
              c.ridge, c.sym_a_max_eig);
  for (const std::string& w : c.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

void cmd_train_ev(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const FineBases b = load_bases(o, set.grid);
  const MlpModel mlp = train_ev(set, b, cfg.n_modes, cfg);
  const std::string out = o.out.empty() ? in_out_dir(o, "ev.mlp") : o.out;
  write_mlp(mlp, out);
  std::printf("eddy-viscosity network: final loss %.6e, validation loss %.6e\n",
              mlp.loss_history.empty() ? 0.0 : mlp.loss_history.back(), mlp.validation_loss);
}

void cmd_rom_run(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const std::string ops_file = require(o.ops, "--ops");
  const std::string dir = o.bases.empty() ? fs::path(ops_file).parent_path().string() : o.bases;
  ReducedModel m;
  m.formulation = cfg.formulation;
  m.velocity = read_basis((fs::path(dir) / "rom_velocity.bas").string(), set.grid);
  m.pressure = read_basis((fs::path(dir) / "rom_pressure.bas").string(), set.grid);
  m.ops = read_operators(ops_file);

  RomRunConfig rc = run_config(set, cfg, Strategy::none, training_count(set, cfg));
  parse_flags(o.flags, rc);
  if (o.scheme) rc.scheme = o.scheme == 1 ? Scheme::order1 : Scheme::order2;
  std::optional<ClosureModel> closure;
  if (!o.closure.empty()) closure = read_closure(o.closure);
  std::optional<MlpModel> mlp;
  if (!o.ev.empty()) mlp = read_mlp(o.ev);
  if ((rc.c_u || rc.c_p) && !closure) throw ConfigError("flags cu/cp need --closure");
  if (rc.c_t && !mlp) throw ConfigError("flag ct needs --ev");
  const EddyViscosityFn ev = [&mlp](const Vector& a) { return predict_g(*mlp, a); };
  const RomTrajectory traj =
      run_rom(m.ops, closure ? &*closure : nullptr, mlp ? &ev : nullptr, rc, initial_state(set, m));
  const std::string out = o.out.empty() ? in_out_dir(o, "trajectory.csv") : o.out;
  write_trajectory_csv(traj, out);
  std::printf("wrote %s: %ld rows\n", out.c_str(), long(traj.n_rows()));
  if (traj.failed) throw NumericalError(traj.failure);
}

void cmd_sweep(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const FineBases b = o.bases.empty() ? compute_bases(set, cfg) : load_bases(o, set.grid);
  std::vector<Index> n;
  for (Index k = 1; k <= cfg.sweep_n_max; ++k) n.push_back(k);
  const SweepResult s = mode_sweep(set, b, cfg, n);
  emit_sweep_report(s, o.out_dir);
  std::cout << sweep_table(s);
  for (const std::string& f : s.failures) std::fprintf(stderr, "failure: %s\n", f.c_str());
  for (const std::string& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

void cmd_report(const Options& o) {
  const PipelineConfig cfg = load(o);
  const SnapshotSet set = load_snapshots(o);
  const FineBases b = o.bases.empty() ? compute_bases(set, cfg) : load_bases(o, set.grid);
  const ErrorReference ref(set, b.velocity, b.pressure);
  const Comparison c = compare_configurations(set, b, ref, cfg, cfg.n_modes, cfg.n_pressure_modes);
  emit_comparison_report(c, set, cfg.report_frame, "hybrid", o.out_dir);
  for (std::size_t k = 0; k < c.labels.size(); ++k) {
    if (c.series[k].size() == 0) {
      std::printf("%-10s failed: %s\n", c.labels[k].c_str(), c.failures[k].c_str());
      continue;
    }
    const ErrorIntegral e = error_integral(c.series[k]);
    std::printf("%-10s int eps_u %.4g  int eps_p %.4g\n", c.labels[k].c_str(), e.u, e.p);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid data-driven reduced-order models for incompressible flow"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", o.out_dir, "directory for outputs");
  app.add_option("--seed", o.seed, "random seed of the network training");

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "directory for outputs");
    sub->add_option("--seed", o.seed, "random seed of the network training");
    return sub;
  };
  auto* fom = common(app.add_subcommand("fom", "run the full-order solver and write snapshots"));
  fom->add_option("--out", o.out, "snapshot file");
  auto* pod = common(app.add_subcommand("pod", "compute the POD bases"));
  pod->add_option("--snap", o.snap, "snapshot file")->required();
  auto* ops = common(app.add_subcommand("ops", "assemble the reduced operators"));
  ops->add_option("--snap", o.snap, "snapshot file")->required();
  ops->add_option("--bases", o.bases, "directory written by pod")->required();
  auto* fit = common(app.add_subcommand("fit-closure", "fit the data-driven correction"));
  fit->add_option("--snap", o.snap, "snapshot file")->required();
  fit->add_option("--ops", o.ops, "directory written by ops")->required();
  fit->add_option("--out", o.out, "closure file");
  auto* train = common(app.add_subcommand("train-ev", "train the eddy-viscosity network"));
  train->add_option("--snap", o.snap, "snapshot file")->required();
  train->add_option("--bases", o.bases, "directory written by pod")->required();
  train->add_option("--out", o.out, "network file");
  auto* run = common(app.add_subcommand("rom-run", "integrate the reduced model"));
  run->add_option("--snap", o.snap, "snapshot file (initial state and time axis)")->required();
  run->add_option("--ops", o.ops, "operator file written by ops")->required();
  run->add_option("--bases", o.bases, "directory of the reduced bases (default: next to --ops)");
  run->add_option("--closure", o.closure, "closure file");
  run->add_option("--ev", o.ev, "eddy-viscosity network file");
  run->add_option("--flags", o.flags, "closure switches, e.g. cu,cp,ct or none");
  run->add_option("--scheme", o.scheme, "1 = implicit Euler, 2 = BDF2")->check(CLI::IsMember({1, 2}));
  run->add_option("--out", o.out, "trajectory CSV");
  auto* sweep = common(app.add_subcommand("sweep", "mode sweep over the closure configurations"));
  sweep->add_option("--snap", o.snap, "snapshot file")->required();
  sweep->add_option("--bases", o.bases, "directory written by pod (default: recompute)");
  auto* report = common(app.add_subcommand("report", "error series, plots and heatmaps at the configured n"));
  report->add_option("--snap", o.snap, "snapshot file")->required();
  report->add_option("--bases", o.bases, "directory written by pod (default: recompute)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*fom) cmd_fom(o);
    else if (*pod) cmd_pod(o);
    else if (*ops) cmd_ops(o);
    else if (*fit) cmd_fit_closure(o);
    else if (*train) cmd_train_ev(o);
    else if (*run) cmd_rom_run(o);
    else if (*sweep) cmd_sweep(o);
    else if (*report) cmd_report(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  }
  return 0;
}
