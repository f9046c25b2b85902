#include "romforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace romforge {

namespace {

AssemblyOptions assembly_options(const PipelineConfig& cfg, bool ppe, bool turbulence) {
  AssemblyOptions opt;
  opt.nu = cfg.fom.nu;
  opt.tau = cfg.penalty_tau;
  opt.u_bc = cfg.fom.u_in;
  opt.ppe = ppe;
  opt.turbulence = turbulence;
  return opt;
}

}  // namespace

FineBases compute_bases(const SnapshotSet& set, const PipelineConfig& cfg) {
  const auto fine_order = [&](FieldKind kind) {
    const Index rank = pod_rank(snapshot_matrix(set, kind), field_weights(set.grid, kind));
    if (rank < 1) throw NumericalError(std::string(to_string(kind)) + " snapshots have rank zero");
    return std::min(cfg.d_max, rank);
  };
  FineBases b;
  b.velocity = pod(set, FieldKind::velocity, fine_order(FieldKind::velocity));
  b.pressure = pod(set, FieldKind::pressure, fine_order(FieldKind::pressure));
  b.nut = pod(set, FieldKind::eddy_viscosity, std::min(cfg.n_nut_modes, fine_order(FieldKind::eddy_viscosity)));
  return b;
}

Index training_count(const SnapshotSet& set, const PipelineConfig& cfg) {
  const Index m = Index(std::llround(cfg.train_fraction * double(set.n_frames())));
  return std::clamp<Index>(m, std::min<Index>(2, set.n_frames()), set.n_frames());
}

RomOperators assemble_fine_ppe(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg) {
  return assemble_operators(set.grid, bases.velocity, bases.pressure, nullptr, assembly_options(cfg, true, false));
}

ReducedModel build_reduced(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg, Index n,
                           Index q, const RomOperators* shared_fine) {
  const GridSpec& grid = set.grid;
  if (n < 1 || q < 1) throw ConfigError("mode counts must be positive");
  if (n > bases.velocity.size() || q > bases.pressure.size())
    throw ConfigError("requested n = " + std::to_string(n) + ", q = " + std::to_string(q) + " exceeds the fine bases (" +
                      std::to_string(bases.velocity.size()) + ", " + std::to_string(bases.pressure.size()) + ")");
  ReducedModel m;
  m.formulation = cfg.formulation;
  m.n = n;
  m.pressure = bases.pressure.head(q);
  m.pressure_fine = bases.pressure;
  if (cfg.formulation == Formulation::ppe) {
    m.velocity = bases.velocity.head(n);
    m.velocity_fine = bases.velocity;
    m.fine = shared_fine ? *shared_fine : assemble_fine_ppe(set, bases, cfg);
  } else {
    const Matrix sup = supremizers(m.pressure, bases.velocity.head(n), grid);
    m.velocity = enrich(bases.velocity.head(n), sup);
    const Index d = bases.velocity.size();
    if (n + q > d)
      throw ConfigError("supremizer model needs n + q <= d (" + std::to_string(n + q) + " > " + std::to_string(d) + ")");
    m.velocity_fine = nested_fine_basis(bases.velocity, n, sup, d);
    m.fine = assemble_operators(grid, m.velocity_fine, m.pressure_fine, nullptr, assembly_options(cfg, false, false));
  }
  m.ops = m.fine.truncated(m.velocity.size(), q, 0);
  m.ops.n_sup = m.velocity.n_sup;
  assemble_turb_tensors(grid, m.velocity, m.pressure, bases.nut, m.ops);
  m.ops.hash = operators_hash(grid, m.velocity, m.pressure, &bases.nut,
                              assembly_options(cfg, cfg.formulation == Formulation::ppe, true));
  return m;
}

ClosureModel fit_closure(const SnapshotSet& set, const ReducedModel& model, const PipelineConfig& cfg) {
  const Index m = training_count(set, cfg);
  const Index r = model.velocity.size(), q = model.pressure.size();
  const CoeffSeries a_d = project_coeffs(set, model.velocity_fine, model.velocity_fine.size()).slice(0, m);
  const RomOperators coarse = model.fine.truncated(r, q, 0);

  CorrectionSnapshots corr;
  corr.times = a_d.times;
  corr.d = model.velocity_fine.size();
  corr.r = r;
  corr.q = q;
  corr.tau_u = exact_velocity_correction(a_d, model.fine.C, coarse.C);

  if (model.formulation == Formulation::ppe) {
    const CoeffSeries b_d = project_coeffs(set, model.pressure_fine, model.pressure_fine.size()).slice(0, m);
    corr.tau_p = exact_pressure_correction(a_d, b_d, model.fine.D, coarse.D, model.fine.G, coarse.G);
    CoeffSeries ab{a_d.times, Matrix(m, r + q)};
    ab.values << a_d.values.leftCols(r), b_d.values.leftCols(q);
    return fit_joint_ppe(corr, ab, cfg.closure_ridge);
  }
  const CoeffSeries a_r = a_d.head_cols(r);
  if (cfg.closure_constrained)
    return fit_constrained(corr, a_r,
                           ConstrainedOptions{cfg.closure_ridge, cfg.constrained_max_iter, cfg.constrained_tol});
  return fit_unconstrained(corr, a_r, cfg.closure_ridge);
}

MlpModel train_ev(const SnapshotSet& set, const FineBases& bases, Index n, const PipelineConfig& cfg) {
  const Index m = training_count(set, cfg);
  const CoeffSeries a = project_coeffs(set, bases.velocity, n).slice(0, m);
  const CoeffSeries g = project_coeffs(set, bases.nut, bases.nut.size()).slice(0, m);
  return train_mlp(a, g, cfg.mlp);
}

RomInitialState initial_state(const SnapshotSet& set, const ReducedModel& model) {
  const SnapshotSet first{set.grid, {set.frames.front()}, set.weights, set.dt_snap};
  return {set.t0(), project_coeffs(first, model.velocity, model.velocity.size()).values.row(0).transpose(),
          project_coeffs(first, model.pressure, model.pressure.size()).values.row(0).transpose()};
}

RomTrajectory projection_trajectory(const SnapshotSet& set, const ReducedModel& model, Index rows) {
  rows = std::min(rows, set.n_frames());
  const CoeffSeries a = project_coeffs(set, model.velocity, model.velocity.size()).slice(0, rows);
  const CoeffSeries b = project_coeffs(set, model.pressure, model.pressure.size()).slice(0, rows);
  RomTrajectory t;
  t.times = a.times;
  t.a = a.values;
  t.b = b.values;
  t.g = Matrix(rows, 0);
  t.newton_iterations.assign(std::size_t(rows), 0);
  t.residuals.assign(std::size_t(rows), 0.0);
  return t;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::none:
      return "none";
    case Strategy::data:
      return "data";
    case Strategy::ev:
      return "ev";
    case Strategy::hybrid:
      return "hybrid";
  }
  return "?";
}

RomRunConfig run_config(const SnapshotSet& set, const PipelineConfig& cfg, Strategy strategy, Index frames) {
  if (frames < 2) throw ConfigError("an online run needs at least two snapshot times");
  RomRunConfig rc;
  rc.formulation = cfg.formulation;
  rc.scheme = cfg.scheme;
  rc.dt = set.dt_snap / cfg.rom_substeps;
  rc.n_steps = int(frames - 1) * cfg.rom_substeps;
  rc.record_every = cfg.rom_substeps;
  rc.newton = cfg.newton;
  const bool data = strategy == Strategy::data || strategy == Strategy::hybrid;
  rc.c_u = data;
  rc.c_p = data && cfg.formulation == Formulation::ppe;
  rc.c_t = strategy == Strategy::ev || strategy == Strategy::hybrid;
  return rc;
}

void parse_flags(const std::string& text, RomRunConfig& rc) {
  rc.c_u = rc.c_p = rc.c_t = false;
  if (text.empty() || text == "none") return;
  std::istringstream in(text);
  for (std::string flag; std::getline(in, flag, ',');) {
    if (flag == "cu")
      rc.c_u = true;
    else if (flag == "cp")
      rc.c_p = true;
    else if (flag == "ct")
      rc.c_t = true;
    else
      throw ConfigError("unknown flag '" + flag + "' (expected cu, cp, ct)");
  }
}

}  // namespace romforge
