#pragma once

#include "romforge/diffops.hpp"
#include "romforge/grid.hpp"

#include <optional>
#include <vector>

namespace romforge {

struct FomConfig {
  double nu = 1.0 / 150.0;  // kinematic viscosity
  double u_in = 1.0;        // inflow speed
  double dt_fom = 0.01;
  int sample_every = 10;
  int n_samples = 400;
  double smagorinsky_cs = 0.17;
  /// Solver steps discarded before sampling; default is a quarter of all steps.
  std::optional<int> spinup_steps;
  /// Amplitude (relative to u_in) of the initial transverse velocity bump that
  /// breaks the mirror symmetry of the start-up flow.
  double perturbation = 0.1;
  /// Include the eddy-viscosity stress in the momentum equation.
  bool eddy_viscosity_in_momentum = true;
  /// Weight of the smoothness penalty in the recorded-pressure recovery.
  double pressure_smoothing = 1e-2;
  double poisson_tol = 1e-10;
  int poisson_max_iter = 5000;

  int resolved_spinup_steps() const;
  /// Throws ConfigError when the configuration is invalid for the grid.
  void validate(const GridSpec& grid) const;
};

struct FieldFrame {
  double t = 0.0;
  Vector u, v, p, nu_t;  // full-grid, row-major
};

struct SnapshotSet {
  GridSpec grid;
  std::vector<FieldFrame> frames;
  Vector weights;  // cell areas, zero on solid cells
  double dt_snap = 0.0;

  Index n_frames() const { return Index(frames.size()); }
  double t0() const { return frames.empty() ? 0.0 : frames.front().t; }
  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

struct FomDiagnostics {
  std::vector<double> max_divergence;  // per emitted frame, face-flux divergence after projection
  int max_poisson_iterations = 0;
  int total_steps = 0;
};

/// Smagorinsky eddy viscosity (cs*Delta)^2 * sqrt(2 S:S), Delta = sqrt(cell area).
Vector eddy_viscosity_field(const GridSpec& grid, const Vector& u, const Vector& v, double cs);
inline Vector eddy_viscosity_field(const FieldFrame& frame, const GridSpec& grid, double cs) {
  return eddy_viscosity_field(grid, frame.u, frame.v, cs);
}

/// Runs the full-order projection solver and samples snapshots.
SnapshotSet run_fom(const GridSpec& grid, const FomConfig& cfg, FomDiagnostics* diagnostics = nullptr);

}  // namespace romforge
