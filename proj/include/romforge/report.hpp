#pragma once

// Error metrics against the d-mode reconstruction of the full-order frames,
// the mode sweep over the closure configurations, and CSV/SVG emission.

#include "romforge/pipeline.hpp"

#include <string>
#include <vector>

namespace romforge {

/// Percentage errors per trajectory row.
struct ErrorSeries {
  Vector times;
  Vector eps_u;  // velocity-magnitude error, percent
  Vector eps_p;  // pressure error, percent
  double dt = 0.0;  // sample spacing
  Index d_u = 0, d_p = 0;

  Index size() const { return times.size(); }
};

/// d-mode reconstructions of every snapshot, restricted to fluid cells.
class ErrorReference {
 public:
  ErrorReference(const SnapshotSet& set, const PodBasis& velocity, const PodBasis& pressure);

  /// Index of the snapshot nearest to t. Throws ConfigError when no snapshot
  /// lies within half a snapshot interval.
  Index frame_at(double t) const;

  const Vector& weights() const { return w_; }
  /// Velocity magnitude / pressure of frame j on fluid cells.
  Vector speed(Index j) const { return speed_.col(j); }
  Vector pressure(Index j) const { return pressure_.col(j); }
  double speed_norm(Index j) const { return speed_norm_(j); }
  double pressure_norm(Index j) const { return pressure_norm_(j); }
  Index d_u() const { return d_u_; }
  Index d_p() const { return d_p_; }
  double dt() const { return dt_; }

 private:
  double t0_ = 0.0, dt_ = 0.0;
  Index d_u_ = 0, d_p_ = 0;
  Vector w_;
  Matrix speed_, pressure_;
  Vector speed_norm_, pressure_norm_;
};

/// Magnitude of a stacked fluid velocity [u; v].
Vector speed_of(const Vector& stacked);

/// Errors of a trajectory whose coefficients live in the given bases.
ErrorSeries error_series(const RomTrajectory& traj, const PodBasis& velocity, const PodBasis& pressure,
                         const ErrorReference& ref);

struct ErrorIntegral {
  double u = 0.0;
  double p = 0.0;
};

/// Left Riemann sum over the samples whose intervals [t_j, t_j + dt] lie in
/// [t0, t1]. Throws ConfigError when no interval lies in the window.
ErrorIntegral error_integral(const ErrorSeries& series, double t0, double t1);
/// Integral over the whole series.
ErrorIntegral error_integral(const ErrorSeries& series);

/// Projection plus the four closure configurations at one mode count.
struct Comparison {
  Index n = 0;
  std::vector<std::string> labels;          // "projection", then the strategies
  std::vector<ErrorSeries> series;          // empty on failure
  std::vector<RomTrajectory> trajectories;  // coefficients per label
  std::vector<std::string> failures;        // empty string when the run succeeded
  ReducedModel model;
};

/// Builds the reduced model with n velocity and q pressure modes, fits the closure and the
/// eddy-viscosity model, and runs every configuration over the training
/// window. Run failures are recorded, not thrown.
Comparison compare_configurations(const SnapshotSet& set, const FineBases& bases, const ErrorReference& ref,
                                  const PipelineConfig& cfg, Index n, Index q,
                                  const RomOperators* shared_fine = nullptr);

struct SweepResult {
  std::vector<Index> n;
  std::vector<std::string> labels;
  Matrix int_u, int_p;  // n.size() x labels.size(); NaN where a run failed
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  Index column(const std::string& label) const;  // throws ConfigError when absent
};

/// Runs compare_configurations at r = q = n for every n concurrently and integrates the
/// errors over the training window. Lower-bound violations of the projection
/// and the hybrid-versus-single-strategy comparison become warnings.
SweepResult mode_sweep(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg,
                       const std::vector<Index>& n_values);

/// Recomputes the warnings of a sweep table.
std::vector<std::string> sweep_warnings(const SweepResult& sweep);

void write_sweep_csv(const SweepResult& sweep, const std::string& path);
SweepResult read_sweep_csv(const std::string& path);
/// Markdown table of the integrals, 4 significant digits.
std::string sweep_table(const SweepResult& sweep);
void write_series_csv(const std::vector<std::string>& labels, const std::vector<ErrorSeries>& series,
                      const std::string& path);

struct Curve {
  std::string label;
  Vector x, y;
};
/// Line plot; non-finite or (for log_y) non-positive points break the line.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Curve>& curves, bool log_y);
/// Two heatmaps of full-grid fields side by side with a shared colour scale.
std::string svg_heatmap_pair(const GridSpec& grid, const Vector& left, const Vector& right, const std::string& title,
                             const std::string& left_label, const std::string& right_label);

/// sweep.csv, sweep.md, sweep.json, sweep_u.svg, sweep_p.svg
void emit_sweep_report(const SweepResult& sweep, const std::string& dir);
/// series.csv, series_u.svg, series_p.svg and heatmaps of pressure and
/// velocity magnitude (FOM frame beside the reconstruction of `label`).
void emit_comparison_report(const Comparison& cmp, const SnapshotSet& set, Index frame, const std::string& label,
                            const std::string& dir);

}  // namespace romforge
