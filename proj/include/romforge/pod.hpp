#pragma once

#include "romforge/snapshots.hpp"

#include <string>

namespace romforge {

/// Weighted-orthonormal spatial modes stored as columns of fluid-flattened
/// fields (velocity modes stacked [u; v]).
struct PodBasis {
  FieldKind kind = FieldKind::velocity;
  Matrix modes;            // n_dof x n_modes
  Vector singular_values;  // of the POD part, nonincreasing
  Index n_sup = 0;         // supremizer modes contained in `modes`
  Vector weights;          // inner-product weights, length n_dof

  Index size() const { return modes.cols(); }
  Index n_dof() const { return modes.rows(); }
  /// Leading n modes.
  PodBasis head(Index n) const;
  /// Max-norm deviation of the weighted Gramian from the identity.
  double orthonormality_error() const;
};

/// Largest n such that the n-th Gramian eigenvalue is >= 1e-14 * lambda_max.
Index pod_rank(const Matrix& snapshots, const Vector& w);

/// Method of snapshots on the columns of `snapshots`. Throws NumericalError
/// if the n-th eigenvalue falls below 1e-14 * lambda_max.
PodBasis pod(const Matrix& snapshots, const Vector& w, Index n, FieldKind kind);
PodBasis pod(const SnapshotSet& set, FieldKind kind, Index n);

/// Weighted modified Gram-Schmidt (two passes) of `v` against the columns of `q`.
Vector orthogonalize(const Vector& v, const Matrix& q, const Vector& w);

/// Riesz representers s = M^-1 Div^T W chi of the pressure modes, before orthonormalization.
Matrix supremizers_raw(const PodBasis& pressure, const GridSpec& grid);

/// Supremizer modes orthonormalized against `velocity` and each other.
/// Throws NumericalError on a degenerate (zero-norm or dependent) supremizer.
Matrix supremizers(const PodBasis& pressure, const PodBasis& velocity, const GridSpec& grid);

/// Velocity basis followed by supremizer modes.
PodBasis enrich(const PodBasis& velocity, const Matrix& sup);

/// Fine velocity basis of d modes whose leading n_u + sup.cols() modes are
/// enrich(pod_modes.head(n_u), sup); the rest are further POD modes
/// orthonormalized against everything before them.
PodBasis nested_fine_basis(const PodBasis& pod_modes, Index n_u, const Matrix& sup, Index d);

/// Row j holds the weighted projections of snapshot column j onto the first n modes.
Matrix project_columns(const Matrix& snapshots, const PodBasis& basis, Index n);
CoeffSeries project_coeffs(const SnapshotSet& set, const PodBasis& basis, Index n);

/// Field sum_i coeffs_i * mode_i.
Vector reconstruct(const PodBasis& basis, const Vector& coeffs);

void write_basis(const PodBasis& basis, const GridSpec& grid, const std::string& path);
PodBasis read_basis(const std::string& path, const GridSpec& grid);

}  // namespace romforge
