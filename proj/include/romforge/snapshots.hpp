#pragma once

#include "romforge/error.hpp"
#include "romforge/fom.hpp"

#include <string>

namespace romforge {

enum class FieldKind : std::uint32_t { velocity = 0, pressure = 1, eddy_viscosity = 2 };

const char* to_string(FieldKind kind);

void write_snapshots(const SnapshotSet& set, const std::string& path);
/// The file format does not carry boundary kinds; they are supplied by the caller.
SnapshotSet read_snapshots(const std::string& path,
                           const BoundaryConditions& bc = BoundaryConditions::channel());

/// Weighted discrete L2 product sum_c w_c f_c g_c.
template <typename DerivedF, typename DerivedG, typename DerivedW>
typename DerivedF::Scalar ip(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedG>& g,
                             const Eigen::MatrixBase<DerivedW>& w) {
  if (f.size() != g.size() || f.size() != w.size())
    throw DimensionError("ip: length mismatch (" + std::to_string(f.size()) + ", " +
                         std::to_string(g.size()) + ", " + std::to_string(w.size()) + ")");
  return (f.array() * g.array() * w.array().template cast<typename DerivedF::Scalar>()).sum();
}

/// Inner-product weights of a fluid-flattened field of the given kind:
/// cell areas, repeated for both velocity components.
Vector field_weights(const GridSpec& grid, FieldKind kind);

/// Fluid-flattened field of one frame; velocity is stacked [u; v].
Vector frame_field(const GridSpec& grid, const FieldFrame& frame, FieldKind kind);

/// Snapshot matrix with one fluid-flattened field per column.
Matrix snapshot_matrix(const SnapshotSet& set, FieldKind kind);

/// Time series of reduced coefficients, one row per time.
struct CoeffSeries {
  Vector times;
  Matrix values;  // n_times x n_coeffs

  Index n_times() const { return times.size(); }
  Index n_coeffs() const { return values.cols(); }
  /// Throws ConfigError if times are not strictly increasing or values are not finite.
  void validate() const;
  /// Rows [first, first+count).
  CoeffSeries slice(Index first, Index count) const;
  /// Leading `n` columns.
  CoeffSeries head_cols(Index n) const;
};

void write_coeff_csv(const CoeffSeries& series, const std::string& path);
CoeffSeries read_coeff_csv(const std::string& path);

}  // namespace romforge
