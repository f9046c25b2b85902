#pragma once

#include "romforge/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace romforge {

enum class EdgeKind : std::uint8_t { inflow = 0, outflow = 1, free_slip = 2, no_slip = 3 };

/// Boundary kind of each of the four rectangle edges.
struct BoundaryConditions {
  EdgeKind west = EdgeKind::inflow;
  EdgeKind east = EdgeKind::outflow;
  EdgeKind south = EdgeKind::free_slip;
  EdgeKind north = EdgeKind::free_slip;

  static BoundaryConditions channel() { return {}; }
  static BoundaryConditions closed_cavity() {
    return {EdgeKind::no_slip, EdgeKind::no_slip, EdgeKind::no_slip, EdgeKind::no_slip};
  }
  friend bool operator==(const BoundaryConditions&, const BoundaryConditions&) = default;
};

struct Disk {
  Eigen::Vector2d center;
  double radius = 0.0;
};

/// Neighbour slot of a cell. Non-negative values are cell indices; negative
/// values tag what lies beyond the cell face.
enum NeighborTag : int {
  kWestEdge = -1,
  kEastEdge = -2,
  kSouthEdge = -3,
  kNorthEdge = -4,
  kSolid = -5,
};

enum Direction : int { kWest = 0, kEast = 1, kSouth = 2, kNorth = 3 };

/// Uniform structured grid on [0,lx] x [0,ly] with a stair-step solid mask.
///
/// Cells are stored row-major: index = j*nx + i, i along x.
class GridSpec {
 public:
  /// Channel grid with the disk masked out. Throws ConfigError on invalid input.
  static GridSpec with_obstacle(int nx, int ny, double lx, double ly, const Disk& obstacle,
                                BoundaryConditions bc = BoundaryConditions::channel());
  static GridSpec without_obstacle(int nx, int ny, double lx, double ly,
                                   BoundaryConditions bc = BoundaryConditions::channel());
  /// Grid from an explicit solid mask (1 = solid), e.g. when reading files.
  static GridSpec from_mask(int nx, int ny, double lx, double ly, std::vector<std::uint8_t> solid,
                            BoundaryConditions bc = BoundaryConditions::channel());

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double dx() const { return lx_ / nx_; }
  double dy() const { return ly_ / ny_; }
  double cell_area() const { return dx() * dy(); }
  Index n_cells() const { return Index(nx_) * ny_; }
  Index n_fluid() const { return Index(fluid_cells_.size()); }
  const BoundaryConditions& bc() const { return bc_; }
  const std::optional<Disk>& obstacle() const { return obstacle_; }

  Index index(int i, int j) const { return Index(j) * nx_ + i; }
  int col(Index c) const { return int(c % nx_); }
  int row(Index c) const { return int(c / nx_); }
  Eigen::Vector2d center(Index c) const {
    return {(col(c) + 0.5) * dx(), (row(c) + 0.5) * dy()};
  }

  bool solid(Index c) const { return solid_[std::size_t(c)] != 0; }
  const std::vector<std::uint8_t>& solid_mask() const { return solid_; }

  /// Full-grid indices of fluid cells, in increasing order.
  const std::vector<Index>& fluid_cells() const { return fluid_cells_; }
  /// Position in the fluid ordering, or -1 for solid cells.
  Index fluid_slot(Index c) const { return fluid_slot_[std::size_t(c)]; }

  /// Neighbour of cell c in direction d (a cell index or a NeighborTag).
  int neighbor(Index c, Direction d) const { return neighbors_[std::size_t(c)][d]; }

  /// Per-cell quadrature weights: cell area on fluid cells, zero on solid.
  Vector weights() const;

  /// Full-grid field -> fluid-only vector.
  template <typename Derived>
  VectorX<typename Derived::Scalar> restrict_to_fluid(const Eigen::MatrixBase<Derived>& full) const {
    const auto& f = full.eval();  // expressions are evaluated once, not per entry
    VectorX<typename Derived::Scalar> out(n_fluid());
    for (Index k = 0; k < n_fluid(); ++k) out(k) = f(fluid_cells_[std::size_t(k)]);
    return out;
  }
  /// Fluid-only vector -> full-grid field with zeros on solid cells.
  template <typename Derived>
  VectorX<typename Derived::Scalar> extend_from_fluid(const Eigen::MatrixBase<Derived>& fluid) const {
    const auto& f = fluid.eval();
    VectorX<typename Derived::Scalar> out = VectorX<typename Derived::Scalar>::Zero(n_cells());
    for (Index k = 0; k < n_fluid(); ++k) out(fluid_cells_[std::size_t(k)]) = f(k);
    return out;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.lx_ == b.lx_ && a.ly_ == b.ly_ &&
           a.bc_ == b.bc_ && a.solid_ == b.solid_;
  }

 private:
  GridSpec(int nx, int ny, double lx, double ly, std::vector<std::uint8_t> solid,
           BoundaryConditions bc, std::optional<Disk> obstacle);

  int nx_ = 0, ny_ = 0;
  double lx_ = 0.0, ly_ = 0.0;
  BoundaryConditions bc_;
  std::optional<Disk> obstacle_;
  std::vector<std::uint8_t> solid_;
  std::vector<Index> fluid_cells_;
  std::vector<Index> fluid_slot_;
  std::vector<std::array<int, 4>> neighbors_;
};

}  // namespace romforge
