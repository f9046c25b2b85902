#pragma once

// Discrete differential operators on cell-centred fields.
//
// All operators act on full-grid arrays (length nx*ny, row-major) and return
// zero on solid cells. Values across a cell face that leaves the fluid region
// are supplied by ghost rules: the ghost value is +f_c (mirror, zero normal
// gradient at the face) or -f_c (antimirror, zero value at the face). With
// these rules every first derivative is a central difference, the divergence
// is the face-flux divergence of face-averaged velocities, and the Laplacian
// is the compact five-point stencil.

#include "romforge/grid.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <functional>

namespace romforge {

enum class Component { velocity_x, velocity_y, pressure, scalar };

struct GhostRule {
  std::array<int, 4> edge{1, 1, 1, 1};  // west, east, south, north
  int solid_x = 1;                      // solid neighbour across an x-normal face
  int solid_y = 1;                      // solid neighbour across a y-normal face

  /// Rule obeyed by the x-derivative of a field with this rule.
  GhostRule d_dx() const {
    GhostRule r = *this;
    r.edge[kWest] = -r.edge[kWest];
    r.edge[kEast] = -r.edge[kEast];
    r.solid_x = -r.solid_x;
    return r;
  }
  GhostRule d_dy() const {
    GhostRule r = *this;
    r.edge[kSouth] = -r.edge[kSouth];
    r.edge[kNorth] = -r.edge[kNorth];
    r.solid_y = -r.solid_y;
    return r;
  }
  /// Rule obeyed by the pointwise product of two fields.
  friend GhostRule operator*(const GhostRule& a, const GhostRule& b) {
    GhostRule r;
    for (int e = 0; e < 4; ++e) r.edge[std::size_t(e)] = a.edge[std::size_t(e)] * b.edge[std::size_t(e)];
    r.solid_x = a.solid_x * b.solid_x;
    r.solid_y = a.solid_y * b.solid_y;
    return r;
  }
  friend bool operator==(const GhostRule&, const GhostRule&) = default;
};

/// Ghost rule of a field component under the grid's boundary conditions.
GhostRule ghost_rule(const GridSpec& grid, Component comp);

namespace diffops {

template <typename Derived>
typename Derived::Scalar neighbor_value(const GridSpec& grid, const Eigen::MatrixBase<Derived>& f,
                                        Index c, Direction d, const GhostRule& rule) {
  const int nb = grid.neighbor(c, d);
  if (nb >= 0) return f(nb);
  int sign;
  if (nb == kSolid)
    sign = (d == kWest || d == kEast) ? rule.solid_x : rule.solid_y;
  else
    sign = rule.edge[std::size_t(-nb - 1)];
  return typename Derived::Scalar(sign) * f(c);
}

/// Central x-derivative.
template <typename Derived>
VectorX<typename Derived::Scalar> ddx(const GridSpec& grid, const Eigen::MatrixBase<Derived>& f,
                                      const GhostRule& rule) {
  using S = typename Derived::Scalar;
  VectorX<S> out = VectorX<S>::Zero(grid.n_cells());
  const S inv = S(1) / S(2 * grid.dx());
  for (Index c : grid.fluid_cells())
    out(c) = (neighbor_value(grid, f, c, kEast, rule) - neighbor_value(grid, f, c, kWest, rule)) * inv;
  return out;
}

/// Central y-derivative.
template <typename Derived>
VectorX<typename Derived::Scalar> ddy(const GridSpec& grid, const Eigen::MatrixBase<Derived>& f,
                                      const GhostRule& rule) {
  using S = typename Derived::Scalar;
  VectorX<S> out = VectorX<S>::Zero(grid.n_cells());
  const S inv = S(1) / S(2 * grid.dy());
  for (Index c : grid.fluid_cells())
    out(c) = (neighbor_value(grid, f, c, kNorth, rule) - neighbor_value(grid, f, c, kSouth, rule)) * inv;
  return out;
}

/// Compact five-point Laplacian.
template <typename Derived>
VectorX<typename Derived::Scalar> laplacian(const GridSpec& grid, const Eigen::MatrixBase<Derived>& f,
                                            const GhostRule& rule) {
  using S = typename Derived::Scalar;
  VectorX<S> out = VectorX<S>::Zero(grid.n_cells());
  const S ix2 = S(1) / S(grid.dx() * grid.dx());
  const S iy2 = S(1) / S(grid.dy() * grid.dy());
  for (Index c : grid.fluid_cells()) {
    const S fc = f(c);
    out(c) = (neighbor_value(grid, f, c, kEast, rule) - 2 * fc + neighbor_value(grid, f, c, kWest, rule)) * ix2 +
             (neighbor_value(grid, f, c, kNorth, rule) - 2 * fc + neighbor_value(grid, f, c, kSouth, rule)) * iy2;
  }
  return out;
}

/// A velocity-like vector field as two full-grid component arrays.
template <typename Scalar>
struct VectorField {
  VectorX<Scalar> x;
  VectorX<Scalar> y;
};
using Velocity = VectorField<double>;

template <typename Derived>
VectorField<typename Derived::Scalar> grad(const GridSpec& grid, const Eigen::MatrixBase<Derived>& f,
                                           Component comp) {
  const GhostRule r = ghost_rule(grid, comp);
  return {ddx(grid, f, r), ddy(grid, f, r)};
}

template <typename Scalar>
VectorX<Scalar> div(const GridSpec& grid, const VectorField<Scalar>& u) {
  return ddx(grid, u.x, ghost_rule(grid, Component::velocity_x)) +
         ddy(grid, u.y, ghost_rule(grid, Component::velocity_y));
}

template <typename Scalar>
VectorField<Scalar> vector_laplacian(const GridSpec& grid, const VectorField<Scalar>& u) {
  return {laplacian(grid, u.x, ghost_rule(grid, Component::velocity_x)),
          laplacian(grid, u.y, ghost_rule(grid, Component::velocity_y))};
}

/// Divergence of the tensor a (x) b, i.e. component c is d_x(a_x b_c) + d_y(a_y b_c).
template <typename Scalar>
VectorField<Scalar> convection(const GridSpec& grid, const VectorField<Scalar>& a,
                               const VectorField<Scalar>& b) {
  const GhostRule rx = ghost_rule(grid, Component::velocity_x);
  const GhostRule ry = ghost_rule(grid, Component::velocity_y);
  const VectorX<Scalar> axbx = a.x.cwiseProduct(b.x);
  const VectorX<Scalar> aybx = a.y.cwiseProduct(b.x);
  const VectorX<Scalar> axby = a.x.cwiseProduct(b.y);
  const VectorX<Scalar> ayby = a.y.cwiseProduct(b.y);
  return {ddx(grid, axbx, rx * rx) + ddy(grid, aybx, ry * rx),
          ddx(grid, axby, rx * ry) + ddy(grid, ayby, ry * ry)};
}

/// Divergence of kappa (grad u)^T, component i is sum_j d_j(kappa d_i u_j).
/// kappa is a scalar field with mirror ghost rule; pass nullptr for kappa = 1.
template <typename Scalar>
VectorField<Scalar> transpose_grad_div(const GridSpec& grid, const VectorField<Scalar>& u,
                                       const VectorX<Scalar>* kappa = nullptr) {
  const GhostRule rx = ghost_rule(grid, Component::velocity_x);
  const GhostRule ry = ghost_rule(grid, Component::velocity_y);
  const GhostRule rk = ghost_rule(grid, Component::scalar);
  auto weighted = [&](VectorX<Scalar> v) {
    if (kappa) v = v.cwiseProduct(*kappa);
    return v;
  };
  // d_i u_j fields
  const VectorX<Scalar> dxu = weighted(ddx(grid, u.x, rx));
  const VectorX<Scalar> dxv = weighted(ddx(grid, u.y, ry));
  const VectorX<Scalar> dyu = weighted(ddy(grid, u.x, rx));
  const VectorX<Scalar> dyv = weighted(ddy(grid, u.y, ry));
  return {ddx(grid, dxu, rk * rx.d_dx()) + ddy(grid, dxv, rk * ry.d_dx()),
          ddx(grid, dyu, rk * rx.d_dy()) + ddy(grid, dyv, rk * ry.d_dy())};
}

/// Scalar vorticity d_x v - d_y u.
template <typename Scalar>
VectorX<Scalar> vorticity(const GridSpec& grid, const VectorField<Scalar>& u) {
  return ddx(grid, u.y, ghost_rule(grid, Component::velocity_y)) -
         ddy(grid, u.x, ghost_rule(grid, Component::velocity_x));
}

}  // namespace diffops

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Matrix of a linear map between stacked fluid-flattened fields
/// (in_blocks resp. out_blocks fields of length n_fluid each), recovered by
/// probing with 3x3-coloured indicator fields. Valid for stencils that reach
/// at most one cell in each direction.
SparseMatrix probe_linear_map(const GridSpec& grid, Index in_blocks, Index out_blocks,
                              const std::function<Vector(const Vector&)>& apply);

/// Discrete divergence as a matrix from stacked [u; v] to fluid cells.
SparseMatrix divergence_matrix(const GridSpec& grid);

/// Fluid-flattened stacked velocity [u; v] (length 2*n_fluid) <-> full-grid components.
diffops::Velocity unpack_velocity(const GridSpec& grid, const Vector& stacked);
Vector pack_velocity(const GridSpec& grid, const diffops::Velocity& u);

}  // namespace romforge
