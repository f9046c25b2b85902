#include "romforge/diffops.hpp"

namespace romforge {

namespace {

// Ghost sign of a velocity component at an edge; `normal` tells whether the
// component is normal to that edge.
int velocity_sign(EdgeKind kind, bool normal) {
  switch (kind) {
    case EdgeKind::inflow:
    case EdgeKind::outflow:
      return 1;
    case EdgeKind::free_slip:
      return normal ? -1 : 1;
    case EdgeKind::no_slip:
      return -1;
  }
  return 1;
}

}  // namespace

GhostRule ghost_rule(const GridSpec& grid, Component comp) {
  const BoundaryConditions& bc = grid.bc();
  GhostRule r;
  switch (comp) {
    case Component::velocity_x:
    case Component::velocity_y: {
      const bool x_comp = comp == Component::velocity_x;
      r.edge[kWest] = velocity_sign(bc.west, x_comp);
      r.edge[kEast] = velocity_sign(bc.east, x_comp);
      r.edge[kSouth] = velocity_sign(bc.south, !x_comp);
      r.edge[kNorth] = velocity_sign(bc.north, !x_comp);
      r.solid_x = -1;  // no-slip on the masked obstacle
      r.solid_y = -1;
      break;
    }
    case Component::pressure:
      r.edge[kWest] = bc.west == EdgeKind::outflow ? -1 : 1;
      r.edge[kEast] = bc.east == EdgeKind::outflow ? -1 : 1;
      r.edge[kSouth] = bc.south == EdgeKind::outflow ? -1 : 1;
      r.edge[kNorth] = bc.north == EdgeKind::outflow ? -1 : 1;
      break;
    case Component::scalar:
      break;
  }
  return r;
}

diffops::Velocity unpack_velocity(const GridSpec& grid, const Vector& stacked) {
  const Index nf = grid.n_fluid();
  assert(stacked.size() == 2 * nf);
  return {grid.extend_from_fluid(stacked.head(nf)), grid.extend_from_fluid(stacked.tail(nf))};
}

Vector pack_velocity(const GridSpec& grid, const diffops::Velocity& u) {
  const Index nf = grid.n_fluid();
  Vector out(2 * nf);
  out.head(nf) = grid.restrict_to_fluid(u.x);
  out.tail(nf) = grid.restrict_to_fluid(u.y);
  return out;
}

SparseMatrix probe_linear_map(const GridSpec& grid, Index in_blocks, Index out_blocks,
                              const std::function<Vector(const Vector&)>& apply) {
  const Index nf = grid.n_fluid();
  const auto colour = [&](Index c) { return (grid.col(c) % 3) + 3 * (grid.row(c) % 3); };
  std::vector<Eigen::Triplet<double>> trip;
  for (Index b = 0; b < in_blocks; ++b)
    for (int k = 0; k < 9; ++k) {
      Vector probe = Vector::Zero(in_blocks * nf);
      for (Index s = 0; s < nf; ++s)
        if (colour(grid.fluid_cells()[std::size_t(s)]) == k) probe(b * nf + s) = 1.0;
      const Vector out = apply(probe);
      assert(out.size() == out_blocks * nf);
      for (Index ob = 0; ob < out_blocks; ++ob)
        for (Index s = 0; s < nf; ++s) {
          const double v = out(ob * nf + s);
          if (v == 0.0) continue;
          // the unique cell of colour k in the 3x3 neighbourhood of the output cell
          const Index c = grid.fluid_cells()[std::size_t(s)];
          Index src = -1;
          for (int dj = -1; dj <= 1 && src < 0; ++dj)
            for (int di = -1; di <= 1; ++di) {
              const int i = grid.col(c) + di, j = grid.row(c) + dj;
              if (i < 0 || j < 0 || i >= grid.nx() || j >= grid.ny()) continue;
              const Index cand = grid.index(i, j);
              if (colour(cand) == k && !grid.solid(cand)) {
                src = cand;
                break;
              }
            }
          assert(src >= 0);
          trip.emplace_back(ob * nf + s, b * nf + grid.fluid_slot(src), v);
        }
    }
  SparseMatrix m(out_blocks * nf, in_blocks * nf);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix divergence_matrix(const GridSpec& grid) {
  return probe_linear_map(grid, 2, 1, [&](const Vector& x) {
    return grid.restrict_to_fluid(diffops::div(grid, unpack_velocity(grid, x)));
  });
}

}  // namespace romforge
