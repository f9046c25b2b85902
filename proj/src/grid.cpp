#include "romforge/grid.hpp"

#include "romforge/error.hpp"

#include <cmath>
#include <string>

namespace romforge {

namespace {

void check_extent(int nx, int ny, double lx, double ly) {
  if (nx < 3 || ny < 3)
    throw ConfigError("grid needs nx >= 3 and ny >= 3, got " + std::to_string(nx) + "x" +
                      std::to_string(ny));
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw ConfigError("grid extents must be positive and finite");
}

}  // namespace

GridSpec GridSpec::with_obstacle(int nx, int ny, double lx, double ly, const Disk& obstacle,
                                 BoundaryConditions bc) {
  check_extent(nx, ny, lx, ly);
  const double r = obstacle.radius;
  const Eigen::Vector2d& c = obstacle.center;
  if (!(r > 0.0) || c.x() - r <= 0.0 || c.x() + r >= lx || c.y() - r <= 0.0 || c.y() + r >= ly)
    throw ConfigError("obstacle must lie strictly inside the domain");

  const double dx = lx / nx, dy = ly / ny;
  std::vector<std::uint8_t> solid(std::size_t(nx) * ny, 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Eigen::Vector2d p((i + 0.5) * dx, (j + 0.5) * dy);
      if ((p - c).norm() < r) {
        if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1)
          throw ConfigError("obstacle touches the boundary cell layer");
        solid[std::size_t(j) * nx + i] = 1;
      }
    }
  return GridSpec(nx, ny, lx, ly, std::move(solid), bc, obstacle);
}

GridSpec GridSpec::without_obstacle(int nx, int ny, double lx, double ly, BoundaryConditions bc) {
  check_extent(nx, ny, lx, ly);
  return GridSpec(nx, ny, lx, ly, std::vector<std::uint8_t>(std::size_t(nx) * ny, 0), bc,
                  std::nullopt);
}

GridSpec GridSpec::from_mask(int nx, int ny, double lx, double ly, std::vector<std::uint8_t> solid,
                             BoundaryConditions bc) {
  check_extent(nx, ny, lx, ly);
  if (solid.size() != std::size_t(nx) * ny) throw ConfigError("mask size does not match grid");
  return GridSpec(nx, ny, lx, ly, std::move(solid), bc, std::nullopt);
}

GridSpec::GridSpec(int nx, int ny, double lx, double ly, std::vector<std::uint8_t> solid,
                   BoundaryConditions bc, std::optional<Disk> obstacle)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), bc_(bc), obstacle_(obstacle), solid_(std::move(solid)) {
  const Index n = n_cells();
  fluid_slot_.assign(std::size_t(n), -1);
  for (Index c = 0; c < n; ++c)
    if (!solid_[std::size_t(c)]) {
      fluid_slot_[std::size_t(c)] = Index(fluid_cells_.size());
      fluid_cells_.push_back(c);
    }
  if (fluid_cells_.empty()) throw ConfigError("grid has no fluid cells");

  neighbors_.resize(std::size_t(n));
  auto tag = [&](int i, int j, int edge_tag) -> int {
    if (i < 0 || i >= nx_ || j < 0 || j >= ny_) return edge_tag;
    const Index c = index(i, j);
    return solid_[std::size_t(c)] ? kSolid : int(c);
  };
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) {
      auto& nb = neighbors_[std::size_t(index(i, j))];
      nb[kWest] = tag(i - 1, j, kWestEdge);
      nb[kEast] = tag(i + 1, j, kEastEdge);
      nb[kSouth] = tag(i, j - 1, kSouthEdge);
      nb[kNorth] = tag(i, j + 1, kNorthEdge);
    }
}

Vector GridSpec::weights() const {
  Vector w = Vector::Zero(n_cells());
  for (Index c : fluid_cells_) w(c) = cell_area();
  return w;
}

}  // namespace romforge
