#pragma once

// Straight-line cell-loop evaluation of every reduced operator, written
// independently of the matrix-based assembly. Only the grid geometry (size,
// mask, boundary kinds) and the modes are shared with the library.

#include "romforge/galerkin.hpp"

namespace romforge::testing {

RomOperators naive_operators(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis& nut,
                             double nu, double tau, double u_bc);

/// Largest entrywise difference over every operator, relative to max(1, largest entry).
double max_operator_difference(const RomOperators& a, const RomOperators& b);

}  // namespace romforge::testing
