#pragma once

#include "romforge/pod.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace romforge {

/// Reduced operators. Velocity index range r, pressure q, eddy viscosity n_nut.
///
///   M (r x r)  (phi_i, phi_j)            B (r x r)  (phi_i, lap phi_j)
///   BT (r x r) (phi_i, div (grad phi_j)^T)
///   C (r,r,r)  (phi_i, div(phi_j (x) phi_k))
///   H (r x q)  (phi_i, grad chi_j)       P (q x r)  (chi_i, div phi_j)
///   D (q x q)  (grad chi_i, grad chi_j)  G (q,r,r)  (grad chi_i, div(phi_j (x) phi_k))
///   N (q x r)  boundary sum of (n x grad chi_i) * curl phi_j
///   CT1 (r,n_nut,r) (phi_i, eta_j lap phi_k)   CT2 (r,n_nut,r) (phi_i, div(eta_j (grad phi_k)^T))
///   CT3, CT4   the same with grad chi_i as test function
///   E^k (r x r), D^k (r) boundary products over Dirichlet patch k
struct RomOperators {
  Index r = 0, q = 0, n_nut = 0, n_sup = 0;
  double nu = 0.0;
  double tau = 1000.0;
  std::vector<double> u_bc;  // Dirichlet value per patch

  Matrix M, B, BT, H, P, D, N;
  Tensor C, G, CT1, CT2, CT3, CT4;
  Vector L;
  std::vector<Vector> Dk;
  std::vector<Matrix> Ek;

  std::uint64_t hash = 0;

  Index n_bc() const { return Index(Dk.size()); }
  bool all_finite() const;
  /// Leading-index restriction to (r, q, n_nut) <= current dims.
  RomOperators truncated(Index r_new, Index q_new, Index n_nut_new) const;
};

struct AssemblyOptions {
  double nu = 1.0 / 150.0;
  double tau = 1000.0;
  double u_bc = 1.0;
  bool velocity = true;  // M, B, BT, C, H, P, E^k, D^k
  bool ppe = true;       // D, G, N, L
  bool turbulence = true;
};

/// Dirichlet patches of the grid: one per inflow edge, listed west, east, south, north.
std::vector<Direction> dirichlet_patches(const GridSpec& grid);

void assemble_velocity_ops(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, RomOperators& ops);
void assemble_ppe_ops(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, RomOperators& ops);
void assemble_turb_tensors(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis& nut,
                           RomOperators& ops);

/// Assembles the requested operator groups; `nut` may be null when turbulence is off.
RomOperators assemble_operators(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis* nut,
                                const AssemblyOptions& opt);

/// FNV-1a hash of grid, boundary kinds, bases and options.
std::uint64_t operators_hash(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis* nut,
                             const AssemblyOptions& opt);

void write_operators(const RomOperators& ops, const std::string& path);
RomOperators read_operators(const std::string& path);

/// Reads `path` if it holds operators with the matching hash, otherwise
/// assembles and writes them there.
RomOperators load_or_assemble(const std::string& path, const GridSpec& grid, const PodBasis& vel,
                              const PodBasis& pres, const PodBasis* nut, const AssemblyOptions& opt);

}  // namespace romforge
