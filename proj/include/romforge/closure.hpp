#pragma once

#include "romforge/snapshots.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace romforge {

/// Exact correction terms at the training times.
struct CorrectionSnapshots {
  Vector times;
  Matrix tau_u;  // M x r
  Matrix tau_p;  // M x q, empty for the supremizer formulation
  Index d = 0;   // fine basis size
  Index r = 0, q = 0;
};

/// tau(t_j) = trunc_r(-a_d^T C_d a_d) + a_r^T C a_r, with a_r the leading r columns of a_d.
Matrix exact_velocity_correction(const CoeffSeries& a_d, const Tensor& C_d, const Tensor& C);

/// tau_p(t_j) = trunc_q(D_d b_d) - D b_q + trunc_q(a_d^T G_d a_d) - a_r^T G a_r.
Matrix exact_pressure_correction(const CoeffSeries& a_d, const CoeffSeries& b_d, const Matrix& D_d, const Matrix& D,
                                 const Tensor& G_d, const Tensor& G);

enum class ClosureVariant : std::uint32_t { sup_unconstrained = 0, sup_constrained = 1, ppe_joint = 2 };

const char* to_string(ClosureVariant v);

/// tau(x) = A x + x^T B x with B symmetric in its last two indices. For the
/// joint variant x = (a, b) and the output splits into (tau_u, tau_p).
struct ClosureModel {
  ClosureVariant variant = ClosureVariant::sup_unconstrained;
  Index r = 0, q = 0;
  Matrix A;
  Tensor B;
  double residual = 0.0;  // sum over training times of the squared misfit
  double ridge = 0.0;
  int iterations = 0;
  bool converged = true;
  double sym_a_max_eig = 0.0;  // max eigenvalue of sym(A)
  double sym6_b_max = 0.0;     // max-norm of the full symmetrization of B
  std::vector<std::string> warnings;

  Index n_in() const { return A.cols(); }
  /// Model with zero operators of the given shape.
  static ClosureModel zero(ClosureVariant variant, Index r, Index q);
};

/// Default ridge 1e-8 * trace(regressor Gramian) / unknown count.
double default_ridge(const Matrix& inputs);

/// Unconstrained fit. `ridge` < 0 selects the default. With ridge 0 a
/// rank-deficient regressor throws NumericalError.
ClosureModel fit_unconstrained(const CorrectionSnapshots& corr, const CoeffSeries& a_r, double ridge = -1.0);

struct ConstrainedOptions {
  double ridge = -1.0;
  int max_iter = 20000;
  double tol = 1e-10;
};

/// Fit with sym(A) negative semidefinite and the full symmetrization of B zero.
ClosureModel fit_constrained(const CorrectionSnapshots& corr, const CoeffSeries& a_r, const ConstrainedOptions& opt = {});

/// Joint fit of the stacked (tau_u, tau_p) targets on (a, b).
ClosureModel fit_joint_ppe(const CorrectionSnapshots& corr, const CoeffSeries& ab, double ridge = -1.0);

/// Returns tau_u (length r) and, for the joint variant, tau_p (length q).
std::pair<Vector, std::optional<Vector>> eval_closure(const ClosureModel& model, const Vector& a,
                                                     const Vector* b = nullptr);

/// Max-norm of the full (six-permutation) symmetrization of B.
double sym6_max(const Tensor& B);

void write_closure(const ClosureModel& model, const std::string& path);
ClosureModel read_closure(const std::string& path);

}  // namespace romforge
