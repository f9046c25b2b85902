#pragma once

#include "romforge/closure.hpp"
#include "romforge/galerkin.hpp"

#include <functional>
#include <string>
#include <vector>

namespace romforge {

enum class Formulation { sup, ppe };
enum class Scheme { order1, order2 };  // implicit Euler, BDF2

const char* to_string(Formulation f);

struct NewtonOptions {
  double tol = 1e-10;  // absolute, on the stacked residual
  int max_iter = 25;
  int max_halvings = 8;
};

struct RomRunConfig {
  Formulation formulation = Formulation::ppe;
  bool c_u = false, c_p = false, c_t = false;
  Scheme scheme = Scheme::order2;
  double dt = 0.1;
  int n_steps = 100;
  /// Store every k-th step (n_steps must be a multiple of k); Newton
  /// diagnostics of a stored row are the maxima over the steps since the last one.
  int record_every = 1;
  NewtonOptions newton;

  /// Throws ConfigError for inconsistent switches (c_p with the supremizer formulation).
  void validate() const;
};

/// Step failure: Newton did not converge or the Jacobian was singular.
class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, double residual) : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Previous states for the time derivative stencil.
struct TimeHistory {
  Scheme scheme = Scheme::order1;
  double dt = 1.0;
  Vector prev;   // a^n
  Vector prev2;  // a^{n-1}, order2 only
  Vector derivative(const Vector& a) const;
};

/// Lagged inputs of the closure terms at the current step.
struct ClosureTerms {
  const ClosureModel* closure = nullptr;  // required when c_u or c_p is set
  Vector g;                               // eddy-viscosity coefficients, required when c_t is set
};

/// Stacked (momentum, constraint) residual of the supremizer formulation.
Vector residual_sup(const Vector& a, const Vector& b, const TimeHistory& hist, const RomOperators& ops,
                    const ClosureTerms& terms, const RomRunConfig& cfg);
/// Stacked (momentum, pressure Poisson) residual.
Vector residual_ppe(const Vector& a, const Vector& b, const TimeHistory& hist, const RomOperators& ops,
                    const ClosureTerms& terms, const RomRunConfig& cfg);

struct NewtonStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Newton with central finite-difference Jacobian on F(x) = 0. Throws StepFailure.
Vector newton_solve(const std::function<Vector(const Vector&)>& F, Vector x, const NewtonOptions& opt,
                    NewtonStats* stats = nullptr);

/// One implicit step for x = (a, extra unknowns); `residual(x, a_dot)` with
/// a = x.head(n_dyn) and a_dot from the scheme stencil.
Vector step(const Vector& x_guess, Index n_dyn, const TimeHistory& hist,
            const std::function<Vector(const Vector& x, const Vector& a_dot)>& residual, const NewtonOptions& opt,
            NewtonStats* stats = nullptr);

using EddyViscosityFn = std::function<Vector(const Vector& a_velocity)>;

struct RomTrajectory {
  Vector times;
  Matrix a, b, g;  // one row per time
  std::vector<int> newton_iterations;
  std::vector<double> residuals;
  std::vector<double> constraint_norms;  // ||P a|| per row (supremizer formulation)
  bool failed = false;
  std::string failure;

  Index n_rows() const { return times.size(); }
};

struct RomInitialState {
  double t0 = 0.0;
  Vector a;  // r coefficients
  Vector b;  // q coefficients; initial guess (SUP) or ignored (PPE, solved)
};

/// Integrates the reduced system. `ev` maps the leading r - n_sup velocity
/// coefficients to eddy-viscosity coefficients and is evaluated at the
/// previous time level. A failed step ends the run and flags the trajectory.
RomTrajectory run_rom(const RomOperators& ops, const ClosureModel* closure, const EddyViscosityFn* ev,
                      const RomRunConfig& cfg, const RomInitialState& init);

void write_trajectory_csv(const RomTrajectory& traj, const std::string& path);

}  // namespace romforge
