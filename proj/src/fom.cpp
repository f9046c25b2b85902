#include "romforge/fom.hpp"

#include "romforge/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace romforge {

using diffops::Velocity;

int FomConfig::resolved_spinup_steps() const {
  if (spinup_steps) return *spinup_steps;
  // spin-up is 25% of all solver steps
  return (sample_every * std::max(n_samples - 1, 0)) / 3;
}

void FomConfig::validate(const GridSpec& grid) const {
  if (grid.nx() < 8 || grid.ny() < 8)
    throw ConfigError("full-order grid needs nx >= 8 and ny >= 8, got " + std::to_string(grid.nx()) + "x" +
                      std::to_string(grid.ny()));
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be positive");
  if (!(u_in >= 0.0) || !std::isfinite(u_in)) throw ConfigError("u_in must be non-negative");
  if (!(dt_fom > 0.0)) throw ConfigError("dt_fom must be positive");
  const double cfl = u_in * dt_fom / std::min(grid.dx(), grid.dy());
  if (!(cfl < 0.5))
    throw ConfigError("advective CFL number " + std::to_string(cfl) + " violates the bound 0.5");
  if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (resolved_spinup_steps() < 0) throw ConfigError("spinup_steps must be >= 0");
  if (!(smagorinsky_cs >= 0.0)) throw ConfigError("smagorinsky_cs must be non-negative");
  if (!(poisson_tol > 0.0)) throw ConfigError("poisson_tol must be positive");
  if (!(pressure_smoothing > 0.0) || !std::isfinite(pressure_smoothing))
    throw ConfigError("pressure_smoothing must be positive");
  const BoundaryConditions& bc = grid.bc();
  if (bc.west != EdgeKind::inflow || bc.east != EdgeKind::outflow ||
      bc.south == EdgeKind::inflow || bc.south == EdgeKind::outflow ||
      bc.north == EdgeKind::inflow || bc.north == EdgeKind::outflow)
    throw ConfigError("full-order solver needs west inflow, east outflow and walls elsewhere");
}

void SnapshotSet::validate() const {
  if (weights.size() != grid.n_cells()) throw ConfigError("weights size does not match grid");
  for (Index c = 0; c < grid.n_cells(); ++c) {
    if (grid.solid(c) ? weights(c) != 0.0 : !(weights(c) > 0.0))
      throw ConfigError("weights must be positive on fluid cells and zero on solid cells");
  }
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const FieldFrame& f = frames[k];
    for (const Vector* a : {&f.u, &f.v, &f.p, &f.nu_t})
      if (a->size() != grid.n_cells()) throw ConfigError("frame array size does not match grid");
    if (k > 0) {
      const double step = f.t - frames[k - 1].t;
      if (!(step > 0.0)) throw ConfigError("frame times must be strictly increasing");
      if (std::abs(step - dt_snap) > 1e-9 * std::max(1.0, std::abs(f.t)))
        throw ConfigError("frame spacing differs from dt_snap");
    }
  }
}

Vector eddy_viscosity_field(const GridSpec& grid, const Vector& u, const Vector& v, double cs) {
  const GhostRule rx = ghost_rule(grid, Component::velocity_x);
  const GhostRule ry = ghost_rule(grid, Component::velocity_y);
  const Vector ux = diffops::ddx(grid, u, rx);
  const Vector uy = diffops::ddy(grid, u, rx);
  const Vector vx = diffops::ddx(grid, v, ry);
  const Vector vy = diffops::ddy(grid, v, ry);
  const double scale = cs * cs * grid.cell_area();
  Vector nut = Vector::Zero(grid.n_cells());
  for (Index c : grid.fluid_cells()) {
    const double sxy = 0.5 * (uy(c) + vx(c));
    const double two_ss = 2.0 * (ux(c) * ux(c) + vy(c) * vy(c) + 2.0 * sxy * sxy);
    nut(c) = scale * std::sqrt(two_ss);
  }
  return nut;
}

namespace {

// CG preconditioner built from a sparse Cholesky factorization of the
// matrix. The Poisson matrix is fixed for the whole run, so the factor is
// computed once and CG typically converges in one or two iterations.
class CholeskyPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  template <typename MatType>
  CholeskyPreconditioner& analyzePattern(const MatType&) { return *this; }
  template <typename MatType>
  CholeskyPreconditioner& factorize(const MatType& mat) { return compute(mat); }
  template <typename MatType>
  CholeskyPreconditioner& compute(const MatType& mat) {
    llt_.compute(mat);
    return *this;
  }
  template <typename Rhs>
  Vector solve(const Eigen::MatrixBase<Rhs>& b) const { return llt_.solve(b); }
  Eigen::ComputationInfo info() const { return llt_.info(); }

 private:
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

// Chorin projection on the collocated grid. Face fluxes are the averages of the
// adjacent cell velocities (the central divergence operator), the pressure
// Poisson operator is the compact Laplacian with the pressure ghost rule, and
// cell velocities receive the central pressure gradient.
class Projector {
 public:
  Projector(const GridSpec& grid, const FomConfig& cfg) : grid_(grid) {
    const Index n = grid.n_fluid();
    const GhostRule rule = ghost_rule(grid, Component::pressure);
    const double ix2 = 1.0 / (grid.dx() * grid.dx());
    const double iy2 = 1.0 / (grid.dy() * grid.dy());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(5 * n));
    for (Index k = 0; k < n; ++k) {
      const Index c = grid.fluid_cells()[std::size_t(k)];
      double diag = 0.0;
      for (int d = 0; d < 4; ++d) {
        const double w = d < 2 ? ix2 : iy2;
        const int nb = grid.neighbor(c, Direction(d));
        diag -= w;
        if (nb >= 0) {
          trip.emplace_back(k, grid.fluid_slot(nb), -w);
        } else {
          const int sign = nb == kSolid ? (d < 2 ? rule.solid_x : rule.solid_y)
                                        : rule.edge[std::size_t(-nb - 1)];
          diag += sign * w;
        }
      }
      trip.emplace_back(k, k, -diag);
    }
    // negated Laplacian, symmetric positive definite with an outflow face
    neg_laplacian_.resize(n, n);
    neg_laplacian_.setFromTriplets(trip.begin(), trip.end());
    solver_.setTolerance(cfg.poisson_tol);
    solver_.setMaxIterations(cfg.poisson_max_iter);
    solver_.compute(neg_laplacian_);
    if (solver_.info() != Eigen::Success)
      throw NumericalError("pressure Poisson preconditioner setup failed");
    for (Vector& g : guesses_) g = Vector::Zero(n);
  }

  /// Projects u in place and records the remaining face-flux divergence.
  /// `stage` selects the warm-start slot.
  void project(Velocity& u, double dt_eff, const std::vector<std::uint8_t>& fixed, int stage) {
    Vector& pressure_ = guesses_[std::size_t(stage)];
    const Vector divergence = diffops::div(grid_, u);
    const Vector rhs = -grid_.restrict_to_fluid(divergence) / dt_eff;
    if (rhs.squaredNorm() == 0.0) {
      pressure_.setZero();
    } else {
      pressure_ = solver_.solveWithGuess(rhs, pressure_);
      if (solver_.info() != Eigen::Success)
        throw NumericalError("pressure Poisson solve did not converge after " +
                             std::to_string(solver_.iterations()) + " iterations (relative residual " +
                             std::to_string(solver_.error()) + ")");
      max_iterations_ = std::max(max_iterations_, int(solver_.iterations()));
    }
    const Vector p = grid_.extend_from_fluid(pressure_);
    const GhostRule rule = ghost_rule(grid_, Component::pressure);
    const Vector lap_p = diffops::laplacian(grid_, p, rule);
    last_divergence_ = (divergence - dt_eff * lap_p).cwiseAbs().maxCoeff();

    const Vector px = diffops::ddx(grid_, p, rule);
    const Vector py = diffops::ddy(grid_, p, rule);
    for (Index c : grid_.fluid_cells()) {
      if (fixed[std::size_t(c)]) continue;
      u.x(c) -= dt_eff * px(c);
      u.y(c) -= dt_eff * py(c);
    }
  }

  double last_divergence() const { return last_divergence_; }
  int max_iterations() const { return max_iterations_; }

 private:
  const GridSpec& grid_;
  Eigen::SparseMatrix<double> neg_laplacian_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           CholeskyPreconditioner>
      solver_;
  std::array<Vector, 3> guesses_;
  double last_divergence_ = 0.0;
  int max_iterations_ = 0;
};

// Momentum forcing -conv + viscous + eddy-viscosity stress, without
// pressure; `fixed` cells (the inflow column) get zero when given.
Velocity momentum_rhs(const GridSpec& grid, const FomConfig& cfg, const Velocity& u,
                      const std::vector<std::uint8_t>* fixed) {
  const Velocity conv = diffops::convection(grid, u, u);
  const Velocity lap = diffops::vector_laplacian(grid, u);
  const Velocity tgd = diffops::transpose_grad_div(grid, u);
  Velocity f{-conv.x + cfg.nu * (lap.x + tgd.x), -conv.y + cfg.nu * (lap.y + tgd.y)};
  if (cfg.eddy_viscosity_in_momentum && cfg.smagorinsky_cs > 0.0) {
    const Vector nut = eddy_viscosity_field(grid, u.x, u.y, cfg.smagorinsky_cs);
    const Velocity tgd_t = diffops::transpose_grad_div(grid, u, &nut);
    f.x += nut.cwiseProduct(lap.x) + tgd_t.x;
    f.y += nut.cwiseProduct(lap.y) + tgd_t.y;
  }
  if (fixed)
    for (Index c : grid.fluid_cells())
      if ((*fixed)[std::size_t(c)]) f.x(c) = f.y(c) = 0.0;
  return f;
}

// Pressure recorded with each frame: the gradient part of the momentum
// forcing, p = argmin |grad p - f|^2 + eps <p, -lap p>, with the central
// gradient and a small compact-Laplacian penalty against checkerboarding.
// The projection pressure of the time stepper also carries the correction of
// the divergence left over by earlier approximate projections, which no
// pressure equation in terms of the current velocity reproduces.
class ConsistentPressure {
 public:
  ConsistentPressure(const GridSpec& grid, double eps) : grid_(grid) {
    grad_ = probe_linear_map(grid, 1, 2, [&](const Vector& x) {
      return pack_velocity(grid, diffops::grad(grid, grid.extend_from_fluid(x), Component::pressure));
    });
    const GhostRule rule = ghost_rule(grid, Component::pressure);
    const SparseMatrix lap = probe_linear_map(grid, 1, 1, [&](const Vector& x) {
      return Vector(grid.restrict_to_fluid(diffops::laplacian(grid, grid.extend_from_fluid(x), rule)));
    });
    // uniform cell weights cancel from the normal equations
    const SparseMatrix normal = SparseMatrix(grad_.transpose() * grad_) - eps * lap;
    ldlt_.compute(normal);
    if (ldlt_.info() != Eigen::Success) throw NumericalError("pressure recovery matrix factorization failed");
  }

  Vector operator()(const Velocity& forcing) const {
    const Vector rhs = grad_.transpose() * pack_velocity(grid_, forcing);
    const Vector p = ldlt_.solve(rhs);
    return grid_.extend_from_fluid(p);
  }

 private:
  const GridSpec& grid_;
  SparseMatrix grad_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

Velocity axpy(double a, const Velocity& x, double b, const Velocity& y) {
  return {a * x.x + b * y.x, a * x.y + b * y.y};
}

}  // namespace

SnapshotSet run_fom(const GridSpec& grid, const FomConfig& cfg, FomDiagnostics* diagnostics) {
  cfg.validate(grid);
  const Index n = grid.n_cells();
  const double dt = cfg.dt_fom;

  // inflow column held at (u_in, 0)
  std::vector<std::uint8_t> fixed(std::size_t(n), 0);
  for (int j = 0; j < grid.ny(); ++j) fixed[std::size_t(grid.index(0, j))] = 1;

  Velocity u{Vector::Zero(n), Vector::Zero(n)};
  const double diameter = grid.obstacle() ? 2.0 * grid.obstacle()->radius : 0.1 * grid.ly();
  const Eigen::Vector2d bump_center =
      grid.obstacle() ? Eigen::Vector2d(grid.obstacle()->center + Eigen::Vector2d(1.5 * diameter, 0.0))
                      : Eigen::Vector2d(0.5 * grid.lx(), 0.5 * grid.ly());
  for (Index c : grid.fluid_cells()) {
    u.x(c) = cfg.u_in;
    if (!fixed[std::size_t(c)]) {
      const double r2 = (grid.center(c) - bump_center).squaredNorm() / (diameter * diameter);
      u.y(c) = cfg.perturbation * cfg.u_in * std::exp(-r2);
    }
  }

  Projector projector(grid, cfg);
  const ConsistentPressure recorded_pressure(grid, cfg.pressure_smoothing);
  projector.project(u, dt, fixed, 2);

  const int spinup = cfg.resolved_spinup_steps();
  const int total = spinup + cfg.sample_every * (cfg.n_samples - 1);

  SnapshotSet out{grid, {}, grid.weights(), dt * cfg.sample_every};
  out.frames.reserve(std::size_t(cfg.n_samples));
  FomDiagnostics diag;

  auto emit = [&](int step) {
    FieldFrame frame;
    // same expression the snapshot reader uses, so times survive a round trip
    frame.t = out.frames.empty() ? step * dt : out.frames.front().t + double(out.frames.size()) * out.dt_snap;
    frame.u = u.x;
    frame.v = u.y;
    frame.p = recorded_pressure(momentum_rhs(grid, cfg, u, nullptr));
    frame.nu_t = eddy_viscosity_field(grid, u.x, u.y, cfg.smagorinsky_cs);
    out.frames.push_back(std::move(frame));
    diag.max_divergence.push_back(projector.last_divergence());
  };

  if (total == 0 || spinup == 0) emit(0);
  for (int step = 1; step <= total; ++step) {
    // SSP-RK3, each stage projected with its effective time increment
    const Velocity f0 = momentum_rhs(grid, cfg, u, &fixed);
    Velocity u1 = axpy(1.0, u, dt, f0);
    projector.project(u1, dt, fixed, 0);
    const Velocity f1 = momentum_rhs(grid, cfg, u1, &fixed);
    Velocity u2 = axpy(0.75, u, 0.25, axpy(1.0, u1, dt, f1));
    projector.project(u2, 0.25 * dt, fixed, 1);
    const Velocity f2 = momentum_rhs(grid, cfg, u2, &fixed);
    u = axpy(1.0 / 3.0, u, 2.0 / 3.0, axpy(1.0, u2, dt, f2));
    projector.project(u, 2.0 / 3.0 * dt, fixed, 2);

    if (!u.x.allFinite() || !u.y.allFinite())
      throw NumericalError("full-order solution became non-finite at step " + std::to_string(step));
    if (step >= spinup && (step - spinup) % cfg.sample_every == 0 &&
        int(out.frames.size()) < cfg.n_samples)
      emit(step);
  }

  diag.max_poisson_iterations = projector.max_iterations();
  diag.total_steps = total;
  if (diagnostics) *diagnostics = std::move(diag);
  return out;
}

}  // namespace romforge
