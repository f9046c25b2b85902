#include "romforge/romsolve.hpp"

#include "csv.hpp"

#include <algorithm>
#include <Eigen/LU>

#include <cmath>

namespace romforge {

namespace {

struct ClosureValues {
  Vector tau_u;
  Vector tau_p;
};

ClosureValues evaluate_closure(const Vector& a, const Vector& b, const ClosureTerms& terms, const RomRunConfig& cfg) {
  ClosureValues out;
  if (!cfg.c_u && !cfg.c_p) return out;
  if (!terms.closure) throw ConfigError("closure switches are set but no closure model was given");
  const bool joint = terms.closure->variant == ClosureVariant::ppe_joint;
  auto [tau_u, tau_p] = eval_closure(*terms.closure, a, joint ? &b : nullptr);
  out.tau_u = std::move(tau_u);
  if (tau_p) out.tau_p = std::move(*tau_p);
  if (cfg.c_p && out.tau_p.size() == 0) throw ConfigError("c_p needs a joint pressure closure");
  return out;
}

Vector momentum_residual(const Vector& a, const Vector& b, const Vector& a_dot, const RomOperators& ops,
                         const ClosureTerms& terms, const RomRunConfig& cfg, const ClosureValues& cl) {
  Vector res = ops.M * a_dot - ops.nu * (ops.B * a + ops.BT * a) + ops.C.contract(a, a) + ops.H * b;
  for (Index k = 0; k < ops.n_bc(); ++k)
    res -= ops.tau * (ops.u_bc[std::size_t(k)] * ops.Dk[std::size_t(k)] - ops.Ek[std::size_t(k)] * a);
  if (cfg.c_u) res -= cl.tau_u;
  if (cfg.c_t) res -= ops.CT1.contract(terms.g, a) + ops.CT2.contract(terms.g, a);
  return res;
}

Vector pressure_residual(const Vector& a, const Vector& b, const RomOperators& ops, const ClosureTerms& terms,
                         const RomRunConfig& cfg, const ClosureValues& cl) {
  Vector res = ops.D * b + ops.G.contract(a, a);
  if (cfg.c_t) res -= ops.CT3.contract(terms.g, a) + ops.CT4.contract(terms.g, a);
  res -= ops.nu * (ops.N * a);
  res -= ops.L;
  if (cfg.c_p) res += cl.tau_p;
  return res;
}

Vector stack(const Vector& x, const Vector& y) {
  Vector out(x.size() + y.size());
  out << x, y;
  return out;
}

}  // namespace

const char* to_string(Formulation f) { return f == Formulation::sup ? "sup" : "ppe"; }

void RomRunConfig::validate() const {
  if (formulation == Formulation::sup && c_p) throw ConfigError("c_p applies to the pressure Poisson formulation only");
  if (!(dt > 0.0)) throw ConfigError("ROM time step must be positive");
  if (n_steps < 0) throw ConfigError("ROM step count must be >= 0");
  if (record_every < 1 || n_steps % record_every != 0)
    throw ConfigError("record_every must be positive and divide the step count");
  if (!(newton.tol > 0.0) || newton.max_iter < 1 || newton.max_halvings < 0) throw ConfigError("invalid Newton options");
}

Vector TimeHistory::derivative(const Vector& a) const {
  if (scheme == Scheme::order1) return (a - prev) / dt;
  return (3.0 * a - 4.0 * prev + prev2) / (2.0 * dt);
}

Vector residual_sup(const Vector& a, const Vector& b, const TimeHistory& hist, const RomOperators& ops,
                    const ClosureTerms& terms, const RomRunConfig& cfg) {
  const ClosureValues cl = evaluate_closure(a, b, terms, cfg);
  return stack(momentum_residual(a, b, hist.derivative(a), ops, terms, cfg, cl), ops.P * a);
}

Vector residual_ppe(const Vector& a, const Vector& b, const TimeHistory& hist, const RomOperators& ops,
                    const ClosureTerms& terms, const RomRunConfig& cfg) {
  const ClosureValues cl = evaluate_closure(a, b, terms, cfg);
  return stack(momentum_residual(a, b, hist.derivative(a), ops, terms, cfg, cl),
               pressure_residual(a, b, ops, terms, cfg, cl));
}

Vector newton_solve(const std::function<Vector(const Vector&)>& F, Vector x, const NewtonOptions& opt,
                    NewtonStats* stats) {
  Vector f = F(x);
  double norm = f.norm();
  int it = 0;
  while (!(norm <= opt.tol)) {
    if (!std::isfinite(norm)) throw StepFailure("residual became non-finite", norm);
    if (it == opt.max_iter)
      throw StepFailure("Newton did not converge in " + std::to_string(opt.max_iter) + " iterations (residual " +
                            std::to_string(norm) + ")",
                        norm);
    const Index n = x.size();
    const double h = 1e-7 * (1.0 + x.norm());
    Matrix J(f.size(), n);
    for (Index j = 0; j < n; ++j) {
      Vector xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      J.col(j) = (F(xp) - F(xm)) / (2.0 * h);
    }
    if (J.rows() != J.cols()) throw StepFailure("Jacobian is not square", norm);
    const Eigen::PartialPivLU<Matrix> lu(J);
    if (!(lu.rcond() > 1e-15)) throw StepFailure("singular Jacobian (reciprocal condition " + std::to_string(lu.rcond()) + ")", norm);
    const Vector dx = lu.solve(-f);
    double s = 1.0;
    Vector xn = x + dx, fn = F(xn);
    for (int k = 0; k < opt.max_halvings && !(fn.norm() < norm); ++k) {
      s *= 0.5;
      xn = x + s * dx;
      fn = F(xn);
    }
    x = std::move(xn);
    f = std::move(fn);
    norm = f.norm();
    ++it;
  }
  if (stats) *stats = {it, norm};
  return x;
}

Vector step(const Vector& x_guess, Index n_dyn, const TimeHistory& hist,
            const std::function<Vector(const Vector& x, const Vector& a_dot)>& residual, const NewtonOptions& opt,
            NewtonStats* stats) {
  return newton_solve([&](const Vector& x) { return residual(x, hist.derivative(x.head(n_dyn))); }, x_guess, opt,
                      stats);
}

RomTrajectory run_rom(const RomOperators& ops, const ClosureModel* closure, const EddyViscosityFn* ev,
                      const RomRunConfig& cfg, const RomInitialState& init) {
  cfg.validate();
  const Index r = ops.r, q = ops.q;
  if (init.a.size() != r) throw DimensionError("initial state has " + std::to_string(init.a.size()) + " coefficients, operators have r = " + std::to_string(r));
  if ((cfg.c_u || cfg.c_p) && !closure) throw ConfigError("closure switches are set but no closure model was given");
  if (closure && (cfg.c_u || cfg.c_p)) {
    if (closure->r != r) throw DimensionError("closure dimension differs from the operators");
    const bool joint = closure->variant == ClosureVariant::ppe_joint;
    if (joint && cfg.formulation == Formulation::sup) throw ConfigError("joint pressure closure needs the PPE formulation");
    if (joint && closure->q != q) throw DimensionError("closure pressure dimension differs from the operators");
  }
  if (cfg.c_t && !ev) throw ConfigError("c_t is set but no eddy-viscosity model was given");
  if (cfg.formulation == Formulation::ppe && (ops.D.rows() != q || ops.G.dim0() != q))
    throw ConfigError("operators lack the pressure Poisson terms");
  if (cfg.c_t && (ops.n_nut == 0 || ops.CT1.dim1() != ops.n_nut)) throw ConfigError("operators lack the eddy-viscosity tensors");

  const Index n_u = r - ops.n_sup;
  auto eval_g = [&](const Vector& a) -> Vector {
    Vector g = (*ev)(a.head(n_u));
    if (cfg.c_t && g.size() != ops.n_nut)
      throw DimensionError("eddy-viscosity model returns " + std::to_string(g.size()) + " coefficients, operators expect " + std::to_string(ops.n_nut));
    return g;
  };
  ClosureTerms terms{closure, {}};

  const auto residual = [&](const Vector& x, const Vector& a_dot) -> Vector {
    const Vector a = x.head(r), b = x.tail(q);
    const ClosureValues cl = evaluate_closure(a, b, terms, cfg);
    const Vector mom = momentum_residual(a, b, a_dot, ops, terms, cfg, cl);
    return stack(mom, cfg.formulation == Formulation::sup ? Vector(ops.P * a) : pressure_residual(a, b, ops, terms, cfg, cl));
  };

  RomTrajectory traj;
  const Index rows = cfg.n_steps / cfg.record_every + 1;
  traj.times.resize(rows);
  traj.a.resize(rows, r);
  traj.b.resize(rows, q);
  const Index n_g = ev ? ops.n_nut : 0;
  traj.g.resize(rows, n_g);

  Vector a = init.a;
  Vector b = init.b.size() == q ? init.b : Vector(Vector::Zero(q));
  Vector g = ev ? eval_g(a) : Vector();
  if (cfg.c_t) terms.g = g;
  Index done = 0;
  int failed_step = 0;
  auto record = [&](Index row, double t, int iters, double res) {
    traj.times(row) = t;
    traj.a.row(row) = a.transpose();
    traj.b.row(row) = b.transpose();
    if (n_g) traj.g.row(row) = g.transpose();
    traj.newton_iterations.push_back(iters);
    traj.residuals.push_back(res);
    traj.constraint_norms.push_back(ops.P.rows() == q && ops.P.cols() == r ? (ops.P * a).norm() : 0.0);
    done = row + 1;
  };

  try {
    NewtonStats st;
    if (cfg.formulation == Formulation::ppe && q > 0) {
      // pressure coefficients consistent with the initial velocity
      const ClosureTerms t0 = terms;
      b = newton_solve(
          [&](const Vector& bb) {
            const ClosureValues cl = evaluate_closure(a, bb, t0, cfg);
            return pressure_residual(a, bb, ops, t0, cfg, cl);
          },
          b, cfg.newton, &st);
    }
    record(0, init.t0, st.iterations, st.residual);

    Vector a_prev;
    int max_iters = 0;
    double max_res = 0.0;
    for (int n = 0; n < cfg.n_steps; ++n) {
      TimeHistory hist;
      hist.dt = cfg.dt;
      hist.prev = a;
      if (cfg.scheme == Scheme::order2 && n > 0) {
        hist.scheme = Scheme::order2;
        hist.prev2 = a_prev;
      }
      failed_step = n + 1;
      const Vector x = step(stack(a, b), r, hist, residual, cfg.newton, &st);
      a_prev = a;
      a = x.head(r);
      b = x.tail(q);
      if (ev) {
        g = eval_g(a);
        if (cfg.c_t) terms.g = g;
      }
      max_iters = std::max(max_iters, st.iterations);
      max_res = std::max(max_res, st.residual);
      if ((n + 1) % cfg.record_every == 0) {
        record((n + 1) / cfg.record_every, init.t0 + double(n + 1) * cfg.dt, max_iters, max_res);
        max_iters = 0;
        max_res = 0.0;
      }
    }
  } catch (const StepFailure& e) {
    traj.failed = true;
    traj.failure = "step " + std::to_string(failed_step) + ": " + e.what();
  }
  if (done < rows) {
    traj.times.conservativeResize(done);
    traj.a.conservativeResize(done, Eigen::NoChange);
    traj.b.conservativeResize(done, Eigen::NoChange);
    traj.g.conservativeResize(done, Eigen::NoChange);
  }
  return traj;
}

void write_trajectory_csv(const RomTrajectory& traj, const std::string& path) {
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < traj.a.cols(); ++i) header.push_back("a" + std::to_string(i + 1));
  for (Index i = 0; i < traj.b.cols(); ++i) header.push_back("b" + std::to_string(i + 1));
  for (Index i = 0; i < traj.g.cols(); ++i) header.push_back("g" + std::to_string(i + 1));
  header.push_back("newton_iters");
  header.push_back("residual");
  const Index n = traj.n_rows();
  Matrix table(n, Index(header.size()));
  for (Index j = 0; j < n; ++j) {
    table.row(j) << traj.times(j), traj.a.row(j), traj.b.row(j), traj.g.row(j),
        double(traj.newton_iterations[std::size_t(j)]), traj.residuals[std::size_t(j)];
  }
  csv::write_table(path, header, table);
}

}  // namespace romforge
