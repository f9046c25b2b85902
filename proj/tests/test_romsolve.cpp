#include "support/test_data.hpp"

#include "romforge/pipeline.hpp"
#include "romforge/romsolve.hpp"

#include <doctest.h>

#include <cmath>

using namespace romforge;
using namespace romforge::testing;

namespace {

Tensor random_tensor(Index n0, Index n1, Index n2, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(n0, n1, n2);
  t.unfolded() = random_matrix(n0, n1 * n2, rng, scale);
  return t;
}

// operators with every term populated
RomOperators random_ops(Index r, Index q, Index n_nut, std::mt19937_64& rng) {
  RomOperators o;
  o.r = r;
  o.q = q;
  o.n_nut = n_nut;
  o.nu = 0.37;
  o.tau = 11.0;
  o.u_bc = {1.3, -0.4};
  const Matrix S = random_matrix(r, r, rng);
  o.M = Matrix::Identity(r, r) + 0.1 * S * S.transpose();
  o.B = random_matrix(r, r, rng);
  o.BT = random_matrix(r, r, rng);
  o.H = random_matrix(r, q, rng);
  o.P = random_matrix(q, r, rng);
  const Matrix T = random_matrix(q, q, rng);
  o.D = Matrix::Identity(q, q) + T * T.transpose();
  o.N = random_matrix(q, r, rng);
  o.C = random_tensor(r, r, r, rng);
  o.G = random_tensor(q, r, r, rng);
  o.CT1 = random_tensor(r, n_nut, r, rng);
  o.CT2 = random_tensor(r, n_nut, r, rng);
  o.CT3 = random_tensor(q, n_nut, r, rng);
  o.CT4 = random_tensor(q, n_nut, r, rng);
  o.L = random_matrix(q, 1, rng);
  for (int k = 0; k < 2; ++k) {
    o.Dk.push_back(random_matrix(r, 1, rng));
    o.Ek.push_back(random_matrix(r, r, rng));
  }
  return o;
}

// a' = K a with nothing else: M = I, B = K / nu
RomOperators linear_ops(const Matrix& K) {
  const Index r = K.rows();
  RomOperators o;
  o.r = r;
  o.q = 0;
  o.nu = 1.0;
  o.M = Matrix::Identity(r, r);
  o.B = K;
  o.BT = Matrix::Zero(r, r);
  o.H = Matrix(r, 0);
  o.P = Matrix(0, r);
  o.D = Matrix(0, 0);
  o.N = Matrix(0, r);
  o.C = Tensor(r, r, r);
  o.G = Tensor(0, r, r);
  o.L = Vector(0);
  return o;
}

// straight-line evaluation of the stacked residual
Vector oracle_residual(const Vector& a, const Vector& b, const Vector& a_dot, const RomOperators& o, const Vector& g,
                       const Vector& tau_u, const Vector& tau_p, bool cu, bool cp, bool ct, bool ppe) {
  const Index r = o.r, q = o.q;
  Vector out = Vector::Zero(r + q);
  for (Index i = 0; i < r; ++i) {
    double s = 0.0;
    for (Index j = 0; j < r; ++j) s += o.M(i, j) * a_dot(j) - o.nu * (o.B(i, j) + o.BT(i, j)) * a(j);
    for (Index j = 0; j < r; ++j)
      for (Index k = 0; k < r; ++k) s += o.C(i, j, k) * a(j) * a(k);
    for (Index j = 0; j < q; ++j) s += o.H(i, j) * b(j);
    for (std::size_t p = 0; p < o.Dk.size(); ++p) {
      double e = o.u_bc[p] * o.Dk[p](i);
      for (Index j = 0; j < r; ++j) e -= o.Ek[p](i, j) * a(j);
      s -= o.tau * e;
    }
    if (cu) s -= tau_u(i);
    if (ct)
      for (Index j = 0; j < g.size(); ++j)
        for (Index k = 0; k < r; ++k) s -= (o.CT1(i, j, k) + o.CT2(i, j, k)) * g(j) * a(k);
    out(i) = s;
  }
  for (Index i = 0; i < q; ++i) {
    double s = 0.0;
    if (!ppe) {
      for (Index j = 0; j < r; ++j) s += o.P(i, j) * a(j);
      out(r + i) = s;
      continue;
    }
    for (Index j = 0; j < q; ++j) s += o.D(i, j) * b(j);
    for (Index j = 0; j < r; ++j)
      for (Index k = 0; k < r; ++k) s += o.G(i, j, k) * a(j) * a(k);
    if (ct)
      for (Index j = 0; j < g.size(); ++j)
        for (Index k = 0; k < r; ++k) s -= (o.CT3(i, j, k) + o.CT4(i, j, k)) * g(j) * a(k);
    for (Index j = 0; j < r; ++j) s -= o.nu * o.N(i, j) * a(j);
    s -= o.L(i);
    if (cp) s += tau_p(i);
    out(r + i) = s;
  }
  return out;
}

// x -> A x + B(x, x) by loops
Vector oracle_closure(const ClosureModel& m, const Vector& x) {
  Vector out = Vector::Zero(m.A.rows());
  for (Index i = 0; i < out.size(); ++i)
    for (Index j = 0; j < x.size(); ++j) {
      out(i) += m.A(i, j) * x(j);
      for (Index k = 0; k < x.size(); ++k) out(i) += m.B(i, j, k) * x(j) * x(k);
    }
  return out;
}

RomRunConfig base_run(Formulation f, Scheme s, double dt, int n_steps) {
  RomRunConfig rc;
  rc.formulation = f;
  rc.scheme = s;
  rc.dt = dt;
  rc.n_steps = n_steps;
  return rc;
}

double decay_error(Scheme s, double dt) {
  const RomOperators o = linear_ops(-Matrix::Identity(1, 1));
  const int n = int(std::lround(1.0 / dt));
  const RomTrajectory t = run_rom(o, nullptr, nullptr, base_run(Formulation::sup, s, dt, n), {0.0, Vector::Ones(1), {}});
  REQUIRE_FALSE(t.failed);
  return std::abs(t.a(t.n_rows() - 1, 0) - std::exp(-1.0));
}

bool same(const RomTrajectory& x, const RomTrajectory& y) {
  return x.n_rows() == y.n_rows() && (x.a.array() == y.a.array()).all() && (x.b.array() == y.b.array()).all() &&
         (x.times.array() == y.times.array()).all();
}

}  // namespace

TEST_SUITE("romsolve") {

TEST_CASE("residuals match a straight-line evaluation of every term") {
  std::mt19937_64 rng(1);
  const Index r = 4, q = 3, nn = 2;
  const RomOperators o = random_ops(r, q, nn, rng);
  ClosureModel joint = ClosureModel::zero(ClosureVariant::ppe_joint, r, q);
  joint.A = random_matrix(r + q, r + q, rng);
  joint.B = random_tensor(r + q, r + q, r + q, rng);
  ClosureModel sup = ClosureModel::zero(ClosureVariant::sup_constrained, r, 0);
  sup.A = random_matrix(r, r, rng);
  sup.B = random_tensor(r, r, r, rng);
  const Vector a = random_matrix(r, 1, rng), b = random_matrix(q, 1, rng), g = random_matrix(nn, 1, rng);
  TimeHistory h;
  h.scheme = Scheme::order2;
  h.dt = 0.05;
  h.prev = random_matrix(r, 1, rng);
  h.prev2 = random_matrix(r, 1, rng);
  const Vector a_dot = (3.0 * a - 4.0 * h.prev + h.prev2) / (2.0 * h.dt);

  Vector x(r + q);
  x << a, b;
  const Vector tj = oracle_closure(joint, x);
  for (int mask = 0; mask < 8; ++mask) {
    RomRunConfig rc = base_run(Formulation::ppe, Scheme::order2, h.dt, 1);
    rc.c_u = mask & 1;
    rc.c_p = mask & 2;
    rc.c_t = mask & 4;
    const Vector got = residual_ppe(a, b, h, o, {&joint, g}, rc);
    const Vector want = oracle_residual(a, b, a_dot, o, g, tj.head(r), tj.tail(q), rc.c_u, rc.c_p, rc.c_t, true);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
  const Vector ts = oracle_closure(sup, a);
  for (int mask = 0; mask < 4; ++mask) {
    RomRunConfig rc = base_run(Formulation::sup, Scheme::order2, h.dt, 1);
    rc.c_u = mask & 1;
    rc.c_t = mask & 2;
    const Vector got = residual_sup(a, b, h, o, {&sup, g}, rc);
    const Vector want = oracle_residual(a, b, a_dot, o, g, ts, Vector(), rc.c_u, false, rc.c_t, false);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("residual vanishes at a consistent steady state") {
  std::mt19937_64 rng(2);
  const Index r = 3, q = 2;
  RomOperators o = random_ops(r, q, 1, rng);
  const Vector a = random_matrix(r, 1, rng), b = random_matrix(q, 1, rng);
  // choose the boundary data and the lifting term so (a, b) is steady
  o.u_bc = {1.0};
  o.Ek.resize(1);
  o.Dk.assign(1, (-o.nu * (o.B + o.BT) * a + o.C.contract(a, a) + o.H * b + o.tau * o.Ek[0] * a) / o.tau);
  o.L = o.D * b + o.G.contract(a, a) - o.nu * o.N * a;
  TimeHistory h;
  h.dt = 0.1;
  h.prev = a;
  const RomRunConfig rc = base_run(Formulation::ppe, Scheme::order1, 0.1, 1);
  CHECK(residual_ppe(a, b, h, o, {}, rc).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("closure switches with vanishing inputs leave the residual unchanged") {
  std::mt19937_64 rng(3);
  const Index r = 3, q = 2, nn = 2;
  const RomOperators o = random_ops(r, q, nn, rng);
  const ClosureModel zero = ClosureModel::zero(ClosureVariant::ppe_joint, r, q);
  const Vector a = random_matrix(r, 1, rng), b = random_matrix(q, 1, rng);
  TimeHistory h;
  h.dt = 0.1;
  h.prev = random_matrix(r, 1, rng);
  RomRunConfig off = base_run(Formulation::ppe, Scheme::order1, 0.1, 1);
  const Vector ref = residual_ppe(a, b, h, o, {}, off);
  RomRunConfig on = off;
  on.c_t = true;
  CHECK((residual_ppe(a, b, h, o, {nullptr, Vector::Zero(nn)}, on).array() == ref.array()).all());
  on.c_p = true;
  on.c_u = true;
  CHECK((residual_ppe(a, b, h, o, {&zero, Vector::Zero(nn)}, on).array() == ref.array()).all());
}

TEST_CASE("implicit Euler converges at first order and BDF2 at second order") {
  const double dts[] = {0.1, 0.05, 0.025, 0.0125};
  for (Scheme s : {Scheme::order1, Scheme::order2}) {
    const double expected = s == Scheme::order1 ? 1.0 : 2.0;
    for (int k = 0; k + 1 < 4; ++k) {
      const double slope = std::log2(decay_error(s, dts[k]) / decay_error(s, dts[k + 1]));
      INFO("scheme order " << expected << ", dt " << dts[k] << ", slope " << slope);
      CHECK(std::abs(slope - expected) <= 0.15);
    }
  }
}

TEST_CASE("both schemes approach the same solution as the step shrinks") {
  const RomOperators o = linear_ops((Matrix(2, 2) << -0.5, 2.0, -2.0, -0.5).finished());
  double prev = INFINITY;
  for (double dt : {0.04, 0.02, 0.01}) {
    const int n = int(std::lround(2.0 / dt));
    const RomInitialState init{0.0, Vector::Ones(2), {}};
    const RomTrajectory e = run_rom(o, nullptr, nullptr, base_run(Formulation::sup, Scheme::order1, dt, n), init);
    const RomTrajectory f = run_rom(o, nullptr, nullptr, base_run(Formulation::sup, Scheme::order2, dt, n), init);
    const double gap = (e.a - f.a).cwiseAbs().maxCoeff();
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("a steady state is a fixed point of the integrator") {
  std::mt19937_64 rng(4);
  const Index r = 3;
  RomOperators o = linear_ops(-Matrix::Identity(r, r));
  o.C = random_tensor(r, r, r, rng, 0.2);
  const Vector a = random_matrix(r, 1, rng, 0.5);
  o.tau = 5.0;
  o.u_bc = {1.0};
  o.Ek = {Matrix::Identity(r, r)};
  o.Dk = {(o.nu * a + o.C.contract(a, a) + o.tau * a) / o.tau};
  for (Scheme s : {Scheme::order1, Scheme::order2}) {
    const RomTrajectory t = run_rom(o, nullptr, nullptr, base_run(Formulation::sup, s, 0.05, 50), {0.0, a, {}});
    REQUIRE_FALSE(t.failed);
    CHECK((t.a.rowwise() - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("energy drift of a skew system shrinks at second order under BDF2") {
  const RomOperators o = linear_ops((Matrix(2, 2) << 0.0, 1.0, -1.0, 0.0).finished());
  const RomInitialState init{0.0, (Vector(2) << 1.0, 0.0).finished(), {}};
  auto drift = [&](double dt) {
    const int n = int(std::lround(2.0 / dt));
    const RomTrajectory t = run_rom(o, nullptr, nullptr, base_run(Formulation::sup, Scheme::order2, dt, n), init);
    return std::abs(t.a.row(t.n_rows() - 1).squaredNorm() - 1.0);
  };
  const double d1 = drift(0.02), d2 = drift(0.01), d3 = drift(0.005);
  INFO("drifts " << d1 << " " << d2 << " " << d3);
  CHECK(d1 < 1e-3);
  CHECK(d1 / d2 >= 3.5);
  CHECK(d2 / d3 >= 3.5);
}

TEST_CASE("closure switches with zero closures give bit-identical trajectories") {
  std::mt19937_64 rng(5);
  const Index r = 3, q = 2, nn = 2;
  RomOperators o = random_ops(r, q, nn, rng);
  o.M = Matrix::Identity(r, r);
  o.C.unfolded() *= 0.05;
  o.B = -Matrix::Identity(r, r);
  o.BT.setZero();
  o.H *= 0.1;
  o.Ek = {Matrix::Identity(r, r), Matrix::Identity(r, r)};
  const ClosureModel zero = ClosureModel::zero(ClosureVariant::ppe_joint, r, q);
  const EddyViscosityFn ev = [nn](const Vector&) { return Vector(Vector::Zero(nn)); };
  const RomInitialState init{0.0, random_matrix(r, 1, rng, 0.2), {}};
  const RomRunConfig off = base_run(Formulation::ppe, Scheme::order2, 0.01, 20);
  RomRunConfig on = off;
  on.c_u = on.c_p = on.c_t = true;
  const RomTrajectory x = run_rom(o, nullptr, nullptr, off, init);
  const RomTrajectory y = run_rom(o, &zero, &ev, on, init);
  REQUIRE_FALSE(x.failed);
  CHECK(same(x, y));
}

TEST_CASE("zero inflow from rest stays at rest") {
  std::mt19937_64 rng(6);
  RomOperators o = random_ops(3, 2, 1, rng);
  o.u_bc = {0.0, 0.0};
  o.L.setZero();
  const RomTrajectory t =
      run_rom(o, nullptr, nullptr, base_run(Formulation::ppe, Scheme::order2, 0.01, 10), {0.0, Vector::Zero(3), {}});
  REQUIRE(t.n_rows() == 11);
  CHECK(t.a.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("supremizer runs keep the discrete divergence at solver tolerance") {
  std::mt19937_64 rng(7);
  const Index r = 4, q = 2;
  RomOperators o = linear_ops(-Matrix::Identity(r, r));
  o.q = q;
  o.C = random_tensor(r, r, r, rng, 0.1);
  o.P = random_matrix(q, r, rng);
  o.H = o.P.transpose();
  const Matrix proj = Matrix::Identity(r, r) - o.P.transpose() * (o.P * o.P.transpose()).inverse() * o.P;
  const Vector a0 = proj * random_matrix(r, 1, rng);
  const RomRunConfig rc = base_run(Formulation::sup, Scheme::order2, 0.02, 30);
  const RomTrajectory t = run_rom(o, nullptr, nullptr, rc, {0.0, a0, Vector::Zero(q)});
  REQUIRE_FALSE(t.failed);
  REQUIRE(t.constraint_norms.size() == 31);
  for (double c : t.constraint_norms) CHECK(c <= 10.0 * rc.newton.tol);
}

TEST_CASE("Newton failures end the run with a flagged partial trajectory") {
  CHECK_THROWS_AS(newton_solve([](const Vector& x) { return Vector(x.array().square() + 1.0); }, Vector::Ones(1), {}),
                  StepFailure);
  const RomOperators o = linear_ops(-Matrix::Identity(1, 1));
  RomOperators blow = o;
  blow.C(0, 0, 0) = -1.0;  // a' = a^2 - a blows up from a = 2
  const RomTrajectory t =
      run_rom(blow, nullptr, nullptr, base_run(Formulation::sup, Scheme::order1, 0.5, 40), {0.0, Vector::Constant(1, 2.0), {}});
  CHECK(t.failed);
  CHECK_FALSE(t.failure.empty());
  CHECK(t.n_rows() >= 1);
  CHECK(t.n_rows() < 41);
  CHECK(t.a.rows() == t.n_rows());
}

TEST_CASE("inconsistent run settings are rejected") {
  RomRunConfig rc = base_run(Formulation::sup, Scheme::order1, 0.1, 10);
  rc.c_p = true;
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  rc = base_run(Formulation::sup, Scheme::order1, 0.1, 10);
  rc.record_every = 3;
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  const RomOperators o = linear_ops(-Matrix::Identity(2, 2));
  rc = base_run(Formulation::sup, Scheme::order1, 0.1, 10);
  CHECK_THROWS_AS(run_rom(o, nullptr, nullptr, rc, {0.0, Vector::Ones(3), {}}), DimensionError);
  rc.c_u = true;
  CHECK_THROWS_AS(run_rom(o, nullptr, nullptr, rc, {0.0, Vector::Ones(2), {}}), ConfigError);
}

TEST_CASE("recording every k-th step keeps the sampled states") {
  const RomOperators o = linear_ops(-Matrix::Identity(1, 1));
  const RomInitialState init{0.0, Vector::Ones(1), {}};
  RomRunConfig rc = base_run(Formulation::sup, Scheme::order2, 0.01, 40);
  const RomTrajectory all = run_rom(o, nullptr, nullptr, rc, init);
  rc.record_every = 10;
  const RomTrajectory some = run_rom(o, nullptr, nullptr, rc, init);
  REQUIRE(some.n_rows() == 5);
  for (Index k = 0; k < 5; ++k) {
    CHECK(some.a(k, 0) == all.a(10 * k, 0));
    CHECK(some.times(k) == doctest::Approx(all.times(10 * k)).epsilon(1e-14));
  }
}

TEST_CASE("hybrid pressure-Poisson model with five modes runs 500 steps on the reference flow") {
  const SnapshotSet& set = reference_dataset();
  const PipelineConfig cfg = reference_config();
  const FineBases bases = compute_bases(set, cfg);
  const ReducedModel model = build_reduced(set, bases, cfg, 5, 5);
  const ClosureModel closure = fit_closure(set, model, cfg);
  const MlpModel mlp = train_ev(set, bases, 5, cfg);
  const EddyViscosityFn ev = [&mlp](const Vector& a) { return predict_g(mlp, a); };
  const RomRunConfig rc = run_config(set, cfg, Strategy::hybrid, 51);
  REQUIRE(rc.n_steps == 500);
  const RomTrajectory t = run_rom(model.ops, &closure, &ev, rc, initial_state(set, model));
  INFO(t.failure);
  CHECK_FALSE(t.failed);
  REQUIRE(t.n_rows() == 51);
  CHECK(t.a.allFinite());
  CHECK(t.b.allFinite());
}

}  // TEST_SUITE
