#include "romforge/closure.hpp"

#include "binio.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <map>

namespace romforge {

namespace {

constexpr char kClosureMagic[9] = "ROMCLS1\0";

// Quadratic monomials x_k x_l, k <= l, in the order (0,0), (0,1), ..., (0,n-1), (1,1), ...
Index n_pairs(Index n) { return n * (n + 1) / 2; }

Index pair_index(Index n, Index k, Index l) {
  if (k > l) std::swap(k, l);
  return k * n - k * (k - 1) / 2 + (l - k);
}

Matrix quadratic_features(const Matrix& x) {
  const Index n = x.cols();
  Matrix f(x.rows(), n_pairs(n));
  for (Index k = 0; k < n; ++k)
    for (Index l = k; l < n; ++l) f.col(pair_index(n, k, l)) = x.col(k).cwiseProduct(x.col(l));
  return f;
}

Matrix regressors(const Matrix& x) {
  Matrix f(x.rows(), x.cols() + n_pairs(x.cols()));
  f << x, quadratic_features(x);
  return f;
}

// Ridge weight of each quadratic coefficient theta_kl: theta = B_kk on the
// diagonal, theta = 2 B_kl off it, so ||B||_F^2 = sum w theta^2.
Vector pair_ridge_weights(Index n) {
  Vector w(n_pairs(n));
  for (Index k = 0; k < n; ++k)
    for (Index l = k; l < n; ++l) w(pair_index(n, k, l)) = k == l ? 1.0 : 0.5;
  return w;
}

Tensor tensor_from_theta(const Matrix& theta) {  // theta: m x n_pairs(n)
  const Index m = theta.rows();
  Index n = 0;
  while (n_pairs(n) < theta.cols()) ++n;
  Tensor B(m, n, n);
  for (Index i = 0; i < m; ++i)
    for (Index k = 0; k < n; ++k)
      for (Index l = k; l < n; ++l) {
        const double v = theta(i, pair_index(n, k, l));
        if (k == l) {
          B(i, k, k) = v;
        } else {
          B(i, k, l) = 0.5 * v;
          B(i, l, k) = 0.5 * v;
        }
      }
  return B;
}

double max_sym_eig(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void check_training(const CorrectionSnapshots& corr, const CoeffSeries& x, Index n_in, Index n_out) {
  if (x.n_times() != corr.times.size()) throw DimensionError("closure inputs and correction snapshots differ in length");
  if (x.n_coeffs() != n_in) throw DimensionError("closure input has " + std::to_string(x.n_coeffs()) + " columns, expected " + std::to_string(n_in));
  if (corr.tau_u.rows() != x.n_times() || n_out < 1) throw DimensionError("correction targets do not match the inputs");
  if (x.n_times() == 0) throw ConfigError("closure fit needs at least one training time");
}

struct LsFit {
  Matrix A;
  Tensor B;
  double residual;
  double ridge;
  std::vector<std::string> warnings;
};

// min ||Y - X A^T - Q(X) Theta^T||^2 + ridge (||A||^2 + ||B||^2)
LsFit quadratic_least_squares(const Matrix& X, const Matrix& Y, double ridge) {
  const Index n = X.cols(), p = n + n_pairs(n), M = X.rows();
  const Matrix F = regressors(X);
  LsFit fit;
  fit.ridge = ridge < 0.0 ? default_ridge(X) : ridge;
  if (2 * M < p)
    fit.warnings.push_back("only " + std::to_string(M) + " training times for " + std::to_string(p) +
                           " unknowns per output; the fit relies on the ridge term");

  Vector scale = F.colwise().norm().transpose();
  for (Index c = 0; c < p; ++c)
    if (scale(c) == 0.0) scale(c) = 1.0;
  Vector wr(p);
  wr << Vector::Ones(n), pair_ridge_weights(n);

  Matrix coef;  // p x m in scaled coordinates
  if (fit.ridge > 0.0) {
    Matrix aug(M + p, p);
    aug << F * scale.cwiseInverse().asDiagonal(),
        Matrix((wr * fit.ridge).cwiseSqrt().cwiseQuotient(scale).asDiagonal());
    Matrix rhs = Matrix::Zero(M + p, Y.cols());
    rhs.topRows(M) = Y;
    coef = aug.colPivHouseholderQr().solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(F * scale.cwiseInverse().asDiagonal());
    qr.setThreshold(1e-12);
    if (qr.rank() < p)
      throw NumericalError("closure regression is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                           std::to_string(p) + " unknowns); use a positive ridge");
    coef = qr.solve(Y);
  }
  const Matrix theta = (scale.cwiseInverse().asDiagonal() * coef).transpose();  // m x p
  fit.A = theta.leftCols(n);
  fit.B = tensor_from_theta(theta.rightCols(p - n));
  fit.residual = (Y - F * theta.transpose()).squaredNorm();
  return fit;
}

void fill_checks(ClosureModel& m) {
  m.sym_a_max_eig = m.A.rows() == m.A.cols() ? max_sym_eig(m.A) : 0.0;
  m.sym6_b_max = m.B.dim0() == m.B.dim1() ? sym6_max(m.B) : 0.0;
}

// Orthonormal basis of quadratic coefficients theta' (index c + s*i, with
// c the monomial pair and i the output) whose cubic form sum_i a_i Q_i(a)
// vanishes identically.
Matrix symmetrization_free_basis(Index r) {
  const Index s = n_pairs(r);
  std::vector<std::map<Index, double>> rows;
  for (Index x = 0; x < r; ++x)
    for (Index y = x; y < r; ++y)
      for (Index z = y; z < r; ++z) {
        const Index t[3] = {x, y, z};
        std::map<Index, double> row;
        for (int pos = 0; pos < 3; ++pos) {
          const Index i = t[pos], k = t[(pos + 1) % 3], l = t[(pos + 2) % 3];
          row[pair_index(r, k, l) + s * i] = 1.0;
        }
        rows.push_back(std::move(row));
      }
  Matrix K = Matrix::Zero(Index(rows.size()), r * s);
  for (std::size_t e = 0; e < rows.size(); ++e)
    for (const auto& [col, v] : rows[e]) K(Index(e), col) = v;
  // the rows are independent (each owns a distinct monomial), so the trailing
  // columns of the full Q factor of K^T span the null space
  const Index rank = K.rows();
  Eigen::HouseholderQR<Matrix> qr(K.transpose());
  const Matrix Q = qr.householderQ() * Matrix::Identity(r * s, r * s);
  return Q.rightCols(r * s - rank);
}

Matrix project_nsd_sym(const Matrix& A) {
  const Matrix S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const Vector lam = es.eigenvalues().cwiseMin(0.0);
  Matrix Sp = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  Sp = 0.5 * (Sp + Sp.transpose());
  return Sp + 0.5 * (A - A.transpose());
}

}  // namespace

Matrix exact_velocity_correction(const CoeffSeries& a_d, const Tensor& C_d, const Tensor& C) {
  const Index d = C_d.dim0(), r = C.dim0();
  if (d <= r && d != r) throw DimensionError("fine basis must be larger than the coarse basis");
  if (a_d.n_coeffs() != d) throw DimensionError("fine coefficients do not match the fine tensor");
  Matrix tau(a_d.n_times(), r);
  for (Index j = 0; j < a_d.n_times(); ++j) {
    const Vector ad = a_d.values.row(j).transpose();
    const Vector ar = ad.head(r);
    tau.row(j) = (-C_d.contract(ad, ad).head(r) + C.contract(ar, ar)).transpose();
  }
  return tau;
}

Matrix exact_pressure_correction(const CoeffSeries& a_d, const CoeffSeries& b_d, const Matrix& D_d, const Matrix& D,
                                 const Tensor& G_d, const Tensor& G) {
  const Index q = D.rows(), qd = D_d.rows(), d = G_d.dim1(), r = G.dim1();
  if (a_d.n_times() != b_d.n_times()) throw DimensionError("velocity and pressure coefficients differ in length");
  if (q > qd || r > d || a_d.n_coeffs() != d || b_d.n_coeffs() != qd || G_d.dim0() != qd || G.dim0() != q)
    throw DimensionError("pressure correction operands have inconsistent shapes");
  Matrix tau(a_d.n_times(), q);
  for (Index j = 0; j < a_d.n_times(); ++j) {
    const Vector ad = a_d.values.row(j).transpose(), bd = b_d.values.row(j).transpose();
    const Vector ar = ad.head(r), bq = bd.head(q);
    const Vector tau_d = (D_d * bd).head(q) - D * bq;
    const Vector tau_g = G_d.contract(ad, ad).head(q) - G.contract(ar, ar);
    tau.row(j) = (tau_d + tau_g).transpose();
  }
  return tau;
}

const char* to_string(ClosureVariant v) {
  switch (v) {
    case ClosureVariant::sup_unconstrained: return "sup_unconstrained";
    case ClosureVariant::sup_constrained: return "sup_constrained";
    case ClosureVariant::ppe_joint: return "ppe_joint";
  }
  return "unknown";
}

ClosureModel ClosureModel::zero(ClosureVariant variant, Index r, Index q) {
  ClosureModel m;
  m.variant = variant;
  m.r = r;
  m.q = variant == ClosureVariant::ppe_joint ? q : 0;
  const Index n = m.r + m.q;
  m.A = Matrix::Zero(n, n);
  m.B = Tensor(n, n, n);
  return m;
}

double default_ridge(const Matrix& inputs) {
  const Matrix F = regressors(inputs);
  return F.size() ? 1e-8 * F.squaredNorm() / double(F.cols()) : 0.0;
}

ClosureModel fit_unconstrained(const CorrectionSnapshots& corr, const CoeffSeries& a_r, double ridge) {
  check_training(corr, a_r, corr.r, corr.tau_u.cols());
  LsFit fit = quadratic_least_squares(a_r.values, corr.tau_u, ridge);
  ClosureModel m;
  m.variant = ClosureVariant::sup_unconstrained;
  m.r = corr.r;
  m.A = std::move(fit.A);
  m.B = std::move(fit.B);
  m.residual = fit.residual;
  m.ridge = fit.ridge;
  m.warnings = std::move(fit.warnings);
  fill_checks(m);
  return m;
}

ClosureModel fit_constrained(const CorrectionSnapshots& corr, const CoeffSeries& a_r, const ConstrainedOptions& opt) {
  check_training(corr, a_r, corr.r, corr.tau_u.cols());
  const Index r = corr.r, s = n_pairs(r), M = a_r.n_times();
  const Matrix& Xa = a_r.values;
  const Matrix Xq = quadratic_features(Xa);
  const Matrix& Y = corr.tau_u;
  const double lambda = opt.ridge < 0.0 ? default_ridge(Xa) : opt.ridge;

  ClosureModel m;
  m.variant = ClosureVariant::sup_constrained;
  m.r = r;
  m.ridge = lambda;
  if (2 * M < r + s)
    m.warnings.push_back("only " + std::to_string(M) + " training times for " + std::to_string(r + s) +
                         " unknowns per output; the fit relies on the ridge term");

  // Joint normal equations in x = vec(A^T) (index j + r*i) and theta' = Z z.
  const Matrix Z = symmetrization_free_basis(r);
  const Index nx = r * r;
  const Matrix Gaa = Xa.transpose() * Xa, Gaq = Xa.transpose() * Xq, Gqq = Xq.transpose() * Xq;
  const Vector wq = pair_ridge_weights(r);

  Matrix Hxx = Matrix::Zero(nx, nx);
  Matrix Hxq = Matrix::Zero(nx, r * s);
  Matrix Hqq = Matrix::Zero(r * s, r * s);
  for (Index i = 0; i < r; ++i) {
    Hxx.block(r * i, r * i, r, r) = Gaa + lambda * Matrix::Identity(r, r);
    Hxq.block(r * i, s * i, r, s) = Gaq;
    Hqq.block(s * i, s * i, s, s) = Gqq;
    Hqq.block(s * i, s * i, s, s).diagonal() += lambda * wq;
  }
  const Matrix Hxz = Hxq * Z;
  const Matrix Hzz = Z.transpose() * Hqq * Z;
  const Vector gx = (Xa.transpose() * Y).reshaped();
  const Vector gz = Z.transpose() * (Xq.transpose() * Y).reshaped();

  Eigen::LDLT<Matrix> hzz(Hzz);
  if (hzz.info() != Eigen::Success || (lambda == 0.0 && hzz.vectorD().minCoeff() <= 1e-14 * hzz.vectorD().cwiseAbs().maxCoeff()))
    throw NumericalError("constrained closure regression is rank deficient; use a positive ridge");
  const Matrix S = Hxx - Hxz * hzz.solve(Hxz.transpose());
  const Vector g = gx - Hxz * hzz.solve(gz);

  auto objective = [&](const Vector& x) { return x.dot(S * x) - 2.0 * g.dot(x); };
  auto gradient = [&](const Vector& x) -> Vector { return 2.0 * (S * x - g); };
  auto project = [&](const Vector& x) -> Vector {
    const Matrix At = x.reshaped(r, r);  // A^T
    return project_nsd_sym(At.transpose()).transpose().reshaped();
  };

  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  double L = std::max(2.0 * es.eigenvalues().maxCoeff(), 1e-300);

  // start from the projected unconstrained minimizer of the reduced problem
  Eigen::LDLT<Matrix> sl(S);
  Vector x = project(sl.solve(g));
  Vector y = x;
  double t = 1.0, fx = objective(x);
  const double stop = opt.tol * std::max(1.0, 2.0 * g.norm());
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iter; ++it) {
    const Vector gy = gradient(y);
    const double fy = objective(y);
    Vector xn;
    for (int bt = 0; bt < 60; ++bt) {
      xn = project(y - gy / L);
      const Vector dxy = xn - y;
      if (objective(xn) <= fy + gy.dot(dxy) + 0.5 * L * dxy.squaredNorm() + 1e-15 * std::abs(fy)) break;
      L *= 2.0;
    }
    const double fn = objective(xn);
    if (fn > fx) {  // adaptive restart of the momentum
      t = 1.0;
      y = x;
      continue;
    }
    const double pg = L * (xn - project(xn - gradient(xn) / L)).norm();
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    fx = fn;
    t = tn;
    if (pg < stop) {
      converged = true;
      ++it;
      break;
    }
  }
  // y may be infeasible; x is always a projected point
  const Vector z = hzz.solve(gz - Hxz.transpose() * x);
  const Vector theta_q = Z * z;  // index c + s*i

  m.A = Matrix(x.reshaped(r, r)).transpose();
  Matrix theta(r, s);
  for (Index i = 0; i < r; ++i) theta.row(i) = theta_q.segment(s * i, s).transpose();
  m.B = tensor_from_theta(theta);
  m.residual = (Y - Xa * m.A.transpose() - Xq * theta.transpose()).squaredNorm();
  m.iterations = it;
  m.converged = converged;
  if (!converged)
    m.warnings.push_back("projected gradient did not reach tolerance " + std::to_string(opt.tol) + " in " +
                         std::to_string(opt.max_iter) + " iterations");
  fill_checks(m);
  return m;
}

ClosureModel fit_joint_ppe(const CorrectionSnapshots& corr, const CoeffSeries& ab, double ridge) {
  check_training(corr, ab, corr.r + corr.q, corr.tau_u.cols());
  if (corr.tau_p.rows() != corr.tau_u.rows() || corr.tau_p.cols() != corr.q)
    throw DimensionError("joint closure needs pressure correction targets");
  Matrix Y(corr.tau_u.rows(), corr.r + corr.q);
  Y << corr.tau_u, corr.tau_p;
  LsFit fit = quadratic_least_squares(ab.values, Y, ridge);
  ClosureModel m;
  m.variant = ClosureVariant::ppe_joint;
  m.r = corr.r;
  m.q = corr.q;
  m.A = std::move(fit.A);
  m.B = std::move(fit.B);
  m.residual = fit.residual;
  m.ridge = fit.ridge;
  m.warnings = std::move(fit.warnings);
  fill_checks(m);
  return m;
}

std::pair<Vector, std::optional<Vector>> eval_closure(const ClosureModel& model, const Vector& a, const Vector* b) {
  if (a.size() != model.r) throw DimensionError("closure expects " + std::to_string(model.r) + " velocity coefficients");
  if (model.variant != ClosureVariant::ppe_joint) {
    const Vector tau = model.A * a + model.B.contract(a, a);
    return {tau, std::nullopt};
  }
  if (!b || b->size() != model.q) throw DimensionError("joint closure expects " + std::to_string(model.q) + " pressure coefficients");
  Vector x(model.r + model.q);
  x << a, *b;
  const Vector tau = model.A * x + model.B.contract(x, x);
  return {tau.head(model.r), Vector(tau.tail(model.q))};
}

double sym6_max(const Tensor& B) {
  const Index n = B.dim0();
  double out = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k)
      for (Index l = 0; l < n; ++l) {
        const double s = (B(i, k, l) + B(i, l, k) + B(k, i, l) + B(k, l, i) + B(l, i, k) + B(l, k, i)) / 6.0;
        out = std::max(out, std::abs(s));
      }
  return out;
}

void write_closure(const ClosureModel& model, const std::string& path) {
  binio::Writer w;
  w.magic(kClosureMagic);
  w.u32(std::uint32_t(model.variant));
  w.u32(std::uint32_t(model.r));
  w.u32(std::uint32_t(model.q));
  w.u32(std::uint32_t(model.iterations));
  w.u32(model.converged ? 1 : 0);
  w.f64(model.residual);
  w.f64(model.ridge);
  w.f64(model.sym_a_max_eig);
  w.f64(model.sym6_b_max);
  w.f64s(model.A);
  w.f64s(model.B.unfolded());
  w.save(path);
}

ClosureModel read_closure(const std::string& path) {
  binio::Reader rd = binio::Reader::load(path);
  rd.expect_magic(kClosureMagic, "ROMCLS v1");
  ClosureModel m;
  const std::size_t var_at = rd.offset();
  const std::uint32_t variant = rd.u32("variant");
  if (variant > 2) throw FormatError("unknown closure variant " + std::to_string(variant), var_at);
  m.variant = ClosureVariant(variant);
  m.r = rd.u32("r");
  m.q = rd.u32("q");
  if (m.r > 4096 || m.q > 4096) throw FormatError("implausible closure dimensions", var_at + 4);
  m.iterations = int(rd.u32("iterations"));
  m.converged = rd.u32("converged") != 0;
  m.residual = rd.finite("residual");
  m.ridge = rd.finite("ridge");
  m.sym_a_max_eig = rd.finite("sym_a_max_eig");
  m.sym6_b_max = rd.finite("sym6_b_max");
  const Index n = m.r + m.q;
  m.A = rd.matrix(n, n, "A");
  m.B = Tensor(n, n, n);
  m.B.unfolded() = rd.matrix(n, n * n, "B");
  rd.expect_end();
  return m;
}

}  // namespace romforge
