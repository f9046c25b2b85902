#include "romforge/pod.hpp"

#include "binio.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace romforge {

namespace {

constexpr char kBasisMagic[9] = "ROMBAS1\0";
constexpr double kRankTol = 1e-14;
constexpr double kDependentTol = 1e-8;

void fix_sign(Eigen::Ref<Vector> mode) {
  Index at = 0;
  mode.cwiseAbs().maxCoeff(&at);
  if (mode(at) < 0.0) mode = -mode;
}

double wnorm(const Vector& v, const Vector& w) { return std::sqrt(std::max(ip(v, v, w), 0.0)); }

// Gramian eigenpairs in descending order.
std::pair<Vector, Matrix> gramian_eigen(const Matrix& snapshots, const Vector& w) {
  if (snapshots.rows() != w.size()) throw DimensionError("snapshot rows differ from weight length");
  const Matrix gram = snapshots.transpose() * w.asDiagonal() * snapshots;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw NumericalError("Gramian eigendecomposition failed");
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

}  // namespace

PodBasis PodBasis::head(Index n) const {
  if (n < 0 || n > size()) throw DimensionError("basis has " + std::to_string(size()) + " modes, requested " + std::to_string(n));
  PodBasis b = *this;
  b.modes = modes.leftCols(n);
  const Index n_pod_head = std::min<Index>(n, size() - n_sup);
  b.n_sup = std::max<Index>(0, std::min(n_sup, n - n_pod_head));
  b.singular_values = singular_values.head(std::min(n_pod_head, singular_values.size()));
  return b;
}

double PodBasis::orthonormality_error() const {
  if (size() == 0) return 0.0;
  const Matrix g = modes.transpose() * weights.asDiagonal() * modes;
  return (g - Matrix::Identity(size(), size())).cwiseAbs().maxCoeff();
}

Index pod_rank(const Matrix& snapshots, const Vector& w) {
  const auto [lambda, vecs] = gramian_eigen(snapshots, w);
  if (lambda.size() == 0 || !(lambda(0) > 0.0)) return 0;
  Index r = 0;
  while (r < lambda.size() && lambda(r) >= kRankTol * lambda(0)) ++r;
  return r;
}

PodBasis pod(const Matrix& snapshots, const Vector& w, Index n, FieldKind kind) {
  if (n < 1 || n > snapshots.cols())
    throw ConfigError("pod: requested " + std::to_string(n) + " modes from " + std::to_string(snapshots.cols()) + " snapshots");
  const auto [lambda, vecs] = gramian_eigen(snapshots, w);
  Index usable = 0;
  if (lambda(0) > 0.0)
    while (usable < lambda.size() && lambda(usable) >= kRankTol * lambda(0)) ++usable;
  if (n > usable)
    throw NumericalError("pod: snapshot set is rank deficient, usable rank is " + std::to_string(usable) +
                         " but " + std::to_string(n) + " modes were requested");

  PodBasis b;
  b.kind = kind;
  b.weights = w;
  b.singular_values = lambda.head(n).cwiseSqrt();
  b.modes = snapshots * vecs.leftCols(n) * b.singular_values.cwiseInverse().asDiagonal();
  // re-orthonormalize against round-off in the Gramian route
  for (Index i = 0; i < n; ++i) {
    Vector m = orthogonalize(b.modes.col(i), b.modes.leftCols(i), w);
    m /= wnorm(m, w);
    fix_sign(m);
    b.modes.col(i) = m;
  }
  return b;
}

PodBasis pod(const SnapshotSet& set, FieldKind kind, Index n) {
  return pod(snapshot_matrix(set, kind), field_weights(set.grid, kind), n, kind);
}

Vector orthogonalize(const Vector& v, const Matrix& q, const Vector& w) {
  Vector out = v;
  for (int pass = 0; pass < 2; ++pass)
    for (Index j = 0; j < q.cols(); ++j) out -= ip(q.col(j), out, w) * q.col(j);
  return out;
}

Matrix supremizers_raw(const PodBasis& pressure, const GridSpec& grid) {
  if (pressure.kind != FieldKind::pressure) throw ConfigError("supremizers need a pressure basis");
  if (pressure.size() == 0) throw ConfigError("supremizers need a nonempty pressure basis");
  if (pressure.n_dof() != grid.n_fluid()) throw DimensionError("pressure basis does not match the grid");
  const SparseMatrix div = divergence_matrix(grid);
  const Vector wp = field_weights(grid, FieldKind::pressure);
  const Vector wv = field_weights(grid, FieldKind::velocity);
  Matrix s = div.transpose() * (wp.asDiagonal() * pressure.modes);
  return wv.cwiseInverse().asDiagonal() * s;
}

Matrix supremizers(const PodBasis& pressure, const PodBasis& velocity, const GridSpec& grid) {
  const Matrix raw = supremizers_raw(pressure, grid);
  const Vector& w = velocity.weights;
  if (raw.rows() != velocity.n_dof()) throw DimensionError("velocity basis does not match the grid");
  const double h = std::min(grid.dx(), grid.dy());
  const Vector wp = field_weights(grid, FieldKind::pressure);
  Matrix basis = velocity.modes;
  Matrix out(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.cols(); ++i) {
    const double scale = wnorm(pressure.modes.col(i), wp) / h;
    const double raw_norm = wnorm(raw.col(i), w);
    if (!(raw_norm > 1e-10 * scale))
      throw NumericalError("degenerate supremizer for pressure mode " + std::to_string(i + 1) +
                           ": its divergence pairing vanishes (constant pressure on an enclosed region?)");
    Vector s = orthogonalize(raw.col(i), basis, w);
    const double n = wnorm(s, w);
    if (!(n > kDependentTol * raw_norm))
      throw NumericalError("supremizer " + std::to_string(i + 1) + " lies in the span of the velocity basis");
    s /= n;
    fix_sign(s);
    out.col(i) = s;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.rightCols(1) = s;
  }
  return out;
}

PodBasis enrich(const PodBasis& velocity, const Matrix& sup) {
  if (sup.cols() == 0) return velocity;
  if (sup.rows() != velocity.n_dof()) throw DimensionError("supremizer length differs from velocity modes");
  PodBasis b = velocity;
  b.modes.conservativeResize(Eigen::NoChange, velocity.size() + sup.cols());
  b.modes.rightCols(sup.cols()) = sup;
  b.n_sup = velocity.n_sup + sup.cols();
  if (b.orthonormality_error() > 1e-10)
    throw NumericalError("enriched basis is not orthonormal; supremizers must be orthonormalized first");
  return b;
}

PodBasis nested_fine_basis(const PodBasis& pod_modes, Index n_u, const Matrix& sup, Index d) {
  if (n_u > pod_modes.size()) throw DimensionError("nested basis: not enough POD modes");
  PodBasis b = enrich(pod_modes.head(n_u), sup);
  const Vector& w = b.weights;
  Index next = n_u;
  while (b.size() < d && next < pod_modes.size()) {
    Vector m = orthogonalize(pod_modes.modes.col(next++), b.modes, w);
    const double n = wnorm(m, w);
    if (!(n > kDependentTol)) continue;
    m /= n;
    fix_sign(m);
    b.modes.conservativeResize(Eigen::NoChange, b.size() + 1);
    b.modes.rightCols(1) = m;
  }
  if (b.size() < d)
    throw NumericalError("nested basis: only " + std::to_string(b.size()) + " independent modes available, " +
                         std::to_string(d) + " requested");
  b.singular_values = pod_modes.singular_values.head(std::min(pod_modes.singular_values.size(), d - b.n_sup));
  return b;
}

Matrix project_columns(const Matrix& snapshots, const PodBasis& basis, Index n) {
  if (n < 0 || n > basis.size()) throw DimensionError("projection onto " + std::to_string(n) + " modes of a " + std::to_string(basis.size()) + "-mode basis");
  if (snapshots.rows() != basis.n_dof()) throw DimensionError("snapshot length differs from basis modes");
  return snapshots.transpose() * basis.weights.asDiagonal() * basis.modes.leftCols(n);
}

CoeffSeries project_coeffs(const SnapshotSet& set, const PodBasis& basis, Index n) {
  CoeffSeries c;
  c.times.resize(set.n_frames());
  for (Index k = 0; k < set.n_frames(); ++k) c.times(k) = set.frames[std::size_t(k)].t;
  c.values = project_columns(snapshot_matrix(set, basis.kind), basis, n);
  return c;
}

Vector reconstruct(const PodBasis& basis, const Vector& coeffs) {
  if (coeffs.size() > basis.size()) throw DimensionError("more coefficients than modes");
  return basis.modes.leftCols(coeffs.size()) * coeffs;
}

void write_basis(const PodBasis& basis, const GridSpec& grid, const std::string& path) {
  const Index blocks = basis.kind == FieldKind::velocity ? 2 : 1;
  if (basis.n_dof() != blocks * grid.n_fluid()) throw DimensionError("basis does not match grid");
  binio::Writer w;
  w.magic(kBasisMagic);
  w.u32(std::uint32_t(grid.nx()));
  w.u32(std::uint32_t(grid.ny()));
  w.u32(std::uint32_t(basis.size()));
  w.u32(std::uint32_t(basis.kind));
  w.u32(std::uint32_t(basis.n_sup));
  w.u32(std::uint32_t(basis.singular_values.size()));
  w.f64(grid.lx());
  w.f64(grid.ly());
  w.f64s(grid.weights());
  w.f64s(basis.singular_values);
  for (Index i = 0; i < basis.size(); ++i)
    for (Index b = 0; b < blocks; ++b)
      w.f64s(grid.extend_from_fluid(basis.modes.col(i).segment(b * grid.n_fluid(), grid.n_fluid())));
  w.save(path);
}

PodBasis read_basis(const std::string& path, const GridSpec& grid) {
  binio::Reader r = binio::Reader::load(path);
  r.expect_magic(kBasisMagic, "ROMBAS v1");
  const std::size_t dims_at = r.offset();
  const std::uint32_t nx = r.u32("nx"), ny = r.u32("ny"), n_modes = r.u32("n_modes");
  const std::size_t kind_at = r.offset();
  const std::uint32_t kind = r.u32("kind");
  const std::uint32_t n_sup = r.u32("n_sup"), n_sv = r.u32("n_singular_values");
  if (kind > 2) throw FormatError("unknown basis kind " + std::to_string(kind), kind_at);
  if (int(nx) != grid.nx() || int(ny) != grid.ny()) throw FormatError("basis grid dimensions differ from the snapshot grid", dims_at);
  const std::size_t ext_at = r.offset();
  const double lx = r.f64("lx"), ly = r.f64("ly");
  if (lx != grid.lx() || ly != grid.ly()) throw FormatError("basis domain extents differ from the snapshot grid", ext_at);
  const std::size_t w_at = r.offset();
  const Vector cell_w = r.vector(grid.n_cells(), "weights");
  if (cell_w != grid.weights()) throw FormatError("basis weights differ from the snapshot grid", w_at);
  if (n_sup > n_modes) throw FormatError("n_sup exceeds mode count", kind_at);

  PodBasis b;
  b.kind = FieldKind(kind);
  b.n_sup = n_sup;
  b.weights = field_weights(grid, b.kind);
  b.singular_values = r.vector(n_sv, "singular values");
  const Index blocks = b.kind == FieldKind::velocity ? 2 : 1;
  const Index nf = grid.n_fluid();
  b.modes.resize(blocks * nf, n_modes);
  for (Index i = 0; i < n_modes; ++i)
    for (Index k = 0; k < blocks; ++k) b.modes.col(i).segment(k * nf, nf) = grid.restrict_to_fluid(r.vector(grid.n_cells(), "mode"));
  r.expect_end();
  return b;
}

}  // namespace romforge
