#include "romforge/galerkin.hpp"

#include "binio.hpp"

#include <filesystem>

namespace romforge {

using diffops::Velocity;

namespace {

constexpr char kOpsMagic[9] = "ROMOPS1\0";

Vector stacked(const Velocity& v) {
  Vector out(2 * v.x.size());
  out << v.x, v.y;
  return out;
}

// Velocity modes and their derived fields as full-grid columns
// (vector fields stacked [x; y]).
struct VelocityFields {
  std::vector<Velocity> phi;
  Matrix stack;  // 2n x r
};

VelocityFields velocity_fields(const GridSpec& grid, const PodBasis& vel) {
  if (vel.kind != FieldKind::velocity || vel.n_dof() != 2 * grid.n_fluid())
    throw DimensionError("velocity basis does not match the grid");
  VelocityFields f;
  f.stack.resize(2 * grid.n_cells(), vel.size());
  for (Index i = 0; i < vel.size(); ++i) {
    f.phi.push_back(unpack_velocity(grid, vel.modes.col(i)));
    f.stack.col(i) = stacked(f.phi.back());
  }
  return f;
}

Matrix scalar_fields(const GridSpec& grid, const PodBasis& b, FieldKind kind) {
  if (b.kind != kind || b.n_dof() != grid.n_fluid()) throw DimensionError(std::string(to_string(kind)) + " basis does not match the grid");
  Matrix out(grid.n_cells(), b.size());
  for (Index i = 0; i < b.size(); ++i) out.col(i) = grid.extend_from_fluid(b.modes.col(i));
  return out;
}

Matrix pressure_gradients(const GridSpec& grid, const Matrix& chi) {
  Matrix out(2 * grid.n_cells(), chi.cols());
  for (Index i = 0; i < chi.cols(); ++i) out.col(i) = stacked(diffops::grad(grid, chi.col(i), Component::pressure));
  return out;
}

Vector stacked_weights(const GridSpec& grid) {
  const Vector w = grid.weights();
  Vector out(2 * w.size());
  out << w, w;
  return out;
}

// T(:, :, k) = test^T W conv(phi_j, phi_k) for all j, k.
Tensor convective_tensor(const GridSpec& grid, const Matrix& weighted_test, const VelocityFields& f) {
  const Index r = Index(f.phi.size());
  Tensor t(weighted_test.cols(), r, r);
  Matrix conv(weighted_test.rows(), r);
  for (Index k = 0; k < r; ++k) {
    for (Index j = 0; j < r; ++j) conv.col(j) = stacked(diffops::convection(grid, f.phi[std::size_t(j)], f.phi[std::size_t(k)]));
    t.unfolded().middleCols(r * k, r) = weighted_test.transpose() * conv;
  }
  return t;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

template <typename T>
void hash_value(std::uint64_t& h, const T& v) {
  hash_bytes(h, &v, sizeof v);
}

void hash_matrix(std::uint64_t& h, const Matrix& m) {
  hash_value(h, m.rows());
  hash_value(h, m.cols());
  hash_bytes(h, m.data(), std::size_t(m.size()) * sizeof(double));
}

Tensor truncate_tensor(const Tensor& t, Index n0, Index n1, Index n2) {
  Tensor out(n0, n1, n2);
  for (Index k = 0; k < n2; ++k)
    for (Index j = 0; j < n1; ++j)
      for (Index i = 0; i < n0; ++i) out(i, j, k) = t(i, j, k);
  return out;
}

void write_tensor(binio::Writer& w, const Tensor& t) {
  w.u32(std::uint32_t(t.dim0()));
  w.u32(std::uint32_t(t.dim1()));
  w.u32(std::uint32_t(t.dim2()));
  w.f64s(t.unfolded());
}

Tensor read_tensor(binio::Reader& r) {
  const Index n0 = r.u32("tensor dim"), n1 = r.u32("tensor dim"), n2 = r.u32("tensor dim");
  Tensor t(n0, n1, n2);
  t.unfolded() = r.matrix(n0, n1 * n2, "tensor");
  return t;
}

void write_matrix(binio::Writer& w, const Matrix& m) {
  w.u32(std::uint32_t(m.rows()));
  w.u32(std::uint32_t(m.cols()));
  w.f64s(m);
}

Matrix read_matrix(binio::Reader& r) {
  const Index rows = r.u32("matrix rows"), cols = r.u32("matrix cols");
  return r.matrix(rows, cols, "matrix");
}

}  // namespace

bool RomOperators::all_finite() const {
  for (const Matrix* m : {&M, &B, &BT, &H, &P, &D, &N})
    if (!m->allFinite()) return false;
  for (const Tensor* t : {&C, &G, &CT1, &CT2, &CT3, &CT4})
    if (!t->all_finite()) return false;
  for (const Vector& v : Dk)
    if (!v.allFinite()) return false;
  for (const Matrix& m : Ek)
    if (!m.allFinite()) return false;
  return L.allFinite();
}

RomOperators RomOperators::truncated(Index r_new, Index q_new, Index n_nut_new) const {
  if (r_new > r || q_new > q || n_nut_new > n_nut || r_new < 0 || q_new < 0 || n_nut_new < 0)
    throw DimensionError("operator truncation beyond assembled dimensions");
  auto block = [](const Matrix& m, Index rows, Index cols) -> Matrix {
    return m.size() ? Matrix(m.topLeftCorner(rows, cols)) : m;
  };
  RomOperators o = *this;
  o.r = r_new;
  o.q = q_new;
  o.n_nut = n_nut_new;
  o.n_sup = std::max<Index>(0, n_sup - (r - r_new));
  o.M = block(M, r_new, r_new);
  o.B = block(B, r_new, r_new);
  o.BT = block(BT, r_new, r_new);
  o.H = block(H, r_new, q_new);
  o.P = block(P, q_new, r_new);
  o.D = block(D, q_new, q_new);
  o.N = block(N, q_new, r_new);
  if (C.size()) o.C = truncate_tensor(C, r_new, r_new, r_new);
  if (G.size()) o.G = truncate_tensor(G, q_new, r_new, r_new);
  if (CT1.dim0()) {
    o.CT1 = truncate_tensor(CT1, r_new, n_nut_new, r_new);
    o.CT2 = truncate_tensor(CT2, r_new, n_nut_new, r_new);
  }
  if (CT3.dim0()) {
    o.CT3 = truncate_tensor(CT3, q_new, n_nut_new, r_new);
    o.CT4 = truncate_tensor(CT4, q_new, n_nut_new, r_new);
  }
  if (L.size()) o.L = L.head(q_new);
  for (Vector& v : o.Dk) v = v.head(r_new).eval();
  for (Matrix& m : o.Ek) m = m.topLeftCorner(r_new, r_new).eval();
  o.hash = 0;
  return o;
}

std::vector<Direction> dirichlet_patches(const GridSpec& grid) {
  const BoundaryConditions& bc = grid.bc();
  std::vector<Direction> out;
  const std::pair<EdgeKind, Direction> edges[] = {{bc.west, kWest}, {bc.east, kEast}, {bc.south, kSouth}, {bc.north, kNorth}};
  for (const auto& [kind, dir] : edges)
    if (kind == EdgeKind::inflow) out.push_back(dir);
  return out;
}

void assemble_velocity_ops(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, RomOperators& ops) {
  const VelocityFields f = velocity_fields(grid, vel);
  const Matrix chi = scalar_fields(grid, pres, FieldKind::pressure);
  const Index r = vel.size(), q = pres.size();
  const Vector w = grid.weights();
  const Matrix wphi = stacked_weights(grid).asDiagonal() * f.stack;

  Matrix lap(f.stack.rows(), r), tgd(f.stack.rows(), r), div(grid.n_cells(), r);
  for (Index j = 0; j < r; ++j) {
    const Velocity& p = f.phi[std::size_t(j)];
    lap.col(j) = stacked(diffops::vector_laplacian(grid, p));
    tgd.col(j) = stacked(diffops::transpose_grad_div(grid, p));
    div.col(j) = diffops::div(grid, p);
  }
  ops.r = r;
  ops.q = q;
  ops.n_sup = vel.n_sup;
  ops.M = wphi.transpose() * f.stack;
  ops.B = wphi.transpose() * lap;
  ops.BT = wphi.transpose() * tgd;
  ops.C = convective_tensor(grid, wphi, f);
  ops.H = wphi.transpose() * pressure_gradients(grid, chi);
  ops.P = chi.transpose() * w.asDiagonal() * div;

  // edge-midpoint quadrature with the adjacent cell value
  ops.Dk.clear();
  ops.Ek.clear();
  for (Direction d : dirichlet_patches(grid)) {
    const bool x_normal = d == kWest || d == kEast;
    const double len = x_normal ? grid.dy() : grid.dx();
    // unit vector of the Dirichlet inflow velocity, pointing into the domain
    const Eigen::Vector2d e = d == kWest ? Eigen::Vector2d(1, 0) : d == kEast ? Eigen::Vector2d(-1, 0)
                              : d == kSouth ? Eigen::Vector2d(0, 1) : Eigen::Vector2d(0, -1);
    std::vector<Index> cells;
    for (Index c : grid.fluid_cells())
      if (grid.neighbor(c, d) == -1 - int(d)) cells.push_back(c);
    Matrix vx(Index(cells.size()), r), vy(Index(cells.size()), r);
    for (std::size_t k = 0; k < cells.size(); ++k)
      for (Index i = 0; i < r; ++i) {
        vx(Index(k), i) = f.phi[std::size_t(i)].x(cells[k]);
        vy(Index(k), i) = f.phi[std::size_t(i)].y(cells[k]);
      }
    ops.Ek.push_back(len * (vx.transpose() * vx + vy.transpose() * vy));
    ops.Dk.push_back(len * (vx.transpose() * Vector::Ones(vx.rows()) * e.x() + vy.transpose() * Vector::Ones(vy.rows()) * e.y()));
  }
}

void assemble_ppe_ops(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, RomOperators& ops) {
  const VelocityFields f = velocity_fields(grid, vel);
  const Matrix chi = scalar_fields(grid, pres, FieldKind::pressure);
  const Matrix gchi = pressure_gradients(grid, chi);
  const Matrix wgchi = stacked_weights(grid).asDiagonal() * gchi;
  const Index r = vel.size(), q = pres.size(), n = grid.n_cells();
  ops.r = r;
  ops.q = q;
  ops.D = wgchi.transpose() * gchi;
  ops.G = convective_tensor(grid, wgchi, f);
  ops.L = Vector::Zero(q);

  // boundary faces of the fluid region: outer edges and obstacle faces
  Matrix curl(n, r);
  for (Index j = 0; j < r; ++j) curl.col(j) = diffops::vorticity(grid, f.phi[std::size_t(j)]);
  ops.N = Matrix::Zero(q, r);
  static const int nx_of[4] = {-1, 1, 0, 0};
  static const int ny_of[4] = {0, 0, -1, 1};
  for (Index c : grid.fluid_cells())
    for (int d = 0; d < 4; ++d) {
      if (grid.neighbor(c, Direction(d)) >= 0) continue;
      const double len = d < 2 ? grid.dy() : grid.dx();
      // n x grad chi = n_x d_y chi - n_y d_x chi
      const Vector n_cross = nx_of[d] * gchi.row(n + c).transpose() - ny_of[d] * gchi.row(c).transpose();
      ops.N += len * n_cross * curl.row(c);
    }
}

void assemble_turb_tensors(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis& nut,
                           RomOperators& ops) {
  const VelocityFields f = velocity_fields(grid, vel);
  const Matrix chi = scalar_fields(grid, pres, FieldKind::pressure);
  const Matrix eta = scalar_fields(grid, nut, FieldKind::eddy_viscosity);
  const Vector w2 = stacked_weights(grid);
  const Matrix wphi = w2.asDiagonal() * f.stack;
  const Matrix wgchi = w2.asDiagonal() * pressure_gradients(grid, chi);
  const Index r = vel.size(), q = pres.size(), nt = nut.size();

  std::vector<Velocity> lap;
  for (const Velocity& p : f.phi) lap.push_back(diffops::vector_laplacian(grid, p));
  ops.n_nut = nt;
  ops.CT1 = Tensor(r, nt, r);
  ops.CT2 = Tensor(r, nt, r);
  ops.CT3 = Tensor(q, nt, r);
  ops.CT4 = Tensor(q, nt, r);
  Matrix t1(w2.size(), r), t2(w2.size(), r);
  for (Index j = 0; j < nt; ++j) {
    const Vector e = eta.col(j);
    for (Index k = 0; k < r; ++k) {
      const Velocity& l = lap[std::size_t(k)];
      t1.col(k) = stacked({e.cwiseProduct(l.x), e.cwiseProduct(l.y)});
      t2.col(k) = stacked(diffops::transpose_grad_div(grid, f.phi[std::size_t(k)], &e));
    }
    const Matrix a1 = wphi.transpose() * t1, a2 = wphi.transpose() * t2;
    const Matrix a3 = wgchi.transpose() * t1, a4 = wgchi.transpose() * t2;
    for (Index k = 0; k < r; ++k) {
      for (Index i = 0; i < r; ++i) {
        ops.CT1(i, j, k) = a1(i, k);
        ops.CT2(i, j, k) = a2(i, k);
      }
      for (Index i = 0; i < q; ++i) {
        ops.CT3(i, j, k) = a3(i, k);
        ops.CT4(i, j, k) = a4(i, k);
      }
    }
  }
}

RomOperators assemble_operators(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis* nut,
                                const AssemblyOptions& opt) {
  RomOperators ops;
  ops.nu = opt.nu;
  ops.tau = opt.tau;
  ops.r = vel.size();
  ops.q = pres.size();
  ops.n_sup = vel.n_sup;
  if (opt.velocity) assemble_velocity_ops(grid, vel, pres, ops);
  ops.u_bc.assign(ops.Dk.size(), opt.u_bc);
  if (opt.ppe) assemble_ppe_ops(grid, vel, pres, ops);
  if (opt.turbulence) {
    if (!nut) throw ConfigError("turbulence tensors need an eddy-viscosity basis");
    assemble_turb_tensors(grid, vel, pres, *nut, ops);
  }
  if (!ops.all_finite()) throw NumericalError("assembled operators contain non-finite entries");
  ops.hash = operators_hash(grid, vel, pres, nut, opt);
  return ops;
}

std::uint64_t operators_hash(const GridSpec& grid, const PodBasis& vel, const PodBasis& pres, const PodBasis* nut,
                             const AssemblyOptions& opt) {
  std::uint64_t h = 14695981039346656037ull;
  hash_value(h, grid.nx());
  hash_value(h, grid.ny());
  hash_value(h, grid.lx());
  hash_value(h, grid.ly());
  const BoundaryConditions& bc = grid.bc();
  for (EdgeKind k : {bc.west, bc.east, bc.south, bc.north}) hash_value(h, k);
  hash_bytes(h, grid.solid_mask().data(), grid.solid_mask().size());
  hash_matrix(h, vel.modes);
  hash_value(h, vel.n_sup);
  hash_matrix(h, pres.modes);
  if (nut) hash_matrix(h, nut->modes);
  for (double v : {opt.nu, opt.tau, opt.u_bc}) hash_value(h, v);
  for (bool b : {opt.velocity, opt.ppe, opt.turbulence}) hash_value(h, b);
  return h;
}

void write_operators(const RomOperators& ops, const std::string& path) {
  binio::Writer w;
  w.magic(kOpsMagic);
  for (Index d : {ops.r, ops.q, ops.n_nut, ops.n_sup, ops.n_bc()}) w.u32(std::uint32_t(d));
  w.u64(ops.hash);
  w.f64(ops.nu);
  w.f64(ops.tau);
  for (double u : ops.u_bc) w.f64(u);
  for (const Matrix* m : {&ops.M, &ops.B, &ops.BT, &ops.H, &ops.P, &ops.D, &ops.N}) write_matrix(w, *m);
  for (const Tensor* t : {&ops.C, &ops.G, &ops.CT1, &ops.CT2, &ops.CT3, &ops.CT4}) write_tensor(w, *t);
  write_matrix(w, ops.L);
  for (const Vector& v : ops.Dk) write_matrix(w, v);
  for (const Matrix& m : ops.Ek) write_matrix(w, m);
  w.save(path);
}

RomOperators read_operators(const std::string& path) {
  binio::Reader r = binio::Reader::load(path);
  r.expect_magic(kOpsMagic, "ROMOPS v1");
  RomOperators ops;
  ops.r = r.u32("r");
  ops.q = r.u32("q");
  ops.n_nut = r.u32("n_nut");
  ops.n_sup = r.u32("n_sup");
  const std::size_t bc_at = r.offset();
  const std::uint32_t n_bc = r.u32("n_bc");
  if (n_bc > 4) throw FormatError("at most four Dirichlet patches are possible", bc_at);
  ops.hash = r.u64("hash");
  ops.nu = r.finite("nu");
  ops.tau = r.finite("tau");
  for (std::uint32_t k = 0; k < n_bc; ++k) ops.u_bc.push_back(r.finite("u_bc"));
  for (Matrix* m : {&ops.M, &ops.B, &ops.BT, &ops.H, &ops.P, &ops.D, &ops.N}) *m = read_matrix(r);
  for (Tensor* t : {&ops.C, &ops.G, &ops.CT1, &ops.CT2, &ops.CT3, &ops.CT4}) *t = read_tensor(r);
  ops.L = read_matrix(r);
  for (std::uint32_t k = 0; k < n_bc; ++k) ops.Dk.push_back(read_matrix(r));
  for (std::uint32_t k = 0; k < n_bc; ++k) ops.Ek.push_back(read_matrix(r));
  r.expect_end();
  return ops;
}

RomOperators load_or_assemble(const std::string& path, const GridSpec& grid, const PodBasis& vel,
                              const PodBasis& pres, const PodBasis* nut, const AssemblyOptions& opt) {
  const std::uint64_t h = operators_hash(grid, vel, pres, nut, opt);
  if (std::filesystem::exists(path)) {
    try {
      RomOperators cached = read_operators(path);
      if (cached.hash == h) return cached;
    } catch (const FormatError&) {
      // stale or damaged cache, rebuild
    }
  }
  RomOperators ops = assemble_operators(grid, vel, pres, nut, opt);
  write_operators(ops, path);
  return ops;
}

}  // namespace romforge
