#include "romforge/snapshots.hpp"

#include "binio.hpp"
#include "csv.hpp"

#include <fstream>
#include <sstream>

namespace romforge {

namespace {

constexpr char kSnapMagic[9] = "ROMSNAP1";

}  // namespace

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::velocity: return "velocity";
    case FieldKind::pressure: return "pressure";
    case FieldKind::eddy_viscosity: return "eddy_viscosity";
  }
  return "unknown";
}

void write_snapshots(const SnapshotSet& set, const std::string& path) {
  const GridSpec& g = set.grid;
  binio::Writer w;
  w.magic(kSnapMagic);
  w.u32(std::uint32_t(g.nx()));
  w.u32(std::uint32_t(g.ny()));
  w.u32(std::uint32_t(set.frames.size()));
  w.u32(4);
  w.f64(g.lx());
  w.f64(g.ly());
  w.f64(set.dt_snap);
  w.f64(set.t0());
  w.f64s(set.weights);
  // frame time stamps are t0 + k*dt_snap by construction
  for (const FieldFrame& f : set.frames) {
    w.f64s(f.u);
    w.f64s(f.v);
    w.f64s(f.p);
    w.f64s(f.nu_t);
  }
  w.save(path);
}

SnapshotSet read_snapshots(const std::string& path, const BoundaryConditions& bc) {
  binio::Reader r = binio::Reader::load(path);
  r.expect_magic(kSnapMagic, "ROMSNAP v1");
  const std::size_t dims_at = r.offset();
  const std::uint32_t nx = r.u32("nx"), ny = r.u32("ny"), n_frames = r.u32("n_frames");
  const std::size_t fields_at = r.offset();
  const std::uint32_t n_fields = r.u32("n_fields");
  if (n_fields != 4) throw FormatError("n_fields must be 4, got " + std::to_string(n_fields), fields_at);
  if (nx < 8 || ny < 8 || nx > (1u << 15) || ny > (1u << 15))
    throw FormatError("implausible grid dimensions", dims_at);
  const std::size_t ext_at = r.offset();
  const double lx = r.finite("lx"), ly = r.finite("ly");
  const double dt_snap = r.finite("dt_snap"), t0 = r.finite("t0");
  if (!(lx > 0.0) || !(ly > 0.0)) throw FormatError("domain extents must be positive", ext_at);

  const Index n = Index(nx) * ny;
  const std::size_t payload = std::size_t(n) * 8 * (1 + 4 * std::size_t(n_frames));
  if (r.size() - r.offset() < payload)
    throw FormatError("truncated payload: header declares " + std::to_string(n_frames) +
                          " frames, file holds " +
                          std::to_string((r.size() - r.offset()) / (std::size_t(n) * 8 * 4)) +
                          " complete frames after the weights",
                      r.size());
  const std::size_t w_at = r.offset();
  Vector weights = r.vector(n, "weights");
  std::vector<std::uint8_t> solid(std::size_t(n), 0);
  for (Index c = 0; c < n; ++c) {
    if (weights(c) < 0.0) throw FormatError("negative cell weight", w_at + std::size_t(c) * 8);
    solid[std::size_t(c)] = weights(c) == 0.0;
  }
  SnapshotSet set{GridSpec::from_mask(int(nx), int(ny), lx, ly, std::move(solid), bc), {}, std::move(weights), dt_snap};
  set.frames.resize(n_frames);
  for (std::uint32_t k = 0; k < n_frames; ++k) {
    FieldFrame& f = set.frames[k];
    f.t = t0 + k * dt_snap;
    f.u = r.vector(n, "frame u");
    f.v = r.vector(n, "frame v");
    f.p = r.vector(n, "frame p");
    f.nu_t = r.vector(n, "frame nu_t");
  }
  r.expect_end();
  return set;
}

Vector field_weights(const GridSpec& grid, FieldKind kind) {
  const Vector w = Vector::Constant(grid.n_fluid(), grid.cell_area());
  if (kind != FieldKind::velocity) return w;
  Vector out(2 * w.size());
  out << w, w;
  return out;
}

Vector frame_field(const GridSpec& grid, const FieldFrame& frame, FieldKind kind) {
  switch (kind) {
    case FieldKind::velocity: return pack_velocity(grid, {frame.u, frame.v});
    case FieldKind::pressure: return grid.restrict_to_fluid(frame.p);
    case FieldKind::eddy_viscosity: return grid.restrict_to_fluid(frame.nu_t);
  }
  return {};
}

Matrix snapshot_matrix(const SnapshotSet& set, FieldKind kind) {
  const Index rows = kind == FieldKind::velocity ? 2 * set.grid.n_fluid() : set.grid.n_fluid();
  Matrix s(rows, set.n_frames());
  for (Index k = 0; k < set.n_frames(); ++k) s.col(k) = frame_field(set.grid, set.frames[std::size_t(k)], kind);
  return s;
}

void CoeffSeries::validate() const {
  if (values.rows() != times.size()) throw DimensionError("coefficient series: row count differs from time count");
  for (Index j = 1; j < times.size(); ++j)
    if (!(times(j) > times(j - 1))) throw ConfigError("coefficient series: times must be strictly increasing");
  if (!values.allFinite() || !times.allFinite()) throw ConfigError("coefficient series holds non-finite values");
}

CoeffSeries CoeffSeries::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > n_times()) throw DimensionError("coefficient series slice out of range");
  return {times.segment(first, count), values.middleRows(first, count)};
}

CoeffSeries CoeffSeries::head_cols(Index n) const {
  if (n < 0 || n > n_coeffs()) throw DimensionError("coefficient series column count out of range");
  return {times, values.leftCols(n)};
}

void write_coeff_csv(const CoeffSeries& series, const std::string& path) {
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < series.n_coeffs(); ++i) header.push_back("c" + std::to_string(i + 1));
  Matrix table(series.n_times(), series.n_coeffs() + 1);
  table << series.times, series.values;
  csv::write_table(path, header, table);
}

CoeffSeries read_coeff_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  if (t.header.empty() || t.header.front() != "t") throw FormatError("coefficient CSV must start with column 't'", 0);
  CoeffSeries s{t.values.col(0), t.values.rightCols(t.values.cols() - 1)};
  s.validate();
  return s;
}

}  // namespace romforge
