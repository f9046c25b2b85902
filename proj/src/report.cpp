#include "romforge/report.hpp"

#include "csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>

namespace romforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weighted_norm(const Vector& f, const Vector& w) { return std::sqrt(ip(f, f, w)); }

}  // namespace

Vector speed_of(const Vector& stacked) {
  const Index n = stacked.size() / 2;
  return (stacked.head(n).array().square() + stacked.tail(n).array().square()).sqrt();
}

ErrorReference::ErrorReference(const SnapshotSet& set, const PodBasis& velocity, const PodBasis& pressure)
    : t0_(set.t0()), dt_(set.dt_snap), d_u_(velocity.size()), d_p_(pressure.size()) {
  if (set.n_frames() == 0) throw ConfigError("error reference needs at least one snapshot");
  w_ = field_weights(set.grid, FieldKind::pressure);
  const Matrix u = velocity.modes * project_coeffs(set, velocity, d_u_).values.transpose();
  pressure_ = pressure.modes * project_coeffs(set, pressure, d_p_).values.transpose();
  speed_.resize(w_.size(), set.n_frames());
  speed_norm_.resize(set.n_frames());
  pressure_norm_.resize(set.n_frames());
  for (Index j = 0; j < set.n_frames(); ++j) {
    speed_.col(j) = speed_of(u.col(j));
    speed_norm_(j) = weighted_norm(speed_.col(j), w_);
    pressure_norm_(j) = weighted_norm(pressure_.col(j), w_);
  }
}

Index ErrorReference::frame_at(double t) const {
  const Index j = Index(std::llround((t - t0_) / dt_));
  const double gap = std::abs(t - (t0_ + double(j) * dt_));
  if (j < 0 || j >= speed_.cols() || gap > 0.5 * dt_ * (1.0 + 1e-9))
    throw ConfigError("time " + std::to_string(t) + " has no snapshot within half an interval");
  return j;
}

ErrorSeries error_series(const RomTrajectory& traj, const PodBasis& velocity, const PodBasis& pressure,
                         const ErrorReference& ref) {
  if (traj.a.cols() != velocity.size() || traj.b.cols() != pressure.size())
    throw DimensionError("trajectory has " + std::to_string(traj.a.cols()) + "+" + std::to_string(traj.b.cols()) +
                         " coefficients, bases have " + std::to_string(velocity.size()) + "+" +
                         std::to_string(pressure.size()));
  const Index rows = traj.n_rows();
  ErrorSeries s;
  s.times = traj.times;
  s.eps_u.resize(rows);
  s.eps_p.resize(rows);
  s.dt = rows > 1 ? traj.times(1) - traj.times(0) : ref.dt();
  s.d_u = ref.d_u();
  s.d_p = ref.d_p();
  const Vector& w = ref.weights();
  for (Index i = 0; i < rows; ++i) {
    const Index j = ref.frame_at(traj.times(i));
    if (!(ref.speed_norm(j) > 0.0) || !(ref.pressure_norm(j) > 0.0))
      throw NumericalError("reference field of frame " + std::to_string(j) + " is zero");
    const Vector speed = speed_of(velocity.modes * traj.a.row(i).transpose());
    const Vector p = pressure.modes * traj.b.row(i).transpose();
    s.eps_u(i) = 100.0 * weighted_norm(speed - ref.speed(j), w) / ref.speed_norm(j);
    s.eps_p(i) = 100.0 * weighted_norm(p - ref.pressure(j), w) / ref.pressure_norm(j);
  }
  return s;
}

ErrorIntegral error_integral(const ErrorSeries& series, double t0, double t1) {
  const double tol = 1e-9 * std::max(1.0, std::abs(series.dt));
  if (series.size() == 0 || !(series.dt > 0.0)) throw ConfigError("error integral of an empty series");
  if (t0 < series.times(0) - tol || t1 > series.times(series.size() - 1) + series.dt + tol)
    throw ConfigError("integration window lies outside the series");
  ErrorIntegral out;
  Index used = 0;
  for (Index j = 0; j < series.size(); ++j) {
    const double t = series.times(j);
    if (t < t0 - tol || t + series.dt > t1 + tol) continue;
    out.u += series.eps_u(j) * series.dt;
    out.p += series.eps_p(j) * series.dt;
    ++used;
  }
  if (used == 0) throw ConfigError("integration window contains no sample interval");
  return out;
}

ErrorIntegral error_integral(const ErrorSeries& series) {
  if (series.size() == 0) throw ConfigError("error integral of an empty series");
  return error_integral(series, series.times(0), series.times(series.size() - 1) + series.dt);
}

Comparison compare_configurations(const SnapshotSet& set, const FineBases& bases, const ErrorReference& ref,
                                  const PipelineConfig& cfg, Index n, Index q, const RomOperators* shared_fine) {
  Comparison c;
  c.n = n;
  const Index m = training_count(set, cfg);
  c.model = build_reduced(set, bases, cfg, n, q, shared_fine);

  c.labels.push_back("projection");
  c.trajectories.push_back(projection_trajectory(set, c.model, m));
  c.series.push_back(error_series(c.trajectories.back(), c.model.velocity, c.model.pressure, ref));
  c.failures.emplace_back();

  std::optional<ClosureModel> closure;
  std::string closure_failure;
  try {
    closure = fit_closure(set, c.model, cfg);
  } catch (const std::exception& e) {
    closure_failure = std::string("closure fit failed: ") + e.what();
  }
  std::optional<MlpModel> mlp;
  std::string mlp_failure;
  try {
    mlp = train_ev(set, bases, n, cfg);
  } catch (const std::exception& e) {
    mlp_failure = std::string("eddy-viscosity training failed: ") + e.what();
  }
  const EddyViscosityFn ev = [&mlp](const Vector& a) { return predict_g(*mlp, a); };
  const RomInitialState init = initial_state(set, c.model);

  for (Strategy s : kStrategies) {
    const RomRunConfig rc = run_config(set, cfg, s, m);
    c.labels.emplace_back(to_string(s));
    std::string failure;
    RomTrajectory traj;
    if (rc.c_u && !closure)
      failure = closure_failure;
    else if (rc.c_t && !mlp)
      failure = mlp_failure;
    else {
      try {
        traj = run_rom(c.model.ops, closure ? &*closure : nullptr, mlp ? &ev : nullptr, rc, init);
        if (traj.failed) failure = traj.failure;
      } catch (const std::exception& e) {
        failure = e.what();
      }
    }
    c.series.push_back(failure.empty() ? error_series(traj, c.model.velocity, c.model.pressure, ref) : ErrorSeries{});
    c.trajectories.push_back(std::move(traj));
    c.failures.push_back(std::move(failure));
  }
  return c;
}

Index SweepResult::column(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ConfigError("sweep has no configuration '" + label + "'");
  return Index(it - labels.begin());
}

std::vector<std::string> sweep_warnings(const SweepResult& sweep) {
  std::vector<std::string> out;
  const auto fmt = [](double x) { return csv::format_double(x); };
  const Index proj = sweep.column("projection");
  for (std::size_t i = 0; i < sweep.n.size(); ++i) {
    const Index row = Index(i);
    const std::string at = "n = " + std::to_string(sweep.n[i]) + ": ";
    for (Index c = 0; c < Index(sweep.labels.size()); ++c) {
      if (c == proj) continue;
      for (const auto& [name, table] : {std::pair{"eps_u", &sweep.int_u}, std::pair{"eps_p", &sweep.int_p}}) {
        const double v = (*table)(row, c), p = (*table)(row, proj);
        if (std::isfinite(v) && v + 1e-9 < p)
          out.push_back(at + sweep.labels[std::size_t(c)] + " integral of " + name + " (" + fmt(v) +
                        ") lies below the projection (" + fmt(p) + ")");
      }
    }
    const auto has = [&](const char* l) { return std::find(sweep.labels.begin(), sweep.labels.end(), l) != sweep.labels.end(); };
    if (has("hybrid") && has("data") && has("ev")) {
      const Index h = sweep.column("hybrid"), d = sweep.column("data"), e = sweep.column("ev");
      for (const auto& [name, table] : {std::pair{"eps_u", &sweep.int_u}, std::pair{"eps_p", &sweep.int_p}}) {
        const double hv = (*table)(row, h);
        if (!(hv <= (*table)(row, d) && hv <= (*table)(row, e)))
          out.push_back(at + "hybrid integral of " + name + " (" + fmt(hv) +
                        ") does not improve on both single strategies");
      }
    }
  }
  return out;
}

SweepResult mode_sweep(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg,
                       const std::vector<Index>& n_values) {
  if (n_values.empty()) throw ConfigError("mode sweep needs at least one mode count");
  const ErrorReference ref(set, bases.velocity, bases.pressure);
  std::optional<RomOperators> fine;
  if (cfg.formulation == Formulation::ppe) fine = assemble_fine_ppe(set, bases, cfg);
  const Index m = training_count(set, cfg);
  const double t0 = set.t0(), t1 = set.frames[std::size_t(m - 1)].t + set.dt_snap;

  struct Row {
    std::vector<std::string> labels;
    std::vector<double> u, p;
    std::vector<std::string> failures;
  };
  std::vector<std::future<Row>> tasks;
  for (Index n : n_values)
    tasks.push_back(std::async(std::launch::async, [&, n] {
      Row row;
      const Comparison c = compare_configurations(set, bases, ref, cfg, n, n, fine ? &*fine : nullptr);
      row.labels = c.labels;
      for (std::size_t k = 0; k < c.labels.size(); ++k) {
        if (c.series[k].size() == 0) {
          row.u.push_back(kNaN);
          row.p.push_back(kNaN);
          row.failures.push_back("n = " + std::to_string(n) + ", " + c.labels[k] + ": " + c.failures[k]);
          continue;
        }
        const ErrorIntegral e = error_integral(c.series[k], t0, t1);
        row.u.push_back(e.u);
        row.p.push_back(e.p);
      }
      return row;
    }));

  SweepResult out;
  out.n = n_values;
  out.labels.push_back("projection");
  for (Strategy s : kStrategies) out.labels.emplace_back(to_string(s));
  const Index cols = Index(out.labels.size());
  out.int_u = Matrix::Constant(Index(n_values.size()), cols, kNaN);
  out.int_p = out.int_u;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    try {
      const Row row = tasks[i].get();
      for (Index k = 0; k < cols; ++k) {
        out.int_u(Index(i), k) = row.u[std::size_t(k)];
        out.int_p(Index(i), k) = row.p[std::size_t(k)];
      }
      out.failures.insert(out.failures.end(), row.failures.begin(), row.failures.end());
    } catch (const std::exception& e) {
      out.failures.push_back("n = " + std::to_string(n_values[i]) + ": " + e.what());
    }
  }
  out.warnings = sweep_warnings(out);
  return out;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::vector<std::string> header{"n"};
  for (const std::string& l : sweep.labels) {
    header.push_back(l + "_u");
    header.push_back(l + "_p");
  }
  Matrix values(Index(sweep.n.size()), Index(header.size()));
  for (std::size_t i = 0; i < sweep.n.size(); ++i) {
    values(Index(i), 0) = double(sweep.n[i]);
    for (std::size_t k = 0; k < sweep.labels.size(); ++k) {
      values(Index(i), Index(1 + 2 * k)) = sweep.int_u(Index(i), Index(k));
      values(Index(i), Index(2 + 2 * k)) = sweep.int_p(Index(i), Index(k));
    }
  }
  csv::write_table(path, header, values);
}

SweepResult read_sweep_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const auto bad = [&] { return FormatError("'" + path + "' is not a sweep table", 0); };
  if (t.header.empty() || t.header[0] != "n" || t.header.size() % 2 != 1) throw bad();
  SweepResult s;
  const Index nl = Index(t.header.size() / 2);
  for (Index k = 0; k < nl; ++k) {
    const std::string& hu = t.header[std::size_t(1 + 2 * k)];
    const std::string& hp = t.header[std::size_t(2 + 2 * k)];
    if (hu.size() < 3 || !hu.ends_with("_u") || hp != hu.substr(0, hu.size() - 2) + "_p") throw bad();
    s.labels.push_back(hu.substr(0, hu.size() - 2));
  }
  s.int_u.resize(t.values.rows(), nl);
  s.int_p.resize(t.values.rows(), nl);
  for (Index i = 0; i < t.values.rows(); ++i) {
    s.n.push_back(Index(t.values(i, 0)));
    for (Index k = 0; k < nl; ++k) {
      s.int_u(i, k) = t.values(i, 1 + 2 * k);
      s.int_p(i, k) = t.values(i, 2 + 2 * k);
    }
  }
  s.warnings = sweep_warnings(s);
  return s;
}

namespace {

std::string sig4(double x) {
  if (!std::isfinite(x)) return "failed";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string markdown_block(const SweepResult& sweep, const Matrix& table, const std::string& title) {
  std::string s = "### " + title + "\n\n| n |";
  for (const std::string& l : sweep.labels) s += " " + l + " |";
  s += "\n|---|";
  for (std::size_t k = 0; k < sweep.labels.size(); ++k) s += "---|";
  s += "\n";
  for (std::size_t i = 0; i < sweep.n.size(); ++i) {
    s += "| " + std::to_string(sweep.n[i]) + " |";
    for (std::size_t k = 0; k < sweep.labels.size(); ++k) s += " " + sig4(table(Index(i), Index(k))) + " |";
    s += "\n";
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return dir;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(x) < 1e-12 ? 0.0 : x);
  return buf;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0})
    if (f * mag >= raw) return f * mag;
  return 10.0 * mag;
}

const char* const kPalette[] = {"#000000", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string sweep_table(const SweepResult& sweep) {
  return markdown_block(sweep, sweep.int_u, "Integral of eps_u over the training window (percent x time)") + "\n" +
         markdown_block(sweep, sweep.int_p, "Integral of eps_p over the training window (percent x time)");
}

void write_series_csv(const std::vector<std::string>& labels, const std::vector<ErrorSeries>& series,
                      const std::string& path) {
  std::vector<std::string> header{"t"};
  const ErrorSeries* first = nullptr;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k].size() == 0) continue;
    if (!first) first = &series[k];
    if (series[k].size() != first->size()) throw DimensionError("error series of different lengths");
    header.push_back(labels[k] + "_eps_u");
    header.push_back(labels[k] + "_eps_p");
  }
  if (!first) throw ConfigError("no error series to write");
  Matrix values(first->size(), Index(header.size()));
  values.col(0) = first->times;
  Index c = 1;
  for (const ErrorSeries& s : series) {
    if (s.size() == 0) continue;
    values.col(c++) = s.eps_u;
    values.col(c++) = s.eps_p;
  }
  csv::write_table(path, header, values);
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Curve>& curves, bool log_y) {
  const auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Curve& c : curves)
    for (Index i = 0; i < std::min(c.x.size(), c.y.size()); ++i)
      if (usable(c.x(i), c.y(i))) {
        x0 = std::min(x0, c.x(i));
        x1 = std::max(x1, c.x(i));
        const double y = log_y ? std::log10(c.y(i)) : c.y(i);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (!(x0 <= x1)) throw ConfigError("nothing to plot");
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (log_y) {
    y0 = std::floor(y0);
    y1 = std::max(std::ceil(y1), y0 + 1.0);
  } else {
    y0 = std::min(0.0, y0);
    if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
    const double step = nice_step(y1 - y0);
    y0 = std::floor(y0 / step) * step;
    y1 = std::ceil(y1 / step) * step;
  }

  const double W = 760, H = 440, ml = 80, mr = 170, mt = 40, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return mt + ph - ((log_y ? std::log10(y) : y) - y0) / (y1 - y0) * ph; };

  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                  num(W) + "\" height=\"" + num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + xml_escape(title) +
       "</text>\n";

  // y grid and ticks
  std::vector<double> yt;
  if (log_y) {
    for (double e = y0; e <= y1 + 1e-9; e += 1.0) yt.push_back(std::pow(10.0, e));
  } else {
    const double step = nice_step(y1 - y0);
    for (double y = y0; y <= y1 + 1e-9 * step; y += step) yt.push_back(y);
  }
  for (double y : yt) {
    const double v = py(y);
    s += "<line x1=\"" + num(ml) + "\" y1=\"" + num(v) + "\" x2=\"" + num(ml + pw) + "\" y2=\"" + num(v) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(v + 4) + "\" text-anchor=\"end\">" + tick_label(y) + "</text>\n";
  }
  const double xstep = nice_step(x1 - x0);
  for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9 * xstep; x += xstep) {
    const double v = px(x);
    s += "<line x1=\"" + num(v) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(v) + "\" y2=\"" + num(mt + ph + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(v) + "\" y=\"" + num(mt + ph + 19) + "\" text-anchor=\"middle\">" + tick_label(x) +
         "</text>\n";
  }
  s += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(H - 14) + "\" text-anchor=\"middle\">" + xml_escape(x_label) +
       "</text>\n";
  s += "<text transform=\"translate(18," + num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       xml_escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    const std::string colour = kPalette[k % std::size(kPalette)];
    std::string points;
    const auto flush = [&] {
      if (!points.empty())
        s += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.8\" points=\"" + points + "\"/>\n";
      points.clear();
    };
    for (Index i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
      if (!usable(c.x(i), c.y(i))) {
        flush();
        continue;
      }
      points += (points.empty() ? "" : " ") + num(px(c.x(i))) + "," + num(py(c.y(i)));
      if (c.x.size() <= 20)
        s += "<circle cx=\"" + num(px(c.x(i))) + "\" cy=\"" + num(py(c.y(i))) + "\" r=\"3\" fill=\"" + colour +
             "\"/>\n";
    }
    flush();
    const double ly = mt + 14 + 20 * double(k);
    s += "<line x1=\"" + num(ml + pw + 14) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(ml + pw + 38) + "\" y2=\"" +
         num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(ml + pw + 44) + "\" y=\"" + num(ly) + "\">" + xml_escape(c.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

namespace {

// Piecewise-linear approximation of the viridis colour map.
std::string colour_map(double t) {
  static const double anchors[][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, int(t));
  const double f = t - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = int(std::lround(anchors[i][c] + f * (anchors[i + 1][c] - anchors[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string svg_heatmap_pair(const GridSpec& grid, const Vector& left, const Vector& right, const std::string& title,
                             const std::string& left_label, const std::string& right_label) {
  if (left.size() != grid.n_cells() || right.size() != grid.n_cells())
    throw DimensionError("heatmap fields must be full-grid arrays");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index c : grid.fluid_cells())
    for (double v : {left(c), right(c)})
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(lo <= hi)) throw ConfigError("heatmap fields have no finite fluid values");
  if (hi - lo < 1e-300) hi = lo + 1.0;

  const double panel_w = 360, cw = panel_w / grid.nx(), ch = cw * grid.dy() / grid.dx();
  const double panel_h = ch * grid.ny(), gap = 30, m = 20, top = 50;
  const double W = 2 * panel_w + gap + 2 * m, H = top + panel_h + 70;
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                  num(W) + "\" height=\"" + num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" + xml_escape(title) +
       "</text>\n";
  const auto panel = [&](const Vector& f, double ox, const std::string& label) {
    s += "<text x=\"" + num(ox + panel_w / 2) + "\" y=\"" + num(top - 8) + "\" text-anchor=\"middle\">" +
         xml_escape(label) + "</text>\n<g shape-rendering=\"crispEdges\">\n";
    for (Index c = 0; c < grid.n_cells(); ++c) {
      const std::string fill = grid.solid(c) ? std::string("#888888") : colour_map((f(c) - lo) / (hi - lo));
      const double x = ox + grid.col(c) * cw, y = top + (grid.ny() - 1 - grid.row(c)) * ch;
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cw + 0.02) + "\" height=\"" +
           num(ch + 0.02) + "\" fill=\"" + fill + "\"/>\n";
    }
    s += "</g>\n";
  };
  panel(left, m, left_label);
  panel(right, m + panel_w + gap, right_label);

  // colour bar
  const double by = top + panel_h + 18, bx = m, bw = 2 * panel_w + gap;
  for (int k = 0; k < 64; ++k)
    s += "<rect x=\"" + num(bx + bw * k / 64.0) + "\" y=\"" + num(by) + "\" width=\"" + num(bw / 64.0 + 0.5) +
         "\" height=\"12\" fill=\"" + colour_map((k + 0.5) / 64.0) + "\"/>\n";
  s += "<text x=\"" + num(bx) + "\" y=\"" + num(by + 28) + "\">" + tick_label(lo) + "</text>\n";
  s += "<text x=\"" + num(bx + bw) + "\" y=\"" + num(by + 28) + "\" text-anchor=\"end\">" + tick_label(hi) +
       "</text>\n";
  s += "</svg>\n";
  return s;
}

void emit_sweep_report(const SweepResult& sweep, const std::string& dir) {
  if (sweep.n.empty() || sweep.labels.empty()) throw ConfigError("empty sweep, nothing to report");
  std::vector<Curve> cu, cp;
  Vector x(Index(sweep.n.size()));
  for (std::size_t i = 0; i < sweep.n.size(); ++i) x(Index(i)) = double(sweep.n[i]);
  for (std::size_t k = 0; k < sweep.labels.size(); ++k) {
    cu.push_back({sweep.labels[k], x, sweep.int_u.col(Index(k))});
    cp.push_back({sweep.labels[k], x, sweep.int_p.col(Index(k))});
  }
  const std::string svg_u = svg_line_plot("Velocity error integral", "modes n", "integral of eps_u", cu, true);
  const std::string svg_p = svg_line_plot("Pressure error integral", "modes n", "integral of eps_p", cp, true);

  nlohmann::json j;
  j["n"] = sweep.n;
  j["labels"] = sweep.labels;
  const auto rows = [&](const Matrix& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (Index k = 0; k < m.cols(); ++k) r.push_back(std::isfinite(m(i, k)) ? nlohmann::json(m(i, k)) : nlohmann::json());
      a.push_back(r);
    }
    return a;
  };
  j["int_eps_u"] = rows(sweep.int_u);
  j["int_eps_p"] = rows(sweep.int_p);
  j["failures"] = sweep.failures;
  j["warnings"] = sweep.warnings;

  const auto out = prepare_dir(dir);
  write_sweep_csv(sweep, (out / "sweep.csv").string());
  write_text(out / "sweep.md", sweep_table(sweep));
  write_text(out / "sweep.json", j.dump(2) + "\n");
  write_text(out / "sweep_u.svg", svg_u);
  write_text(out / "sweep_p.svg", svg_p);
}

void emit_comparison_report(const Comparison& cmp, const SnapshotSet& set, Index frame, const std::string& label,
                            const std::string& dir) {
  std::vector<Curve> cu, cp;
  for (std::size_t k = 0; k < cmp.series.size(); ++k) {
    const ErrorSeries& s = cmp.series[k];
    if (s.size() == 0) continue;
    cu.push_back({cmp.labels[k], s.times, s.eps_u});
    cp.push_back({cmp.labels[k], s.times, s.eps_p});
  }
  if (cu.empty()) throw ConfigError("empty error series, nothing to report");
  const auto it = std::find(cmp.labels.begin(), cmp.labels.end(), label);
  if (it == cmp.labels.end()) throw ConfigError("no configuration '" + label + "' in the comparison");
  const std::size_t k = std::size_t(it - cmp.labels.begin());
  const RomTrajectory& traj = cmp.trajectories[k];
  if (traj.n_rows() == 0) throw ConfigError("configuration '" + label + "' has no trajectory to render");
  if (frame < 0) frame = traj.n_rows() - 1;
  if (frame >= traj.n_rows() || frame >= set.n_frames())
    throw ConfigError("report frame " + std::to_string(frame) + " is beyond the trajectory");

  const GridSpec& grid = set.grid;
  const FieldFrame& fom = set.frames[std::size_t(frame)];
  const diffops::Velocity rom_u = unpack_velocity(grid, reconstruct(cmp.model.velocity, traj.a.row(frame).transpose()));
  const Vector rom_p = grid.extend_from_fluid(reconstruct(cmp.model.pressure, traj.b.row(frame).transpose()));
  const auto speed = [](const Vector& u, const Vector& v) -> Vector { return (u.array().square() + v.array().square()).sqrt(); };
  char when[64];
  std::snprintf(when, sizeof when, " at t = %.4g", fom.t);
  const std::string rom_name = "ROM (" + label + ", n = " + std::to_string(cmp.n) + ")";
  const std::string heat_p = svg_heatmap_pair(grid, fom.p, rom_p, std::string("Pressure") + when, "FOM", rom_name);
  const std::string heat_u = svg_heatmap_pair(grid, speed(fom.u, fom.v), speed(rom_u.x, rom_u.y),
                                              std::string("Velocity magnitude") + when, "FOM", rom_name);
  const std::string svg_u = svg_line_plot("Velocity error", "t", "eps_u (percent)", cu, false);
  const std::string svg_p = svg_line_plot("Pressure error", "t", "eps_p (percent)", cp, false);

  const auto out = prepare_dir(dir);
  write_series_csv(cmp.labels, cmp.series, (out / "series.csv").string());
  write_text(out / "series_u.svg", svg_u);
  write_text(out / "series_p.svg", svg_p);
  write_text(out / "heatmap_p.svg", heat_p);
  write_text(out / "heatmap_speed.svg", heat_u);
}

}  // namespace romforge
