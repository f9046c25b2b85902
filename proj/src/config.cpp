#include "romforge/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

namespace romforge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view s) {
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
  return value;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

std::string format_double(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::vector<Index> parse_list(std::string_view s) {
  std::vector<Index> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_number<Index>(trim(s.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

struct Key {
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Key number_key(T PipelineConfig::*field) {
  return {[field](PipelineConfig& c, std::string_view v) { c.*field = parse_number<T>(v); },
          [field](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*field);
            else
              return std::to_string(c.*field);
          }};
}

template <typename T, typename Get>
Key nested_number_key(Get get) {
  return {[get](PipelineConfig& c, std::string_view v) { get(c) = parse_number<T>(v); },
          [get](const PipelineConfig& c) {
            const T x = get(const_cast<PipelineConfig&>(c));
            if constexpr (std::is_floating_point_v<T>)
              return format_double(x);
            else
              return std::to_string(x);
          }};
}

template <typename Get>
Key bool_key(Get get) {
  return {[get](PipelineConfig& c, std::string_view v) { get(c) = parse_bool(v); },
          [get](const PipelineConfig& c) { return std::string(get(const_cast<PipelineConfig&>(c)) ? "true" : "false"); }};
}

const std::map<std::string, Key, std::less<>>& keys() {
  static const std::map<std::string, Key, std::less<>> table = [] {
    std::map<std::string, Key, std::less<>> k;
    k["nx"] = number_key(&PipelineConfig::nx);
    k["ny"] = number_key(&PipelineConfig::ny);
    k["lx"] = number_key(&PipelineConfig::lx);
    k["ly"] = number_key(&PipelineConfig::ly);
    k["obstacle_x"] = number_key(&PipelineConfig::obstacle_x);
    k["obstacle_y"] = number_key(&PipelineConfig::obstacle_y);
    k["obstacle_radius"] = number_key(&PipelineConfig::obstacle_radius);

    k["nu"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.nu; });
    k["u_in"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.u_in; });
    k["dt_fom"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.dt_fom; });
    k["sample_every"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.fom.sample_every; });
    k["n_samples"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.fom.n_samples; });
    k["smagorinsky_cs"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.smagorinsky_cs; });
    k["spinup_steps"] = {[](PipelineConfig& c, std::string_view v) {
                           if (v == "auto")
                             c.fom.spinup_steps.reset();
                           else
                             c.fom.spinup_steps = parse_number<int>(v);
                         },
                         [](const PipelineConfig& c) {
                           return c.fom.spinup_steps ? std::to_string(*c.fom.spinup_steps) : std::string("auto");
                         }};
    k["perturbation"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.perturbation; });
    k["eddy_viscosity_in_momentum"] =
        bool_key([](PipelineConfig& c) -> bool& { return c.fom.eddy_viscosity_in_momentum; });
    k["pressure_smoothing"] =
        nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.pressure_smoothing; });
    k["poisson_tol"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.fom.poisson_tol; });
    k["poisson_max_iter"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.fom.poisson_max_iter; });

    k["n_modes"] = number_key(&PipelineConfig::n_modes);
    k["n_pressure_modes"] = number_key(&PipelineConfig::n_pressure_modes);
    k["n_nut_modes"] = number_key(&PipelineConfig::n_nut_modes);
    k["d_max"] = number_key(&PipelineConfig::d_max);
    k["train_fraction"] = number_key(&PipelineConfig::train_fraction);

    k["formulation"] = {[](PipelineConfig& c, std::string_view v) { c.formulation = parse_formulation(v); },
                        [](const PipelineConfig& c) { return std::string(to_string(c.formulation)); }};
    k["scheme"] = {[](PipelineConfig& c, std::string_view v) { c.scheme = parse_scheme(v); },
                   [](const PipelineConfig& c) { return std::string(c.scheme == Scheme::order1 ? "1" : "2"); }};
    k["rom_substeps"] = number_key(&PipelineConfig::rom_substeps);
    k["penalty_tau"] = number_key(&PipelineConfig::penalty_tau);
    k["newton_tol"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.newton.tol; });
    k["newton_max_iter"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.newton.max_iter; });
    k["newton_max_halvings"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.newton.max_halvings; });

    k["closure_ridge"] = number_key(&PipelineConfig::closure_ridge);
    k["closure_constrained"] = bool_key([](PipelineConfig& c) -> bool& { return c.closure_constrained; });
    k["constrained_max_iter"] = number_key(&PipelineConfig::constrained_max_iter);
    k["constrained_tol"] = number_key(&PipelineConfig::constrained_tol);

    k["mlp_hidden"] = {[](PipelineConfig& c, std::string_view v) { c.mlp.hidden = parse_list(v); },
                       [](const PipelineConfig& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.mlp.hidden.size(); ++i)
                           s += (i ? "," : "") + std::to_string(c.mlp.hidden[i]);
                         return s;
                       }};
    k["mlp_epochs"] = nested_number_key<int>([](PipelineConfig& c) -> int& { return c.mlp.epochs; });
    k["mlp_learning_rate"] = nested_number_key<double>([](PipelineConfig& c) -> double& { return c.mlp.learning_rate; });
    k["mlp_batch"] = nested_number_key<Index>([](PipelineConfig& c) -> Index& { return c.mlp.batch; });
    k["mlp_validation_fraction"] =
        nested_number_key<double>([](PipelineConfig& c) -> double& { return c.mlp.validation_fraction; });
    k["mlp_optimizer"] = {[](PipelineConfig& c, std::string_view v) {
                            if (v == "adam")
                              c.mlp.optimizer = Optimizer::adam;
                            else if (v == "sgd")
                              c.mlp.optimizer = Optimizer::sgd;
                            else
                              throw ConfigError("mlp_optimizer must be sgd or adam");
                          },
                          [](const PipelineConfig& c) {
                            return std::string(c.mlp.optimizer == Optimizer::adam ? "adam" : "sgd");
                          }};
    k["mlp_activation"] = {[](PipelineConfig& c, std::string_view v) {
                             if (v == "relu")
                               c.mlp.activation = Activation::relu;
                             else if (v == "tanh")
                               c.mlp.activation = Activation::tanh;
                             else
                               throw ConfigError("mlp_activation must be relu or tanh");
                           },
                           [](const PipelineConfig& c) {
                             return std::string(c.mlp.activation == Activation::relu ? "relu" : "tanh");
                           }};
    k["seed"] = nested_number_key<std::uint64_t>([](PipelineConfig& c) -> std::uint64_t& { return c.mlp.seed; });

    k["sweep_n_max"] = number_key(&PipelineConfig::sweep_n_max);
    k["report_frame"] = number_key(&PipelineConfig::report_frame);
    return k;
  }();
  return table;
}

}  // namespace

Formulation parse_formulation(std::string_view s) {
  if (s == "ppe") return Formulation::ppe;
  if (s == "sup") return Formulation::sup;
  throw ConfigError("formulation must be sup or ppe, got '" + std::string(s) + "'");
}

Scheme parse_scheme(std::string_view s) {
  if (s == "1" || s == "euler") return Scheme::order1;
  if (s == "2" || s == "bdf2") return Scheme::order2;
  throw ConfigError("scheme must be 1 or 2, got '" + std::string(s) + "'");
}

GridSpec PipelineConfig::make_grid() const {
  return GridSpec::with_obstacle(nx, ny, lx, ly, Disk{{obstacle_x, obstacle_y}, obstacle_radius});
}

void PipelineConfig::validate() const {
  fom.validate(make_grid());
  if (n_modes < 1 || n_pressure_modes < 1 || n_nut_modes < 1 || d_max < 1)
    throw ConfigError("mode counts must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train_fraction must lie in (0, 1]");
  if (rom_substeps < 1) throw ConfigError("rom_substeps must be >= 1");
  if (!(penalty_tau >= 0.0)) throw ConfigError("penalty_tau must be >= 0");
  if (!(newton.tol > 0.0) || newton.max_iter < 1 || newton.max_halvings < 0)
    throw ConfigError("invalid Newton settings");
  if (std::isnan(closure_ridge)) throw ConfigError("closure_ridge is NaN");
  if (constrained_max_iter < 1 || !(constrained_tol > 0.0)) throw ConfigError("invalid constrained-fit settings");
  if (mlp.hidden.empty()) throw ConfigError("mlp_hidden needs at least one layer");
  for (Index h : mlp.hidden)
    if (h < 1) throw ConfigError("mlp_hidden sizes must be positive");
  if (mlp.epochs < 1 || !(mlp.learning_rate > 0.0) || mlp.batch < 0) throw ConfigError("invalid MLP training settings");
  if (!(mlp.validation_fraction >= 0.0 && mlp.validation_fraction < 1.0))
    throw ConfigError("mlp_validation_fraction must lie in [0, 1)");
  if (sweep_n_max < 1) throw ConfigError("sweep_n_max must be >= 1");
  if (report_frame < -1) throw ConfigError("report_frame must be >= -1");
}

PipelineConfig parse_config(std::string_view text, const std::string& source) {
  PipelineConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [key, k] : keys()) out += key + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace romforge
