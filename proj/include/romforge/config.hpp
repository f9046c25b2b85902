#pragma once

// Plain-text key=value configuration of the whole pipeline. Blank lines and
// text after '#' are ignored; unknown or repeated keys are errors.

#include "romforge/evmodel.hpp"
#include "romforge/fom.hpp"
#include "romforge/romsolve.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace romforge {

struct PipelineConfig {
  // geometry
  int nx = 64, ny = 32;
  double lx = 8.0, ly = 4.0;
  double obstacle_x = 2.0, obstacle_y = 2.0, obstacle_radius = 0.5;

  FomConfig fom;

  // reduction
  Index n_modes = 5;           // velocity POD modes r
  Index n_pressure_modes = 5;  // pressure modes q
  Index n_nut_modes = 5;       // eddy-viscosity modes
  Index d_max = 50;            // cap of the fine (reference) basis size
  double train_fraction = 0.25;

  // reduced solver
  Formulation formulation = Formulation::ppe;
  Scheme scheme = Scheme::order2;
  int rom_substeps = 10;  // ROM steps per snapshot interval
  double penalty_tau = 1000.0;
  NewtonOptions newton;

  // closure
  double closure_ridge = 1e-2;  // negative selects the default ridge
  bool closure_constrained = true;  // supremizer formulation only
  int constrained_max_iter = 20000;
  double constrained_tol = 1e-10;

  // eddy-viscosity network
  MlpTrainConfig mlp{.hidden = {256, 64},
                     .epochs = 2000,
                     .learning_rate = 1e-3,
                     .batch = 0,
                     .seed = 1,
                     .optimizer = Optimizer::adam,
                     .validation_fraction = 0.2,
                     .activation = Activation::relu};

  // report
  Index sweep_n_max = 6;
  Index report_frame = -1;  // frame index of the heatmaps; -1 = last frame of the horizon

  GridSpec make_grid() const;
  /// Throws ConfigError on invalid combinations.
  void validate() const;
};

/// Parses configuration text; `source` names the input in error messages.
PipelineConfig parse_config(std::string_view text, const std::string& source = "config");
/// Throws IoError if the file cannot be read.
PipelineConfig load_config(const std::string& path);
/// Configuration text listing every key with its current value.
std::string format_config(const PipelineConfig& cfg);

Formulation parse_formulation(std::string_view s);
Scheme parse_scheme(std::string_view s);

}  // namespace romforge
