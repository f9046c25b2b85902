#pragma once

// Offline/online stages wired together from a PipelineConfig: fine POD
// bases, reduced models for a given mode count, closure fitting, the
// eddy-viscosity regression and the four closure configurations.

#include "romforge/closure.hpp"
#include "romforge/config.hpp"
#include "romforge/evmodel.hpp"
#include "romforge/galerkin.hpp"
#include "romforge/pod.hpp"
#include "romforge/romsolve.hpp"
#include "romforge/snapshots.hpp"

#include <array>
#include <optional>
#include <string>

namespace romforge {

/// POD bases of the full reference order d = min(d_max, rank) plus the
/// eddy-viscosity modes.
struct FineBases {
  PodBasis velocity;
  PodBasis pressure;
  PodBasis nut;
};

FineBases compute_bases(const SnapshotSet& set, const PipelineConfig& cfg);

/// Number of leading snapshots used for training (and as the online horizon).
Index training_count(const SnapshotSet& set, const PipelineConfig& cfg);

/// Operators at the fine order, without eddy-viscosity tensors. For the
/// pressure-Poisson formulation they do not depend on n and can be shared.
RomOperators assemble_fine_ppe(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg);

struct ReducedModel {
  Formulation formulation = Formulation::ppe;
  Index n = 0;                     // POD velocity modes
  PodBasis velocity, pressure;     // online bases (velocity includes supremizers)
  PodBasis velocity_fine, pressure_fine;  // nested fine bases used for the exact corrections
  RomOperators ops;                // online operators, with eddy-viscosity tensors
  RomOperators fine;               // fine operators, without eddy-viscosity tensors
};

/// Reduced model with n velocity and q pressure modes. `shared_fine` may
/// pass precomputed fine operators of the pressure-Poisson formulation.
ReducedModel build_reduced(const SnapshotSet& set, const FineBases& bases, const PipelineConfig& cfg, Index n,
                           Index q, const RomOperators* shared_fine = nullptr);

/// Fits the data-driven correction on the training window.
ClosureModel fit_closure(const SnapshotSet& set, const ReducedModel& model, const PipelineConfig& cfg);

/// MLP from the leading n POD velocity coefficients to the eddy-viscosity
/// coefficients, trained on the training window.
MlpModel train_ev(const SnapshotSet& set, const FineBases& bases, Index n, const PipelineConfig& cfg);

/// Projection of the first frame onto the online bases.
RomInitialState initial_state(const SnapshotSet& set, const ReducedModel& model);

/// Projection of the first `rows` frames onto the online bases, as a trajectory.
RomTrajectory projection_trajectory(const SnapshotSet& set, const ReducedModel& model, Index rows);

enum class Strategy { none, data, ev, hybrid };
inline constexpr std::array<Strategy, 4> kStrategies{Strategy::none, Strategy::data, Strategy::ev, Strategy::hybrid};
const char* to_string(Strategy s);

/// Online run settings: ROM step dt_snap / rom_substeps, recorded once per
/// snapshot interval, covering `frames` snapshot times.
RomRunConfig run_config(const SnapshotSet& set, const PipelineConfig& cfg, Strategy strategy, Index frames);

/// Parses "cu,cp,ct" style flag lists (any subset, or "none").
void parse_flags(const std::string& text, RomRunConfig& rc);

}  // namespace romforge
