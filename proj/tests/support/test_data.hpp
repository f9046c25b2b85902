#pragma once

// Shared fixtures: small grids and datasets, the reference dataset cached on
// disk, random matrices and an XML well-formedness check.

#include "romforge/config.hpp"
#include "romforge/fom.hpp"
#include "romforge/pod.hpp"
#include "romforge/snapshots.hpp"

#include <random>
#include <string>

namespace romforge::testing {

/// Source tree root (configs/ lives there).
std::string source_dir();
/// Scratch directory below the build tree, created empty.
std::string scratch_dir(const std::string& name);

/// 32x16 channel on [0,8]x[0,4] with a disk of radius 0.5 at (2,2).
GridSpec small_channel();
/// Fast solver settings for small_channel: 20 frames, short spin-up.
FomConfig small_fom_config();
/// run_fom(small_channel(), small_fom_config()), computed once per process.
const SnapshotSet& small_dataset();

/// configs/reference.cfg
PipelineConfig reference_config();
/// Snapshots of the reference configuration, cached in the build tree.
const SnapshotSet& reference_dataset();

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0);

/// Weighted-orthonormal basis of n random fields on the fluid cells.
PodBasis random_basis(const GridSpec& grid, FieldKind kind, Index n, std::mt19937_64& rng);

/// Minimal XML well-formedness check: balanced tags, quoted attributes,
/// known entities. On failure `error` describes the first problem.
bool xml_well_formed(const std::string& text, std::string* error = nullptr);

std::string read_file(const std::string& path);

}  // namespace romforge::testing
