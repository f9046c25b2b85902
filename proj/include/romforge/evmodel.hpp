#pragma once

#include "romforge/snapshots.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace romforge {

enum class Activation : std::uint32_t { relu = 0, tanh = 1 };
enum class Optimizer : std::uint32_t { sgd = 0, adam = 1 };

/// Fully connected network g = f(a) with standardized inputs and outputs.
/// Hidden layers use `activation`, the output layer is linear.
struct MlpModel {
  std::vector<Index> sizes;  // e.g. {N_u, 256, 64, N_nut}
  std::vector<Matrix> W;     // W[l] is sizes[l+1] x sizes[l]
  std::vector<Vector> b;
  Activation activation = Activation::relu;
  Vector in_mean, in_std, out_mean, out_std;

  // training metadata
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd;
  std::vector<double> loss_history;  // training loss per epoch
  double validation_loss = 0.0;

  Index n_in() const { return sizes.front(); }
  Index n_out() const { return sizes.back(); }

  /// Randomly initialized network (uniform +-sqrt(6/(fan_in+fan_out)), zero
  /// biases) with identity standardization.
  static MlpModel init(std::vector<Index> sizes, std::uint64_t seed, Activation act = Activation::relu);
  /// Network whose output is identically zero.
  static MlpModel zero(Index n_in, Index n_out);
};

struct MlpTrainConfig {
  std::vector<Index> hidden{256, 64};
  int epochs = 5000;
  double learning_rate = 1e-5;
  Index batch = 0;  // 0 = full batch
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::sgd;
  double validation_fraction = 0.2;  // trailing contiguous share held out
  Activation activation = Activation::relu;
};

/// Mini-batch training on the mean squared error in standardized units.
/// Throws NumericalError if the loss becomes non-finite.
MlpModel train_mlp(const CoeffSeries& a, const CoeffSeries& g, const MlpTrainConfig& cfg);

Vector predict_g(const MlpModel& model, const Vector& a);

/// Mean squared error (standardized units) over the rows of a and g.
double mlp_loss(const MlpModel& model, const Matrix& a, const Matrix& g);

/// Loss gradient with respect to all parameters, packed layer by layer (W then b).
Vector mlp_loss_gradient(const MlpModel& model, const Matrix& a, const Matrix& g);

/// Max relative discrepancy between backpropagated and central-difference
/// parameter gradients of the loss on the samples (a, g).
double gradcheck_mlp(const MlpModel& model, const Matrix& a, const Matrix& g, double h);

/// Upper bound on the Lipschitz constant of a -> predict_g(a).
double lipschitz_bound(const MlpModel& model);

/// Gaussian radial-basis interpolant exp(-(eps*|x - c|)^2) in standardized inputs.
struct RbfModel {
  Matrix centers;       // n_centers x n_in, standardized
  Matrix coefficients;  // n_centers x n_out
  double epsilon = 1.0;
  Vector in_mean, in_std;
};

/// Throws NumericalError if the interpolation residual exceeds 1e-8 relative.
RbfModel fit_rbf(const CoeffSeries& a, const CoeffSeries& g, double epsilon);
Vector predict_g(const RbfModel& model, const Vector& a);

void write_mlp(const MlpModel& model, const std::string& path);
MlpModel read_mlp(const std::string& path);

}  // namespace romforge
