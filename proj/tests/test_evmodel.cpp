#include "support/test_data.hpp"

#include "romforge/evmodel.hpp"
#include "romforge/pod.hpp"

#include <doctest.h>

#include <cmath>

using namespace romforge;
using namespace romforge::testing;

namespace {

CoeffSeries series(const Matrix& X) { return CoeffSeries{Vector::LinSpaced(X.rows(), 0.0, double(X.rows() - 1)), X}; }

MlpTrainConfig adam_config(int epochs) {
  MlpTrainConfig cfg;
  cfg.hidden = {32, 16};
  cfg.epochs = epochs;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = Optimizer::adam;
  return cfg;
}

// samples drawn at random so the held-out tail lies inside the training cloud
struct LinearPlant {
  Matrix a, g;
};

LinearPlant linear_plant(Index m, Index n_in, Index n_out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LinearPlant p;
  p.a = random_matrix(m, n_in, rng);
  const Matrix W = random_matrix(n_out, n_in, rng);
  const Vector c = random_matrix(n_out, 1, rng);
  p.g = (p.a * W.transpose()).rowwise() + c.transpose();
  return p;
}

}  // namespace

TEST_SUITE("evmodel") {

TEST_CASE("training on zero targets drives the loss far below its initial value") {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(60, 3, rng);
  const Matrix g = Matrix::Zero(60, 2);
  const MlpTrainConfig cfg = adam_config(2000);
  const MlpModel m = train_mlp(series(a), series(g), cfg);
  MlpModel start = MlpModel::init({3, 32, 16, 2}, cfg.seed, cfg.activation);
  start.in_mean = m.in_mean;
  start.in_std = m.in_std;
  const Index n_train = Index(std::floor(60 * (1.0 - cfg.validation_fraction)));
  const double initial = mlp_loss(start, a.topRows(n_train), g.topRows(n_train));
  REQUIRE(initial > 0.0);
  CHECK(m.loss_history.back() < 1e-3 * initial);
}

TEST_CASE("a linear target is learned to small validation loss") {
  const LinearPlant p = linear_plant(250, 3, 2, 2);
  MlpTrainConfig cfg = adam_config(2000);
  cfg.hidden = {256, 64};
  const MlpModel m = train_mlp(series(p.a), series(p.g), cfg);
  INFO("final training loss " << m.loss_history.back());
  CHECK(m.validation_loss <= 1e-4);
}

TEST_CASE("full-batch gradient descent does not increase the loss between 50-epoch windows") {
  const LinearPlant p = linear_plant(80, 3, 2, 3);
  MlpTrainConfig cfg;
  cfg.hidden = {16, 8};
  cfg.epochs = 500;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = Optimizer::sgd;
  const MlpModel m = train_mlp(series(p.a), series(p.g), cfg);
  REQUIRE(m.loss_history.size() == 500);
  double prev = INFINITY;
  for (std::size_t w = 0; w < 10; ++w) {
    double mean = 0.0;
    for (std::size_t e = 50 * w; e < 50 * (w + 1); ++e) mean += m.loss_history[e] / 50.0;
    CHECK(mean <= prev);
    prev = mean;
  }
}

TEST_CASE("a network with zero weights outputs its final bias") {
  MlpModel m = MlpModel::init({3, 5, 4, 2}, 7);
  for (Matrix& w : m.W) w.setZero();
  m.b[0].setConstant(0.3);
  m.b[2] << 1.25, -0.5;
  m.out_mean << 10.0, 20.0;
  m.out_std << 2.0, 4.0;
  const Vector y = predict_g(m, Vector::Constant(3, 9.0));
  CHECK(y(0) == doctest::Approx(10.0 + 2.0 * 1.25));
  CHECK(y(1) == doctest::Approx(20.0 - 4.0 * 0.5));
  const MlpModel z = MlpModel::zero(4, 3);
  CHECK(predict_g(z, Vector::Ones(4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(predict_g(z, Vector::Ones(3)), DimensionError);
}

TEST_CASE("radial basis interpolant reproduces its centres") {
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(30, 3, rng), g = random_matrix(30, 2, rng);
  const RbfModel m = fit_rbf(series(a), series(g), 1.0);
  for (Index j = 0; j < a.rows(); ++j)
    CHECK((predict_g(m, Vector(a.row(j).transpose())) - g.row(j).transpose()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("network output respects its Lipschitz bound") {
  const LinearPlant p = linear_plant(100, 3, 2, 5);
  const MlpModel m = train_mlp(series(p.a), series(p.g), adam_config(200));
  const double L = lipschitz_bound(m);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    const Vector x = random_matrix(3, 1, rng, 2.0), y = random_matrix(3, 1, rng, 2.0);
    CHECK((predict_g(m, x) - predict_g(m, y)).norm() <= L * (x - y).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("backpropagated gradients match central differences") {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(7, 2, rng), g = random_matrix(7, 2, rng);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    MlpModel m = MlpModel::init({2, 3, 2}, 9, act);
    m.b[0] = random_matrix(3, 1, rng, 0.1);
    CHECK(gradcheck_mlp(m, a, g, 1e-6) <= 1e-6);
  }
}

TEST_CASE("dead rectifier units receive zero gradient") {
  std::mt19937_64 rng(10);
  const Matrix a = random_matrix(7, 2, rng), g = random_matrix(7, 2, rng);
  MlpModel m = MlpModel::init({2, 3, 2}, 11);
  m.b[0].setConstant(-100.0);
  const Vector grad = mlp_loss_gradient(m, a, g);
  // first layer weights and biases, then second layer weights
  CHECK(grad.head(2 * 3 + 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.segment(9, 6).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.tail(2).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("central-difference gradient error of a smooth network is second order") {
  std::mt19937_64 rng(12);
  const Matrix a = random_matrix(7, 2, rng, 2.0), g = random_matrix(7, 2, rng);
  MlpModel m = MlpModel::init({2, 3, 2}, 13, Activation::tanh);
  for (Matrix& w : m.W) w *= 2.0;
  m.b[0] = random_matrix(3, 1, rng);
  const double e1 = gradcheck_mlp(m, a, g, 1e-4);
  const double e2 = gradcheck_mlp(m, a, g, 5e-5);
  const double e3 = gradcheck_mlp(m, a, g, 2.5e-5);
  INFO("errors " << e1 << " " << e2 << " " << e3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
  CHECK_THROWS_AS(gradcheck_mlp(m, a, g, 1e-2), ConfigError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const LinearPlant p = linear_plant(60, 3, 2, 14);
  MlpTrainConfig cfg = adam_config(100);
  cfg.batch = 16;
  const MlpModel x = train_mlp(series(p.a), series(p.g), cfg);
  const MlpModel y = train_mlp(series(p.a), series(p.g), cfg);
  for (std::size_t l = 0; l < x.W.size(); ++l) {
    CHECK((x.W[l].array() == y.W[l].array()).all());
    CHECK((x.b[l].array() == y.b[l].array()).all());
  }
  CHECK(x.loss_history == y.loss_history);
}

TEST_CASE("invalid training settings are rejected") {
  const LinearPlant p = linear_plant(20, 2, 1, 15);
  MlpTrainConfig cfg = adam_config(10);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train_mlp(series(p.a), series(p.g), cfg), ConfigError);
  cfg = adam_config(10);
  cfg.validation_fraction = 1.0;
  CHECK_THROWS_AS(train_mlp(series(p.a), series(p.g), cfg), ConfigError);
  CHECK_THROWS_AS(train_mlp(series(p.a), series(p.g.topRows(10)), adam_config(10)), DimensionError);
}

TEST_CASE("network files round-trip") {
  const LinearPlant p = linear_plant(40, 3, 2, 16);
  const MlpModel m = train_mlp(series(p.a), series(p.g), adam_config(20));
  const std::string path = scratch_dir("mlp_io") + "/m.mlp";
  write_mlp(m, path);
  const MlpModel back = read_mlp(path);
  CHECK(back.sizes == m.sizes);
  CHECK(back.activation == m.activation);
  for (std::size_t l = 0; l < m.W.size(); ++l) {
    CHECK((back.W[l].array() == m.W[l].array()).all());
    CHECK((back.b[l].array() == m.b[l].array()).all());
  }
  CHECK((back.in_mean.array() == m.in_mean.array()).all());
  CHECK((back.out_std.array() == m.out_std.array()).all());
  const Vector x = p.a.row(0).transpose();
  CHECK((predict_g(back, x).array() == predict_g(m, x).array()).all());
}

TEST_CASE("predicted eddy viscosity has a non-negative mean on the training frames") {
  const SnapshotSet& set = small_dataset();
  const PodBasis vel = pod(set, FieldKind::velocity, 4);
  const PodBasis nut = pod(set, FieldKind::eddy_viscosity, 4);
  const CoeffSeries a = project_coeffs(set, vel, 4), g = project_coeffs(set, nut, 4);
  MlpTrainConfig cfg = adam_config(1000);
  cfg.validation_fraction = 0.0;
  const MlpModel m = train_mlp(a, g, cfg);
  for (Index j = 0; j < a.n_times(); ++j) {
    const Vector field = reconstruct(nut, predict_g(m, Vector(a.values.row(j).transpose())));
    const double mean = nut.weights.sum() > 0.0 ? nut.weights.dot(field) / nut.weights.sum() : 0.0;
    CHECK(mean >= -1e-6 * field.cwiseAbs().maxCoeff());
  }
}

}  // TEST_SUITE
