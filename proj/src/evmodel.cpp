#include "romforge/evmodel.hpp"

#include "binio.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>

namespace romforge {

namespace {

constexpr char kMlpMagic[9] = "ROMMLP1\0";

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

Matrix activate(const Matrix& z, Activation act) {
  return act == Activation::relu ? Matrix(z.cwiseMax(0.0)) : Matrix(z.array().tanh().matrix());
}

Matrix activation_slope(const Matrix& z, Activation act) {
  if (act == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

struct Forward {
  std::vector<Matrix> z;  // pre-activations per layer
  std::vector<Matrix> h;  // h[0] = input, h[l+1] = layer output
};

// Columns are samples, in standardized units.
Forward forward(const MlpModel& m, const Matrix& x) {
  Forward f;
  f.h.push_back(x);
  const std::size_t n_layers = m.W.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = m.W[l] * f.h.back();
    z.colwise() += m.b[l];
    f.h.push_back(l + 1 < n_layers ? activate(z, m.activation) : z);
    f.z.push_back(std::move(z));
  }
  return f;
}

Matrix standardize_in(const MlpModel& m, const Matrix& a) {  // rows are samples -> columns
  return ((a.rowwise() - m.in_mean.transpose()).array().rowwise() / m.in_std.transpose().array()).matrix().transpose();
}

Matrix standardize_out(const MlpModel& m, const Matrix& g) {
  return ((g.rowwise() - m.out_mean.transpose()).array().rowwise() / m.out_std.transpose().array()).matrix().transpose();
}

double mse(const Matrix& pred, const Matrix& target) {
  return (pred - target).squaredNorm() / double(target.size());
}

// Gradients of the mean squared error, in layer order.
void backward(const MlpModel& m, const Forward& f, const Matrix& target, std::vector<Matrix>& dW,
              std::vector<Vector>& db) {
  const std::size_t n_layers = m.W.size();
  dW.resize(n_layers);
  db.resize(n_layers);
  Matrix delta = (2.0 / double(target.size())) * (f.h.back() - target);
  for (std::size_t l = n_layers; l-- > 0;) {
    dW[l] = delta * f.h[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0) delta = (m.W[l].transpose() * delta).cwiseProduct(activation_slope(f.z[l - 1], m.activation));
  }
}

Vector pack(const std::vector<Matrix>& W, const std::vector<Vector>& b) {
  Index n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  Vector out(n);
  Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    out.segment(at, W[l].size()) = W[l].reshaped();
    at += W[l].size();
    out.segment(at, b[l].size()) = b[l];
    at += b[l].size();
  }
  return out;
}

void unpack(const Vector& p, std::vector<Matrix>& W, std::vector<Vector>& b) {
  Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l].reshaped() = p.segment(at, W[l].size());
    at += W[l].size();
    b[l] = p.segment(at, b[l].size());
    at += b[l].size();
  }
}

void column_stats(const Matrix& x, Vector& mean, Vector& stdev) {
  mean = x.colwise().mean().transpose();
  stdev = ((x.rowwise() - mean.transpose()).colwise().squaredNorm() / double(std::max<Index>(x.rows(), 1)))
              .cwiseSqrt()
              .transpose();
  for (Index i = 0; i < stdev.size(); ++i)
    if (!(stdev(i) > 1e-300)) stdev(i) = 1.0;
}

}  // namespace

MlpModel MlpModel::init(std::vector<Index> sizes, std::uint64_t seed, Activation act) {
  if (sizes.size() < 2) throw ConfigError("network needs at least input and output sizes");
  for (Index s : sizes)
    if (s < 1) throw ConfigError("network layer sizes must be positive");
  MlpModel m;
  m.sizes = std::move(sizes);
  m.activation = act;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const Index fan_in = m.sizes[l], fan_out = m.sizes[l + 1];
    const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Index j = 0; j < fan_in; ++j)
      for (Index i = 0; i < fan_out; ++i) w(i, j) = bound * (2.0 * unit_uniform(rng) - 1.0);
    m.W.push_back(std::move(w));
    m.b.push_back(Vector::Zero(fan_out));
  }
  m.in_mean = Vector::Zero(m.n_in());
  m.in_std = Vector::Ones(m.n_in());
  m.out_mean = Vector::Zero(m.n_out());
  m.out_std = Vector::Ones(m.n_out());
  return m;
}

MlpModel MlpModel::zero(Index n_in, Index n_out) {
  MlpModel m = init({n_in, n_out}, 0);
  m.W[0].setZero();
  return m;
}

MlpModel train_mlp(const CoeffSeries& a, const CoeffSeries& g, const MlpTrainConfig& cfg) {
  if (a.n_times() != g.n_times()) throw DimensionError("velocity and eddy-viscosity coefficients differ in length");
  if (a.n_coeffs() < 1 || g.n_coeffs() < 1) throw ConfigError("network needs at least one input and one output");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) throw ConfigError("validation fraction must lie in [0, 1)");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) throw ConfigError("epochs must be >= 0 and the learning rate positive");
  const Index n_total = a.n_times();
  const Index n_train = std::max<Index>(1, Index(std::floor(double(n_total) * (1.0 - cfg.validation_fraction))));
  const Index n_val = n_total - n_train;

  std::vector<Index> sizes{a.n_coeffs()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(g.n_coeffs());
  MlpModel m = MlpModel::init(sizes, cfg.seed, cfg.activation);
  m.epochs = cfg.epochs;
  m.learning_rate = cfg.learning_rate;
  m.optimizer = cfg.optimizer;
  column_stats(a.values.topRows(n_train), m.in_mean, m.in_std);
  column_stats(g.values.topRows(n_train), m.out_mean, m.out_std);

  const Matrix x = standardize_in(m, a.values.topRows(n_train));
  const Matrix y = standardize_out(m, g.values.topRows(n_train));
  const Index batch = cfg.batch <= 0 || cfg.batch > n_train ? n_train : cfg.batch;

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Index> order(static_cast<std::size_t>(n_train));
  for (Index i = 0; i < n_train; ++i) order[std::size_t(i)] = i;

  Vector params = pack(m.W, m.b);
  Vector m1 = Vector::Zero(params.size()), m2 = Vector::Zero(params.size());
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  m.loss_history.reserve(std::size_t(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n_train)
      for (Index i = n_train - 1; i > 0; --i) std::swap(order[std::size_t(i)], order[std::size_t(rng() % std::uint64_t(i + 1))]);
    for (Index start = 0; start < n_train; start += batch) {
      const Index nb = std::min(batch, n_train - start);
      Matrix xb(x.rows(), nb), yb(y.rows(), nb);
      for (Index k = 0; k < nb; ++k) {
        xb.col(k) = x.col(order[std::size_t(start + k)]);
        yb.col(k) = y.col(order[std::size_t(start + k)]);
      }
      backward(m, forward(m, xb), yb, dW, db);
      const Vector grad = pack(dW, db);
      ++step;
      if (cfg.optimizer == Optimizer::adam) {
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, double(step)), c2 = 1.0 - std::pow(beta2, double(step));
        params -= cfg.learning_rate * ((m1 / c1).array() / ((m2 / c2).array().sqrt() + adam_eps)).matrix();
      } else {
        params -= cfg.learning_rate * grad;
      }
      unpack(params, m.W, m.b);
    }
    const double loss = mse(forward(m, x).h.back(), y);
    if (!std::isfinite(loss)) throw NumericalError("network training diverged at epoch " + std::to_string(epoch + 1));
    m.loss_history.push_back(loss);
  }
  if (n_val > 0) {
    m.validation_loss = mse(forward(m, standardize_in(m, a.values.bottomRows(n_val))).h.back(),
                            standardize_out(m, g.values.bottomRows(n_val)));
  }
  return m;
}

Vector predict_g(const MlpModel& model, const Vector& a) {
  if (a.size() != model.n_in()) throw DimensionError("network expects " + std::to_string(model.n_in()) + " inputs, got " + std::to_string(a.size()));
  const Vector x = (a - model.in_mean).cwiseQuotient(model.in_std);
  const Vector y = forward(model, x).h.back();
  return model.out_mean + model.out_std.cwiseProduct(y);
}

double mlp_loss(const MlpModel& model, const Matrix& a, const Matrix& g) {
  return mse(forward(model, standardize_in(model, a)).h.back(), standardize_out(model, g));
}

Vector mlp_loss_gradient(const MlpModel& model, const Matrix& a, const Matrix& g) {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  backward(model, forward(model, standardize_in(model, a)), standardize_out(model, g), dW, db);
  return pack(dW, db);
}

double gradcheck_mlp(const MlpModel& model, const Matrix& a, const Matrix& g, double h) {
  if (!(h >= 1e-7 && h <= 1e-4)) throw ConfigError("gradcheck step must lie in [1e-7, 1e-4]");
  const Vector bp = mlp_loss_gradient(model, a, g);
  MlpModel probe = model;
  const Vector p0 = pack(model.W, model.b);
  double worst = 0.0;
  for (Index i = 0; i < p0.size(); ++i) {
    Vector p = p0;
    p(i) = p0(i) + h;
    unpack(p, probe.W, probe.b);
    const double fp = mlp_loss(probe, a, g);
    p(i) = p0(i) - h;
    unpack(p, probe.W, probe.b);
    const double fm = mlp_loss(probe, a, g);
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - bp(i)) / (std::max(std::abs(fd), std::abs(bp(i))) + 1e-8));
  }
  return worst;
}

double lipschitz_bound(const MlpModel& model) {
  // activations are 1-Lipschitz
  double bound = model.out_std.maxCoeff() / model.in_std.minCoeff();
  for (const Matrix& w : model.W) bound *= Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
  return bound;
}

RbfModel fit_rbf(const CoeffSeries& a, const CoeffSeries& g, double epsilon) {
  if (a.n_times() != g.n_times() || a.n_times() == 0) throw DimensionError("RBF inputs and targets differ in length");
  if (!(epsilon > 0.0)) throw ConfigError("RBF shape parameter must be positive");
  RbfModel m;
  m.epsilon = epsilon;
  column_stats(a.values, m.in_mean, m.in_std);
  m.centers = ((a.values.rowwise() - m.in_mean.transpose()).array().rowwise() / m.in_std.transpose().array()).matrix();
  const Index n = m.centers.rows();
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) K(i, j) = std::exp(-epsilon * epsilon * (m.centers.row(i) - m.centers.row(j)).squaredNorm());
  m.coefficients = K.ldlt().solve(g.values);
  const double rel = (K * m.coefficients - g.values).norm() / std::max(g.values.norm(), 1e-300);
  if (!(rel <= 1e-8))
    throw NumericalError("RBF interpolation system is too ill-conditioned (relative residual " + std::to_string(rel) +
                         "); increase the shape parameter");
  return m;
}

Vector predict_g(const RbfModel& model, const Vector& a) {
  if (a.size() != model.centers.cols()) throw DimensionError("RBF model expects " + std::to_string(model.centers.cols()) + " inputs");
  const Vector x = (a - model.in_mean).cwiseQuotient(model.in_std);
  Vector k(model.centers.rows());
  for (Index i = 0; i < k.size(); ++i)
    k(i) = std::exp(-model.epsilon * model.epsilon * (model.centers.row(i).transpose() - x).squaredNorm());
  return model.coefficients.transpose() * k;
}

void write_mlp(const MlpModel& model, const std::string& path) {
  binio::Writer w;
  w.magic(kMlpMagic);
  w.u32(std::uint32_t(model.sizes.size()));
  for (Index s : model.sizes) w.u32(std::uint32_t(s));
  w.u32(std::uint32_t(model.activation));
  w.u32(std::uint32_t(model.optimizer));
  w.u32(std::uint32_t(model.epochs));
  w.u64(model.seed);
  w.f64(model.learning_rate);
  w.f64(model.loss_history.empty() ? 0.0 : model.loss_history.back());
  w.f64(model.validation_loss);
  w.f64s(model.in_mean);
  w.f64s(model.in_std);
  w.f64s(model.out_mean);
  w.f64s(model.out_std);
  for (std::size_t l = 0; l < model.W.size(); ++l) {
    w.f64s(model.W[l]);
    w.f64s(model.b[l]);
  }
  w.save(path);
}

MlpModel read_mlp(const std::string& path) {
  binio::Reader r = binio::Reader::load(path);
  r.expect_magic(kMlpMagic, "ROMMLP v1");
  const std::size_t at = r.offset();
  const std::uint32_t n_sizes = r.u32("layer count");
  if (n_sizes < 2 || n_sizes > 64) throw FormatError("implausible layer count", at);
  std::vector<Index> sizes;
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const std::size_t s_at = r.offset();
    sizes.push_back(r.u32("layer size"));
    if (sizes.back() < 1 || sizes.back() > (1 << 20)) throw FormatError("implausible layer size", s_at);
  }
  const std::size_t act_at = r.offset();
  const std::uint32_t act = r.u32("activation"), opt = r.u32("optimizer");
  if (act > 1 || opt > 1) throw FormatError("unknown activation or optimizer tag", act_at);
  MlpModel m = MlpModel::init(sizes, 0, Activation(act));
  m.optimizer = Optimizer(opt);
  m.epochs = int(r.u32("epochs"));
  m.seed = r.u64("seed");
  m.learning_rate = r.finite("learning rate");
  const double final_loss = r.finite("final loss");
  m.loss_history.assign(1, final_loss);
  m.validation_loss = r.finite("validation loss");
  m.in_mean = r.vector(m.n_in(), "input mean");
  m.in_std = r.vector(m.n_in(), "input std");
  m.out_mean = r.vector(m.n_out(), "output mean");
  m.out_std = r.vector(m.n_out(), "output std");
  for (std::size_t l = 0; l < m.W.size(); ++l) {
    m.W[l] = r.matrix(m.W[l].rows(), m.W[l].cols(), "weights");
    m.b[l] = r.vector(m.b[l].size(), "biases");
  }
  r.expect_end();
  return m;
}

}  // namespace romforge
