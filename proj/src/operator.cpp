#include "spline_koopman/operator.hpp"

#include "spline_koopman/csv.hpp"
#include "spline_koopman/errors.hpp"
#include "spline_koopman/parallel.hpp"
#include "spline_koopman/rng.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace spline_koopman {

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

Eigen::Index MlpModel::num_parameters() const {
  Eigen::Index total = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) total += weights[k].size() + biases[k].size();
  return total;
}

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd theta(num_parameters());
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    theta.segment(off, weights[k].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights[k].data(), weights[k].size());
    off += weights[k].size();
    theta.segment(off, biases[k].size()) = biases[k];
    off += biases[k].size();
  }
  return theta;
}

void MlpModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != num_parameters()) {
    throw DimensionMismatch("parameter vector has length " + std::to_string(theta.size()) +
                            ", model has " + std::to_string(num_parameters()));
  }
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Eigen::Map<Eigen::VectorXd>(weights[k].data(), weights[k].size()) =
        theta.segment(off, weights[k].size());
    off += weights[k].size();
    biases[k] = theta.segment(off, biases[k].size());
    off += biases[k].size();
  }
}

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& z) {
  if (a == Activation::kTanh) z = z.array().tanh().matrix();
}

}  // namespace

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw DimensionMismatch("network input has dimension " + std::to_string(inputs.rows()) +
                            ", expected " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Eigen::MatrixXd z = weights[k] * a;
    z.colwise() += biases[k];
    if (k + 1 < weights.size()) apply_activation(hidden_activation, z);
    a = std::move(z);
  }
  return a;
}

MlpModel make_mlp(std::vector<int> layer_sizes, Activation hidden_activation,
                  std::uint64_t seed, bool zero_output_layer) {
  if (layer_sizes.size() < 2) throw InvalidArgument("network needs at least two layers");
  for (int s : layer_sizes) {
    if (s < 1) throw InvalidArgument("layer sizes must be positive");
  }
  MlpModel mlp;
  mlp.layer_sizes = std::move(layer_sizes);
  mlp.hidden_activation = hidden_activation;
  Rng rng(seed);
  const std::size_t layers = mlp.layer_sizes.size() - 1;
  for (std::size_t k = 0; k < layers; ++k) {
    const int fan_in = mlp.layer_sizes[k];
    const int fan_out = mlp.layer_sizes[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    Eigen::VectorXd b(fan_out);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = rng.uniform(-bound, bound);
    if (zero_output_layer && k + 1 == layers) {
      w.setZero();
      b.setZero();
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(std::move(b));
  }
  return mlp;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) {
    throw ConfigError("learning_rate must lie in (0, 1)");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (num_train_ics < 1) throw ConfigError("num_train_ics must be >= 1");
  if (num_eval_times < 2) throw ConfigError("num_eval_times must be >= 2");
  if (integration_steps < 1) throw ConfigError("integration_steps must be >= 1");
}

HbdnoModel make_hbdno(const KnotVector& kv, const OdeSystem& sys,
                      const std::vector<int>& hidden_sizes, std::uint64_t seed,
                      bool pin_first_slice, bool zero_output_layer) {
  std::vector<int> sizes;
  sizes.push_back(sys.dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(sys.dim * kv.num_basis());
  return HbdnoModel{kv, make_mlp(std::move(sizes), Activation::kTanh, seed, zero_output_layer),
                    sys.name, sys.domain_box, pin_first_slice};
}

namespace {

void check_model(const HbdnoModel& model) {
  if (model.mlp.output_dim() != model.state_dim() * model.kv.num_basis()) {
    throw DimensionMismatch("network output dimension " +
                            std::to_string(model.mlp.output_dim()) + " != n * l = " +
                            std::to_string(model.state_dim() * model.kv.num_basis()));
  }
}

}  // namespace

ControlPointGrid forward(const HbdnoModel& model, const Eigen::VectorXd& x0) {
  check_model(model);
  const Eigen::VectorXd flat = model.mlp.forward(x0);
  ControlPointGrid cps = ControlPointGrid::from_stacked(flat, model.state_dim());
  if (model.pin_first_slice) cps.values().col(0) = x0;
  return cps;
}

Trajectory predict_trajectory(const HbdnoModel& model, const Eigen::VectorXd& x0,
                              std::span<const double> times) {
  const ControlPointGrid cps = forward(model, x0);
  Trajectory traj;
  traj.x0 = x0;
  traj.times.assign(times.begin(), times.end());
  traj.states = eval_curve(model.kv, cps, times);
  return traj;
}

namespace {

/// Training data laid out for batched evaluation.
struct DenseBatch {
  Eigen::MatrixXd x0;                     // n x m
  std::vector<Eigen::MatrixXd> reference;  // per component, K x m
};

DenseBatch to_dense(std::span<const TrainingSample> batch, int n) {
  const Eigen::Index m = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index k = static_cast<Eigen::Index>(batch.front().reference.times.size());
  DenseBatch dense;
  dense.x0.resize(n, m);
  dense.reference.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(k, m));
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& sample = batch[static_cast<std::size_t>(s)];
    if (sample.x0.size() != n || sample.reference.states.cols() != n ||
        sample.reference.states.rows() != k) {
      throw DimensionMismatch("training sample " + std::to_string(s) +
                              " does not match the model dimensions");
    }
    dense.x0.col(s) = sample.x0;
    for (int i = 0; i < n; ++i) {
      dense.reference[static_cast<std::size_t>(i)].col(s) = sample.reference.states.col(i);
    }
  }
  return dense;
}

/// Loss and gradient for a dense batch with a precomputed collocation matrix.
LossAndGradient dense_loss_and_gradient(const HbdnoModel& model, const Eigen::MatrixXd& basis,
                                        const DenseBatch& batch) {
  const MlpModel& mlp = model.mlp;
  const int n = model.state_dim();
  const Eigen::Index l = model.kv.num_basis();
  const Eigen::Index m = batch.x0.cols();
  const Eigen::Index times = basis.rows();
  const std::size_t layers = mlp.weights.size();

  // Forward, keeping every layer's activation.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers + 1);
  acts.push_back(batch.x0);
  for (std::size_t k = 0; k < layers; ++k) {
    Eigen::MatrixXd z = mlp.weights[k] * acts.back();
    z.colwise() += mlp.biases[k];
    if (k + 1 < layers) apply_activation(mlp.hidden_activation, z);
    acts.push_back(std::move(z));
  }
  Eigen::MatrixXd out = acts.back();
  if (model.pin_first_slice) {
    for (int i = 0; i < n; ++i) out.row(i * l) = batch.x0.row(i);
  }

  const double scale = 1.0 / static_cast<double>(m * times * n);
  double loss = 0.0;
  Eigen::MatrixXd d_out(out.rows(), m);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd residual =
        basis * out.middleRows(i * l, l) - batch.reference[static_cast<std::size_t>(i)];
    loss += residual.squaredNorm();
    d_out.middleRows(i * l, l) = (2.0 * scale) * (basis.transpose() * residual);
  }
  loss *= scale;
  if (model.pin_first_slice) {
    for (int i = 0; i < n; ++i) d_out.row(i * l).setZero();
  }

  // Backward.
  LossAndGradient result;
  result.loss = loss;
  result.gradient.resize(mlp.num_parameters());
  std::vector<Eigen::Index> offsets(layers);
  {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < layers; ++k) {
      offsets[k] = off;
      off += mlp.weights[k].size() + mlp.biases[k].size();
    }
  }
  Eigen::MatrixXd delta = std::move(d_out);
  for (std::size_t kk = layers; kk-- > 0;) {
    const Eigen::MatrixXd grad_w = delta * acts[kk].transpose();
    const Eigen::VectorXd grad_b = delta.rowwise().sum();
    result.gradient.segment(offsets[kk], grad_w.size()) =
        Eigen::Map<const Eigen::VectorXd>(grad_w.data(), grad_w.size());
    result.gradient.segment(offsets[kk] + grad_w.size(), grad_b.size()) = grad_b;
    if (kk == 0) break;
    Eigen::MatrixXd back = mlp.weights[kk].transpose() * delta;
    if (mlp.hidden_activation == Activation::kTanh) {
      back.array() *= (1.0 - acts[kk].array().square());
    }
    delta = std::move(back);
  }
  return result;
}

Eigen::MatrixXd batch_basis(const HbdnoModel& model, std::span<const TrainingSample> batch) {
  const auto& times = batch.front().reference.times;
  for (const auto& s : batch) {
    if (s.reference.times != times) {
      throw DimensionMismatch("reference trajectories do not share one time grid");
    }
  }
  return collocation_matrix(model.kv, times);
}

}  // namespace

LossAndGradient loss_and_gradient(const HbdnoModel& model,
                                  std::span<const TrainingSample> batch) {
  check_model(model);
  if (batch.empty()) throw InvalidArgument("empty training batch");
  const Eigen::MatrixXd basis = batch_basis(model, batch);
  return dense_loss_and_gradient(model, basis, to_dense(batch, model.state_dim()));
}

std::vector<TrainingSample> make_training_set(const OdeSystem& sys, const KnotVector& kv,
                                              std::span<const Eigen::VectorXd> ics,
                                              int num_eval_times, int integration_steps) {
  std::vector<TrainingSample> samples(ics.size());
  parallel_for(ics.size(), [&](std::size_t i) {
    samples[i] = TrainingSample{
        ics[i], reference_on_grid(sys, ics[i], kv.horizon(), num_eval_times, integration_steps)};
  });
  return samples;
}

double trajectory_mse(const HbdnoModel& model, std::span<const TrainingSample> samples) {
  if (samples.empty()) throw InvalidArgument("no samples to evaluate");
  double sum = 0.0;
  double count = 0.0;
  for (const auto& s : samples) {
    const Trajectory pred = predict_trajectory(model, s.x0, s.reference.times);
    sum += (pred.states - s.reference.states).squaredNorm();
    count += static_cast<double>(pred.states.size());
  }
  return sum / count;
}

TrainResult train(const HbdnoModel& model, const OdeSystem& sys, const TrainConfig& cfg) {
  cfg.validate();
  check_model(model);
  TrainResult result{model, {}};
  if (cfg.epochs == 0) return result;

  HbdnoModel& m = result.model;
  m.pin_first_slice = cfg.pin_first_slice;

  const auto ics = sample_initial_conditions(sys.domain_box, cfg.num_train_ics, cfg.seed);
  const auto samples =
      make_training_set(sys, m.kv, ics, cfg.num_eval_times, cfg.integration_steps);
  const Eigen::MatrixXd basis = batch_basis(m, samples);
  const DenseBatch full = to_dense(samples, m.state_dim());

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  Eigen::VectorXd theta = m.mlp.parameters();
  Eigen::VectorXd first_moment = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd second_moment = Eigen::VectorXd::Zero(theta.size());
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  const int total = static_cast<int>(samples.size());
  const int batch_size = std::min(cfg.batch_size, total);
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch_size < total) {
      // Fisher-Yates with the explicit generator.
      for (int i = total - 1; i > 0; --i) {
        const auto j = static_cast<int>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
    }
    double epoch_loss = 0.0;
    for (int start = 0; start < total; start += batch_size) {
      const int count = std::min(batch_size, total - start);
      DenseBatch mini;
      const DenseBatch* batch = &full;
      if (count < total) {
        mini.x0.resize(full.x0.rows(), count);
        mini.reference.assign(full.reference.size(),
                              Eigen::MatrixXd(full.reference.front().rows(), count));
        for (int c = 0; c < count; ++c) {
          const int src = order[static_cast<std::size_t>(start + c)];
          mini.x0.col(c) = full.x0.col(src);
          for (std::size_t i = 0; i < full.reference.size(); ++i) {
            mini.reference[i].col(c) = full.reference[i].col(src);
          }
        }
        batch = &mini;
      }

      const LossAndGradient lg = dense_loss_and_gradient(m, basis, *batch);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw NumericalError(NumericalError::Kind::kDivergence,
                             "training loss became non-finite at epoch " +
                                 std::to_string(epoch + 1));
      }
      epoch_loss += lg.loss * static_cast<double>(count);

      beta1_pow *= kBeta1;
      beta2_pow *= kBeta2;
      first_moment = kBeta1 * first_moment + (1.0 - kBeta1) * lg.gradient;
      second_moment =
          kBeta2 * second_moment + (1.0 - kBeta2) * lg.gradient.array().square().matrix();
      const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      theta.array() -= step * first_moment.array() / (second_moment.array().sqrt() + kEps);
      m.mlp.set_parameters(theta);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(total));
  }
  return result;
}

ControlPointGrid oracle_control_points(const KnotVector& kv, const OdeSystem& sys,
                                       const Eigen::VectorXd& x0, int integration_steps) {
  const Trajectory traj = integrate(sys, x0, kv.horizon(), integration_steps);
  return fit_control_points(kv, traj.times, traj.states);
}

// Checkpoint format: whitespace-separated tokens, one `key value...` record
// per line, parameters as layer blocks.

void save_checkpoint(const std::filesystem::path& path, const HbdnoModel& model,
                     const TrainConfig& cfg) {
  std::ostringstream out;
  auto vec = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  };
  out << "spline_koopman_checkpoint 1\n";
  out << "system " << model.sys_name << '\n';
  out << "degree " << model.kv.degree() << '\n';
  out << "num_basis " << model.kv.num_basis() << '\n';
  out << "horizon " << format_double(model.kv.horizon()) << '\n';
  out << "box_lo";
  vec(model.domain_box.lo);
  out << "\nbox_hi";
  vec(model.domain_box.hi);
  out << "\npin_first_slice " << (model.pin_first_slice ? 1 : 0) << '\n';
  out << "activation " << to_string(model.mlp.hidden_activation) << '\n';
  out << "layers";
  for (int s : model.mlp.layer_sizes) out << ' ' << s;
  out << '\n';
  out << "learning_rate " << format_double(cfg.learning_rate) << '\n';
  out << "epochs " << cfg.epochs << '\n';
  out << "batch_size " << cfg.batch_size << '\n';
  out << "seed " << cfg.seed << '\n';
  out << "num_train_ics " << cfg.num_train_ics << '\n';
  out << "num_eval_times " << cfg.num_eval_times << '\n';
  out << "integration_steps " << cfg.integration_steps << '\n';
  for (std::size_t k = 0; k < model.mlp.weights.size(); ++k) {
    const auto& w = model.mlp.weights[k];
    out << "weights " << k << ' ' << w.rows() << ' ' << w.cols();
    vec(Eigen::Map<const Eigen::VectorXd>(w.data(), w.size()));
    out << "\nbias " << k << ' ' << model.mlp.biases[k].size();
    vec(model.mlp.biases[k]);
    out << '\n';
  }
  out << "end\n";
  write_text_file(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  auto fail = [&](const std::string& why) -> IoError {
    return IoError("checkpoint '" + path.string() + "': " + why);
  };
  auto expect_key = [&](const std::string& key) {
    std::string got;
    if (!(in >> got) || got != key) throw fail("expected '" + key + "', got '" + got + "'");
  };
  auto read_double = [&]() {
    std::string tok;
    if (!(in >> tok)) throw fail("unexpected end of file");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw fail("bad number '" + tok + "'");
    return v;
  };
  auto read_long = [&]() {
    long long v = 0;
    if (!(in >> v)) throw fail("expected an integer");
    return v;
  };

  expect_key("spline_koopman_checkpoint");
  if (read_long() != 1) throw fail("unsupported version");
  expect_key("system");
  std::string sys_name;
  in >> sys_name;
  expect_key("degree");
  const int degree = static_cast<int>(read_long());
  expect_key("num_basis");
  const int num_basis = static_cast<int>(read_long());
  expect_key("horizon");
  const double horizon = read_double();

  // Box dimension is implied by the first layer; read lines directly.
  std::string line;
  std::getline(in, line);
  auto read_vec_line = [&](const std::string& key) {
    if (!std::getline(in, line)) throw fail("missing " + key);
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw fail("expected '" + key + "'");
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) v.push_back(std::strtod(tok.c_str(), nullptr));
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  DomainBox box{read_vec_line("box_lo"), read_vec_line("box_hi")};

  expect_key("pin_first_slice");
  const bool pin = read_long() != 0;
  expect_key("activation");
  std::string act;
  in >> act;
  expect_key("layers");
  std::getline(in, line);
  std::vector<int> sizes;
  {
    std::istringstream ls(line);
    int s = 0;
    while (ls >> s) sizes.push_back(s);
  }
  if (sizes.size() < 2) throw fail("need at least two layer sizes");

  TrainConfig cfg;
  expect_key("learning_rate");
  cfg.learning_rate = read_double();
  expect_key("epochs");
  cfg.epochs = static_cast<int>(read_long());
  expect_key("batch_size");
  cfg.batch_size = static_cast<int>(read_long());
  expect_key("seed");
  cfg.seed = static_cast<std::uint64_t>(read_long());
  expect_key("num_train_ics");
  cfg.num_train_ics = static_cast<int>(read_long());
  expect_key("num_eval_times");
  cfg.num_eval_times = static_cast<int>(read_long());
  expect_key("integration_steps");
  cfg.integration_steps = static_cast<int>(read_long());
  cfg.pin_first_slice = pin;

  MlpModel mlp;
  mlp.layer_sizes = sizes;
  mlp.hidden_activation = activation_from_string(act);
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    expect_key("weights");
    if (read_long() != static_cast<long long>(k)) throw fail("layer index out of order");
    const auto rows = read_long();
    const auto cols = read_long();
    if (rows != sizes[k + 1] || cols != sizes[k]) throw fail("weight shape mismatch");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = read_double();
    expect_key("bias");
    if (read_long() != static_cast<long long>(k)) throw fail("layer index out of order");
    const auto len = read_long();
    if (len != rows) throw fail("bias length mismatch");
    Eigen::VectorXd b(len);
    for (Eigen::Index i = 0; i < len; ++i) b[i] = read_double();
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(std::move(b));
  }
  expect_key("end");

  KnotVector kv = make_clamped_uniform_knots(degree, num_basis, horizon);
  HbdnoModel model{std::move(kv), std::move(mlp), sys_name, std::move(box), pin};
  check_model(model);
  return Checkpoint{std::move(model), cfg};
}

}  // namespace spline_koopman
