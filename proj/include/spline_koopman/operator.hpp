/**
 * @file operator.hpp
 * @brief Hybrid B-spline neural operator: x0 -> control points -> trajectory.
 *
 * A feedforward network maps the initial condition to the stacked
 * control-point vector (component-major, length n*l). The trajectory is the
 * clamped B-spline with those control points, so training differentiates
 * through a fixed linear map (the collocation matrix) and then the network.
 *
 * When pinning is enabled the first temporal slice is overwritten with x0;
 * the corresponding network outputs receive zero gradient.
 */

#pragma once

#include "spline_koopman/bspline.hpp"
#include "spline_koopman/dynamics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spline_koopman {

enum class Activation { kTanh, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected network; hidden layers use `hidden_activation`, the
/// output layer is affine.
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[k] is sizes[k+1] x sizes[k]
  std::vector<Eigen::VectorXd> biases;
  Activation hidden_activation = Activation::kTanh;

  [[nodiscard]] int input_dim() const { return layer_sizes.front(); }
  [[nodiscard]] int output_dim() const { return layer_sizes.back(); }
  [[nodiscard]] Eigen::Index num_parameters() const;

  /// Flat parameter vector: per layer, W in column-major order, then b.
  [[nodiscard]] Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  /// Column k of the result is the output for column k of `inputs`.
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
};

/// Seeded fan-in-scaled uniform init: entries of layer k drawn from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)). With zero_output_layer the last
/// layer's weights and bias start at zero.
MlpModel make_mlp(std::vector<int> layer_sizes, Activation hidden_activation,
                  std::uint64_t seed, bool zero_output_layer = false);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 2000;
  int batch_size = 256;
  std::uint64_t seed = 42;
  int num_train_ics = 256;
  int num_eval_times = 200;
  bool pin_first_slice = true;
  int integration_steps = 1000;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct HbdnoModel {
  KnotVector kv;
  MlpModel mlp;
  std::string sys_name;
  DomainBox domain_box;
  bool pin_first_slice = true;

  [[nodiscard]] int state_dim() const { return mlp.input_dim(); }
};

HbdnoModel make_hbdno(const KnotVector& kv, const OdeSystem& sys,
                      const std::vector<int>& hidden_sizes, std::uint64_t seed,
                      bool pin_first_slice, bool zero_output_layer = false);

ControlPointGrid forward(const HbdnoModel& model, const Eigen::VectorXd& x0);

/// Spline evaluated at `times` using forward(model, x0).
Trajectory predict_trajectory(const HbdnoModel& model, const Eigen::VectorXd& x0,
                              std::span<const double> times);

struct TrainingSample {
  Eigen::VectorXd x0;
  Trajectory reference;
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as MlpModel::parameters()
};

/// Mean over samples, times and components of (predicted - reference)^2 and
/// its gradient with respect to the network parameters.
LossAndGradient loss_and_gradient(const HbdnoModel& model,
                                  std::span<const TrainingSample> batch);

struct TrainResult {
  HbdnoModel model;
  std::vector<double> loss_history;  // one entry per epoch
};

/// Adam on loss_and_gradient over seeded initial conditions (origin included).
/// Throws NumericalError(kDivergence) when the loss stops being finite.
TrainResult train(const HbdnoModel& model, const OdeSystem& sys, const TrainConfig& cfg);

/// Reference trajectories on the model's evaluation grid, one per x0.
std::vector<TrainingSample> make_training_set(const OdeSystem& sys, const KnotVector& kv,
                                              std::span<const Eigen::VectorXd> ics,
                                              int num_eval_times, int integration_steps);

/// Mean squared error of predicted vs reference trajectories.
double trajectory_mse(const HbdnoModel& model, std::span<const TrainingSample> samples);

/// Control points obtained by integrating sys from x0 and least-squares fitting.
ControlPointGrid oracle_control_points(const KnotVector& kv, const OdeSystem& sys,
                                       const Eigen::VectorXd& x0,
                                       int integration_steps = 1000);

/// Text checkpoint with 17-significant-digit parameters.
void save_checkpoint(const std::filesystem::path& path, const HbdnoModel& model,
                     const TrainConfig& cfg);

struct Checkpoint {
  HbdnoModel model;
  TrainConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spline_koopman
