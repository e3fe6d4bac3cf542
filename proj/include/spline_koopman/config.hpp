#pragma once

#include "spline_koopman/dynamics.hpp"
#include "spline_koopman/operator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spline_koopman {

/// Everything a pipeline run needs. Text form is one `key = value` per line;
/// `#` starts a comment and list values are comma separated.
struct RunConfig {
  std::string system = "linear";  // "linear" or "nonlinear"
  std::vector<double> matrix{-0.5, 0.0, 0.0, -1.3};  // row-major, linear system only
  std::vector<double> box_lo{-2.0};  // a single value is broadcast to every component
  std::vector<double> box_hi{2.0};

  double horizon = 10.0;
  int degree = 3;
  int ell = 50;
  int delay = 5;
  int integration_steps = 1000;
  int num_eval_times = 200;

  std::vector<int> hidden_layers{128, 128};
  double learning_rate = 1e-3;
  int epochs = 2000;
  int batch_size = 256;
  int num_train_ics = 256;
  bool pin_first_slice = true;
  int num_heldout_ics = 64;

  std::string source = "oracle";  // "oracle" (integrate and fit) or "network"
  std::vector<double> dmd_x0{1.0, 1.0};
  int num_diag_ics = 16;
  int dmd_rank = 0;  // 0 selects automatically
  double margin_threshold = 0.01;
  double equilibrium_tolerance = 0.1;
  std::vector<int> sweep_ells{10, 20, 40, 80};

  std::uint64_t seed = 42;
  std::string out = "run";
  std::string checkpoint;  // empty means <out>/model.ckpt

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  [[nodiscard]] OdeSystem make_system() const;
  [[nodiscard]] TrainConfig train_config() const;
  [[nodiscard]] std::filesystem::path checkpoint_path() const;

  bool operator==(const RunConfig&) const = default;
};

/// Applies the assignments in `text` on top of `base`. Unknown keys and
/// malformed values raise ConfigError with the line number.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key, in a form parse_config reads back to an equal configuration.
std::string to_text(const RunConfig& cfg);

}  // namespace spline_koopman
