#include "spline_koopman/config.hpp"
#include "spline_koopman/errors.hpp"

#include <doctest.h>

#include <string>

using namespace spline_koopman;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty configuration is the benchmark setup") {
  const RunConfig c = parse_config("");
  CHECK(c == RunConfig{});
  CHECK(c.horizon == 10.0);
  CHECK(c.ell == 50);
  CHECK(c.delay == 5);
  CHECK(c.degree == 3);
  const OdeSystem sys = c.make_system();
  CHECK(sys.dim == 2);
  CHECK(sys.domain_box.lo == Eigen::Vector2d(-2.0, -2.0));
  CHECK(sys.domain_box.hi == Eigen::Vector2d(2.0, 2.0));
  const Eigen::VectorXd dx = sys.rhs(Eigen::Vector2d(1.0, 1.0));
  CHECK(dx == Eigen::Vector2d(-0.5, -1.3));
}

TEST_CASE("benchmark configuration file") {
  const RunConfig c = parse_config(
      "# 2D linear benchmark\n"
      "system = linear\n"
      "matrix = -0.5, 0, 0, -1.3\n"
      "horizon = 10   # seconds\n"
      "ell = 50\n"
      "delay = 5\n"
      "box_lo = -2\n"
      "box_hi = 2, 2\n");
  CHECK(c.horizon == 10.0);
  CHECK(c.ell == 50);
  CHECK(c.delay == 5);
  const OdeSystem sys = c.make_system();
  CHECK(sys.domain_box.lo == Eigen::Vector2d(-2.0, -2.0));
  CHECK(sys.domain_box.hi == Eigen::Vector2d(2.0, 2.0));
}

TEST_CASE("row-major matrix and nonlinear selection") {
  const RunConfig c = parse_config("matrix = 1, 2, 3, 4\n");
  CHECK(c.make_system().rhs(Eigen::Vector2d(1.0, 0.0)) == Eigen::Vector2d(1.0, 3.0));
  const RunConfig n = parse_config("system = nonlinear\n");
  CHECK(n.make_system().name == "nonlinear");
  const RunConfig three = parse_config("matrix = -1,0,0, 0,-2,0, 0,0,-3\ndmd_x0 = 1,1,1\n");
  CHECK(three.make_system().dim == 3);
}

TEST_CASE("validation errors name the key") {
  CHECK(error_of("ell = 3\ndegree = 3\n").find("ell") != std::string::npos);
  CHECK(error_of("horizon = -1\n").find("horizon") != std::string::npos);
  CHECK(error_of("source = magic\n").find("source") != std::string::npos);
  CHECK(error_of("system = chaotic\n").find("system") != std::string::npos);
  CHECK(error_of("matrix = 1, 2, 3\n").find("matrix") != std::string::npos);
  CHECK(error_of("dmd_x0 = 1\n").find("dmd_x0") != std::string::npos);
  CHECK(error_of("box_lo = 3\n").find("box_hi") != std::string::npos);
  CHECK(error_of("delay = 49\n").find("delay") != std::string::npos);
  CHECK(error_of("learning_rate = 2\n").find("learning_rate") != std::string::npos);
  CHECK(error_of("sweep_ells = 10, 4\n").find("sweep_ells") != std::string::npos);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(error_of("ell = 40\nwidth = 3\n").find("line 2") != std::string::npos);
  CHECK(error_of("ell = 40\nwidth = 3\n").find("width") != std::string::npos);
  CHECK(error_of("\n\nell forty\n").find("line 3") != std::string::npos);
  CHECK(error_of("ell = forty\n").find("line 1") != std::string::npos);
  CHECK(error_of("pin_first_slice = maybe\n").find("pin_first_slice") != std::string::npos);
  CHECK(error_of("seed = -4\n").find("seed") != std::string::npos);
}

TEST_CASE("to_text echoes every key and reads back") {
  RunConfig c;
  c.system = "nonlinear";
  c.box_lo = {-1.5, -0.25};
  c.box_hi = {1.0 / 3.0};
  c.horizon = 7.125;
  c.hidden_layers = {64, 32, 16};
  c.learning_rate = 3e-4;
  c.pin_first_slice = false;
  c.source = "network";
  c.dmd_x0 = {0.1, -0.7};
  c.sweep_ells = {12, 24};
  c.seed = 18446744073709551615ULL;
  c.out = "some/dir";
  c.checkpoint = "x.ckpt";
  const std::string text = to_text(c);
  CHECK(parse_config(text) == c);
  for (const char* key : {"system", "matrix", "box_lo", "box_hi", "horizon", "degree", "ell",
                          "delay", "integration_steps", "num_eval_times", "hidden_layers",
                          "learning_rate", "epochs", "batch_size", "num_train_ics",
                          "pin_first_slice", "num_heldout_ics", "source", "dmd_x0",
                          "num_diag_ics", "dmd_rank", "margin_threshold",
                          "equilibrium_tolerance", "sweep_ells", "seed", "out", "checkpoint"}) {
    CHECK(text.find(std::string(key) + " = ") != std::string::npos);
  }
  CHECK(c.checkpoint_path() == "x.ckpt");
  c.checkpoint.clear();
  CHECK(c.checkpoint_path() == std::filesystem::path("some/dir") / "model.ckpt");
}

TEST_CASE("train configuration is forwarded") {
  const RunConfig c = parse_config("epochs = 7\nbatch_size = 9\nseed = 5\n");
  const TrainConfig t = c.train_config();
  CHECK(t.epochs == 7);
  CHECK(t.batch_size == 9);
  CHECK(t.seed == 5);
  CHECK(t.learning_rate == 1e-3);
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), IoError);
}
