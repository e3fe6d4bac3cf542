// spline-koopman: command-line driver for the operator + DMD stability pipeline.
//
//   spline-koopman reproduce-paper --seed 42 --out run
//   spline-koopman analyze --config unstable.cfg --out unstable
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.

#include "spline_koopman/config.hpp"
#include "spline_koopman/errors.hpp"
#include "spline_koopman/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace sk = spline_koopman;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> source;
  std::optional<int> ell;
  std::optional<int> degree;
  std::optional<int> delay;
};

sk::RunConfig resolve(const Overrides& o) {
  sk::RunConfig cfg;
  if (!o.config_path.empty()) cfg = sk::load_config(o.config_path);
  if (o.out) cfg.out = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.source) cfg.source = *o.source;
  if (o.ell) cfg.ell = *o.ell;
  if (o.degree) cfg.degree = *o.degree;
  if (o.delay) cfg.delay = *o.delay;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"B-spline neural operator with DMD-based stability analysis"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "key = value configuration file");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "base random seed");
  app.add_option("--source", o.source, "control-point source for analysis")
      ->check(CLI::IsMember({"network", "oracle"}));
  app.add_option("--ell", o.ell, "number of control points per component");
  app.add_option("--degree", o.degree, "spline degree");
  app.add_option("--delay", o.delay, "Hankel delay q");

  using Runner = void (*)(const sk::RunConfig&, std::ostream&);
  Runner runner = nullptr;
  auto add = [&](const char* name, const char* help, Runner fn) {
    app.add_subcommand(name, help)->callback([&runner, fn] { runner = fn; });
  };
  add("generate", "write training and held-out datasets", sk::run_generate);
  add("train", "train the operator, write checkpoint and loss history", sk::run_train);
  add("analyze", "fit exact and Hankel DMD, write spectra and residuals", sk::run_analyze);
  add("certify", "write the stability report bundle", sk::run_certify);
  add("reproduce-paper", "run the 2D linear benchmark end to end", sk::run_reproduce);
  add("sweep-ell", "residual diagnostics over several control-point counts", sk::run_sweep_ell);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    runner(resolve(o), std::cout);
    return 0;
  } catch (const sk::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const sk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const sk::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
