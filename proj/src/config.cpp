#include "spline_koopman/config.hpp"

#include "spline_koopman/csv.hpp"
#include "spline_koopman/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace spline_koopman {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

double to_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("'" + s + "' is not a finite number");
  }
  return v;
}

long long to_integer(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(begin, &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError("'" + s + "' is not an integer");
  }
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("'" + s + "' is out of range");
  return static_cast<int>(v);
}

std::uint64_t to_seed(const std::string& s) {
  if (s.empty() || s[0] == '-') throw ConfigError("'" + s + "' is not a non-negative integer");
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError("'" + s + "' is not a valid seed");
  return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + s + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

std::vector<int> to_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(to_int(item));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out;
}

std::string ints_text(const std::vector<int>& v) {
  return join(v, [](int x) { return std::to_string(x); });
}

std::string doubles_text(const std::vector<double>& v) { return join(v, format_double); }

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"system", [](RunConfig& c, const std::string& v) { c.system = v; }},
      {"matrix", [](RunConfig& c, const std::string& v) { c.matrix = to_doubles(v); }},
      {"box_lo", [](RunConfig& c, const std::string& v) { c.box_lo = to_doubles(v); }},
      {"box_hi", [](RunConfig& c, const std::string& v) { c.box_hi = to_doubles(v); }},
      {"horizon", [](RunConfig& c, const std::string& v) { c.horizon = to_double(v); }},
      {"degree", [](RunConfig& c, const std::string& v) { c.degree = to_int(v); }},
      {"ell", [](RunConfig& c, const std::string& v) { c.ell = to_int(v); }},
      {"delay", [](RunConfig& c, const std::string& v) { c.delay = to_int(v); }},
      {"integration_steps",
       [](RunConfig& c, const std::string& v) { c.integration_steps = to_int(v); }},
      {"num_eval_times", [](RunConfig& c, const std::string& v) { c.num_eval_times = to_int(v); }},
      {"hidden_layers", [](RunConfig& c, const std::string& v) { c.hidden_layers = to_ints(v); }},
      {"learning_rate", [](RunConfig& c, const std::string& v) { c.learning_rate = to_double(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = to_int(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = to_int(v); }},
      {"num_train_ics", [](RunConfig& c, const std::string& v) { c.num_train_ics = to_int(v); }},
      {"pin_first_slice",
       [](RunConfig& c, const std::string& v) { c.pin_first_slice = to_bool(v); }},
      {"num_heldout_ics",
       [](RunConfig& c, const std::string& v) { c.num_heldout_ics = to_int(v); }},
      {"source", [](RunConfig& c, const std::string& v) { c.source = v; }},
      {"dmd_x0", [](RunConfig& c, const std::string& v) { c.dmd_x0 = to_doubles(v); }},
      {"num_diag_ics", [](RunConfig& c, const std::string& v) { c.num_diag_ics = to_int(v); }},
      {"dmd_rank", [](RunConfig& c, const std::string& v) { c.dmd_rank = to_int(v); }},
      {"margin_threshold",
       [](RunConfig& c, const std::string& v) { c.margin_threshold = to_double(v); }},
      {"equilibrium_tolerance",
       [](RunConfig& c, const std::string& v) { c.equilibrium_tolerance = to_double(v); }},
      {"sweep_ells", [](RunConfig& c, const std::string& v) { c.sweep_ells = to_ints(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_seed(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint = v; }},
  };
  return table;
}

int state_dim(const RunConfig& c) {
  if (c.system == "nonlinear") return 2;
  const auto root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c.matrix.size()))));
  return root * root == static_cast<int>(c.matrix.size()) ? root : -1;
}

Eigen::VectorXd broadcast(const std::vector<double>& v, int n) {
  if (v.size() == 1) return Eigen::VectorXd::Constant(n, v[0]);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void RunConfig::validate() const {
  if (system != "linear" && system != "nonlinear") {
    throw ConfigError("system: expected 'linear' or 'nonlinear', got '" + system + "'");
  }
  const int n = state_dim(*this);
  if (n < 1) throw ConfigError("matrix: needs n*n entries for some n >= 1");
  for (const auto* key : {"box_lo", "box_hi"}) {
    const auto& v = std::string(key) == "box_lo" ? box_lo : box_hi;
    if (v.size() != 1 && static_cast<int>(v.size()) != n) {
      throw ConfigError(std::string(key) + ": expected 1 or " + std::to_string(n) + " values");
    }
  }
  const Eigen::VectorXd lo = broadcast(box_lo, n);
  const Eigen::VectorXd hi = broadcast(box_hi, n);
  if (!(lo.array() < hi.array()).all()) throw ConfigError("box_hi: must exceed box_lo");
  if (!(horizon > 0.0)) throw ConfigError("horizon: must be positive");
  if (degree < 1) throw ConfigError("degree: must be >= 1");
  if (ell <= degree) throw ConfigError("ell: must exceed degree (" + std::to_string(degree) + ")");
  if (delay < 1) throw ConfigError("delay: must be >= 1");
  if (ell < delay + 2) throw ConfigError("delay: needs ell >= delay + 2");
  if (hidden_layers.empty()) throw ConfigError("hidden_layers: at least one layer required");
  for (int h : hidden_layers) {
    if (h < 1) throw ConfigError("hidden_layers: sizes must be positive");
  }
  if (num_heldout_ics < 1) throw ConfigError("num_heldout_ics: must be >= 1");
  if (source != "oracle" && source != "network") {
    throw ConfigError("source: expected 'oracle' or 'network', got '" + source + "'");
  }
  if (static_cast<int>(dmd_x0.size()) != n) {
    throw ConfigError("dmd_x0: expected " + std::to_string(n) + " values");
  }
  if (num_diag_ics < 2) throw ConfigError("num_diag_ics: must be >= 2");
  if (dmd_rank < 0) throw ConfigError("dmd_rank: must be >= 0");
  if (!(margin_threshold >= 0.0 && margin_threshold < 1.0)) {
    throw ConfigError("margin_threshold: must lie in [0, 1)");
  }
  if (!(equilibrium_tolerance > 0.0)) throw ConfigError("equilibrium_tolerance: must be positive");
  if (sweep_ells.empty()) throw ConfigError("sweep_ells: at least one value required");
  for (int l : sweep_ells) {
    if (l < degree + 3) {
      throw ConfigError("sweep_ells: every value must be >= degree + 3");
    }
  }
  if (out.empty()) throw ConfigError("out: must not be empty");
  train_config().validate();
}

OdeSystem RunConfig::make_system() const {
  validate();
  const int n = state_dim(*this);
  OdeSystem sys;
  if (system == "nonlinear") {
    sys = nonlinear_benchmark();
  } else {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = matrix[static_cast<std::size_t>(i * n + j)];
    }
    sys = linear_system(a);
  }
  sys.domain_box = DomainBox{broadcast(box_lo, n), broadcast(box_hi, n)};
  return sys;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = seed;
  t.num_train_ics = num_train_ics;
  t.num_eval_times = num_eval_times;
  t.pin_first_slice = pin_first_slice;
  t.integration_steps = integration_steps;
  return t;
}

std::filesystem::path RunConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return std::filesystem::path(out) / "model.ckpt";
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config(read_text_file(path), std::move(base));
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "system = " << c.system << '\n'
      << "matrix = " << doubles_text(c.matrix) << '\n'
      << "box_lo = " << doubles_text(c.box_lo) << '\n'
      << "box_hi = " << doubles_text(c.box_hi) << '\n'
      << "horizon = " << format_double(c.horizon) << '\n'
      << "degree = " << c.degree << '\n'
      << "ell = " << c.ell << '\n'
      << "delay = " << c.delay << '\n'
      << "integration_steps = " << c.integration_steps << '\n'
      << "num_eval_times = " << c.num_eval_times << '\n'
      << "hidden_layers = " << ints_text(c.hidden_layers) << '\n'
      << "learning_rate = " << format_double(c.learning_rate) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "num_train_ics = " << c.num_train_ics << '\n'
      << "pin_first_slice = " << (c.pin_first_slice ? "true" : "false") << '\n'
      << "num_heldout_ics = " << c.num_heldout_ics << '\n'
      << "source = " << c.source << '\n'
      << "dmd_x0 = " << doubles_text(c.dmd_x0) << '\n'
      << "num_diag_ics = " << c.num_diag_ics << '\n'
      << "dmd_rank = " << c.dmd_rank << '\n'
      << "margin_threshold = " << format_double(c.margin_threshold) << '\n'
      << "equilibrium_tolerance = " << format_double(c.equilibrium_tolerance) << '\n'
      << "sweep_ells = " << ints_text(c.sweep_ells) << '\n'
      << "seed = " << c.seed << '\n'
      << "out = " << c.out << '\n'
      << "checkpoint = " << c.checkpoint << '\n';
  return out.str();
}

}  // namespace spline_koopman
