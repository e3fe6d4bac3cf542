// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "spline_koopman/bspline.hpp"
#include "spline_koopman/config.hpp"
#include "spline_koopman/csv.hpp"
#include "spline_koopman/koopman.hpp"
#include "spline_koopman/operator.hpp"
#include "spline_koopman/pipeline.hpp"
#include "spline_koopman/report.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace spline_koopman;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += fmt("; over the %.0f s budget", budget_s);
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s (%.2f s)\n    %s\n", id, o.pass ? "PASS" : "FAIL", name, secs,
              o.detail.c_str());
  std::fflush(stdout);
}

Outcome spline_properties() {
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<int> degree(1, 3);
  std::uniform_real_distribution<double> horizon(0.5, 20.0);
  std::normal_distribution<double> g;
  double pou = 0.0;
  double endpoint = 0.0;
  double naive = 0.0;
  double hull_violation = 0.0;
  int negative = 0;
  int support = 0;
  const int draws = 2000;
  std::vector<Eigen::Vector2d> dirs;
  for (int k = 0; k < 64; ++k) dirs.emplace_back(std::cos(k * M_PI / 32), std::sin(k * M_PI / 32));

  for (int draw = 0; draw < draws; ++draw) {
    const int d = degree(gen);
    const int l = std::uniform_int_distribution<int>(d + 1, 60)(gen);
    const double T = horizon(gen);
    const KnotVector kv = make_clamped_uniform_knots(d, l, T);
    const auto knots = oracle::clamped_knots(d, l, T);
    ControlPointGrid cps(2, l);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < l; ++j) cps.values()(i, j) = g(gen);
    }
    double t = std::uniform_real_distribution<double>(0.0, T)(gen);
    if (draw % 50 == 0) t = 0.0;
    if (draw % 50 == 1) t = T;

    const Eigen::VectorXd b = eval_basis(kv, t).values;
    pou = std::max(pou, std::abs(b.sum() - 1.0));
    naive = std::max(naive, (b - oracle::basis_row(knots, d, l, t)).cwiseAbs().maxCoeff());
    for (int j = 0; j < l; ++j) {
      if (b[j] < 0.0) ++negative;
      // Support of B_j is [t_j, t_{j+d+1}].
      const bool inside = knots[static_cast<std::size_t>(j)] <= t &&
                          t <= knots[static_cast<std::size_t>(j + d + 1)];
      if (b[j] != 0.0 && !inside) ++support;
    }

    const Eigen::VectorXd p = eval_curve(kv, cps, t);
    for (const auto& u : dirs) {
      double best = -1e300;
      for (int j = 0; j < l; ++j) best = std::max(best, u.dot(cps.values().col(j)));
      hull_violation = std::max(hull_violation, u.dot(p) - best);
    }
    endpoint = std::max(endpoint, (eval_curve(kv, cps, 0.0) - cps.slice(0)).cwiseAbs().maxCoeff());
    endpoint =
        std::max(endpoint, (eval_curve(kv, cps, T) - cps.slice(l - 1)).cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = pou <= 1e-12 && negative == 0 && support == 0 && endpoint <= 1e-14 &&
           hull_violation <= 1e-12 && naive <= 1e-12;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%d draws: partition of unity %.2e, negative values %d, support violations %d, "
                "endpoint %.2e, hull excess %.2e, vs recursive oracle %.2e",
                draws, pou, negative, support, endpoint, hull_violation, naive);
  o.detail = buf;
  return o;
}

Outcome dmd_oracle() {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> g;
  const double dt = 10.0 / 47.0;
  double worst_a = 0.0;
  double worst_rate = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector2cd lambda;
    const Eigen::Matrix2d m = oracle::random_stable_matrix(gen, &lambda);
    const auto seq = oracle::linear_sequence(m, Eigen::Vector2d(g(gen), g(gen)), 50);
    const DmdModel model = exact_dmd(build_snapshots(seq), DmdOptions{std::nullopt, 1e-12, dt});
    worst_a = std::max(worst_a, (model.a - m).norm());
    // Continuous spectrum of (1/dt) ln M, principal branch, matched greedily.
    const Eigen::VectorXcd got = model.continuous_rates();
    std::vector<bool> used(2, false);
    for (int i = 0; i < 2; ++i) {
      const std::complex<double> want = std::log(lambda[i]) / dt;
      double best = 1e300;
      int arg = 0;
      for (int j = 0; j < 2; ++j) {
        if (!used[static_cast<std::size_t>(j)] && std::abs(got[j] - want) < best) {
          best = std::abs(got[j] - want);
          arg = j;
        }
      }
      used[static_cast<std::size_t>(arg)] = true;
      worst_rate = std::max(worst_rate, best);
    }
  }
  Outcome o;
  o.pass = worst_a <= 1e-8 && worst_rate <= 1e-6;
  char buf[200];
  std::snprintf(buf, sizeof buf, "100 matrices: max |A - M|_F %.2e, max rate error %.2e", worst_a,
                worst_rate);
  o.detail = buf;
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance run\n");

  criterion(1, "spline property suite", 10.0, spline_properties);
  criterion(2, "DMD oracle equivalence", 5.0, dmd_oracle);

  // Criteria 3 to 5 share the oracle-mode benchmark run.
  RunConfig paper;
  paper.out = (fs::temp_directory_path() / "sk_accept_paper").string();
  std::optional<Experiment> bench;
  double bench_secs = 0.0;
  {
    const auto start = std::chrono::steady_clock::now();
    try {
      bench.emplace(run_experiment(paper));
    } catch (const std::exception& e) {
      std::printf("benchmark run failed: %s\n", e.what());
    }
    bench_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  const double dt_g = interior_greville_spacing(knots_for(paper));

  criterion(3, "benchmark spectral reproduction (oracle mode)", 30.0 - bench_secs, [&] {
    if (!bench) return Outcome{false, "benchmark run failed"};
    const StabilityReport& r = bench->report;
    const double target = std::exp(-0.5 * dt_g);
    Outcome o;
    o.pass = std::abs(r.spectral_radius_exact - target) <= 0.02 &&
             std::abs(r.spectral_radius_hankel - target) <= 0.02 &&
             r.spectral_radius_exact < 1.0 && r.spectral_radius_hankel < 1.0 &&
             r.radius_gap <= 0.02 && r.verdict == Verdict::kAsymptoticallyStable;
    char buf[260];
    std::snprintf(buf, sizeof buf,
                  "dt_G %.6f, exp(-0.5 dt_G) %.6f, rho exact %.6f, rho Hankel %.6f, gap %.4f, "
                  "verdict %s",
                  dt_g, target, r.spectral_radius_exact, r.spectral_radius_hankel, r.radius_gap,
                  to_string(r.verdict).c_str());
    o.detail = buf;
    return o;
  });

  criterion(4, "continuous-rate recovery", 30.0 - bench_secs, [&] {
    if (!bench) return Outcome{false, "benchmark run failed"};
    const Eigen::VectorXcd& rates = bench->report.continuous_rates;
    Outcome o;
    if (rates.size() < 2) return Outcome{false, "fewer than two rates"};
    const double e1 = std::abs(rates[0] - std::complex<double>(-0.5)) / 0.5;
    const double e2 = std::abs(rates[1] - std::complex<double>(-1.3)) / 1.3;
    o.pass = e1 <= 0.1 && e2 <= 0.1;
    char buf[260];
    std::snprintf(buf, sizeof buf,
                  "Hankel DMD rates %.6f%+.6fi and %.6f%+.6fi, relative errors %.2e and %.2e",
                  rates[0].real(), rates[0].imag(), rates[1].real(), rates[1].imag(), e1, e2);
    o.detail = buf;
    return o;
  });

  criterion(5, "reconstruction ordering", 30.0 - bench_secs, [&] {
    if (!bench) return Outcome{false, "benchmark run failed"};
    const MseTable& m = bench->report.mse_table;
    Outcome o;
    o.pass = m.hankel_dmd_vs_truth < m.exact_dmd_vs_truth && m.hankel_dmd_vs_truth <= 1e-4 &&
             m.exact_dmd_vs_truth <= 1e-2;
    char buf[200];
    std::snprintf(buf, sizeof buf, "MSE vs truth: Hankel DMD %.3e, exact DMD %.3e, HBDNO %.3e",
                  m.hankel_dmd_vs_truth, m.exact_dmd_vs_truth, m.hbdno_vs_truth);
    o.detail = buf;
    return o;
  });

  criterion(6, "quasi-Markov trend over ell", 60.0, [&] {
    const auto rows = sweep_ell(paper);
    Outcome o{true, ""};
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (k > 0 && rows[k].max_residual > 1.05 * rows[k - 1].max_residual) o.pass = false;
      char buf[120];
      std::snprintf(buf, sizeof buf, "%sell %d: %.3e", k ? ", " : "", rows[k].ell,
                    rows[k].max_residual);
      o.detail += buf;
    }
    return o;
  });

  criterion(7, "operator training", 1800.0, [&] {
    const TrainOutcome t = train_operator(paper);

    // Gradient check on the default architecture at its initialisation.
    const OdeSystem sys = paper.make_system();
    const KnotVector kv = knots_for(paper);
    const HbdnoModel model = make_hbdno(kv, sys, paper.hidden_layers, paper.seed + 1, true);
    const auto ics = sample_initial_conditions(sys.domain_box, 16, paper.seed);
    const auto batch = make_training_set(sys, kv, ics, paper.num_eval_times,
                                         paper.integration_steps);
    const LossAndGradient lg = loss_and_gradient(model, batch);
    auto loss_at = [&](const Eigen::VectorXd& theta) {
      HbdnoModel m = model;
      m.mlp.set_parameters(theta);
      return loss_and_gradient(m, batch).loss;
    };
    std::mt19937_64 gen(paper.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, lg.gradient.size() - 1);
    const Eigen::VectorXd theta = model.mlp.parameters();
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index i = pick(gen);
      const double fd = oracle::central_difference(loss_at, theta, i, 1e-6);
      const double denom = std::max({std::abs(fd), std::abs(lg.gradient[i]), 1e-8});
      worst = std::max(worst, std::abs(fd - lg.gradient[i]) / denom);
    }

    Outcome o;
    o.pass = t.heldout_mse <= 1e-2 && t.origin_max_abs <= 0.1 && worst <= 1e-5;
    char buf[260];
    std::snprintf(buf, sizeof buf,
                  "held-out MSE %.3e, max |forward(0)| %.3e, final loss %.3e, gradient check "
                  "max relative error %.2e",
                  t.heldout_mse, t.origin_max_abs, t.result.loss_history.back(), worst);
    o.detail = buf;
    return o;
  });

  criterion(8, "negative control (eigenvalue +0.3)", 30.0, [&] {
    RunConfig cfg = paper;
    cfg.matrix = {0.3, 0.0, 0.0, -1.0};
    const Experiment e = run_experiment(cfg);
    const double rho = std::max(e.report.spectral_radius_exact, e.report.spectral_radius_hankel);
    const double bar = std::exp(0.3 * dt_g) - 0.01;
    Outcome o;
    o.pass = e.report.verdict == Verdict::kUnstable && rho >= bar;
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "verdict %s, rho exact %.6f, rho Hankel %.6f, bar exp(0.3 dt_G) - 0.01 = %.6f",
                  to_string(e.report.verdict).c_str(), e.report.spectral_radius_exact,
                  e.report.spectral_radius_hankel, bar);
    o.detail = buf;
    return o;
  });

  criterion(9, "determinism of reproduce-paper --seed 42", 120.0, [&] {
    const fs::path a = fs::temp_directory_path() / "sk_accept_det_a";
    const fs::path b = fs::temp_directory_path() / "sk_accept_det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    for (const auto& dir : {a, b}) {
      const std::string cmd = std::string(SPLINE_KOOPMAN_CLI) +
                              " reproduce-paper --seed 42 --out " + dir.string() + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) return Outcome{false, "CLI run failed"};
    }
    int compared = 0;
    int expected = 0;
    for (const auto& name : bundle_file_names()) {
      if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
      ++expected;
      if (read_text_file(a / name) != read_text_file(b / name)) {
        return Outcome{false, name + " differs between runs"};
      }
      ++compared;
    }
    fs::remove_all(a);
    fs::remove_all(b);
    return Outcome{expected > 0 && compared == expected,
                   std::to_string(compared) + " of " + std::to_string(expected) +
                       " CSV files byte-identical"};
  });

  std::printf("%s: %d criterion failure(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
