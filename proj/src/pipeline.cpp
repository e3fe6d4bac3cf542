#include "spline_koopman/pipeline.hpp"

#include "spline_koopman/csv.hpp"
#include "spline_koopman/errors.hpp"
#include "spline_koopman/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace spline_koopman {

namespace {

std::optional<int> rank_option(const RunConfig& cfg) {
  if (cfg.dmd_rank > 0) return cfg.dmd_rank;
  return std::nullopt;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<ControlPointGrid> sequences_for(const std::vector<Eigen::VectorXd>& ics,
                                            const ControlPointSource& source) {
  std::vector<ControlPointGrid> seqs(ics.size(), ControlPointGrid(1, 1));
  parallel_for(ics.size(), [&](std::size_t i) { seqs[i] = source(ics[i]); });
  return seqs;
}

double trajectory_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void make_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw IoError("cannot create '" + cfg.out + "': " + ec.message());
}

HbdnoModel load_model_for(const RunConfig& cfg) {
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  const KnotVector& kv = ckpt.model.kv;
  if (kv.degree() != cfg.degree || kv.num_basis() != cfg.ell ||
      kv.horizon() != cfg.horizon) {
    throw ConfigError("checkpoint '" + cfg.checkpoint_path().string() +
                      "' was trained with degree " + std::to_string(kv.degree()) + ", ell " +
                      std::to_string(kv.num_basis()) +
                      "; the configuration asks for something else");
  }
  if (ckpt.model.sys_name != cfg.system) {
    throw ConfigError("checkpoint was trained on the '" + ckpt.model.sys_name +
                      "' system, the configuration selects '" + cfg.system + "'");
  }
  return std::move(ckpt.model);
}

void print_summary(const StabilityReport& r, std::ostream& log) {
  log << "verdict: " << to_string(r.verdict) << '\n'
      << "spectral radius exact " << fixed4(r.spectral_radius_exact) << ", Hankel "
      << fixed4(r.spectral_radius_hankel) << '\n'
      << "MSE vs truth: hbdno " << sci(r.mse_table.hbdno_vs_truth) << ", exact DMD "
      << sci(r.mse_table.exact_dmd_vs_truth) << ", Hankel DMD "
      << sci(r.mse_table.hankel_dmd_vs_truth) << '\n';
}

void require_finite(const StabilityReport& r) {
  const double values[] = {r.spectral_radius_exact, r.spectral_radius_hankel,
                           r.mse_table.hbdno_vs_truth, r.mse_table.exact_dmd_vs_truth,
                           r.mse_table.hankel_dmd_vs_truth, r.residual_summary.max_residual};
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericalError(NumericalError::Kind::kDivergence,
                           "analysis produced non-finite values; see the written outputs");
    }
  }
}

}  // namespace

KnotVector knots_for(const RunConfig& cfg) { return knots_for(cfg, cfg.ell); }

KnotVector knots_for(const RunConfig& cfg, int ell) {
  return make_clamped_uniform_knots(cfg.degree, ell, cfg.horizon);
}

ControlPointSource oracle_source(const RunConfig& cfg, const OdeSystem& sys,
                                 const KnotVector& kv) {
  const int steps = cfg.integration_steps;
  return [sys, kv, steps](const Eigen::VectorXd& x0) {
    return oracle_control_points(kv, sys, x0, steps);
  };
}

ControlPointSource network_source(const HbdnoModel& model) {
  return [model](const Eigen::VectorXd& x0) { return forward(model, x0); };
}

SpectralAnalysis analyze_spectrum(const RunConfig& cfg, const OdeSystem& sys,
                                  const KnotVector& kv, const ControlPointSource& source) {
  const double dt = interior_greville_spacing(kv);
  ControlPointGrid seq = source(as_vector(cfg.dmd_x0));
  const auto slices = seq.slices();

  DmdModel exact = exact_dmd(build_snapshots(slices), DmdOptions{rank_option(cfg), 1e-12, dt});
  HankelDmdOptions hopts;
  hopts.rank = rank_option(cfg);
  hopts.slice_dt = dt;
  DmdModel hankel = hankel_dmd(slices, cfg.delay, hopts);

  const auto ics = sample_initial_conditions(sys.domain_box, cfg.num_diag_ics, cfg.seed + 3);
  const auto seqs = sequences_for(ics, source);
  ResidualDiagnostics diag = quasi_markov_residuals(seqs, uniform_greville_pairs(kv));
  ResidualDiagnostics full = quasi_markov_residuals(seqs, {0, kv.num_basis() - 1});

  return SpectralAnalysis{kv, std::move(seq), std::move(exact), std::move(hankel),
                          std::move(diag), std::move(full)};
}

Experiment run_experiment(const RunConfig& cfg, const HbdnoModel* model) {
  cfg.validate();
  const OdeSystem sys = cfg.make_system();
  const KnotVector kv = knots_for(cfg);
  const ControlPointSource source = model ? network_source(*model) : oracle_source(cfg, sys, kv);

  Experiment e{analyze_spectrum(cfg, sys, kv, source), {}, {}};
  const SpectralAnalysis& s = e.analysis;
  const auto slices = s.sequence.slices();
  const int ell = kv.num_basis();

  ExperimentArtifacts& a = e.artifacts;
  a.config_text = to_text(cfg);
  const Trajectory truth = reference_on_grid(sys, as_vector(cfg.dmd_x0), cfg.horizon,
                                             cfg.num_eval_times, cfg.integration_steps);
  a.times = truth.times;
  a.truth = truth.states;
  a.hbdno = eval_curve(kv, s.sequence, a.times);

  const std::vector<Eigen::VectorXd> first{slices.front()};
  a.dmd_recon = eval_curve(kv, ControlPointGrid::from_slices(reconstruct(s.exact, first, ell)),
                           a.times);
  const std::span<const Eigen::VectorXd> window(slices.data(),
                                                static_cast<std::size_t>(s.hankel.delay));
  a.hdmd_recon = eval_curve(kv, ControlPointGrid::from_slices(reconstruct(s.hankel, window, ell)),
                            a.times);
  a.exact = s.exact;
  a.hankel = s.hankel;
  a.residuals = s.diagnostics;

  e.report = certify(s.exact, s.hankel, s.diagnostics, cfg.margin_threshold);
  e.report.system_name = sys.name;
  e.report.source = model ? "network" : "oracle";
  e.report.mse_table = MseTable{trajectory_error(a.hbdno, a.truth),
                                trajectory_error(a.dmd_recon, a.truth),
                                trajectory_error(a.hdmd_recon, a.truth)};
  return e;
}

TrainOutcome train_operator(const RunConfig& cfg) {
  cfg.validate();
  const OdeSystem sys = cfg.make_system();
  const KnotVector kv = knots_for(cfg);
  const HbdnoModel init = make_hbdno(kv, sys, cfg.hidden_layers, cfg.seed + 1,
                                     cfg.pin_first_slice);
  TrainOutcome out{train(init, sys, cfg.train_config()), 0.0, 0.0};

  const auto heldout_ics = sample_uniform_points(sys.domain_box, cfg.num_heldout_ics, cfg.seed + 2);
  const auto heldout = make_training_set(sys, kv, heldout_ics, cfg.num_eval_times,
                                         cfg.integration_steps);
  out.heldout_mse = trajectory_mse(out.result.model, heldout);
  out.origin_max_abs =
      forward(out.result.model, Eigen::VectorXd::Zero(sys.dim)).values().cwiseAbs().maxCoeff();
  if (!std::isfinite(out.heldout_mse)) {
    throw NumericalError(NumericalError::Kind::kDivergence, "held-out MSE is not finite");
  }
  return out;
}

std::vector<SweepRow> sweep_ell(const RunConfig& cfg) {
  cfg.validate();
  const OdeSystem sys = cfg.make_system();
  std::vector<SweepRow> rows;
  for (int ell : cfg.sweep_ells) {
    RunConfig local = cfg;
    local.ell = ell;
    const KnotVector kv = knots_for(cfg, ell);
    const SpectralAnalysis s = analyze_spectrum(local, sys, kv, oracle_source(local, sys, kv));
    rows.push_back(SweepRow{ell, s.diagnostics.max_residual, s.diagnostics.one_step_mse,
                            s.full_range.max_residual, s.exact.spectral_radius(),
                            s.hankel.spectral_radius()});
  }
  return rows;
}

void run_generate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  make_out_dir(cfg);
  const std::filesystem::path dir(cfg.out);
  const OdeSystem sys = cfg.make_system();
  const KnotVector kv = knots_for(cfg);

  auto dataset = [&](const std::vector<Eigen::VectorXd>& ics, const std::string& name) {
    const auto samples =
        make_training_set(sys, kv, ics, cfg.num_eval_times, cfg.integration_steps);
    CsvTable t;
    t.header = {"ic", "t"};
    for (int i = 0; i < sys.dim; ++i) t.header.push_back("x" + std::to_string(i + 1));
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const Trajectory& tr = samples[k].reference;
      for (std::size_t r = 0; r < tr.size(); ++r) {
        std::vector<double> row{static_cast<double>(k + 1), tr.times[r]};
        for (int i = 0; i < sys.dim; ++i) row.push_back(tr.states(static_cast<Eigen::Index>(r), i));
        t.rows.push_back(std::move(row));
      }
    }
    write_csv(dir / name, t);
    log << "wrote " << (dir / name).string() << " (" << samples.size() << " trajectories)\n";
  };

  write_text_file(dir / "config.txt", to_text(cfg));
  dataset(sample_initial_conditions(sys.domain_box, cfg.num_train_ics, cfg.seed), "train_set.csv");
  dataset(sample_uniform_points(sys.domain_box, cfg.num_heldout_ics, cfg.seed + 2),
          "heldout_set.csv");
  write_csv(dir / "oracle_control_points.csv",
            control_point_table(oracle_source(cfg, sys, kv)(as_vector(cfg.dmd_x0))));
  log << "wrote " << (dir / "oracle_control_points.csv").string() << '\n';
}

void run_train(const RunConfig& cfg, std::ostream& log) {
  make_out_dir(cfg);
  const std::filesystem::path dir(cfg.out);
  log << "training " << cfg.epochs << " epochs on " << cfg.num_train_ics
      << " initial conditions\n";
  const TrainOutcome out = train_operator(cfg);

  save_checkpoint(cfg.checkpoint_path(), out.result.model, cfg.train_config());
  CsvTable history;
  history.header = {"epoch", "loss"};
  for (std::size_t k = 0; k < out.result.loss_history.size(); ++k) {
    history.rows.push_back({static_cast<double>(k + 1), out.result.loss_history[k]});
  }
  write_csv(dir / "loss_history.csv", history);
  write_text_file(dir / "config.txt", to_text(cfg));
  const double final_loss =
      out.result.loss_history.empty() ? 0.0 : out.result.loss_history.back();
  write_text_file(dir / "train_summary.txt",
                  "final_training_loss = " + format_double(final_loss) + "\n" +
                      "heldout_mse = " + format_double(out.heldout_mse) + "\n" +
                      "origin_max_abs_control_point = " + format_double(out.origin_max_abs) +
                      "\n");
  log << "final training loss " << sci(final_loss) << ", held-out MSE " << sci(out.heldout_mse)
      << ", max |forward(0)| " << sci(out.origin_max_abs) << '\n'
      << "checkpoint: " << cfg.checkpoint_path().string() << '\n';
  if (out.origin_max_abs > cfg.equilibrium_tolerance) {
    log << "warning: forward(0) exceeds equilibrium_tolerance "
        << sci(cfg.equilibrium_tolerance) << '\n';
  }
}

void run_analyze(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  make_out_dir(cfg);
  const std::filesystem::path dir(cfg.out);
  std::optional<HbdnoModel> model;
  if (cfg.source == "network") model = load_model_for(cfg);
  const Experiment e = run_experiment(cfg, model ? &*model : nullptr);
  const SpectralAnalysis& s = e.analysis;

  write_text_file(dir / "config.txt", to_text(cfg));
  write_csv(dir / "control_points.csv", control_point_table(s.sequence));
  write_csv(dir / "eigs_exact.csv", eigen_table(s.exact));
  write_csv(dir / "eigs_hankel.csv", eigen_table(s.hankel));
  write_csv(dir / "modes_exact.csv", modes_table(s.exact));
  write_csv(dir / "modes_hankel.csv", modes_table(s.hankel));
  write_csv(dir / "residuals.csv", residual_table(s.diagnostics));
  write_csv(dir / "residuals_full_range.csv", residual_table(s.full_range));
  write_text_file(dir / "analysis.txt", report_text(e.report));
  print_summary(e.report, log);
  require_finite(e.report);
}

void run_certify(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::optional<HbdnoModel> model;
  if (cfg.source == "network") model = load_model_for(cfg);
  const Experiment e = run_experiment(cfg, model ? &*model : nullptr);
  emit_experiment_bundle(cfg.out, e.report, e.artifacts);
  print_summary(e.report, log);
  log << "bundle: " << cfg.out << '\n';
  require_finite(e.report);
}

void run_reproduce(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.source == "network") {
    run_train(cfg, log);
  }
  run_certify(cfg, log);
}

void run_sweep_ell(const RunConfig& cfg, std::ostream& log) {
  make_out_dir(cfg);
  const auto rows = sweep_ell(cfg);
  CsvTable t;
  t.header = {"ell", "max_residual", "one_step_mse", "full_range_max_residual", "rho_exact",
              "rho_hankel"};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<double>(r.ell), r.max_residual, r.one_step_mse,
                      r.full_range_max_residual, r.rho_exact, r.rho_hankel});
    log << "ell " << r.ell << ": max residual " << sci(r.max_residual) << " (all pairs "
        << sci(r.full_range_max_residual) << "), rho exact " << fixed4(r.rho_exact)
        << ", Hankel " << fixed4(r.rho_hankel) << '\n';
  }
  const std::filesystem::path dir(cfg.out);
  write_text_file(dir / "config.txt", to_text(cfg));
  write_csv(dir / "sweep.csv", t);
}

}  // namespace spline_koopman
