/**
 * @file pipeline.hpp
 * @brief End-to-end runs: data generation, training, spectral analysis,
 *        certification and the ell sweep.
 *
 * Seeds derived from RunConfig::seed: training initial conditions use seed,
 * network initialisation seed + 1, held-out initial conditions seed + 2 and
 * diagnostic initial conditions seed + 3.
 */

#pragma once

#include "spline_koopman/config.hpp"
#include "spline_koopman/koopman.hpp"
#include "spline_koopman/operator.hpp"
#include "spline_koopman/report.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace spline_koopman {

using ControlPointSource = std::function<ControlPointGrid(const Eigen::VectorXd&)>;

KnotVector knots_for(const RunConfig& cfg);
KnotVector knots_for(const RunConfig& cfg, int ell);

/// Integrate-and-fit control points (the exact operator up to fit error).
ControlPointSource oracle_source(const RunConfig& cfg, const OdeSystem& sys,
                                 const KnotVector& kv);
ControlPointSource network_source(const HbdnoModel& model);

struct SpectralAnalysis {
  KnotVector kv;
  ControlPointGrid sequence;  // from cfg.dmd_x0
  DmdModel exact;
  DmdModel hankel;
  ResidualDiagnostics diagnostics;  // pairs with uniformly spaced Greville abscissae
  ResidualDiagnostics full_range;   // every consecutive pair
};

/// DMD on the dmd_x0 sequence and pooled residuals over cfg.num_diag_ics
/// diagnostic initial conditions.
SpectralAnalysis analyze_spectrum(const RunConfig& cfg, const OdeSystem& sys,
                                  const KnotVector& kv, const ControlPointSource& source);

struct Experiment {
  SpectralAnalysis analysis;
  StabilityReport report;
  ExperimentArtifacts artifacts;
};

/// Full analysis of cfg. A null model selects the oracle source.
Experiment run_experiment(const RunConfig& cfg, const HbdnoModel* model = nullptr);

struct TrainOutcome {
  TrainResult result;
  double heldout_mse = 0.0;
  double origin_max_abs = 0.0;  // max |control point| of forward(0)
};

/// Trains with the configured seeds and scores the held-out set.
TrainOutcome train_operator(const RunConfig& cfg);

struct SweepRow {
  int ell = 0;
  double max_residual = 0.0;
  double one_step_mse = 0.0;
  double full_range_max_residual = 0.0;
  double rho_exact = 0.0;
  double rho_hankel = 0.0;
};

/// Oracle-mode residual diagnostics for every entry of cfg.sweep_ells.
std::vector<SweepRow> sweep_ell(const RunConfig& cfg);

void run_generate(const RunConfig& cfg, std::ostream& log);
void run_train(const RunConfig& cfg, std::ostream& log);
void run_analyze(const RunConfig& cfg, std::ostream& log);
void run_certify(const RunConfig& cfg, std::ostream& log);
void run_reproduce(const RunConfig& cfg, std::ostream& log);
void run_sweep_ell(const RunConfig& cfg, std::ostream& log);

}  // namespace spline_koopman
