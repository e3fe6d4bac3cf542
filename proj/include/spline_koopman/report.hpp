/**
 * @file report.hpp
 * @brief Stability verdicts from DMD spectra, plus the tables and run bundle
 *        an experiment produces.
 */

#pragma once

#include "spline_koopman/csv.hpp"
#include "spline_koopman/koopman.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace spline_koopman {

enum class Verdict { kAsymptoticallyStable, kMarginal, kUnstable };

/// "asymptotically_stable", "marginal" or "unstable".
std::string to_string(Verdict v);

/// Stable iff rho <= 1 - threshold, unstable iff rho >= 1 + threshold.
Verdict classify_radius(double spectral_radius, double margin_threshold);

struct MseTable {
  double hbdno_vs_truth = 0.0;
  double exact_dmd_vs_truth = 0.0;
  double hankel_dmd_vs_truth = 0.0;
};

struct StabilityReport {
  std::string system_name;
  std::string source;
  double spectral_radius_exact = 0.0;
  double spectral_radius_hankel = 0.0;
  double radius_gap = 0.0;  // |rho_exact - rho_hankel|
  double margin = 0.0;      // 1 - max(rho_exact, rho_hankel)
  double margin_threshold = 0.0;
  double slice_dt = 0.0;
  Eigen::VectorXcd continuous_rates;        // Hankel model, eigenvalue order
  Eigen::VectorXcd continuous_rates_exact;  // exact model, eigenvalue order
  int exact_rank = 0;
  int hankel_rank = 0;
  int delay = 1;
  std::string hankel_rank_rule;
  Verdict verdict = Verdict::kMarginal;
  ResidualDiagnostics residual_summary;
  MseTable mse_table;
};

StabilityReport certify(const DmdModel& exact, const DmdModel& hankel,
                        const ResidualDiagnostics& diagnostics, double margin_threshold);

/// Human-readable summary: verdict, both radii to four decimals, rates,
/// MSE table, residual summary and the scope of the verdict.
std::string report_text(const StabilityReport& report);

/// `index,re,im,modulus,continuous_rate_re,continuous_rate_im,mode_amplitude`
/// with a one-based index in eigenvalue order.
CsvTable eigen_table(const DmdModel& model);

/// `j,residual_norm` with one-based j.
CsvTable residual_table(const ResidualDiagnostics& diagnostics);

/// `mode,row,right_re,right_im,left_re,left_im`: right eigenvectors and the
/// biorthogonal left eigenvectors (eigenvectors of A^T), one-based indices.
CsvTable modes_table(const DmdModel& model);

/// Everything the run bundle contains besides the report itself. Trajectory
/// matrices hold one row per entry of `times`.
struct ExperimentArtifacts {
  std::string config_text;
  std::vector<double> times;
  Eigen::MatrixXd truth;
  Eigen::MatrixXd hbdno;
  Eigen::MatrixXd dmd_recon;
  Eigen::MatrixXd hdmd_recon;
  DmdModel exact;
  DmdModel hankel;
  ResidualDiagnostics residuals;
};

/// Fixed file names written by emit_experiment_bundle, in write order.
std::vector<std::string> bundle_file_names();

/// Writes the bundle into `dir` (created if needed). Throws IoError.
void emit_experiment_bundle(const std::filesystem::path& dir, const StabilityReport& report,
                            const ExperimentArtifacts& artifacts);

}  // namespace spline_koopman
