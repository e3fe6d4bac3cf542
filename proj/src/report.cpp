#include "spline_koopman/report.hpp"

#include "spline_koopman/errors.hpp"
#include "spline_koopman/svg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>

namespace spline_koopman {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kAsymptoticallyStable: return "asymptotically_stable";
    case Verdict::kMarginal: return "marginal";
    case Verdict::kUnstable: return "unstable";
  }
  return "marginal";
}

Verdict classify_radius(double spectral_radius, double margin_threshold) {
  if (spectral_radius <= 1.0 - margin_threshold) return Verdict::kAsymptoticallyStable;
  if (spectral_radius >= 1.0 + margin_threshold) return Verdict::kUnstable;
  return Verdict::kMarginal;
}

StabilityReport certify(const DmdModel& exact, const DmdModel& hankel,
                        const ResidualDiagnostics& diagnostics, double margin_threshold) {
  StabilityReport r;
  r.spectral_radius_exact = exact.spectral_radius();
  r.spectral_radius_hankel = hankel.spectral_radius();
  const double rho = std::max(r.spectral_radius_exact, r.spectral_radius_hankel);
  r.radius_gap = std::abs(r.spectral_radius_exact - r.spectral_radius_hankel);
  r.margin = 1.0 - rho;
  r.margin_threshold = margin_threshold;
  r.slice_dt = exact.slice_dt;
  r.continuous_rates = hankel.continuous_rates();
  r.continuous_rates_exact = exact.continuous_rates();
  r.exact_rank = exact.truncation_rank;
  r.hankel_rank = hankel.truncation_rank;
  r.delay = hankel.delay;
  r.hankel_rank_rule = hankel.rank_rule;
  r.verdict = classify_radius(rho, margin_threshold);
  r.residual_summary = diagnostics;
  return r;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string complex_text(std::complex<double> z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f %c %.6fi", z.real(), z.imag() < 0 ? '-' : '+',
                std::abs(z.imag()));
  return buf;
}

std::string rates_text(const Eigen::VectorXcd& rates, int max_count) {
  std::string out;
  const auto count = std::min<Eigen::Index>(rates.size(), max_count);
  for (Eigen::Index i = 0; i < count; ++i) {
    out += "  " + std::to_string(i + 1) + ": " + complex_text(rates[i]) + "\n";
  }
  if (rates.size() > count) {
    out += "  (" + std::to_string(rates.size() - count) + " faster rates in eigs_*.csv)\n";
  }
  return out;
}

}  // namespace

std::string report_text(const StabilityReport& r) {
  std::string out;
  out += "Stability report\n";
  out += "system: " + r.system_name + "\n";
  out += "source: " + r.source + "\n";
  out += "verdict: " + to_string(r.verdict) + "\n\n";
  out += "spectral radius (exact DMD):  " + fmt("%.4f", r.spectral_radius_exact) + "\n";
  out += "spectral radius (Hankel DMD): " + fmt("%.4f", r.spectral_radius_hankel) + "\n";
  out += "radius gap |exact - Hankel|:  " + fmt("%.4f", r.radius_gap) + "\n";
  out += "margin 1 - max radius:        " + fmt("%.4f", r.margin) +
         " (threshold " + fmt("%.4f", r.margin_threshold) + ")\n";
  out += "slice spacing:                " + fmt("%.6f", r.slice_dt) + "\n";
  out += "exact DMD rank:               " + std::to_string(r.exact_rank) + "\n";
  out += "Hankel DMD delay / rank:      " + std::to_string(r.delay) + " / " +
         std::to_string(r.hankel_rank) + " (" + r.hankel_rank_rule + ")\n\n";
  out += "continuous rates ln(lambda)/dt, Hankel DMD:\n" + rates_text(r.continuous_rates, 4);
  out += "continuous rates ln(lambda)/dt, exact DMD:\n" + rates_text(r.continuous_rates_exact, 4);
  out += "\nreconstruction MSE against the reference trajectory:\n";
  out += "  hbdno_vs_truth       " + fmt("%.6e", r.mse_table.hbdno_vs_truth) + "\n";
  out += "  exact_dmd_vs_truth   " + fmt("%.6e", r.mse_table.exact_dmd_vs_truth) + "\n";
  out += "  hankel_dmd_vs_truth  " + fmt("%.6e", r.mse_table.hankel_dmd_vs_truth) + "\n\n";
  const auto& d = r.residual_summary;
  out += "one-step residuals of a pooled linear predictor (" + std::to_string(d.num_sequences) +
         " sequences, l = " + std::to_string(d.num_points) + ", pairs j = " +
         std::to_string(d.window.first + 1) + ".." + std::to_string(d.window.second) + "):\n";
  out += "  max residual   " + fmt("%.6e", d.max_residual) + "\n";
  out += "  one-step MSE   " + fmt("%.6e", d.one_step_mse) + "\n\n";
  out +=
      "Scope: the verdict describes the linear latent dynamics fitted to the control-point\n"
      "sequence. It transfers to the equilibrium of the original system only when the\n"
      "operator approximates the flow uniformly on the domain with a faithful\n"
      "control-point representation whose dynamics the linear model captures.\n"
      "The residuals and the radius gap above support that last hypothesis but do\n"
      "not prove it.\n";
  return out;
}

CsvTable eigen_table(const DmdModel& model) {
  CsvTable t;
  t.header = {"index", "re", "im", "modulus", "continuous_rate_re", "continuous_rate_im",
              "mode_amplitude"};
  const Eigen::VectorXcd rates = model.continuous_rates();
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    const auto lambda = model.eigenvalues[i];
    t.rows.push_back({static_cast<double>(i + 1), lambda.real(), lambda.imag(), std::abs(lambda),
                      rates[i].real(), rates[i].imag(),
                      i < model.amplitudes.size() ? model.amplitudes[i] : 0.0});
  }
  return t;
}

CsvTable residual_table(const ResidualDiagnostics& diagnostics) {
  CsvTable t;
  t.header = {"j", "residual_norm"};
  for (std::size_t k = 0; k < diagnostics.per_step.size(); ++k) {
    t.rows.push_back({static_cast<double>(diagnostics.steps[k]), diagnostics.per_step[k]});
  }
  return t;
}

CsvTable modes_table(const DmdModel& model) {
  CsvTable t;
  t.header = {"mode", "row", "right_re", "right_im", "left_re", "left_im"};
  for (Eigen::Index m = 0; m < model.right_modes.cols(); ++m) {
    for (Eigen::Index r = 0; r < model.right_modes.rows(); ++r) {
      const auto v = model.right_modes(r, m);
      const auto w = model.left_modes(r, m);
      t.rows.push_back({static_cast<double>(m + 1), static_cast<double>(r + 1), v.real(),
                        v.imag(), w.real(), w.imag()});
    }
  }
  return t;
}

std::vector<std::string> bundle_file_names() {
  return {"config.txt",      "truth.csv",     "hbdno.csv",     "dmd_recon.csv",
          "hdmd_recon.csv",  "eigs_exact.csv", "eigs_hankel.csv", "residuals.csv",
          "report.txt",      "fig_1.svg",     "fig_2.svg",     "fig_3.svg"};
}

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

std::string comparison_figure(const std::string& title, const std::vector<double>& times,
                              const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>&
                                  curves) {
  static const char* colors[] = {"#222222", "#1f77b4", "#d62728"};
  std::vector<PlotPanel> panels;
  const Eigen::Index n = curves.front().second->cols();
  for (Eigen::Index c = 0; c < n; ++c) {
    PlotPanel panel;
    panel.y_label = "x" + std::to_string(c + 1);
    for (std::size_t k = 0; k < curves.size(); ++k) {
      panel.series.push_back(PlotSeries{curves[k].first, times,
                                        column(*curves[k].second, c), colors[k % 3], k > 0});
    }
    panels.push_back(std::move(panel));
  }
  return svg_line_plot(title, "t", panels);
}

}  // namespace

void emit_experiment_bundle(const std::filesystem::path& dir, const StabilityReport& report,
                            const ExperimentArtifacts& a) {
  for (const auto* m : {&a.truth, &a.hbdno, &a.dmd_recon, &a.hdmd_recon}) {
    if (m->rows() != static_cast<Eigen::Index>(a.times.size())) {
      throw DimensionMismatch("bundle trajectories must share the time grid");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  write_text_file(dir / "config.txt", a.config_text);
  write_csv(dir / "truth.csv", trajectory_table(a.times, a.truth));
  write_csv(dir / "hbdno.csv", trajectory_table(a.times, a.hbdno));
  write_csv(dir / "dmd_recon.csv", trajectory_table(a.times, a.dmd_recon));
  write_csv(dir / "hdmd_recon.csv", trajectory_table(a.times, a.hdmd_recon));
  write_csv(dir / "eigs_exact.csv", eigen_table(a.exact));
  write_csv(dir / "eigs_hankel.csv", eigen_table(a.hankel));
  write_csv(dir / "residuals.csv", residual_table(a.residuals));
  write_text_file(dir / "report.txt", report_text(report));
  write_text_file(dir / "fig_1.svg",
                  comparison_figure("HBDNO prediction vs true trajectory", a.times,
                                    {{"true", &a.truth}, {"HBDNO", &a.hbdno}}));
  write_text_file(dir / "fig_2.svg",
                  comparison_figure("HBDNO vs exact DMD reconstruction", a.times,
                                    {{"true", &a.truth}, {"HBDNO", &a.hbdno},
                                     {"exact DMD", &a.dmd_recon}}));
  write_text_file(dir / "fig_3.svg",
                  comparison_figure("HBDNO vs Hankel DMD reconstruction", a.times,
                                    {{"true", &a.truth}, {"HBDNO", &a.hbdno},
                                     {"Hankel DMD", &a.hdmd_recon}}));
}

}  // namespace spline_koopman
