/**
 * @file koopman.hpp
 * @brief Linear (Koopman) models of the control-point sequence via DMD.
 *
 * The temporal slices c^1, ..., c^N of a control-point grid are treated as
 * snapshots of a latent discrete-time system. Exact DMD fits A = Y X^+ on
 * the shifted pair; Hankel DMD does the same on delay vectors
 * h^j = col(c^j, c^{j-1}, ..., c^{j-q+1}) (newest slice first).
 *
 * Eigenvalues are sorted by decreasing modulus, then decreasing real part,
 * then increasing imaginary part.
 */

#pragma once

#include "spline_koopman/bspline.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spline_koopman {

struct SnapshotPair {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};

/// X = [c^1 ... c^{N-1}], Y = [c^2 ... c^N]. Needs N >= 3.
SnapshotPair build_snapshots(std::span<const Eigen::VectorXd> slices);

/// Column-wise concatenation over sequences of the pairs (c^{j}, c^{j+1}) for
/// zero-based j in [window.first, window.second). Pairs never straddle two
/// sequences.
SnapshotPair pooled_snapshots(std::span<const ControlPointGrid> sequences,
                              std::pair<int, int> window);

struct DmdOptions {
  /// Explicit cap on the SVD truncation rank.
  std::optional<int> rank;
  /// Singular values at or below rel_tol * sigma_max are dropped.
  double rel_tol = 1e-12;
  /// Time between consecutive slices, used for continuous-time rates.
  double slice_dt = 1.0;
};

struct DmdModel {
  Eigen::MatrixXd a;
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right_modes;  // column i pairs with eigenvalues[i], unit norm
  Eigen::MatrixXcd left_modes;   // column i: eigenvector of A^T, biorthogonal to right_modes
  Eigen::VectorXd amplitudes;    // |coefficient| of the first data vector on each right mode
  Eigen::VectorXd singular_values;
  int truncation_rank = 0;
  int delay = 1;
  double slice_dt = 1.0;
  std::string rank_rule;  // "threshold", "explicit" or "reconstruction"

  [[nodiscard]] int state_dim() const { return static_cast<int>(a.rows()) / delay; }
  [[nodiscard]] double spectral_radius() const;
  /// log(lambda) / slice_dt, principal branch.
  [[nodiscard]] Eigen::VectorXcd continuous_rates() const;
};

/// A = Y X^+ via a truncated SVD of X, followed by its eigendecomposition.
/// Throws NumericalError(kDegenerateData) if no singular value survives.
DmdModel exact_dmd(const SnapshotPair& pair, const DmdOptions& options = {});

struct HankelPair {
  Eigen::MatrixXd h0;
  Eigen::MatrixXd h1;
};

/// Shifted Hankel matrices; both have N - q columns of dimension q * n.
/// Needs q >= 1 and N >= q + 2.
HankelPair hankel_embed(std::span<const Eigen::VectorXd> slices, int delay);

struct HankelDmdOptions {
  std::optional<int> rank;
  double rel_tol = 1e-12;
  double slice_dt = 1.0;
  /// Without an explicit rank, pick the truncation rank whose model best
  /// reproduces the sequence when iterated freely from the first delay
  /// vector. Ranks whose free run diverges are never chosen.
  bool select_rank_by_reconstruction = true;
};

/// Exact DMD on (H0, H1). With delay 1 this is exact_dmd on the plain pair.
DmdModel hankel_dmd(std::span<const Eigen::VectorXd> slices, int delay,
                    const HankelDmdOptions& options = {});

/// First n rows of a Hankel model: predicts the newest slice from the
/// current delay vector. Throws InvalidArgument for delay < 2.
Eigen::MatrixXd project_hankel_predictor(const DmdModel& model);

/// Iterates the model from an initial window of `model.delay` slices (oldest
/// first) and returns `total_length` slices, the window included.
std::vector<Eigen::VectorXd> reconstruct(const DmdModel& model,
                                         std::span<const Eigen::VectorXd> window,
                                         int total_length);

/// One-step residuals d^j = c^{j+1} - A c^j of a shared linear predictor.
struct ResidualDiagnostics {
  std::vector<int> steps;          // one-based j of each reported residual
  std::vector<double> per_step;    // max over sequences of |d^j|
  double max_residual = 0.0;
  double one_step_mse = 0.0;       // mean over pairs and components of d^2
  int num_points = 0;
  int num_sequences = 0;
  std::pair<int, int> window{0, 0};
  Eigen::MatrixXd predictor;
};

/// Residuals of a given predictor over the pairs in `window`.
ResidualDiagnostics residuals_for_predictor(std::span<const ControlPointGrid> sequences,
                                            const Eigen::MatrixXd& predictor,
                                            std::pair<int, int> window);

/// Fits one exact-DMD predictor on the pooled pairs in `window` and reports
/// its residuals. Needs at least two sequences.
ResidualDiagnostics quasi_markov_residuals(std::span<const ControlPointGrid> sequences,
                                           std::pair<int, int> window);

/// Mean squared difference between two equally long slice sequences.
double slice_mse(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b);

}  // namespace spline_koopman
