/**
 * @file bspline.hpp
 * @brief Clamped uniform B-spline bases and control-point grids.
 *
 * The basis is evaluated with the Cox-de Boor recursion in its triangular
 * (span-local) form, so only the d+1 functions that are nonzero at t are
 * ever computed. The clamped knot vector repeats 0 and T exactly d+1 times,
 * which makes every curve interpolate its first and last control point.
 *
 * A ControlPointGrid stores c as an n x l matrix: row i holds the l
 * coefficients of state component i, column j holds the temporal slice
 * c^j in R^n. The flat view is component-major, c = [c_1^T ... c_n^T]^T.
 */

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace spline_koopman {

/// Clamped uniform knot sequence on [0, T].
class KnotVector {
 public:
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] int num_basis() const noexcept { return num_basis_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

  /// Spacing between distinct interior knots, T / (l - d).
  [[nodiscard]] double knot_spacing() const noexcept {
    return horizon_ / static_cast<double>(num_basis_ - degree_);
  }

  /// Index s of the knot span [t_s, t_{s+1}) containing t, with t = T
  /// assigned to the last nonempty span. Requires t in [0, T].
  [[nodiscard]] int find_span(double t) const;

  friend KnotVector make_clamped_uniform_knots(int degree, int num_basis,
                                               double horizon);

 private:
  KnotVector() = default;

  int degree_ = 0;
  int num_basis_ = 0;
  double horizon_ = 0.0;
  std::vector<double> knots_;
};

/// Builds the clamped uniform knot vector with l + d + 1 entries.
/// Throws InvalidArgument when degree < 1, num_basis <= degree or horizon <= 0.
KnotVector make_clamped_uniform_knots(int degree, int num_basis, double horizon);

/// All l basis values at one parameter value.
struct BasisRow {
  double t = 0.0;
  Eigen::VectorXd values;
};

/// The d+1 possibly-nonzero basis values at t, starting at index first.
struct SparseBasis {
  int first = 0;
  Eigen::VectorXd values;
};

SparseBasis eval_basis_sparse(const KnotVector& kv, double t);

/// Dense basis row. Throws DomainError when t is outside [0, T].
BasisRow eval_basis(const KnotVector& kv, double t);

/// Collocation matrix with one row per time: entry (k, j) = B_j(times[k]).
Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> times);

/// Greville abscissae xi_j = (t_{j+1} + ... + t_{j+d}) / d.
std::vector<double> greville_abscissae(const KnotVector& kv);

/// Mean spacing of the Greville abscissae away from the clamped ends.
///
/// Near each end the first d - 1 spacings are compressed by the repeated
/// knots; the remaining ones all equal T / (l - d). Falls back to the mean
/// of all spacings when l < 2d leaves no uniform spacing.
double interior_greville_spacing(const KnotVector& kv);

/// Half-open range [first, last) of slice-pair indices j for which both
/// Greville abscissae xi_j and xi_{j+1} are uniformly spaced.
std::pair<int, int> uniform_greville_pairs(const KnotVector& kv);

class ControlPointGrid {
 public:
  ControlPointGrid() = default;
  explicit ControlPointGrid(Eigen::MatrixXd values);
  ControlPointGrid(int dim, int num_points);

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.rows()); }
  [[nodiscard]] int num_points() const noexcept { return static_cast<int>(values_.cols()); }

  [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::MatrixXd& values() noexcept { return values_; }

  /// Temporal slice c^{j+1} (zero-based j).
  [[nodiscard]] Eigen::VectorXd slice(int j) const { return values_.col(j); }
  [[nodiscard]] std::vector<Eigen::VectorXd> slices() const;

  /// Component-major flat vector of length n * l.
  [[nodiscard]] Eigen::VectorXd stacked() const;
  static ControlPointGrid from_stacked(const Eigen::VectorXd& flat, int dim);
  static ControlPointGrid from_slices(std::span<const Eigen::VectorXd> slices);

  bool operator==(const ControlPointGrid& other) const {
    return values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Sum_j B_j(t) c^j. Throws DimensionMismatch or DomainError.
Eigen::VectorXd eval_curve(const KnotVector& kv, const ControlPointGrid& cps, double t);

/// Evaluates the curve at many times; row k of the result is the state at times[k].
Eigen::MatrixXd eval_curve(const KnotVector& kv, const ControlPointGrid& cps,
                           std::span<const double> times);

/// Least-squares control points for samples (times[k], states.row(k)).
///
/// Uses a column-pivoted QR of the collocation matrix; throws
/// NumericalError(kRankDeficient) if some basis function is not activated
/// by the sample times.
ControlPointGrid fit_control_points(const KnotVector& kv, std::span<const double> times,
                                    const Eigen::MatrixXd& states);

}  // namespace spline_koopman
