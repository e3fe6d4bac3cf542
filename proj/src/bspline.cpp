#include "spline_koopman/bspline.hpp"

#include "spline_koopman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spline_koopman {

KnotVector make_clamped_uniform_knots(int degree, int num_basis, double horizon) {
  if (degree < 1) {
    throw InvalidArgument("B-spline degree must be >= 1, got " + std::to_string(degree));
  }
  if (num_basis <= degree) {
    throw InvalidArgument("number of basis functions (" + std::to_string(num_basis) +
                          ") must exceed the degree (" + std::to_string(degree) + ")");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be a positive finite number");
  }

  KnotVector kv;
  kv.degree_ = degree;
  kv.num_basis_ = num_basis;
  kv.horizon_ = horizon;

  const int segments = num_basis - degree;
  kv.knots_.reserve(static_cast<std::size_t>(num_basis + degree + 1));
  for (int i = 0; i <= degree; ++i) kv.knots_.push_back(0.0);
  for (int k = 1; k < segments; ++k) {
    kv.knots_.push_back(horizon * static_cast<double>(k) / static_cast<double>(segments));
  }
  for (int i = 0; i <= degree; ++i) kv.knots_.push_back(horizon);
  return kv;
}

int KnotVector::find_span(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) {
    throw DomainError("evaluation time " + std::to_string(t) + " outside [0, " +
                      std::to_string(horizon_) + "]");
  }
  const int last = num_basis_ - 1;
  if (t >= knots_[static_cast<std::size_t>(num_basis_)]) return last;
  // Largest s in [d, l-1] with knots[s] <= t.
  auto begin = knots_.begin() + degree_;
  auto end = knots_.begin() + num_basis_ + 1;
  auto it = std::upper_bound(begin, end, t);
  return static_cast<int>(std::distance(knots_.begin(), it)) - 1;
}

SparseBasis eval_basis_sparse(const KnotVector& kv, double t) {
  const int d = kv.degree();
  const int span = kv.find_span(t);
  const auto& u = kv.knots();

  // Triangular Cox-de Boor: builds degree p from degree p-1 on one span.
  // Denominators right[r+1] + left[j-r] are knot differences spanning the
  // current span, which is nonempty, so no 0/0 terms arise.
  Eigen::VectorXd n = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd left(d + 1);
  Eigen::VectorXd right(d + 1);
  n[0] = 1.0;
  for (int j = 1; j <= d; ++j) {
    left[j] = t - u[static_cast<std::size_t>(span + 1 - j)];
    right[j] = u[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  return SparseBasis{span - d, std::move(n)};
}

BasisRow eval_basis(const KnotVector& kv, double t) {
  const SparseBasis sb = eval_basis_sparse(kv, t);
  BasisRow row{t, Eigen::VectorXd::Zero(kv.num_basis())};
  row.values.segment(sb.first, sb.values.size()) = sb.values;
  return row;
}

Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> times) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()),
                                            kv.num_basis());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const SparseBasis sb = eval_basis_sparse(kv, times[k]);
    b.row(static_cast<Eigen::Index>(k)).segment(sb.first, sb.values.size()) =
        sb.values.transpose();
  }
  return b;
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
  const int d = kv.degree();
  const auto& u = kv.knots();
  std::vector<double> xi(static_cast<std::size_t>(kv.num_basis()));
  for (int j = 0; j < kv.num_basis(); ++j) {
    double sum = 0.0;
    for (int k = 1; k <= d; ++k) sum += u[static_cast<std::size_t>(j + k)];
    xi[static_cast<std::size_t>(j)] = sum / static_cast<double>(d);
  }
  return xi;
}

std::pair<int, int> uniform_greville_pairs(const KnotVector& kv) {
  const int d = kv.degree();
  const int l = kv.num_basis();
  const int first = d - 1;
  const int last = l - d;
  if (last <= first) return {0, l - 1};
  return {first, last};
}

double interior_greville_spacing(const KnotVector& kv) {
  const std::vector<double> xi = greville_abscissae(kv);
  const auto [first, last] = uniform_greville_pairs(kv);
  double sum = 0.0;
  for (int j = first; j < last; ++j) {
    sum += xi[static_cast<std::size_t>(j + 1)] - xi[static_cast<std::size_t>(j)];
  }
  return sum / static_cast<double>(last - first);
}

ControlPointGrid::ControlPointGrid(Eigen::MatrixXd values) : values_(std::move(values)) {}

ControlPointGrid::ControlPointGrid(int dim, int num_points)
    : values_(Eigen::MatrixXd::Zero(dim, num_points)) {}

std::vector<Eigen::VectorXd> ControlPointGrid::slices() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(num_points()));
  for (int j = 0; j < num_points(); ++j) out.emplace_back(values_.col(j));
  return out;
}

Eigen::VectorXd ControlPointGrid::stacked() const {
  Eigen::VectorXd flat(values_.size());
  const Eigen::Index l = values_.cols();
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    flat.segment(i * l, l) = values_.row(i).transpose();
  }
  return flat;
}

ControlPointGrid ControlPointGrid::from_stacked(const Eigen::VectorXd& flat, int dim) {
  if (dim < 1 || flat.size() % dim != 0) {
    throw DimensionMismatch("stacked control-point vector of length " +
                            std::to_string(flat.size()) + " is not divisible by n = " +
                            std::to_string(dim));
  }
  const Eigen::Index l = flat.size() / dim;
  Eigen::MatrixXd values(dim, l);
  for (Eigen::Index i = 0; i < dim; ++i) values.row(i) = flat.segment(i * l, l).transpose();
  return ControlPointGrid(std::move(values));
}

ControlPointGrid ControlPointGrid::from_slices(std::span<const Eigen::VectorXd> slices) {
  if (slices.empty()) return ControlPointGrid();
  const Eigen::Index n = slices.front().size();
  Eigen::MatrixXd values(n, static_cast<Eigen::Index>(slices.size()));
  for (std::size_t j = 0; j < slices.size(); ++j) {
    if (slices[j].size() != n) throw DimensionMismatch("slices have inconsistent dimension");
    values.col(static_cast<Eigen::Index>(j)) = slices[j];
  }
  return ControlPointGrid(std::move(values));
}

namespace {

void check_grid(const KnotVector& kv, const ControlPointGrid& cps) {
  if (cps.num_points() != kv.num_basis()) {
    throw DimensionMismatch("control-point grid has " + std::to_string(cps.num_points()) +
                            " points but the basis has " + std::to_string(kv.num_basis()));
  }
}

}  // namespace

Eigen::VectorXd eval_curve(const KnotVector& kv, const ControlPointGrid& cps, double t) {
  check_grid(kv, cps);
  const SparseBasis sb = eval_basis_sparse(kv, t);
  return cps.values().middleCols(sb.first, sb.values.size()) * sb.values;
}

Eigen::MatrixXd eval_curve(const KnotVector& kv, const ControlPointGrid& cps,
                           std::span<const double> times) {
  check_grid(kv, cps);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), cps.dim());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const SparseBasis sb = eval_basis_sparse(kv, times[k]);
    out.row(static_cast<Eigen::Index>(k)) =
        (cps.values().middleCols(sb.first, sb.values.size()) * sb.values).transpose();
  }
  return out;
}

ControlPointGrid fit_control_points(const KnotVector& kv, std::span<const double> times,
                                    const Eigen::MatrixXd& states) {
  if (static_cast<Eigen::Index>(times.size()) != states.rows()) {
    throw DimensionMismatch("sample times and states have different lengths");
  }
  if (static_cast<int>(times.size()) < kv.num_basis()) {
    throw NumericalError(NumericalError::Kind::kRankDeficient,
                         "need at least " + std::to_string(kv.num_basis()) +
                             " samples to fit the control points, got " +
                             std::to_string(times.size()));
  }
  const Eigen::MatrixXd b = collocation_matrix(kv, times);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
  if (qr.rank() < kv.num_basis()) {
    throw NumericalError(NumericalError::Kind::kRankDeficient,
                         "collocation matrix has rank " + std::to_string(qr.rank()) + " < " +
                             std::to_string(kv.num_basis()) +
                             "; sample times do not activate every basis function");
  }
  Eigen::MatrixXd coeffs = qr.solve(states);  // l x n
  return ControlPointGrid(coeffs.transpose());
}

}  // namespace spline_koopman
