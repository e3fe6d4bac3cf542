#include "spline_koopman/dynamics.hpp"

#include "spline_koopman/errors.hpp"
#include "spline_koopman/rng.hpp"

#include <cmath>
#include <string>

namespace spline_koopman {

DomainBox DomainBox::uniform(int dim, double lo, double hi) {
  return DomainBox{Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

OdeSystem linear_system(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument("system matrix must be square and nonempty");
  }
  OdeSystem sys;
  sys.dim = static_cast<int>(a.rows());
  sys.rhs = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
  sys.name = "linear";
  sys.domain_box = DomainBox::uniform(sys.dim, -2.0, 2.0);
  return sys;
}

OdeSystem nonlinear_benchmark() {
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd dx(2);
    dx[0] = -x[0] + x[1] * x[1];
    dx[1] = -2.0 * x[1];
    return dx;
  };
  sys.name = "nonlinear";
  sys.domain_box = DomainBox::uniform(2, -2.0, 2.0);
  return sys;
}

std::vector<double> equispaced_times(double horizon, int count) {
  if (count < 2) throw InvalidArgument("need at least two sample times");
  std::vector<double> t(static_cast<std::size_t>(count));
  const int intervals = count - 1;
  for (int k = 0; k < count; ++k) {
    t[static_cast<std::size_t>(k)] =
        horizon * static_cast<double>(k) / static_cast<double>(intervals);
  }
  t.back() = horizon;
  return t;
}

Trajectory integrate(const OdeSystem& sys, const Eigen::VectorXd& x0, double horizon,
                     int num_steps) {
  if (num_steps < 1) throw InvalidArgument("num_steps must be >= 1");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (x0.size() != sys.dim) {
    throw DimensionMismatch("initial state has dimension " + std::to_string(x0.size()) +
                            ", system has " + std::to_string(sys.dim));
  }

  Trajectory traj;
  traj.x0 = x0;
  traj.times = equispaced_times(horizon, num_steps + 1);
  traj.states.resize(num_steps + 1, sys.dim);
  traj.states.row(0) = x0.transpose();

  const double h = horizon / static_cast<double>(num_steps);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < num_steps; ++k) {
    const Eigen::VectorXd k1 = sys.rhs(x);
    const Eigen::VectorXd k2 = sys.rhs(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = sys.rhs(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = sys.rhs(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw NumericalError(NumericalError::Kind::kNonfiniteState,
                           "trajectory of system '" + sys.name +
                               "' became non-finite at step " + std::to_string(k + 1));
    }
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

Trajectory reference_on_grid(const OdeSystem& sys, const Eigen::VectorXd& x0, double horizon,
                             int num_times, int min_steps) {
  if (num_times < 2) throw InvalidArgument("need at least two output times");
  const int intervals = num_times - 1;
  const int substeps = std::max(1, (min_steps + intervals - 1) / intervals);
  const Trajectory fine = integrate(sys, x0, horizon, intervals * substeps);

  Trajectory out;
  out.x0 = x0;
  out.times = equispaced_times(horizon, num_times);
  out.states.resize(num_times, sys.dim);
  for (int k = 0; k < num_times; ++k) out.states.row(k) = fine.states.row(k * substeps);
  return out;
}

std::vector<Eigen::VectorXd> sample_uniform_points(const DomainBox& box, int count,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd p(box.dim());
    for (int i = 0; i < box.dim(); ++i) p[i] = rng.uniform(box.lo[i], box.hi[i]);
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<Eigen::VectorXd> sample_initial_conditions(const DomainBox& box, int count,
                                                       std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("initial-condition count must be >= 1");
  const int n = box.dim();
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  pts.push_back(Eigen::VectorXd::Zero(n));

  const long corners = 1L << n;
  if (n < 20 && count >= 1 + corners) {
    for (long k = 0; k < corners; ++k) {
      Eigen::VectorXd c(n);
      for (int i = 0; i < n; ++i) c[i] = ((k >> i) & 1L) ? box.hi[i] : box.lo[i];
      pts.push_back(std::move(c));
    }
  }
  const int remaining = count - static_cast<int>(pts.size());
  for (auto& p : sample_uniform_points(box, remaining, seed)) pts.push_back(std::move(p));
  return pts;
}

}  // namespace spline_koopman
