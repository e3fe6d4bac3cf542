#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spline_koopman {

/// Axis-aligned box of initial conditions.
struct DomainBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(lo.size()); }
  static DomainBox uniform(int dim, double lo, double hi);
};

/// Autonomous system x' = f(x).
struct OdeSystem {
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> rhs;
  std::string name;
  DomainBox domain_box;
  bool origin_is_equilibrium = true;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // one row per time
  Eigen::VectorXd x0;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

/// x' = A x on the box [-2, 2]^n.
OdeSystem linear_system(const Eigen::MatrixXd& a);

/// x1' = -x1 + x2^2, x2' = -2 x2 on [-2, 2]^2. The origin is an equilibrium.
OdeSystem nonlinear_benchmark();

/// Fixed-step classical RK4 sampled at num_steps + 1 equispaced times.
/// Throws NumericalError(kNonfiniteState) if the state stops being finite.
Trajectory integrate(const OdeSystem& sys, const Eigen::VectorXd& x0, double horizon,
                     int num_steps);

/// `count` equispaced times on [0, horizon], endpoints exact.
std::vector<double> equispaced_times(double horizon, int count);

/// Reference solution at `num_times` equispaced times.
///
/// RK4 runs on a refinement of the output grid with at least `min_steps`
/// steps in total, and every output time is a step boundary.
Trajectory reference_on_grid(const OdeSystem& sys, const Eigen::VectorXd& x0, double horizon,
                             int num_times, int min_steps);

/// Seeded uniform points in the box (no forced points).
std::vector<Eigen::VectorXd> sample_uniform_points(const DomainBox& box, int count,
                                                   std::uint64_t seed);

/// Initial conditions for training and diagnostics.
///
/// The origin always comes first. The 2^n box corners follow when there is
/// room for all of them (corner k has component i at hi when bit i of k is
/// set). The remainder are seeded uniform points.
std::vector<Eigen::VectorXd> sample_initial_conditions(const DomainBox& box, int count,
                                                       std::uint64_t seed);

}  // namespace spline_koopman
