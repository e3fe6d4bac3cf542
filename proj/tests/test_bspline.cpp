#include "spline_koopman/bspline.hpp"
#include "spline_koopman/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace spline_koopman;

TEST_CASE("clamped knot vector layout") {
  for (int d = 1; d <= 4; ++d) {
    for (int l = d + 1; l <= 20; ++l) {
      const KnotVector kv = make_clamped_uniform_knots(d, l, 7.5);
      const auto expected = oracle::clamped_knots(d, l, 7.5);
      REQUIRE(kv.knots().size() == static_cast<std::size_t>(l + d + 1));
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(kv.knots()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
      }
      CHECK(kv.knots().front() == 0.0);
      CHECK(kv.knots().back() == 7.5);
      CHECK(kv.knot_spacing() == doctest::Approx(7.5 / (l - d)));
    }
  }
}

TEST_CASE("knot vector preconditions") {
  CHECK_THROWS_AS(make_clamped_uniform_knots(0, 5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_clamped_uniform_knots(3, 3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_clamped_uniform_knots(3, 10, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_clamped_uniform_knots(3, 10, -1.0), InvalidArgument);
}

TEST_CASE("basis matches naive recursive Cox-de Boor") {
  std::mt19937_64 gen(11);
  for (int d = 1; d <= 5; ++d) {
    for (int l : {d + 1, d + 2, 10, 23}) {
      const double T = 3.0;
      const KnotVector kv = make_clamped_uniform_knots(d, l, T);
      const auto knots = oracle::clamped_knots(d, l, T);
      std::vector<double> ts{0.0, T, T * 0.5};
      for (int i = 1; i < l - d; ++i) ts.push_back(T * i / (l - d));  // interior knots
      std::uniform_real_distribution<double> u(0.0, T);
      for (int k = 0; k < 40; ++k) ts.push_back(u(gen));
      for (double t : ts) {
        const Eigen::VectorXd got = eval_basis(kv, t).values;
        const Eigen::VectorXd want = oracle::basis_row(knots, d, l, t);
        CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-13);
      }
    }
  }
}

TEST_CASE("sparse basis agrees with the dense row and has local support") {
  const KnotVector kv = make_clamped_uniform_knots(3, 12, 2.0);
  for (double t : {0.0, 0.1, 0.5, 1.0, 1.33, 1.999, 2.0}) {
    const SparseBasis sb = eval_basis_sparse(kv, t);
    const Eigen::VectorXd dense = eval_basis(kv, t).values;
    CHECK(sb.values.size() == 4);
    CHECK(sb.first == kv.find_span(t) - 3);
    for (int j = 0; j < 12; ++j) {
      const int k = j - sb.first;
      const double sparse = (k >= 0 && k < 4) ? sb.values[k] : 0.0;
      CHECK(dense[j] == sparse);
    }
  }
}

TEST_CASE("find_span assigns T to the last nonempty span") {
  const KnotVector kv = make_clamped_uniform_knots(3, 10, 1.0);
  CHECK(kv.find_span(0.0) == 3);
  CHECK(kv.find_span(1.0) == 9);
  CHECK(kv.find_span(1.0 / 7.0) == 4);  // exactly on an interior knot
  CHECK_THROWS_AS(static_cast<void>(kv.find_span(-1e-9)), DomainError);
  CHECK_THROWS_AS(static_cast<void>(kv.find_span(1.0 + 1e-9)), DomainError);
}

TEST_CASE("evaluation outside [0, T] is a domain error") {
  const KnotVector kv = make_clamped_uniform_knots(2, 6, 1.0);
  CHECK_THROWS_AS(eval_basis(kv, -0.1), DomainError);
  CHECK_THROWS_AS(eval_basis(kv, 1.1), DomainError);
  const ControlPointGrid cps(2, 6);
  CHECK_THROWS_AS(eval_curve(kv, cps, 2.0), DomainError);
}

TEST_CASE("endpoint interpolation") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  for (int d = 1; d <= 3; ++d) {
    const KnotVector kv = make_clamped_uniform_knots(d, 9, 4.0);
    ControlPointGrid cps(3, 9);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 9; ++j) cps.values()(i, j) = g(gen);
    }
    CHECK((eval_curve(kv, cps, 0.0) - cps.slice(0)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((eval_curve(kv, cps, 4.0) - cps.slice(8)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("curve evaluation is the basis-weighted sum of slices") {
  const KnotVector kv = make_clamped_uniform_knots(3, 8, 1.0);
  const auto knots = oracle::clamped_knots(3, 8, 1.0);
  ControlPointGrid cps(2, 8);
  for (int j = 0; j < 8; ++j) cps.values().col(j) << std::sin(j), std::cos(2.0 * j);
  std::vector<double> ts{0.0, 0.2, 0.45, 0.8, 1.0};
  const Eigen::MatrixXd batch = eval_curve(kv, cps, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const Eigen::VectorXd b = oracle::basis_row(knots, 3, 8, ts[k]);
    const Eigen::VectorXd want = cps.values() * b;
    CHECK((batch.row(static_cast<Eigen::Index>(k)).transpose() - want).norm() <= 1e-14);
    CHECK((eval_curve(kv, cps, ts[k]) - want).norm() <= 1e-14);
  }
  CHECK_THROWS_AS(eval_curve(kv, ControlPointGrid(2, 7), 0.5), DimensionMismatch);
}

TEST_CASE("collocation matrix rows are basis rows") {
  const KnotVector kv = make_clamped_uniform_knots(2, 7, 3.0);
  const auto knots = oracle::clamped_knots(2, 7, 3.0);
  const std::vector<double> ts{0.0, 0.7, 1.5, 2.2, 3.0};
  const Eigen::MatrixXd b = collocation_matrix(kv, ts);
  REQUIRE(b.rows() == 5);
  REQUIRE(b.cols() == 7);
  for (int k = 0; k < 5; ++k) {
    CHECK((b.row(k).transpose() - oracle::basis_row(knots, 2, 7, ts[k])).norm() <= 1e-14);
  }
}

TEST_CASE("Greville abscissae and their uniform interior") {
  for (int d = 1; d <= 4; ++d) {
    for (int l = d + 1; l <= 30; ++l) {
      const double T = 10.0;
      const KnotVector kv = make_clamped_uniform_knots(d, l, T);
      const auto knots = oracle::clamped_knots(d, l, T);
      const auto xi = greville_abscissae(kv);
      REQUIRE(xi.size() == static_cast<std::size_t>(l));
      for (int j = 0; j < l; ++j) {
        double mean = 0.0;
        for (int k = j + 1; k <= j + d; ++k) mean += knots[static_cast<std::size_t>(k)];
        CHECK(xi[static_cast<std::size_t>(j)] == doctest::Approx(mean / d).epsilon(1e-14));
      }
      const double h = T / (l - d);
      std::vector<int> uniform;
      for (int j = 0; j + 1 < l; ++j) {
        if (std::abs(xi[static_cast<std::size_t>(j + 1)] - xi[static_cast<std::size_t>(j)] - h) <
            1e-12) {
          uniform.push_back(j);
        }
      }
      const auto [first, last] = uniform_greville_pairs(kv);
      if (!uniform.empty()) {
        CHECK(first == uniform.front());
        CHECK(last == uniform.back() + 1);
        CHECK(static_cast<int>(uniform.size()) == last - first);
        CHECK(interior_greville_spacing(kv) == doctest::Approx(h).epsilon(1e-13));
      } else {
        CHECK(first == 0);
        CHECK(last == l - 1);
        CHECK(interior_greville_spacing(kv) ==
              doctest::Approx((xi.back() - xi.front()) / (l - 1)).epsilon(1e-13));
      }
    }
  }
  // The benchmark setting: T = 10, l = 50, d = 3.
  const KnotVector kv = make_clamped_uniform_knots(3, 50, 10.0);
  CHECK(interior_greville_spacing(kv) == doctest::Approx(10.0 / 47.0).epsilon(1e-14));
  CHECK(uniform_greville_pairs(kv) == std::pair<int, int>{2, 47});
}

TEST_CASE("stacked and sliced views of the control-point grid") {
  ControlPointGrid cps(3, 4);
  int v = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) cps.values()(i, j) = ++v;
  }
  const Eigen::VectorXd flat = cps.stacked();
  REQUIRE(flat.size() == 12);
  for (int k = 0; k < 12; ++k) CHECK(flat[k] == k + 1);  // component-major
  CHECK(ControlPointGrid::from_stacked(flat, 3) == cps);
  CHECK_THROWS_AS(ControlPointGrid::from_stacked(flat.head(11), 3), DimensionMismatch);

  const auto slices = cps.slices();
  REQUIRE(slices.size() == 4);
  CHECK(slices[1][2] == cps.values()(2, 1));
  CHECK(ControlPointGrid::from_slices(slices) == cps);
}

TEST_CASE("least-squares fit recovers control points of a spline") {
  const KnotVector kv = make_clamped_uniform_knots(3, 20, 5.0);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  ControlPointGrid cps(2, 20);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 20; ++j) cps.values()(i, j) = g(gen);
  }
  std::vector<double> ts;
  for (int k = 0; k <= 300; ++k) ts.push_back(5.0 * k / 300.0);
  const Eigen::MatrixXd states = eval_curve(kv, cps, ts);
  const ControlPointGrid fit = fit_control_points(kv, ts, states);
  CHECK((fit.values() - cps.values()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit with uncovered basis functions is rank deficient") {
  const KnotVector kv = make_clamped_uniform_knots(3, 30, 10.0);
  std::vector<double> ts;
  for (int k = 0; k <= 100; ++k) ts.push_back(0.01 * k);  // only [0, 1]
  const Eigen::MatrixXd states = Eigen::MatrixXd::Ones(101, 2);
  try {
    (void)fit_control_points(kv, ts, states);
    FAIL("expected a rank-deficiency error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == NumericalError::Kind::kRankDeficient);
  }
  CHECK_THROWS_AS(fit_control_points(kv, ts, Eigen::MatrixXd::Ones(100, 2)), DimensionMismatch);
}
