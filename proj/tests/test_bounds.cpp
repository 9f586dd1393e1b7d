#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"
#include "lossykf/bounds.hpp"

using namespace lossykf;

TEST_CASE("window estimator covariance, scalar") {
  auto w = window_estimator(testsys::scalar());
  CHECK(w.obs_index == 1);
  CHECK(w.M0(0, 0) == Catch::Approx(1.0).epsilon(1e-14));  // reduces to R
  CHECK(w.H.cols() == 0);
  CHECK(window_bound(testsys::scalar(), w)(0, 0) == Catch::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("window estimator covariance, double integrator") {
  auto sys = testsys::jordan2();
  auto w = window_estimator(sys);
  REQUIRE(w.obs_index == 2);
  Matrix m0_expected(2, 2), m_expected(2, 2);
  m0_expected << 1, -1, -1, 3;
  m_expected << 12, 6, 6, 5;
  CHECK(max_abs(w.M0 - m0_expected) < 1e-9);
  CHECK(max_abs(window_bound(sys, w) - m_expected) < 1e-9);
  // J stacks [C A; C], H holds the single one-step noise block.
  Matrix j_expected(2, 2), h_expected(2, 2);
  j_expected << 1, 1, 1, 0;
  h_expected << 1, 0, 0, 0;
  CHECK(max_abs(w.J - j_expected) < 1e-12);
  CHECK(max_abs(w.H - h_expected) < 1e-12);
}

TEST_CASE("identity sensor ceiling is the measurement noise") {
  const double r = 0.3;
  auto sys = LtiSystem::make(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                             Matrix::Identity(2, 2), r * Matrix::Identity(2, 2));
  auto w = window_estimator(sys);
  CHECK(w.obs_index == 1);
  CHECK(max_abs(w.M0 - r * Matrix::Identity(2, 2)) < 1e-12);
}

TEST_CASE("identity dynamics with no process noise keep the ceiling at M0") {
  auto sys = LtiSystem::make(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                             Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  auto w = window_estimator(sys);
  CHECK(max_abs(window_bound(sys, w) - w.M0) < 1e-14);
}

TEST_CASE("minimal outage runs crossing a threshold, scalar") {
  auto sys = testsys::scalar();
  auto w = window_estimator(sys);
  const Matrix m = window_bound(sys, w);        // trace 5
  const Matrix p_bar = solve_dare(sys).P_bar;   // trace 2 + sqrt(5)

  CHECK(min_drops_from_ceiling(sys, m, 20.0) == 1);   // 21 > 20
  CHECK(min_drops_from_ceiling(sys, m, 5.0) == 1);    // 21 > 5
  CHECK(min_drops_from_ceiling(sys, m, 100.0) == 3);  // 21, 85, 341
  CHECK(min_drops_from_fixed_point(sys, m, p_bar, 20.0) == 2);
  // Threshold just below the first open-loop iterate of the fixed point.
  CHECK(min_drops_from_fixed_point(sys, m, p_bar, 17.9) == 1);

  SECTION("thresholds below Tr(M) are out of the definition's domain") {
    REQUIRE_THROWS_AS(min_drops_from_ceiling(sys, m, 4.9), std::domain_error);
    REQUIRE_THROWS_AS(min_drops_from_fixed_point(sys, m, p_bar, 4.9), std::domain_error);
  }
}

TEST_CASE("threshold maps are monotone, ordered and total") {
  for (const auto& sys : {testsys::scalar(), testsys::jordan2(), testsys::diag_two_three()}) {
    auto w = window_estimator(sys);
    const Matrix m = window_bound(sys, w);
    const Matrix p_bar = solve_dare(sys).P_bar;
    int prev_bar = 1, prev_under = 1;
    for (int j = 0; j < 20; ++j) {
      const double c = m.trace() * std::pow(1.5, j);
      const int ib = min_drops_from_ceiling(sys, m, c);
      const int iu = min_drops_from_fixed_point(sys, m, p_bar, c);
      CHECK(ib <= iu);
      CHECK(ib >= prev_bar);
      CHECK(iu >= prev_under);
      prev_bar = ib;
      prev_under = iu;
    }
  }
}

TEST_CASE("threshold search survives astronomically large thresholds") {
  auto sys = testsys::scalar();
  const Matrix m = window_bound(sys, window_estimator(sys));
  const int k = min_drops_from_ceiling(sys, m, 1e250);
  // Tr grows by 4x per step from 5, so the crossing sits near
  // (log2(1e250) - log2 5) / 2.
  CHECK(k >= 410);
  CHECK(k <= 420);
}

TEST_CASE("growth floor constants") {
  SECTION("scalar geometric series gives exactly one quarter") {
    CHECK(growth_floor_constant(testsys::scalar(), 20) == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("identity dynamics give the dimension") {
    auto sys = LtiSystem::make(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                               Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    CHECK(growth_floor_constant(sys, 20) == Catch::Approx(2.0).epsilon(1e-12));
  }
  SECTION("uncontrollable noise is rejected") {
    Matrix a(2, 2), q(2, 2);
    a << 1, 1, 0, 1;
    q << 1, 0, 0, 0;  // noise never reaches the second mode backwards
    auto sys = LtiSystem::make(a, Matrix::Identity(2, 2), q, Matrix::Identity(2, 2));
    REQUIRE_THROWS_AS(growth_floor_constant(sys, 20), std::runtime_error);
  }
}

TEST_CASE("growth floor holds over random starts") {
  for (const auto& sys : {testsys::scalar(), testsys::jordan2()}) {
    const double a = growth_floor_constant(sys, 20);
    REQUIRE(a > 0.0);
    const double rho = profile_system(sys).spectral_radius;
    for (int i = 0; i < 20; ++i) {
      Matrix x = random_psd(sys.n, 41, i);
      for (int k = 1; k <= 20; ++k) {
        x = lyapunov_step(sys, x);
        CHECK(x.trace() >= a * std::pow(rho, 2.0 * k) * (1.0 - 1e-12));
      }
    }
  }
}

TEST_CASE("ceiling dominates the fixed point") {
  for (const auto& sys : {testsys::scalar(), testsys::jordan2(), testsys::diag_two_three()}) {
    const Matrix m = window_bound(sys, window_estimator(sys));
    const Matrix p_bar = solve_dare(sys).P_bar;
    CHECK(min_eigenvalue(m - p_bar) >= -1e-8);
  }
}

TEST_CASE("bounds report handles out-of-domain thresholds") {
  auto rep = build_bounds(testsys::scalar(), {3.0, 20.0, 100.0});
  CHECK(rep.out_of_domain == std::vector<double>{3.0});
  REQUIRE(rep.from_ceiling.size() == 2);
  CHECK(rep.from_ceiling[0] == std::pair<double, int>{20.0, 1});
  CHECK(rep.from_ceiling[1] == std::pair<double, int>{100.0, 3});
  REQUIRE(rep.from_fixed_point.size() == 2);
  CHECK(rep.from_fixed_point[0] == std::pair<double, int>{20.0, 2});
  CHECK(rep.tr_M == Catch::Approx(5.0));
  CHECK(rep.a_lower == Catch::Approx(0.25));
}
