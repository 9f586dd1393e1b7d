#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"
#include "lossykf/riccati.hpp"

using namespace lossykf;

namespace {
// Scalar fixed point of the arrival map for c = q = r = 1: the positive
// root of X^2 - a^2 X - 1 = 0.
double scalar_fixed_point(double a) {
  const double a2 = a * a;
  return 0.5 * (a2 + std::sqrt(a2 * a2 + 4.0));
}
}  // namespace

TEST_CASE("open-loop map basics") {
  auto sys = testsys::scalar();
  Matrix zero = Matrix::Zero(1, 1), one = Matrix::Identity(1, 1);
  CHECK(lyapunov_step(sys, zero)(0, 0) == Catch::Approx(1.0));
  CHECK(lyapunov_step(sys, one)(0, 0) == Catch::Approx(5.0));

  auto id3 = LtiSystem::make(Matrix::Identity(3, 3), Matrix::Identity(3, 3),
                             Matrix::Zero(3, 3), Matrix::Identity(3, 3));
  Matrix x = random_psd(3, 7, 0);
  CHECK(max_abs(lyapunov_step(id3, x) - x) < 1e-14);
}

TEST_CASE("arrival map basics") {
  auto sys = testsys::scalar();
  Matrix one = Matrix::Identity(1, 1);
  CHECK(riccati_step(sys, one)(0, 0) == Catch::Approx(3.0).epsilon(1e-14));

  SECTION("zero output matrix reduces to the open-loop map") {
    auto blind = LtiSystem::make(sys.A, Matrix::Zero(1, 1), sys.Q, sys.R);
    Matrix x(1, 1);
    x << 2.5;
    CHECK(riccati_step(blind, x)(0, 0) == Catch::Approx(lyapunov_step(blind, x)(0, 0)));
  }
  SECTION("fixed point stays put") {
    auto dare = solve_dare(sys);
    Matrix g = riccati_step(sys, dare.P_bar);
    CHECK((g - dare.P_bar).norm() <= 1e-10 * (1.0 + dare.P_bar.norm()));
  }
}

TEST_CASE("composed iterates") {
  auto sys = testsys::scalar();
  Matrix x = Matrix::Identity(1, 1);

  SECTION("empty composition is the identity") {
    CHECK(iterate_maps(sys, x, {})(0, 0) == 1.0);
  }
  SECTION("two open-loop steps from zero") {
    CHECK(iterate_drop(sys, Matrix::Zero(1, 1), 2)(0, 0) == Catch::Approx(5.0));
  }
  SECTION("order of composition matters") {
    const StepKind ga[] = {StepKind::arrival, StepKind::drop};  // arrival first
    const StepKind ag[] = {StepKind::drop, StepKind::arrival};
    // arrival(1) = 3, drop(3) = 13; drop(1) = 5, arrival(5) = 26/6.
    CHECK(iterate_maps(sys, x, ga)(0, 0) == Catch::Approx(13.0).epsilon(1e-12));
    CHECK(iterate_maps(sys, x, ag)(0, 0) == Catch::Approx(26.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("steady covariance matches the scalar quadratic") {
  CHECK(solve_dare(testsys::scalar(2)).P_bar(0, 0) ==
        Catch::Approx(scalar_fixed_point(2)).epsilon(1e-12));
  CHECK(solve_dare(testsys::scalar(1)).P_bar(0, 0) ==
        Catch::Approx(0.5 * (1.0 + std::sqrt(5.0))).epsilon(1e-12));
}

TEST_CASE("steady covariance decouples for a block-scalar plant") {
  auto sys = LtiSystem::make(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                             Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  auto dare = solve_dare(sys);
  const double expected = scalar_fixed_point(2);
  CHECK(dare.P_bar(0, 0) == Catch::Approx(expected).epsilon(1e-10));
  CHECK(dare.P_bar(1, 1) == Catch::Approx(expected).epsilon(1e-10));
  CHECK(std::abs(dare.P_bar(0, 1)) < 1e-10);
  CHECK(dare.residual <= 1e-12);
}

TEST_CASE("solver reports non-convergence") {
  REQUIRE_THROWS_AS(solve_dare(testsys::scalar(), 1e-12, 3), std::runtime_error);
}

TEST_CASE("metric basics") {
  Matrix i2 = Matrix::Identity(2, 2);
  CHECK(riemannian_distance(i2, i2) == Catch::Approx(0.0).margin(1e-12));
  CHECK(riemannian_distance(2.0 * i2, i2) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  Matrix i3 = Matrix::Identity(3, 3);
  CHECK(riemannian_distance(2.0 * i3, i3) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-12));

  SECTION("symmetry on random pairs") {
    for (int i = 0; i < 50; ++i) {
      Matrix x = random_pd(3, 11, i, 0);
      Matrix y = random_pd(3, 11, i, 1);
      CHECK(riemannian_distance(x, y) ==
            Catch::Approx(riemannian_distance(y, x)).epsilon(1e-10).margin(1e-12));
    }
  }
  SECTION("rejects indefinite input") {
    Matrix bad(2, 2);
    bad << 1, 0, 0, -1;
    REQUIRE_THROWS_AS(riemannian_distance(bad, i2), std::domain_error);
  }
}

TEST_CASE("metric axioms on sampled triples") {
  for (int i = 0; i < 100; ++i) {
    Matrix x = random_pd(3, 13, i, 0);
    Matrix y = random_pd(3, 13, i, 1);
    Matrix z = random_pd(3, 13, i, 2);
    const double dxy = riemannian_distance(x, y);
    const double dyz = riemannian_distance(y, z);
    const double dxz = riemannian_distance(x, z);
    CHECK(dxy >= 0.0);
    CHECK(dxz <= dxy + dyz + 1e-9);
  }
  Matrix w = random_pd(3, 13, 1000, 0);
  CHECK(riemannian_distance(w, w) <= 1e-7);
}

TEST_CASE("comparability factor sandwiches the pair") {
  Matrix i1 = Matrix::Identity(1, 1);
  CHECK(comparability_factor(i1, i1) == Catch::Approx(1.0));
  CHECK(comparability_factor(2.0 * i1, i1) == Catch::Approx(0.5).epsilon(1e-12));
  // (1/2) * 2 <= 1 with equality.
  CHECK(min_eigenvalue(i1 - 0.5 * (2.0 * i1)) >= -1e-12);

  for (int i = 0; i < 100; ++i) {
    Matrix x = random_pd(3, 17, i, 0);
    Matrix y = random_pd(3, 17, i, 1);
    const double beta = comparability_factor(x, y);
    CHECK(min_eigenvalue(y - beta * x) >= -1e-8);
    CHECK(min_eigenvalue(x / beta - y) >= -1e-8);
  }
}

TEST_CASE("monotone update maps") {
  for (const auto& sys : {testsys::scalar(), testsys::jordan2(), testsys::diag_two_three()}) {
    for (int i = 0; i < 200; ++i) {
      Matrix y = random_psd(sys.n, 23, i, 0);
      Matrix x = y + random_psd(sys.n, 23, i, 1);
      CHECK(min_eigenvalue(lyapunov_step(sys, x) - lyapunov_step(sys, y)) >= -1e-8);
      CHECK(min_eigenvalue(riccati_step(sys, x) - riccati_step(sys, y)) >= -1e-8);
      CHECK(min_eigenvalue(lyapunov_step(sys, x) - riccati_step(sys, x)) >= -1e-8);
    }
  }
}

TEST_CASE("arrival iterates turn positive definite quickly") {
  for (const auto& sys : {testsys::scalar(), testsys::jordan2(), testsys::diag_two_three(),
                          testsys::chain3(), testsys::vander4()}) {
    const int io = observability_index(sys);
    const int t = time_to_pd(sys, 2 * sys.n * io);
    Matrix g = iterate_arrival(sys, Matrix::Zero(sys.n, sys.n), t);
    CHECK(min_eigenvalue(g) > 0.0);
  }
  SECTION("singular process noise delays positivity") {
    Matrix a(2, 2), c(1, 2), q(2, 2);
    a << 1, 1, 0, 1;
    c << 1, 0;
    q << 0, 0, 0, 1;
    auto sys = LtiSystem::make(a, c, q, Matrix::Identity(1, 1));
    const int t = time_to_pd(sys, 8);
    CHECK(t >= 2);
    CHECK(t <= 8);
  }
}

TEST_CASE("windowed arrival map contracts, open-loop map does not expand") {
  auto rep = estimate_contraction(testsys::scalar(), 2000, 31);
  REQUIRE(rep.applicable);
  CHECK(rep.pairs_used == 2000);
  CHECK(rep.q_hat < 1.0);
  CHECK(rep.max_h_ratio <= 1.0 + 1e-8);

  SECTION("zero-distance pairs are skipped, not counted") {
    Matrix x = random_pd(2, 37, 0);
    std::vector<std::pair<Matrix, Matrix>> pairs;
    pairs.emplace_back(x, x);
    pairs.emplace_back(x, 2.0 * x);
    auto r = contraction_ratios(testsys::full_sensor2(), pairs, 1);
    CHECK(r.pairs_skipped == 1);
    CHECK(r.pairs_used == 1);
  }
  SECTION("singular A is flagged not applicable") {
    Matrix a = Matrix::Zero(1, 1);
    auto sys = LtiSystem::make(a, Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                               Matrix::Identity(1, 1));
    CHECK_FALSE(estimate_contraction(sys, 10, 1).applicable);
  }
}
