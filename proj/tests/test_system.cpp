#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"
#include "lossykf/json_io.hpp"
#include "lossykf/system.hpp"

using namespace lossykf;

TEST_CASE("validate_system accepts the scalar plant") {
  auto rep = validate_system(testsys::scalar());
  REQUIRE(rep.valid);
  for (const auto& c : rep.checks) CHECK(c.pass);
}

TEST_CASE("validate_system rejects a strictly stable mode") {
  auto sys = testsys::scalar(0.5);
  auto rep = validate_system(sys);
  REQUIRE_FALSE(rep.valid);
  bool a1_failed = false;
  for (const auto& c : rep.checks)
    if (c.name == "all_modes_unstable") a1_failed = !c.pass;
  CHECK(a1_failed);
}

TEST_CASE("validate_system accepts the double integrator") {
  REQUIRE(validate_system(testsys::jordan2()).valid);
}

TEST_CASE("validate_system flags an indefinite R") {
  Matrix R(1, 1);
  R << -1;
  auto sys = LtiSystem::make(Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                             Matrix::Identity(1, 1), R);
  REQUIRE_FALSE(validate_system(sys).valid);
}

TEST_CASE("dimension mismatch is a structural error") {
  Matrix A(2, 2), C(1, 1);
  A.setIdentity();
  C.setIdentity();
  REQUIRE_THROWS_AS(
      LtiSystem::make(A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
      std::invalid_argument);
}

TEST_CASE("observability index") {
  SECTION("full sensor gives one") {
    CHECK(observability_index(testsys::full_sensor2()) == 1);
  }
  SECTION("position sensor on the double integrator needs two steps") {
    CHECK(observability_index(testsys::jordan2()) == 2);
  }
  SECTION("summed sensor over distinct modes needs two steps") {
    CHECK(observability_index(testsys::diag_two_three()) == 2);
  }
  SECTION("unobservable pair throws") {
    Matrix A(2, 2), C(1, 2);
    A << 2, 0, 0, 2;
    C << 1, 0;  // second mode invisible
    auto sys = LtiSystem::make(A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    REQUIRE_THROWS_AS(observability_index(sys), std::domain_error);
  }
}

TEST_CASE("quasi-equiblocks") {
  SECTION("equal magnitudes fuse into one block") {
    auto blocks = quasi_equiblocks(testsys::mirror2());
    REQUIRE(blocks.has_value());
    REQUIRE(blocks->size() == 1);
    CHECK((*blocks)[0].size() == 2);
  }
  SECTION("distinct magnitudes stay separate") {
    auto blocks = quasi_equiblocks(testsys::diag_two_three());
    REQUIRE(blocks.has_value());
    REQUIRE(blocks->size() == 2);
    CHECK((*blocks)[0].size() == 1);
    CHECK((*blocks)[1].size() == 1);
  }
  SECTION("blocks partition the index set") {
    auto blocks = quasi_equiblocks(testsys::vander4());
    REQUIRE(blocks.has_value());
    std::vector<int> seen;
    for (const auto& b : *blocks) seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
  }
  SECTION("defective matrix is not applicable") {
    CHECK_FALSE(quasi_equiblocks(testsys::jordan2()).has_value());
  }
}

TEST_CASE("non-degeneracy") {
  CHECK(is_nondegenerate(testsys::mirror2()) == Tristate::no);
  CHECK(is_nondegenerate(testsys::diag_two_three()) == Tristate::yes);
  CHECK(is_nondegenerate(testsys::jordan2()) == Tristate::not_applicable);
  SECTION("full sensor fixes the mirrored pair") {
    Matrix A(2, 2);
    A << 2, 0, 0, -2;
    auto sys = LtiSystem::make(A, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                               Matrix::Identity(2, 2));
    CHECK(is_nondegenerate(sys) == Tristate::yes);
  }
}

TEST_CASE("one-step observability iff full column rank of C") {
  struct Case {
    LtiSystem sys;
    bool full_rank;
  };
  Matrix wide(1, 2);
  wide << 1, 1;
  std::vector<Case> cases;
  cases.push_back({testsys::full_sensor2(), true});
  cases.push_back({testsys::diag_two_three(), false});
  for (int i = 0; i < 8; ++i) {
    // Random tall C is almost surely full column rank.
    Matrix c = gaussian_matrix(3, 2, 99, i, 0);
    Matrix a(2, 2);
    a << 1.5, 0, 0, 2.5;
    cases.push_back({LtiSystem::make(a, c, Matrix::Identity(2, 2), Matrix::Identity(3, 3)),
                     rank_svd(c).rank == 2});
  }
  for (const auto& c : cases)
    CHECK((observability_index(c.sys) == 1) == c.full_rank);
}

TEST_CASE("distinct magnitudes with hot sensor columns are non-degenerate") {
  for (int i = 0; i < 6; ++i) {
    Matrix a = Matrix::Zero(3, 3);
    a.diagonal() << 1.1 + 0.2 * i, 1.9 + 0.13 * i, 3.1 + 0.07 * i;
    Matrix c(1, 3);
    c << 0.5 + i, 1.5, 2.0 + 0.1 * i;  // no zero entries
    auto sys = LtiSystem::make(a, c, Matrix::Identity(3, 3), Matrix::Identity(1, 1));
    CHECK(is_nondegenerate(sys) == Tristate::yes);
  }
}

TEST_CASE("validation is deterministic") {
  auto sys = testsys::jordan2();
  auto a = validation_to_json(validate_system(sys)).dump();
  auto b = validation_to_json(validate_system(sys)).dump();
  CHECK(a == b);
}

TEST_CASE("profile summarizes the spectrum") {
  auto prof = profile_system(testsys::diag_two_three());
  CHECK(prof.obs_index == 2);
  CHECK(prof.spectral_radius == Catch::Approx(3.0));
  REQUIRE(prof.eigen_magnitudes.size() == 2);
  CHECK(prof.eigen_magnitudes[0] >= prof.eigen_magnitudes[1]);
  CHECK(prof.nondegenerate == Tristate::yes);
}
