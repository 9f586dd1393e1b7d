#pragma once

#include "lossykf/analysis.hpp"

namespace testsys {

using lossykf::LtiSystem;
using lossykf::Matrix;

inline LtiSystem scalar(double a = 2.0, double c = 1.0, double q = 1.0, double r = 1.0,
                        double p0 = 0.0) {
  Matrix A(1, 1), C(1, 1), Q(1, 1), R(1, 1), P0(1, 1);
  A << a;
  C << c;
  Q << q;
  R << r;
  P0 << p0;
  return LtiSystem::make(A, C, Q, R, P0);
}

// Double integrator with a position sensor; observability needs two steps.
inline LtiSystem jordan2() {
  Matrix A(2, 2), C(1, 2);
  A << 1, 1, 0, 1;
  C << 1, 0;
  return LtiSystem::make(A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
}

inline LtiSystem diag_two_three() {
  Matrix A(2, 2), C(1, 2);
  A << 2, 0, 0, 3;
  C << 1, 1;
  return LtiSystem::make(A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
}

// Equal eigenvalue magnitudes with a scalar sensor: degenerate.
inline LtiSystem mirror2() {
  Matrix A(2, 2), C(1, 2);
  A << 2, 0, 0, -2;
  C << 1, 1;
  return LtiSystem::make(A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
}

inline LtiSystem chain3() {
  Matrix A(3, 3), C(1, 3);
  A << 1.2, 1, 0, 0, 1.1, 1, 0, 0, 1.3;
  C << 1, 0, 0;
  return LtiSystem::make(A, C, Matrix::Identity(3, 3), Matrix::Identity(1, 1));
}

inline LtiSystem vander4() {
  Matrix A = Matrix::Zero(4, 4);
  A.diagonal() << 1.5, 1.25, 2.0, 3.0;
  Matrix C(1, 4);
  C << 1, 1, 1, 1;
  return LtiSystem::make(A, C, Matrix::Identity(4, 4), Matrix::Identity(1, 1));
}

inline LtiSystem full_sensor2() {
  Matrix A(2, 2);
  A << 2, 0, 0, 3;
  return LtiSystem::make(A, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                         Matrix::Identity(2, 2));
}

inline LtiSystem full_sensor3() {
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 2.0, 1.5, 1.2;
  return LtiSystem::make(A, Matrix::Identity(3, 3), Matrix::Identity(3, 3),
                         Matrix::Identity(3, 3));
}

}  // namespace testsys
