#pragma once

#include <cmath>
#include <limits>

#include "lossykf/riccati.hpp"

namespace lossykf {

// Covariance carried as P_true = 2^s * P with an integer exponent s >= 0.
// Rescaling multiplies entries by exact powers of two, so while the true
// value fits in a double the scaled recursion is bit-identical to the
// plain one; past that point the base-2 log of the trace stays finite and
// threshold comparisons remain exact. Under unstable dynamics an outage
// burst grows the trace geometrically, which is what this guards against.
struct ScaledCov {
  Matrix P;
  long s = 0;

  static constexpr double kUp = 0x1.0p512;
  static constexpr int kShift = 512;

  double log2_trace() const { return static_cast<double>(s) + std::log2(P.trace()); }

  // Exact value when representable, +infinity otherwise.
  double value_trace() const {
    if (s > 2000) return std::numeric_limits<double>::infinity();
    return std::ldexp(P.trace(), static_cast<int>(s));
  }

  void normalize() {
    while (P.trace() > kUp) {
      P *= 0x1.0p-512;
      s += kShift;
    }
    while (s > 0 && P.trace() < 1.0) {
      const int shift = static_cast<int>(std::min<long>(s, kShift));
      P *= std::exp2(shift);
      s -= shift;
    }
  }
};

// Open-loop update in scaled units: P' = A P A' + 2^{-s} Q.
inline void scaled_drop_step(const LtiSystem& sys, ScaledCov& c) {
  c.P = symmetrize(sys.A * c.P * sys.A.transpose() + std::exp2(-static_cast<double>(c.s)) * sys.Q);
  c.normalize();
}

// Measurement update (Joseph form) followed by prediction, in scaled
// units. The gain is scale-free, so it can drive a state estimate update
// directly. Returns the gain.
inline Matrix scaled_arrival_step(const LtiSystem& sys, ScaledCov& c) {
  const double down = std::exp2(-static_cast<double>(c.s));
  const Matrix r = down * sys.R;
  const Matrix w = c.P * sys.C.transpose();
  const Matrix innov = symmetrize(sys.C * w + r);
  Eigen::LDLT<Matrix> ldlt(innov);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("arrival update: innovation covariance factorization failed");
  const Matrix gain = ldlt.solve(w.transpose()).transpose();  // n x m
  const Matrix ikc = Matrix::Identity(sys.n, sys.n) - gain * sys.C;
  const Matrix p_filt = symmetrize(ikc * c.P * ikc.transpose() + gain * r * gain.transpose());
  c.P = symmetrize(sys.A * p_filt * sys.A.transpose() + down * sys.Q);
  if (!c.P.allFinite()) throw std::runtime_error("arrival update: non-finite covariance");
  c.normalize();
  return gain;
}

}  // namespace lossykf
