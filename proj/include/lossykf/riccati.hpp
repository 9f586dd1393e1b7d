#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "lossykf/system.hpp"

namespace lossykf {

// Open-loop covariance propagation (no measurement): A X A' + Q.
inline Matrix lyapunov_step(const LtiSystem& sys, const Matrix& x) {
  if (x.rows() != sys.n || x.cols() != sys.n)
    throw std::invalid_argument("lyapunov_step: dimension mismatch");
  return symmetrize(sys.A * x * sys.A.transpose() + sys.Q);
}

// One-step covariance map with a measurement update folded in:
// A X A' + Q - A X C' (C X C' + R)^{-1} C X A'.
// The innovation factor is solved through a symmetric factorization,
// never an explicit inverse.
inline Matrix riccati_step(const LtiSystem& sys, const Matrix& x) {
  if (x.rows() != sys.n || x.cols() != sys.n)
    throw std::invalid_argument("riccati_step: dimension mismatch");
  const Matrix w = x * sys.C.transpose();                  // n x m
  const Matrix s = symmetrize(sys.C * w + sys.R);          // m x m
  Eigen::LDLT<Matrix> ldlt(s);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("riccati_step: innovation covariance factorization failed");
  const Matrix t = ldlt.solve(w.transpose());              // m x n
  Matrix out = symmetrize(sys.A * (x - w * t) * sys.A.transpose() + sys.Q);
  if (!out.allFinite())
    throw std::runtime_error("riccati_step: non-finite result");
  return out;
}

enum class StepKind { drop, arrival };

// Left-to-right composition: the first pattern entry is applied first.
inline Matrix iterate_maps(const LtiSystem& sys, Matrix x, std::span<const StepKind> pattern) {
  for (StepKind k : pattern)
    x = (k == StepKind::drop) ? lyapunov_step(sys, x) : riccati_step(sys, x);
  return x;
}

inline Matrix iterate_drop(const LtiSystem& sys, Matrix x, int k) {
  for (int i = 0; i < k; ++i) x = lyapunov_step(sys, x);
  return x;
}

inline Matrix iterate_arrival(const LtiSystem& sys, Matrix x, int k) {
  for (int i = 0; i < k; ++i) x = riccati_step(sys, x);
  return x;
}

struct DareSolution {
  Matrix P_bar;
  double residual = 0.0;
  int iterations = 0;
};

// Steady covariance of the loss-free filter: unique fixed point of the
// arrival map, found by fixed-point iteration from zero. Convergence is
// guaranteed for observable/controllable systems.
inline DareSolution solve_dare(const LtiSystem& sys, double tol = 1e-12, int max_iter = 100000) {
  Matrix x = Matrix::Zero(sys.n, sys.n);
  double res = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next = riccati_step(sys, x);
    res = (next - x).norm() / (1.0 + next.norm());
    x = std::move(next);
    if (res <= tol) {
      if (min_eigenvalue(x) <= 0.0)
        throw std::runtime_error("solve_dare: fixed point is not positive definite");
      return {std::move(x), res, it};
    }
  }
  throw std::runtime_error("solve_dare: no convergence after " + std::to_string(max_iter) +
                           " iterations, last residual " + std::to_string(res));
}

// Scale-invariant Riemannian distance between positive definite matrices:
// sqrt(sum_i log2(lambda_i(X Y^{-1}))^2), computed through the symmetric
// generalized eigenproblem X v = lambda Y v. Base-2 logarithms make the
// comparability bounds below hold with powers of two exactly.
inline double riemannian_distance(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.rows() != x.cols() || y.rows() != y.cols())
    throw std::invalid_argument("riemannian_distance: need square matrices of equal size");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(x), symmetrize(y));
  if (es.info() != Eigen::Success)
    throw std::domain_error("riemannian_distance: eigensolve failed (inputs PD?)");
  double acc = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (!(lam > 0.0))
      throw std::domain_error("riemannian_distance: inputs must be positive definite");
    const double l2 = std::log2(lam);
    acc += l2 * l2;
  }
  return std::sqrt(acc);
}

// beta = 2^{-distance}; guarantees beta*X <= Y <= (1/beta)*X in the
// positive semidefinite order.
inline double comparability_factor(const Matrix& x, const Matrix& y) {
  return std::exp2(-riemannian_distance(x, y));
}

// Least t with the t-fold arrival map of zero positive definite.
inline int time_to_pd(const LtiSystem& sys, int max_steps) {
  Matrix x = Matrix::Zero(sys.n, sys.n);
  for (int t = 1; t <= max_steps; ++t) {
    x = riccati_step(sys, x);
    const double lo = min_eigenvalue(x);
    if (lo > 1e-12 * (1.0 + x.trace())) return t;
  }
  throw std::runtime_error("time_to_pd: not positive definite within " +
                           std::to_string(max_steps) + " steps");
}

struct ContractionReport {
  bool applicable = true;     // false when A is singular
  double q_hat = 0.0;         // max observed ratio for the windowed arrival map
  double max_h_ratio = 0.0;   // max observed ratio for the open-loop map
  int pairs_used = 0;
  int pairs_skipped = 0;      // zero-distance pairs excluded from the statistics
  int window = 0;             // number of composed arrival steps per application
  bool contraction_ok = false;
  bool nonexpansive_ok = false;
};

// Ratio statistics over caller-supplied PD pairs. Pairs at zero distance
// are skipped, not counted.
inline ContractionReport contraction_ratios(const LtiSystem& sys,
                                            std::span<const std::pair<Matrix, Matrix>> pairs,
                                            int window) {
  ContractionReport rep;
  rep.window = window;
  if (std::abs(sys.A.determinant()) < 1e-300) {
    rep.applicable = false;
    return rep;
  }
  for (const auto& [x, y] : pairs) {
    const double d = riemannian_distance(x, y);
    if (d <= 1e-13) {
      ++rep.pairs_skipped;
      continue;
    }
    const double dg =
        riemannian_distance(iterate_arrival(sys, x, window), iterate_arrival(sys, y, window));
    const double dh = riemannian_distance(lyapunov_step(sys, x), lyapunov_step(sys, y));
    rep.q_hat = std::max(rep.q_hat, dg / d);
    rep.max_h_ratio = std::max(rep.max_h_ratio, dh / d);
    ++rep.pairs_used;
  }
  rep.contraction_ok = rep.pairs_used > 0 && rep.q_hat < 1.0;
  rep.nonexpansive_ok = rep.pairs_used > 0 && rep.max_h_ratio <= 1.0 + 1e-8;
  return rep;
}

// Empirical check that the windowed arrival map contracts the metric and
// the open-loop map does not expand it. The window is the observability
// index. Sampling is keyed per pair index, so results do not depend on
// evaluation order.
inline ContractionReport estimate_contraction(const LtiSystem& sys, int num_pairs,
                                              std::uint64_t seed) {
  const int window = observability_index(sys);
  std::vector<std::pair<Matrix, Matrix>> pairs;
  pairs.reserve(num_pairs);
  for (int i = 0; i < num_pairs; ++i) {
    const auto pi = static_cast<std::uint64_t>(i);
    // Spread scales over a few orders of magnitude.
    const double sx = std::exp2(4.0 * keyed_uniform({seed, pi, Stream::matrix_sampling, 100, 0}) - 2.0);
    const double sy = std::exp2(4.0 * keyed_uniform({seed, pi, Stream::matrix_sampling, 101, 0}) - 2.0);
    pairs.emplace_back(sx * random_pd(sys.n, seed, pi, 0), sy * random_pd(sys.n, seed, pi, 1));
  }
  return contraction_ratios(sys, pairs, window);
}

}  // namespace lossykf
