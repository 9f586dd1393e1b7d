#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lossykf/scaled.hpp"

namespace lossykf {

// Stacked ingredients of the fixed-window linear estimator: J maps the
// state at the window start to the stacked measurements
// [y_{k-1}; ...; y_{k-Io}], H maps the stacked process noise
// [w_{k-2}; ...; w_{k-Io}] into them, and M0 is the covariance of the
// window least-squares state estimate. For a one-step window H is empty.
struct WindowEstimator {
  Matrix J;   // (Io*m) x n
  Matrix H;   // (Io*m) x ((Io-1)*n)
  Matrix M0;  // n x n
  double jtj_condition = 1.0;
  int obs_index = 1;
};

inline WindowEstimator window_estimator(const LtiSystem& sys, double rank_tol = 1e-9) {
  WindowEstimator w;
  const int io = observability_index(sys, rank_tol);
  const int n = sys.n, m = sys.m;
  w.obs_index = io;

  std::vector<Matrix> powers(io);  // powers[j] = A^j
  powers[0] = Matrix::Identity(n, n);
  for (int j = 1; j < io; ++j) powers[j] = powers[j - 1] * sys.A;

  w.J.resize(io * m, n);
  for (int i = 0; i < io; ++i) w.J.middleRows(i * m, m) = sys.C * powers[io - 1 - i];

  w.H = Matrix::Zero(io * m, (io - 1) * n);
  for (int i = 0; i < io; ++i)
    for (int j = i; j < io - 1; ++j)
      w.H.block(i * m, j * n, m, n) = sys.C * powers[j - i];

  const Matrix jtj = symmetrize(w.J.transpose() * w.J);
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(jtj, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    w.jtj_condition = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0) || w.jtj_condition > 1e12)
      throw std::runtime_error("window_estimator: J'J condition " +
                               std::to_string(w.jtj_condition) +
                               " exceeds 1e12; observation window is numerically rank-deficient");
  }

  Matrix s = Matrix::Zero(io * m, io * m);
  if (io > 1) {
    Matrix qb = Matrix::Zero((io - 1) * n, (io - 1) * n);
    for (int j = 0; j < io - 1; ++j) qb.block(j * n, j * n, n, n) = sys.Q;
    s = w.H * qb * w.H.transpose();
  }
  for (int i = 0; i < io; ++i) s.block(i * m, i * m, m, m) += sys.R;

  Eigen::LDLT<Matrix> ldlt(jtj);
  const Matrix g = ldlt.solve(w.J.transpose());  // (J'J)^{-1} J'
  w.M0 = symmetrize(g * s * g.transpose());
  return w;
}

// Covariance ceiling after a full observation window: the window estimate
// propagated open-loop through the window length.
inline Matrix window_bound(const LtiSystem& sys, const WindowEstimator& w) {
  return iterate_drop(sys, w.M0, w.obs_index);
}

// Least k >= 1 with Tr of the k-fold open-loop map of x0 above the
// threshold. Runs in scaled units so arbitrarily large thresholds are
// safe; iteration is capped to keep pathological inputs from spinning.
inline int min_drops_to_exceed(const LtiSystem& sys, const Matrix& x0, double threshold,
                               int max_iter = 1000000) {
  const double log2_c = std::log2(threshold);
  ScaledCov c{x0, 0};
  c.normalize();
  for (int k = 1; k <= max_iter; ++k) {
    scaled_drop_step(sys, c);
    if (c.log2_trace() > log2_c) return k;
  }
  throw std::runtime_error("min_drops_to_exceed: threshold " + std::to_string(threshold) +
                           " not crossed within " + std::to_string(max_iter) + " steps");
}

// Constant a > 0 with Tr(h^k(X)) >= a * rho^{2k} for every PSD X and all
// k >= 1, where h is the open-loop map and rho the spectral radius of A.
// Built from the trace ratios of the zero-start iterates plus the
// smallest eigenvalue of the n-step iterate.
inline double growth_floor_constant(const LtiSystem& sys, int k_max) {
  const auto ev = detail::eigenvalues_of(sys.A);
  const double log2_rho = std::log2(std::abs(ev.front()));

  const Matrix hn0 = iterate_drop(sys, Matrix::Zero(sys.n, sys.n), sys.n);
  const double a0 = min_eigenvalue(hn0);
  if (a0 <= 0.0)
    throw std::runtime_error(
        "growth_floor_constant: n-step open-loop iterate of zero is not positive definite "
        "((A, Q^{1/2}) controllability violated?)");

  double min_log2 = std::log2(a0) - 2.0 * sys.n * log2_rho;  // tail bound
  ScaledCov c{Matrix::Zero(sys.n, sys.n), 0};
  const int last = std::max(sys.n, k_max);
  for (int k = 1; k <= last; ++k) {
    scaled_drop_step(sys, c);
    min_log2 = std::min(min_log2, c.log2_trace() - 2.0 * k * log2_rho);
  }
  return std::exp2(min_log2);
}

struct BoundsReport {
  int obs_index = 1;
  Matrix M0, M, P_bar, J, H;
  double jtj_condition = 1.0;
  double a_lower = 0.0;
  double tr_M = 0.0;
  double tr_P_bar = 0.0;
  // Minimal consecutive-drop counts pushing the trace over each admissible
  // threshold, starting from the ceiling M and from the fixed point P_bar.
  std::vector<std::pair<double, int>> from_ceiling;      // sorted by threshold
  std::vector<std::pair<double, int>> from_fixed_point;  // sorted by threshold
  std::vector<double> out_of_domain;                     // thresholds below Tr(M)
};

inline BoundsReport build_bounds(const LtiSystem& sys, std::vector<double> thresholds,
                                 double rank_tol = 1e-9, double dare_tol = 1e-12,
                                 int dare_max_iter = 100000, int growth_k_max = 20) {
  BoundsReport rep;
  WindowEstimator w = window_estimator(sys, rank_tol);
  rep.obs_index = w.obs_index;
  rep.J = w.J;
  rep.H = w.H;
  rep.M0 = w.M0;
  rep.jtj_condition = w.jtj_condition;
  rep.M = window_bound(sys, w);
  rep.tr_M = rep.M.trace();
  rep.P_bar = solve_dare(sys, dare_tol, dare_max_iter).P_bar;
  rep.tr_P_bar = rep.P_bar.trace();
  rep.a_lower = growth_floor_constant(sys, growth_k_max);

  std::sort(thresholds.begin(), thresholds.end());
  for (double c : thresholds) {
    if (c < rep.tr_M) {
      rep.out_of_domain.push_back(c);
      continue;
    }
    rep.from_ceiling.emplace_back(c, min_drops_to_exceed(sys, rep.M, c));
    rep.from_fixed_point.emplace_back(c, min_drops_to_exceed(sys, rep.P_bar, c));
  }
  return rep;
}

// Threshold-map accessors with the domain guard from the definition:
// thresholds below Tr(M) are outside the maps' domain.
inline int min_drops_from_ceiling(const LtiSystem& sys, const Matrix& m, double threshold) {
  if (threshold < m.trace())
    throw std::domain_error("threshold below Tr(M): outside the outage-window map domain");
  return min_drops_to_exceed(sys, m, threshold);
}

inline int min_drops_from_fixed_point(const LtiSystem& sys, const Matrix& m, const Matrix& p_bar,
                                      double threshold) {
  if (threshold < m.trace())
    throw std::domain_error("threshold below Tr(M): outside the outage-window map domain");
  return min_drops_to_exceed(sys, p_bar, threshold);
}

}  // namespace lossykf
