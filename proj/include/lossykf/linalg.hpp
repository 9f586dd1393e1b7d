#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "lossykf/rng.hpp"

namespace lossykf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

inline double max_abs(const Matrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& x, double tol = 1e-12) {
  if (x.rows() != x.cols()) return false;
  return max_abs(x - x.transpose()) <= tol * (1.0 + max_abs(x));
}

inline double min_eigenvalue(const Matrix& sym) {
  if (sym.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& sym) {
  if (sym.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Relative positive semidefiniteness: smallest eigenvalue may undershoot
// zero only by slack scaled with the spectrum.
inline bool is_psd(const Matrix& sym, double slack = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  return lo >= -slack * (1.0 + hi);
}

inline void require_square(const Matrix& x, const std::string& name) {
  if (x.rows() != x.cols())
    throw std::invalid_argument(name + " must be square, got " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
}

// Symmetric PSD square root; eigenvalues below zero are clamped.
inline Matrix psd_sqrt(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym));
  Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

struct RankResult {
  int rank = 0;
  bool ambiguous = false;  // some singular value sits near the decision threshold
  double sigma_max = 0.0;
};

// Rank by singular values: sigma counted nonzero iff sigma >= tol * sigma_max.
inline RankResult rank_svd(const Matrix& x, double tol = 1e-9) {
  RankResult r;
  if (x.size() == 0) return r;
  Eigen::JacobiSVD<Matrix> svd(x);
  const auto& s = svd.singularValues();
  r.sigma_max = s(0);
  if (r.sigma_max <= 0.0) return r;
  const double cut = tol * r.sigma_max;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) >= cut) ++r.rank;
    if (s(i) > 0.1 * cut && s(i) < 10.0 * cut) r.ambiguous = true;
  }
  return r;
}

inline Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed, std::uint64_t path,
                              std::uint64_t step) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      g(i, j) = keyed_normal({seed, path, Stream::matrix_sampling, step,
                              static_cast<std::uint64_t>(i) * cols + j});
  return g;
}

// Random PSD sample G G' / n; may be close to singular, never indefinite.
inline Matrix random_psd(int n, std::uint64_t seed, std::uint64_t path, std::uint64_t step = 0) {
  Matrix g = gaussian_matrix(n, n, seed, path, step);
  return symmetrize(g * g.transpose() / n);
}

// Random PD sample, bounded away from singular.
inline Matrix random_pd(int n, std::uint64_t seed, std::uint64_t path, std::uint64_t step = 0) {
  return random_psd(n, seed, path, step) + 1e-2 * Matrix::Identity(n, n);
}

// FNV-1a over a byte string; used for deterministic config digests.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace lossykf
