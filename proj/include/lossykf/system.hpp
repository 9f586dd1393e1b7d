#pragma once

#include <algorithm>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lossykf/linalg.hpp"

namespace lossykf {

// Discrete-time plant x_{k+1} = A x_k + w_k, y_k = C x_k + v_k with
// process noise covariance Q, measurement noise covariance R and initial
// state covariance P0.
struct LtiSystem {
  Matrix A, C, Q, R, P0;
  int n = 0;
  int m = 0;

  static LtiSystem make(Matrix A, Matrix C, Matrix Q, Matrix R, Matrix P0 = {}) {
    LtiSystem s;
    s.n = static_cast<int>(A.rows());
    s.m = static_cast<int>(C.rows());
    if (P0.size() == 0) P0 = Matrix::Zero(s.n, s.n);
    require_square(A, "A");
    require_square(Q, "Q");
    require_square(R, "R");
    require_square(P0, "P0");
    if (C.cols() != s.n || Q.rows() != s.n || P0.rows() != s.n || R.rows() != s.m)
      throw std::invalid_argument("inconsistent system dimensions");
    s.A = std::move(A);
    s.C = std::move(C);
    s.Q = std::move(Q);
    s.R = std::move(R);
    s.P0 = std::move(P0);
    return s;
  }
};

enum class Tristate { yes, no, not_applicable };

inline const char* to_string(Tristate t) {
  switch (t) {
    case Tristate::yes: return "yes";
    case Tristate::no: return "no";
    default: return "not_applicable";
  }
}

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> warnings;
  bool valid = false;
};

namespace detail {

inline std::vector<std::complex<double>> eigenvalues_of(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> ev(a.rows());
  for (int i = 0; i < a.rows(); ++i) ev[i] = es.eigenvalues()(i);
  // Sort by magnitude descending; ties broken by real then imaginary part
  // so the ordering is reproducible.
  std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return ev;
}

inline Matrix stacked_observation(const LtiSystem& s, int depth) {
  Matrix obs(depth * s.m, s.n);
  Matrix ak = Matrix::Identity(s.n, s.n);
  for (int k = 0; k < depth; ++k) {
    obs.middleRows(k * s.m, s.m) = s.C * ak;
    if (k + 1 < depth) ak = ak * s.A;
  }
  return obs;
}

}  // namespace detail

// Least depth k such that [C; CA; ...; C A^{k-1}] has full column rank.
inline int observability_index(const LtiSystem& sys, double tol = 1e-9) {
  for (int k = 1; k <= sys.n; ++k) {
    if (rank_svd(detail::stacked_observation(sys, k), tol).rank == sys.n) return k;
  }
  throw std::domain_error("(C, A) is not observable: no stacking depth <= n reaches full rank");
}

inline ValidationReport validate_system(const LtiSystem& sys, double tol = 1e-9) {
  ValidationReport rep;
  auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  auto sym_psd = [&](const Matrix& x, const std::string& name, bool strict) {
    std::ostringstream os;
    const bool sym = is_symmetric(x, 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(x), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, hi);
    const bool ok = sym && (strict ? lo >= tol * scale : lo >= -tol * scale);
    os << "min eig " << lo;
    if (!sym) os << "; not symmetric";
    add(name, ok, os.str());
  };

  sym_psd(sys.Q, "Q_psd", /*strict=*/false);
  sym_psd(sys.R, "R_pd", /*strict=*/true);
  sym_psd(sys.P0, "P0_psd", /*strict=*/false);

  {
    RankResult r = rank_svd(detail::stacked_observation(sys, sys.n), tol);
    add("observability", r.rank == sys.n,
        "rank " + std::to_string(r.rank) + " of " + std::to_string(sys.n));
    if (r.ambiguous) rep.warnings.push_back("observability rank decision near tolerance band");
  }
  {
    Matrix b = psd_sqrt(sys.Q);
    Matrix ctrb(sys.n, sys.n * sys.n);
    Matrix ak = Matrix::Identity(sys.n, sys.n);
    for (int k = 0; k < sys.n; ++k) {
      ctrb.middleCols(k * sys.n, sys.n) = ak * b;
      ak = ak * sys.A;
    }
    RankResult r = rank_svd(ctrb, tol);
    add("controllability", r.rank == sys.n,
        "rank " + std::to_string(r.rank) + " of " + std::to_string(sys.n));
    if (r.ambiguous) rep.warnings.push_back("controllability rank decision near tolerance band");
  }
  {
    auto ev = detail::eigenvalues_of(sys.A);
    const double lo = std::abs(ev.back());
    std::ostringstream os;
    os << "smallest eigenvalue magnitude " << lo;
    add("all_modes_unstable", lo >= 1.0 - tol, os.str());
  }

  rep.valid = std::all_of(rep.checks.begin(), rep.checks.end(),
                          [](const ValidationCheck& c) { return c.pass; });
  return rep;
}

// Partition of eigenvalue indices (sorted by magnitude, descending) into
// maximal groups of equal magnitude. Empty result means A is too far from
// diagonalizable to trust an eigenbasis.
inline std::optional<std::vector<std::vector<int>>> quasi_equiblocks(const LtiSystem& sys,
                                                                     double mag_tol = 1e-8,
                                                                     double cond_cap = 1e8) {
  Eigen::EigenSolver<Matrix> es(sys.A);
  Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0 || svd.singularValues().maxCoeff() / smin > cond_cap) return std::nullopt;

  std::vector<std::pair<double, int>> mags(sys.n);
  for (int i = 0; i < sys.n; ++i) mags[i] = {std::abs(es.eigenvalues()(i)), i};
  std::sort(mags.begin(), mags.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });

  std::vector<std::vector<int>> blocks;
  for (int i = 0; i < sys.n; ++i) {
    const bool open_new =
        blocks.empty() ||
        std::abs(mags[i].first - mags[i - 1].first) >
            mag_tol * std::max(std::max(mags[i].first, mags[i - 1].first), 1.0);
    if (open_new) blocks.emplace_back();
    blocks.back().push_back(i);
  }
  return blocks;
}

// A system is non-degenerate when, in an eigenbasis of A, the output map
// restricted to every group of equal-magnitude modes has full column rank.
// Defective A gets not_applicable rather than a guess.
inline Tristate is_nondegenerate(const LtiSystem& sys, double tol = 1e-9, double mag_tol = 1e-8,
                                 double cond_cap = 1e8) {
  Eigen::EigenSolver<Matrix> es(sys.A);
  Eigen::MatrixXcd v = es.eigenvectors();
  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0 || svd.singularValues().maxCoeff() / smin > cond_cap)
      return Tristate::not_applicable;
  }

  std::vector<std::pair<double, int>> mags(sys.n);
  for (int i = 0; i < sys.n; ++i) mags[i] = {std::abs(es.eigenvalues()(i)), i};
  std::sort(mags.begin(), mags.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });

  Eigen::MatrixXcd c_modes = sys.C.cast<std::complex<double>>() * v;
  int i = 0;
  while (i < sys.n) {
    int j = i + 1;
    while (j < sys.n && std::abs(mags[j].first - mags[j - 1].first) <=
                            mag_tol * std::max(std::max(mags[j].first, mags[j - 1].first), 1.0))
      ++j;
    const int width = j - i;
    Eigen::MatrixXcd block(sys.m, width);
    for (int t = 0; t < width; ++t) block.col(t) = c_modes.col(mags[i + t].second);
    if (width > sys.m) return Tristate::no;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
    const auto& s = svd.singularValues();
    if (s.size() < width || s(width - 1) < tol * s(0)) return Tristate::no;
    i = j;
  }
  return Tristate::yes;
}

struct SystemProfile {
  int obs_index = 0;
  double spectral_radius = 0.0;
  std::vector<double> eigen_magnitudes;  // sorted non-increasing
  Tristate nondegenerate = Tristate::not_applicable;
  std::optional<std::vector<std::vector<int>>> equiblocks;
};

inline SystemProfile profile_system(const LtiSystem& sys, double tol = 1e-9,
                                    double mag_tol = 1e-8, double cond_cap = 1e8) {
  SystemProfile p;
  p.obs_index = observability_index(sys, tol);
  auto ev = detail::eigenvalues_of(sys.A);
  p.eigen_magnitudes.reserve(ev.size());
  for (const auto& e : ev) p.eigen_magnitudes.push_back(std::abs(e));
  p.spectral_radius = p.eigen_magnitudes.front();
  p.equiblocks = quasi_equiblocks(sys, mag_tol, cond_cap);
  p.nondegenerate = is_nondegenerate(sys, tol, mag_tol, cond_cap);
  return p;
}

}  // namespace lossykf
