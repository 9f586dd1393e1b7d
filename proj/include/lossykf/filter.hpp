#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lossykf/bounds.hpp"
#include "lossykf/channels.hpp"
#include "lossykf/scaled.hpp"

namespace lossykf {

struct FilterState {
  Vector x_pred;   // state prediction given measurements before time k
  Matrix P_pred;   // its covariance
  Vector x_filt;   // filtered estimate at time k
  Matrix P_filt;   // its covariance
  int k = 1;
};

// Prediction state at time 1: no measurements seen, x_1 = A x_0 + w_0.
inline FilterState initial_filter_state(const LtiSystem& sys) {
  FilterState st;
  st.x_pred = Vector::Zero(sys.n);
  st.P_pred = lyapunov_step(sys, sys.P0);
  st.x_filt = st.x_pred;
  st.P_filt = st.P_pred;
  st.k = 1;
  return st;
}

// One filter step at time k: measurement update when the packet arrived
// (Joseph-form covariance update), open-loop otherwise, then prediction.
// The returned state is at time k+1; its x_filt/P_filt fields hold the
// time-k filtered quantities.
inline FilterState filter_step(const LtiSystem& sys, const FilterState& st, int gamma,
                               const std::optional<Vector>& y) {
  if (gamma != 0 && gamma != 1) throw std::invalid_argument("filter_step: gamma must be 0 or 1");
  if ((gamma == 1) != y.has_value())
    throw std::invalid_argument("filter_step: measurement must be present iff gamma = 1");

  FilterState next;
  ScaledCov cov{st.P_pred, 0};
  if (gamma == 1) {
    if (y->size() != sys.m) throw std::invalid_argument("filter_step: measurement dimension");
    const Matrix w = cov.P * sys.C.transpose();
    const Matrix innov = symmetrize(sys.C * w + sys.R);
    Eigen::LDLT<Matrix> ldlt(innov);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("filter_step: innovation covariance factorization failed");
    const Matrix gain = ldlt.solve(w.transpose()).transpose();
    next.x_filt = st.x_pred + gain * (*y - sys.C * st.x_pred);
    const Matrix ikc = Matrix::Identity(sys.n, sys.n) - gain * sys.C;
    next.P_filt = symmetrize(ikc * cov.P * ikc.transpose() + gain * sys.R * gain.transpose());
  } else {
    next.x_filt = st.x_pred;
    next.P_filt = st.P_pred;
  }
  next.x_pred = sys.A * next.x_filt;
  next.P_pred = lyapunov_step(sys, next.P_filt);
  next.k = st.k + 1;
  return next;
}

struct MBoundCheck {
  int k = 0;
  bool satisfied = false;
};

struct RunOptions {
  bool covariance_only = false;      // skip state/measurement simulation
  std::vector<double> thresholds;    // record first crossing times for these
  bool track_window_bound = true;    // record ceiling checks after full arrival windows
  std::optional<double> tr_ceiling;  // Tr(M), computed when absent and tracking is on
  std::optional<int> obs_index;
  double saturate_value = 1e200;     // past this, stored values become +inf
};

// One simulated sample path. Trace entry k (1-based) is Tr(P_k), the
// covariance of the prediction for time k given arrivals before k; kept
// as an exact value while representable and as a base-2 logarithm always.
struct CovTrace {
  std::vector<double> trace_value;          // +inf past saturation
  std::vector<double> trace_log2;           // finite for every k
  ArrivalPath arrivals;
  std::optional<int> saturated_at;
  std::vector<MBoundCheck> window_bound_checks;
  std::vector<int> arrival_times;           // 1-based times with gamma = 1
  std::vector<std::pair<double, std::optional<int>>> first_crossing;  // per threshold
  double tr_ceiling_used = 0.0;
  int obs_index_used = 0;

  int horizon() const { return static_cast<int>(trace_log2.size()); }

  int longest_outage() const {
    int best = 0, run = 0;
    for (auto b : arrivals.bits) {
      run = b ? 0 : run + 1;
      best = std::max(best, run);
    }
    return best;
  }

  // Gaps tau_{k,1..count} between the most recent arrivals at or before
  // time k: tau_{k,1} = k - (last arrival), then successive inter-arrival
  // gaps walking backwards. Empty when fewer than `count` arrivals.
  std::vector<int> recent_gaps(int k, int count) const {
    std::vector<int> at_or_before;
    for (int t : arrival_times)
      if (t <= k) at_or_before.push_back(t);
    if (static_cast<int>(at_or_before.size()) < count) return {};
    std::vector<int> gaps(count);
    const int i = static_cast<int>(at_or_before.size()) - 1;
    gaps[0] = k - at_or_before[i];
    for (int j = 1; j < count; ++j) gaps[j] = at_or_before[i - j + 1] - at_or_before[i - j];
    return gaps;
  }
};

inline CovTrace run_path(const LtiSystem& sys, const DropModel& model, int horizon,
                         std::uint64_t seed, std::uint64_t path_index = 0,
                         const RunOptions& opts = {}) {
  CovTrace out;
  out.arrivals = sample_path(model, horizon, seed, path_index);
  out.trace_value.resize(horizon);
  out.trace_log2.resize(horizon);

  const int io = opts.obs_index ? *opts.obs_index : observability_index(sys);
  out.obs_index_used = io;
  double tr_ceiling = 0.0;
  if (opts.track_window_bound) {
    tr_ceiling = opts.tr_ceiling ? *opts.tr_ceiling
                                 : window_bound(sys, window_estimator(sys)).trace();
    out.tr_ceiling_used = tr_ceiling;
  }
  for (double c : opts.thresholds) out.first_crossing.emplace_back(c, std::nullopt);

  ScaledCov cov{lyapunov_step(sys, sys.P0), 0};
  cov.normalize();

  Vector x, x_hat;
  Matrix q_half, r_half;
  if (!opts.covariance_only) {
    q_half = psd_sqrt(sys.Q);
    r_half = psd_sqrt(sys.R);
    // x_1 = A x_0 + w_0 with x_0 drawn from N(0, P0).
    Vector x0(sys.n), w0(sys.n);
    for (int i = 0; i < sys.n; ++i) {
      x0(i) = keyed_normal({seed, path_index, Stream::initial_state, 0,
                            static_cast<std::uint64_t>(i)});
      w0(i) = keyed_normal({seed, path_index, Stream::process_noise, 0,
                            static_cast<std::uint64_t>(i)});
    }
    x = sys.A * (psd_sqrt(sys.P0) * x0) + q_half * w0;
    x_hat = Vector::Zero(sys.n);
  }

  int arrival_streak = 0;
  for (int k = 1; k <= horizon; ++k) {
    const double log2_tr = cov.log2_trace();
    out.trace_log2[k - 1] = log2_tr;
    double value = cov.value_trace();
    if (value > opts.saturate_value) {
      value = std::numeric_limits<double>::infinity();
      if (!out.saturated_at) out.saturated_at = k;
    }
    out.trace_value[k - 1] = value;

    if (opts.track_window_bound && k > io && arrival_streak >= io) {
      // All of gamma_{k-io}..gamma_{k-1} arrived; the trace must sit
      // under the window ceiling (small additive tolerance).
      out.window_bound_checks.push_back({k, log2_tr <= std::log2(tr_ceiling + 1e-6)});
    }
    for (auto& [c, hit] : out.first_crossing)
      if (!hit && log2_tr > std::log2(c)) hit = k;

    const int gamma = out.arrivals.bits[k - 1];
    if (gamma) {
      out.arrival_times.push_back(k);
      arrival_streak += 1;
    } else {
      arrival_streak = 0;
    }

    if (!opts.covariance_only) {
      Vector v(sys.m);
      for (int i = 0; i < sys.m; ++i)
        v(i) = keyed_normal({seed, path_index, Stream::measurement_noise,
                             static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)});
      const Vector y = sys.C * x + r_half * v;
      if (gamma) {
        const Matrix gain = scaled_arrival_step(sys, cov);
        x_hat = sys.A * (x_hat + gain * (y - sys.C * x_hat));
      } else {
        scaled_drop_step(sys, cov);
        x_hat = sys.A * x_hat;
      }
      Vector w(sys.n);
      for (int i = 0; i < sys.n; ++i)
        w(i) = keyed_normal({seed, path_index, Stream::process_noise,
                             static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)});
      x = sys.A * x + q_half * w;
    } else {
      if (gamma)
        scaled_arrival_step(sys, cov);
      else
        scaled_drop_step(sys, cov);
    }
  }
  return out;
}

struct PathStats {
  struct PerThreshold {
    double threshold = 0.0;
    bool exceeded = false;        // max over all k above threshold
    bool exceeded_tail = false;   // max over k >= k0 above threshold
    bool tail_min_below = false;  // min over k >= k0 at or below threshold
  };
  std::vector<PerThreshold> per_threshold;
  int k0 = 1;
  int longest_outage = 0;
  int arrival_count = 0;
};

// Finite-horizon functionals of one trace. The running max proxies the
// limsup and the tail min (k >= k0) proxies the liminf; both are
// estimators, not the asymptotic quantities themselves.
inline PathStats path_statistics(const CovTrace& trace, const std::vector<double>& thresholds,
                                 int k0) {
  const int h = trace.horizon();
  if (h == 0) throw std::invalid_argument("path_statistics: empty trace");
  k0 = std::max(1, std::min(k0, h));

  double max_all = -std::numeric_limits<double>::infinity();
  double max_tail = max_all;
  double min_tail = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= h; ++k) {
    const double v = trace.trace_log2[k - 1];
    max_all = std::max(max_all, v);
    if (k >= k0) {
      max_tail = std::max(max_tail, v);
      min_tail = std::min(min_tail, v);
    }
  }

  PathStats st;
  st.k0 = k0;
  st.longest_outage = trace.longest_outage();
  st.arrival_count = static_cast<int>(trace.arrival_times.size());
  for (double c : thresholds) {
    const double lc = std::log2(c);
    st.per_threshold.push_back({c, max_all > lc, max_tail > lc, min_tail <= lc});
  }
  return st;
}

}  // namespace lossykf
