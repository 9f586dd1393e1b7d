#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "lossykf/filter.hpp"

namespace lossykf {

// Exact convergence classification for the closed-form rate families.
// Decisions are p-series / geometric-series facts, not numerics.
struct SeriesClass {
  enum class Kind { constant, power_approach, power_decay, markov_limit, unsupported };
  Kind kind = Kind::unsupported;
  std::string family;
  bool monotone = false;
  std::string note;
  double coeff = 0.0;     // c
  double exponent = 0.0;  // alpha or beta
  double limit = 0.0;     // lim p_k

  // Does sum over k of p_k^l converge? (l >= 1)
  Tristate arrival_power_converges(int l) const {
    switch (kind) {
      case Kind::constant: return coeff > 0.0 ? Tristate::no : Tristate::yes;
      case Kind::power_approach: return Tristate::no;  // p_k -> 1
      case Kind::power_decay:
        if (coeff == 0.0) return Tristate::yes;
        return l * exponent > 1.0 ? Tristate::yes : Tristate::no;
      case Kind::markov_limit: return limit > 0.0 ? Tristate::no : Tristate::yes;
      default: return Tristate::not_applicable;
    }
  }

  // Does sum over k of (1 - p_k)^l converge?
  Tristate drop_power_converges(int l) const {
    switch (kind) {
      case Kind::constant: return coeff >= 1.0 ? Tristate::yes : Tristate::no;
      case Kind::power_approach:
        if (coeff == 0.0) return Tristate::yes;  // p_k identically 1
        return l * exponent > 1.0 ? Tristate::yes : Tristate::no;
      case Kind::power_decay: return Tristate::no;  // 1 - p_k -> 1
      case Kind::markov_limit: return limit >= 1.0 ? Tristate::yes : Tristate::no;
      default: return Tristate::not_applicable;
    }
  }

  Tristate summable_drop_power_exists() const {
    switch (kind) {
      case Kind::constant: return coeff >= 1.0 ? Tristate::yes : Tristate::no;
      case Kind::power_approach: return Tristate::yes;
      case Kind::power_decay: return Tristate::no;
      case Kind::markov_limit: return limit >= 1.0 ? Tristate::yes : Tristate::no;
      default: return Tristate::not_applicable;
    }
  }

  std::optional<int> minimal_summable_drop_power() const {
    if (summable_drop_power_exists() != Tristate::yes) return std::nullopt;
    if (kind == Kind::power_approach && coeff > 0.0)
      return static_cast<int>(std::floor(1.0 / exponent)) + 1;
    return 1;
  }
};

inline SeriesClass classify_series(const DropModel& model) {
  SeriesClass s;
  s.family = model.describe();
  s.monotone = model.monotone_rates();
  if (!s.monotone)
    s.note = "rate sequence is not monotone; series tests are exact but the stability "
             "conditions assume monotone rates";

  if (const auto* iid = std::get_if<IidChannel>(&model.channel)) {
    s.kind = SeriesClass::Kind::constant;
    s.coeff = iid->p;
    s.limit = iid->p;
    return s;
  }
  if (const auto* tv = std::get_if<TimeVaryingChannel>(&model.channel)) {
    s.coeff = tv->c;
    s.exponent = tv->exponent;
    switch (tv->family) {
      case RateFamily::constant:
        s.kind = SeriesClass::Kind::constant;
        s.limit = tv->c;
        break;
      case RateFamily::power_approach:
        s.kind = SeriesClass::Kind::power_approach;
        s.limit = 1.0;
        break;
      case RateFamily::power_decay:
        s.kind = SeriesClass::Kind::power_decay;
        s.limit = 0.0;
        break;
    }
    return s;
  }
  const auto& ge = std::get<GilbertElliottChannel>(model.channel);
  s.kind = SeriesClass::Kind::markov_limit;
  const double pi = ge.stationary_good();
  s.limit = pi * ge.p_good + (1.0 - pi) * ge.p_bad;
  return s;
}

enum class Verdict { stable, unstable, indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    default: return "indeterminate";
  }
}

struct Witness {
  std::string test;  // the triggering series statement
  std::string rule;  // which implication produced the verdict
};

struct StabilityVerdict {
  Verdict lower_as = Verdict::indeterminate;
  Verdict lower_absolute = Verdict::indeterminate;
  Verdict upper_as = Verdict::indeterminate;
  Verdict upper_absolute = Verdict::indeterminate;
  Witness witness_lower, witness_upper;
  bool one_step = false;
  Tristate nondegenerate = Tristate::not_applicable;
  std::string config_digest;
};

// The series facts a verdict actually consumes, separated out so the
// decision logic can be tested over its whole truth table.
struct SeriesFacts {
  Tristate arrival_sum_converges = Tristate::not_applicable;        // sum p_k
  Tristate arrival_window_sum_converges = Tristate::not_applicable; // sum p_k^{Io}
  Tristate summable_drop_power_exists = Tristate::not_applicable;   // exists I
  std::optional<int> minimal_drop_power;
  bool monotone = true;
};

inline SeriesFacts series_facts(const SeriesClass& s, int obs_index) {
  SeriesFacts f;
  f.arrival_sum_converges = s.arrival_power_converges(1);
  f.arrival_window_sum_converges = s.arrival_power_converges(obs_index);
  f.summable_drop_power_exists = s.summable_drop_power_exists();
  f.minimal_drop_power = s.minimal_summable_drop_power();
  f.monotone = s.monotone;
  return f;
}

// Pure decision logic. "indeterminate" is a first-class outcome: for
// degenerate multi-step systems only a necessary upper condition and a
// sufficient lower condition are available, and they need not meet.
inline StabilityVerdict verdict_from_facts(int obs_index, Tristate nondegenerate,
                                           const SeriesFacts& f) {
  StabilityVerdict v;
  v.one_step = obs_index == 1;
  v.nondegenerate = nondegenerate;

  if (!f.monotone) {
    v.witness_lower = {"rate sequence not monotone",
                       "stability conditions require monotone rates; no verdict issued"};
    v.witness_upper = v.witness_lower;
    return v;
  }

  if (f.arrival_window_sum_converges == Tristate::no) {
    v.lower_as = v.lower_absolute = Verdict::stable;
    v.witness_lower = {"sum p_k^" + std::to_string(obs_index) + " = infinity",
                       "divergent arrival-window series: full observation windows recur, "
                       "pinning the trace under a fixed ceiling infinitely often"};
  } else if (f.arrival_sum_converges == Tristate::yes) {
    v.lower_as = v.lower_absolute = Verdict::unstable;
    v.witness_lower = {"sum p_k < infinity",
                       "summable arrival rates: only finitely many packets arrive, so the "
                       "trace grows without bound along every tail"};
  } else {
    v.witness_lower = {"sum p_k^" + std::to_string(obs_index) +
                           " finite while sum p_k diverges (or undecided)",
                       "between the sufficient and necessary lower conditions; undecided"};
  }

  if (f.summable_drop_power_exists == Tristate::no) {
    v.upper_as = v.upper_absolute = Verdict::unstable;
    v.witness_upper = {"no finite I makes sum (1-p_k)^I < infinity",
                       "outage bursts of every length recur infinitely often, pushing the "
                       "trace over any fixed level"};
  } else if (f.summable_drop_power_exists == Tristate::yes) {
    if (obs_index == 1 || nondegenerate == Tristate::yes) {
      v.upper_as = v.upper_absolute = Verdict::stable;
      const std::string which = obs_index == 1 ? "one-step observability"
                                               : "non-degeneracy";
      v.witness_upper = {"sum (1-p_k)^I < infinity at I = " +
                             std::to_string(f.minimal_drop_power.value_or(1)),
                         "summable drop-power series with " + which +
                             ": long outages become rare enough for a deterministic bound"};
    } else {
      v.witness_upper = {"sum (1-p_k)^I < infinity at I = " +
                             std::to_string(f.minimal_drop_power.value_or(1)),
                         "necessary upper condition holds, but sufficiency is unknown for "
                         "degenerate multi-step systems; undecided"};
    }
  } else {
    v.witness_upper = {"drop-power summability undecided", "unsupported rate family"};
  }

  // liminf = infinity forces limsup = infinity.
  if (v.lower_as == Verdict::unstable && v.upper_as != Verdict::unstable) {
    v.upper_as = v.upper_absolute = Verdict::unstable;
    v.witness_upper = {v.witness_lower.test,
                       "unbounded liminf forces unbounded limsup"};
  }
  return v;
}

inline StabilityVerdict stability_verdict(const SystemProfile& profile, const SeriesClass& series,
                                          std::string config_digest = "") {
  StabilityVerdict v =
      verdict_from_facts(profile.obs_index, profile.nondegenerate,
                         series_facts(series, profile.obs_index));
  v.config_digest = std::move(config_digest);
  return v;
}

// Deterministic fingerprint of a (system, channel) pairing, used to guard
// against cross-wiring verdicts and experiment reports.
inline std::string config_digest(const LtiSystem& sys, const DropModel& model) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto put = [&os](const Matrix& m) {
    os << m.rows() << "x" << m.cols() << ":";
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) os << m(i, j) << ",";
    os << ";";
  };
  put(sys.A);
  put(sys.C);
  put(sys.Q);
  put(sys.R);
  put(sys.P0);
  os << model.describe();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(os.str());
  return hex.str();
}

struct DichotomyCell {
  double threshold = 0.0;
  int horizon = 0;
  double p_exceed = 0.0;
  double se_exceed = 0.0;
  double p_tail_below = 0.0;
  double se_tail_below = 0.0;
  bool consistent = false;  // both estimates within the band of {0, 1}
};

struct DichotomyReport {
  std::string config_digest;
  std::uint64_t master_seed = 0;
  int num_paths = 0;
  std::vector<int> horizons;
  std::vector<double> thresholds;
  double k0_fraction = 0.5;
  double tr_ceiling = 0.0;
  bool dichotomy_consistent = false;
  std::vector<DichotomyCell> cells;
};

struct DichotomyOptions {
  std::vector<int> horizons;  // ladder; empty selects {500, 1000, ...} clipped to the horizon
  double k0_fraction = 0.5;
  double band_sigmas = 2.0;   // estimates within band_sigmas binomial SEs of {0,1} are consistent
};

// Monte Carlo exhibit of the zero-one behavior: across independent paths,
// the fraction whose running max exceeds each threshold and the fraction
// whose tail min returns below it, per horizon. Paths are keyed by
// (master_seed, path_index), so parallel or serial evaluation agree.
inline DichotomyReport dichotomy_experiment(const LtiSystem& sys, const DropModel& model,
                                            int horizon, int num_paths,
                                            const std::vector<double>& thresholds,
                                            std::uint64_t master_seed,
                                            const DichotomyOptions& opts = {}) {
  if (horizon < 1 || num_paths < 1)
    throw std::invalid_argument("dichotomy_experiment: need horizon >= 1 and num_paths >= 1");

  DichotomyReport rep;
  rep.config_digest = config_digest(sys, model);
  rep.master_seed = master_seed;
  rep.num_paths = num_paths;
  rep.thresholds = thresholds;
  rep.k0_fraction = opts.k0_fraction;
  rep.horizons = opts.horizons;
  if (rep.horizons.empty()) {
    for (int h : {500, 1000, 3000})
      if (h < horizon) rep.horizons.push_back(h);
    rep.horizons.push_back(horizon);
  }
  for (int h : rep.horizons)
    if (h < 1 || h > horizon)
      throw std::invalid_argument("dichotomy_experiment: ladder horizon outside [1, horizon]");

  rep.tr_ceiling = window_bound(sys, window_estimator(sys)).trace();
  const int io = observability_index(sys);

  const size_t n_cells = thresholds.size() * rep.horizons.size();
  std::vector<long> exceed_counts(n_cells, 0), tail_counts(n_cells, 0);

  RunOptions ropts;
  ropts.covariance_only = true;
  ropts.track_window_bound = false;
  ropts.obs_index = io;

  for (int p = 0; p < num_paths; ++p) {
    CovTrace tr = run_path(sys, model, horizon, master_seed, static_cast<std::uint64_t>(p), ropts);
    size_t cell = 0;
    for (double c : thresholds) {
      const double lc = std::log2(c);
      for (int h : rep.horizons) {
        const int k0 = std::max(1, static_cast<int>(h * opts.k0_fraction));
        double mx = -std::numeric_limits<double>::infinity();
        double mn_tail = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= h; ++k) {
          const double v = tr.trace_log2[k - 1];
          mx = std::max(mx, v);
          if (k >= k0) mn_tail = std::min(mn_tail, v);
        }
        if (mx > lc) ++exceed_counts[cell];
        if (mn_tail <= lc) ++tail_counts[cell];
        ++cell;
      }
    }
  }

  const double n = static_cast<double>(num_paths);
  auto se_of = [n](double p) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); };
  auto near_01 = [&](double p, double se) {
    return std::min(p, 1.0 - p) <= opts.band_sigmas * se + 1e-12;
  };

  rep.dichotomy_consistent = true;
  size_t cell = 0;
  for (double c : thresholds) {
    for (int h : rep.horizons) {
      DichotomyCell dc;
      dc.threshold = c;
      dc.horizon = h;
      dc.p_exceed = exceed_counts[cell] / n;
      dc.se_exceed = se_of(dc.p_exceed);
      dc.p_tail_below = tail_counts[cell] / n;
      dc.se_tail_below = se_of(dc.p_tail_below);
      dc.consistent = near_01(dc.p_exceed, dc.se_exceed) && near_01(dc.p_tail_below, dc.se_tail_below);
      rep.dichotomy_consistent = rep.dichotomy_consistent && dc.consistent;
      rep.cells.push_back(dc);
      ++cell;
    }
  }
  return rep;
}

struct ConsistencyCheck {
  std::string name;
  double threshold = 0.0;
  std::string status;  // "pass" or "tension"
  std::string detail;
};

struct ConsistencyReport {
  std::vector<ConsistencyCheck> checks;
  bool all_pass = true;
  std::string caveat =
      "finite horizons cannot refute asymptotic claims; tension entries are advisory";
};

// Cross-checks a theorem-based verdict against the Monte Carlo report.
// Both must have been computed for the same (system, channel) pairing.
inline ConsistencyReport verdict_vs_empirical(const StabilityVerdict& verdict,
                                              const DichotomyReport& report) {
  if (verdict.config_digest.empty() || report.config_digest.empty() ||
      verdict.config_digest != report.config_digest)
    throw std::invalid_argument(
        "verdict_vs_empirical: verdict and report were not computed from the same "
        "(system, channel) configuration");

  ConsistencyReport out;
  const int h_min = report.horizons.front();
  const int h_max = report.horizons.back();

  auto cell_at = [&](double c, int h) -> const DichotomyCell& {
    for (const auto& dc : report.cells)
      if (dc.threshold == c && dc.horizon == h) return dc;
    throw std::logic_error("verdict_vs_empirical: missing cell");
  };
  auto add = [&out](std::string name, double c, bool pass, std::string detail) {
    out.checks.push_back({std::move(name), c, pass ? "pass" : "tension", std::move(detail)});
    out.all_pass = out.all_pass && pass;
  };
  auto fmt = [](double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
  };

  for (double c : report.thresholds) {
    const auto& first = cell_at(c, h_min);
    const auto& last = cell_at(c, h_max);
    if (verdict.upper_as == Verdict::unstable) {
      const double pooled =
          std::sqrt(first.se_exceed * first.se_exceed + last.se_exceed * last.se_exceed);
      const bool near_one = 1.0 - last.p_exceed <= 2.0 * last.se_exceed + 1e-12;
      const bool rising = last.p_exceed - first.p_exceed > 2.0 * pooled;
      add("exceedance_trending_to_one", c, near_one || rising,
          "p_exceed " + fmt(first.p_exceed) + " -> " + fmt(last.p_exceed));
    }
    if ((verdict.lower_as == Verdict::stable || verdict.lower_absolute == Verdict::stable) &&
        c > report.tr_ceiling) {
      add("tail_returns_below", c, last.p_tail_below == 1.0,
          "p_tail_below " + fmt(last.p_tail_below) + " at horizon " + std::to_string(h_max));
    }
    if (verdict.lower_as == Verdict::unstable) {
      add("tail_escapes", c, last.p_tail_below <= first.p_tail_below + 2.0 * first.se_tail_below,
          "p_tail_below " + fmt(first.p_tail_below) + " -> " + fmt(last.p_tail_below));
    }
  }
  return out;
}

}  // namespace lossykf
