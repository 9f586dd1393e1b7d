#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lossykf/rng.hpp"

namespace lossykf {

enum class RateFamily { constant, power_approach, power_decay };

struct IidChannel {
  double p = 0.5;
};

// Independent arrivals with a deterministic, monotone rate sequence.
//   constant:        p_k = c
//   power_approach:  p_k = 1 - c * k^{-exponent}   (rates rise towards 1)
//   power_decay:     p_k = c * k^{-exponent}       (rates fall towards 0)
// Values are clamped to [0, 1].
struct TimeVaryingChannel {
  RateFamily family = RateFamily::constant;
  double exponent = 1.0;
  double c = 1.0;
};

// Two-state Markov channel: a good state with arrival probability p_good
// and a bad state with p_bad; q_gb and q_bg are the good->bad and
// bad->good transition probabilities. Both must lie strictly inside
// (0, 1) so the chain is irreducible and aperiodic.
struct GilbertElliottChannel {
  double q_gb = 0.1;
  double q_bg = 0.1;
  double p_good = 1.0;
  double p_bad = 0.0;
  enum class Init { good, bad, stationary } initial = Init::stationary;

  double stationary_good() const { return q_bg / (q_gb + q_bg); }
  double initial_good() const {
    switch (initial) {
      case Init::good: return 1.0;
      case Init::bad: return 0.0;
      default: return stationary_good();
    }
  }
  // Second transition-matrix eigenvalue; governs how fast the state
  // distribution forgets the initial condition.
  double lambda2() const { return 1.0 - q_gb - q_bg; }
};

struct DropModel {
  std::variant<IidChannel, TimeVaryingChannel, GilbertElliottChannel> channel;
  std::optional<std::string> clamp_note;

  static void check_prob(double p, const std::string& name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(name + " = " + std::to_string(p) + " is not in [0, 1]");
  }

  static DropModel iid(double p) {
    check_prob(p, "p");
    return {IidChannel{p}, std::nullopt};
  }

  static DropModel time_varying(RateFamily family, double exponent, double c) {
    if (family != RateFamily::constant && !(exponent > 0.0))
      throw std::invalid_argument("rate family exponent must be positive");
    if (!(c >= 0.0)) throw std::invalid_argument("rate family coefficient must be >= 0");
    if (family == RateFamily::constant) check_prob(c, "c");
    DropModel m{TimeVaryingChannel{family, exponent, c}, std::nullopt};
    if (c > 1.0)
      m.clamp_note = "rate formula leaves [0, 1] for small k; values are clamped";
    return m;
  }

  static DropModel gilbert_elliott(double q_gb, double q_bg, double p_good, double p_bad,
                                   GilbertElliottChannel::Init initial) {
    if (!(q_gb > 0.0 && q_gb < 1.0 && q_bg > 0.0 && q_bg < 1.0))
      throw std::invalid_argument(
          "gilbert_elliott transition probabilities must lie strictly in (0, 1)");
    check_prob(p_good, "p_good");
    check_prob(p_bad, "p_bad");
    return {GilbertElliottChannel{q_gb, q_bg, p_good, p_bad, initial}, std::nullopt};
  }

  std::string describe() const;
  bool monotone_rates() const;
};

// Exact arrival rate p_k = E[gamma_k], k >= 1. For the two-state chain the
// k-step state distribution is propagated in closed form.
inline double arrival_rate(const DropModel& m, long k) {
  if (k < 1) throw std::invalid_argument("arrival_rate: k must be >= 1");
  if (const auto* c = std::get_if<IidChannel>(&m.channel)) return c->p;
  if (const auto* tv = std::get_if<TimeVaryingChannel>(&m.channel)) {
    double p = 0.0;
    switch (tv->family) {
      case RateFamily::constant: p = tv->c; break;
      case RateFamily::power_approach:
        p = 1.0 - tv->c * std::pow(static_cast<double>(k), -tv->exponent);
        break;
      case RateFamily::power_decay:
        p = tv->c * std::pow(static_cast<double>(k), -tv->exponent);
        break;
    }
    return std::min(1.0, std::max(0.0, p));
  }
  const auto& ge = std::get<GilbertElliottChannel>(m.channel);
  const double pi = ge.stationary_good();
  const double good_k = pi + (ge.initial_good() - pi) * std::pow(ge.lambda2(), static_cast<double>(k - 1));
  return good_k * ge.p_good + (1.0 - good_k) * ge.p_bad;
}

inline std::string DropModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (const auto* c = std::get_if<IidChannel>(&channel)) {
    os << "iid(p=" << c->p << ")";
  } else if (const auto* tv = std::get_if<TimeVaryingChannel>(&channel)) {
    switch (tv->family) {
      case RateFamily::constant: os << "constant(c=" << tv->c << ")"; break;
      case RateFamily::power_approach:
        os << "power_approach(alpha=" << tv->exponent << ",c=" << tv->c << ")";
        break;
      case RateFamily::power_decay:
        os << "power_decay(beta=" << tv->exponent << ",c=" << tv->c << ")";
        break;
    }
  } else {
    const auto& ge = std::get<GilbertElliottChannel>(channel);
    os << "gilbert_elliott(q_gb=" << ge.q_gb << ",q_bg=" << ge.q_bg << ",p_good=" << ge.p_good
       << ",p_bad=" << ge.p_bad << ",initial=";
    switch (ge.initial) {
      case GilbertElliottChannel::Init::good: os << "good"; break;
      case GilbertElliottChannel::Init::bad: os << "bad"; break;
      default: os << "stationary"; break;
    }
    os << ")";
  }
  return os.str();
}

inline bool DropModel::monotone_rates() const {
  if (std::holds_alternative<IidChannel>(channel)) return true;
  if (const auto* tv = std::get_if<TimeVaryingChannel>(&channel)) {
    (void)tv;
    return true;  // all three families are monotone after clamping
  }
  const auto& ge = std::get<GilbertElliottChannel>(channel);
  if (ge.p_good == ge.p_bad) return true;
  if (ge.initial == GilbertElliottChannel::Init::stationary) return true;
  return ge.lambda2() >= 0.0;  // negative second eigenvalue makes p_k oscillate
}

struct ArrivalPath {
  std::vector<std::uint8_t> bits;  // bits[i] is the arrival indicator at time i+1
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  DropModel model;
};

// Draw an arrival path. Reproducible: the draw at step k is a pure
// function of (seed, path_index, k).
inline ArrivalPath sample_path(const DropModel& m, int horizon, std::uint64_t seed,
                               std::uint64_t path_index = 0) {
  if (horizon < 1) throw std::invalid_argument("sample_path: horizon must be >= 1");
  ArrivalPath out;
  out.bits.resize(horizon);
  out.seed = seed;
  out.path_index = path_index;
  out.model = m;

  if (const auto* ge = std::get_if<GilbertElliottChannel>(&m.channel)) {
    bool good;
    switch (ge->initial) {
      case GilbertElliottChannel::Init::good: good = true; break;
      case GilbertElliottChannel::Init::bad: good = false; break;
      default:
        good = keyed_uniform({seed, path_index, Stream::chain_initial, 0, 0}) <
               ge->stationary_good();
    }
    for (int k = 1; k <= horizon; ++k) {
      const double p = good ? ge->p_good : ge->p_bad;
      out.bits[k - 1] =
          keyed_uniform({seed, path_index, Stream::arrival, static_cast<std::uint64_t>(k), 0}) < p;
      const double flip = good ? ge->q_gb : ge->q_bg;
      if (keyed_uniform({seed, path_index, Stream::chain_transition,
                         static_cast<std::uint64_t>(k), 0}) < flip)
        good = !good;
    }
    return out;
  }

  for (int k = 1; k <= horizon; ++k) {
    const double p = arrival_rate(m, k);
    out.bits[k - 1] =
        keyed_uniform({seed, path_index, Stream::arrival, static_cast<std::uint64_t>(k), 0}) < p;
  }
  return out;
}

struct MixingEstimate {
  int lag = 0;
  double f_hat = 0.0;
  double stderr_f = 0.0;      // Monte Carlo standard error of the maximizing pair
  int pairs_admissible = 0;
  int pairs_excluded = 0;     // pattern pairs with estimated probability < 0.01
  bool low_confidence = false;
};

// Monte Carlo estimate of the dependence-decay coefficient at each lag:
// over bit patterns A on coordinates 1..w and B on coordinates
// (w+lag)..(w+lag+w-1), the largest |P(A and B) - P(A)P(B)| / (P(A)P(B)).
// A diagnostic, not a certification: no finite sample can verify an
// asymptotic mixing property, so results read "consistent with mixing"
// at best.
inline std::vector<MixingEstimate> empirical_mixing(const DropModel& m, int n_lags, int window_w,
                                                    int samples, std::uint64_t seed) {
  if (window_w < 1 || window_w > 3)
    throw std::invalid_argument("empirical_mixing: window width must be 1, 2 or 3");
  if (n_lags < 1 || samples < 1)
    throw std::invalid_argument("empirical_mixing: need n_lags >= 1 and samples >= 1");

  const int w = window_w;
  const int patterns = 1 << w;
  const int length = 2 * w + n_lags;

  std::vector<long> count_a(patterns, 0);
  std::vector<std::vector<long>> count_b(n_lags, std::vector<long>(patterns, 0));
  std::vector<std::vector<long>> count_ab(n_lags, std::vector<long>(patterns * patterns, 0));

  for (int i = 0; i < samples; ++i) {
    ArrivalPath path = sample_path(m, length, seed, static_cast<std::uint64_t>(i));
    int a = 0;
    for (int t = 0; t < w; ++t) a = (a << 1) | path.bits[t];
    ++count_a[a];
    for (int lag = 1; lag <= n_lags; ++lag) {
      int b = 0;
      for (int t = 0; t < w; ++t) b = (b << 1) | path.bits[w + lag - 1 + t];
      ++count_b[lag - 1][b];
      ++count_ab[lag - 1][a * patterns + b];
    }
  }

  const double n = static_cast<double>(samples);
  std::vector<MixingEstimate> out;
  out.reserve(n_lags);
  for (int lag = 1; lag <= n_lags; ++lag) {
    MixingEstimate e;
    e.lag = lag;
    for (int a = 0; a < patterns; ++a) {
      const double pa = count_a[a] / n;
      for (int b = 0; b < patterns; ++b) {
        const double pb = count_b[lag - 1][b] / n;
        if (pa < 0.01 || pb < 0.01) {
          ++e.pairs_excluded;
          continue;
        }
        ++e.pairs_admissible;
        const double pab = count_ab[lag - 1][a * patterns + b] / n;
        const double f = std::abs(pab - pa * pb) / (pa * pb);
        if (f >= e.f_hat) {
          e.f_hat = f;
          e.stderr_f = std::sqrt(std::max(pab * (1.0 - pab), 1.0 / n) / n) / (pa * pb);
        }
      }
    }
    e.low_confidence = e.pairs_admissible == 0;
    out.push_back(e);
  }
  return out;
}

}  // namespace lossykf
