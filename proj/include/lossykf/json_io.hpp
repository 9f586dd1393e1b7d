#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "lossykf/analysis.hpp"

namespace lossykf {

using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error("matrix \"" + name + "\" must be a non-empty array of rows");
  // A flat numeric array is accepted as a single row.
  if (j.front().is_number()) {
    Matrix m(1, j.size());
    for (size_t c = 0; c < j.size(); ++c) m(0, static_cast<int>(c)) = j[c].get<double>();
    return m;
  }
  const size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::runtime_error("matrix \"" + name + "\" has ragged rows");
    for (size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
  }
  return m;
}

inline LtiSystem system_from_json(const Json& j) {
  for (const char* key : {"A", "C", "Q", "R"})
    if (!j.contains(key)) throw std::runtime_error(std::string("system: missing field ") + key);
  Matrix a = matrix_from_json(j.at("A"), "A");
  Matrix c = matrix_from_json(j.at("C"), "C");
  Matrix q = matrix_from_json(j.at("Q"), "Q");
  Matrix r = matrix_from_json(j.at("R"), "R");
  Matrix p0;
  if (j.contains("P0")) p0 = matrix_from_json(j.at("P0"), "P0");
  return LtiSystem::make(std::move(a), std::move(c), std::move(q), std::move(r), std::move(p0));
}

inline Json system_to_json(const LtiSystem& s) {
  Json j;
  j["A"] = matrix_to_json(s.A);
  j["C"] = matrix_to_json(s.C);
  j["Q"] = matrix_to_json(s.Q);
  j["R"] = matrix_to_json(s.R);
  j["P0"] = matrix_to_json(s.P0);
  return j;
}

inline DropModel channel_from_json(const Json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "iid") return DropModel::iid(j.at("p").get<double>());
  if (variant == "time_varying") {
    const std::string family = j.at("family").get<std::string>();
    if (family == "constant")
      return DropModel::time_varying(RateFamily::constant, 0.0, j.at("c").get<double>());
    if (family == "power_approach")
      return DropModel::time_varying(RateFamily::power_approach, j.at("alpha").get<double>(),
                                     j.value("c", 1.0));
    if (family == "power_decay")
      return DropModel::time_varying(RateFamily::power_decay, j.at("beta").get<double>(),
                                     j.value("c", 1.0));
    throw std::runtime_error("channel: unknown rate family \"" + family + "\"");
  }
  if (variant == "gilbert_elliott") {
    const std::string init = j.value("initial", "stationary");
    GilbertElliottChannel::Init i;
    if (init == "good") i = GilbertElliottChannel::Init::good;
    else if (init == "bad") i = GilbertElliottChannel::Init::bad;
    else if (init == "stationary") i = GilbertElliottChannel::Init::stationary;
    else throw std::runtime_error("channel: unknown initial state \"" + init + "\"");
    return DropModel::gilbert_elliott(j.at("q_gb").get<double>(), j.at("q_bg").get<double>(),
                                      j.at("p_good").get<double>(), j.at("p_bad").get<double>(), i);
  }
  throw std::runtime_error("channel: unknown variant \"" + variant + "\"");
}

inline Json channel_to_json(const DropModel& m) {
  Json j;
  if (const auto* iid = std::get_if<IidChannel>(&m.channel)) {
    j["variant"] = "iid";
    j["p"] = iid->p;
  } else if (const auto* tv = std::get_if<TimeVaryingChannel>(&m.channel)) {
    j["variant"] = "time_varying";
    switch (tv->family) {
      case RateFamily::constant:
        j["family"] = "constant";
        j["c"] = tv->c;
        break;
      case RateFamily::power_approach:
        j["family"] = "power_approach";
        j["alpha"] = tv->exponent;
        j["c"] = tv->c;
        break;
      case RateFamily::power_decay:
        j["family"] = "power_decay";
        j["beta"] = tv->exponent;
        j["c"] = tv->c;
        break;
    }
  } else {
    const auto& ge = std::get<GilbertElliottChannel>(m.channel);
    j["variant"] = "gilbert_elliott";
    j["q_gb"] = ge.q_gb;
    j["q_bg"] = ge.q_bg;
    j["p_good"] = ge.p_good;
    j["p_bad"] = ge.p_bad;
    switch (ge.initial) {
      case GilbertElliottChannel::Init::good: j["initial"] = "good"; break;
      case GilbertElliottChannel::Init::bad: j["initial"] = "bad"; break;
      default: j["initial"] = "stationary"; break;
    }
  }
  return j;
}

inline Json validation_to_json(const ValidationReport& r) {
  Json j;
  j["valid"] = r.valid;
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = std::move(checks);
  j["warnings"] = r.warnings;
  return j;
}

inline Json profile_to_json(const SystemProfile& p) {
  Json j;
  j["obs_index"] = p.obs_index;
  j["spectral_radius"] = p.spectral_radius;
  j["eigen_magnitudes"] = p.eigen_magnitudes;
  j["nondegenerate"] = to_string(p.nondegenerate);
  if (p.equiblocks)
    j["quasi_equiblocks"] = *p.equiblocks;
  else
    j["quasi_equiblocks"] = nullptr;
  return j;
}

inline Json verdict_to_json(const StabilityVerdict& v) {
  Json j;
  j["lower_as"] = to_string(v.lower_as);
  j["lower_absolute"] = to_string(v.lower_absolute);
  j["upper_as"] = to_string(v.upper_as);
  j["upper_absolute"] = to_string(v.upper_absolute);
  j["witness_lower"] = Json{{"test", v.witness_lower.test}, {"rule", v.witness_lower.rule}};
  j["witness_upper"] = Json{{"test", v.witness_upper.test}, {"rule", v.witness_upper.rule}};
  j["one_step"] = v.one_step;
  j["nondegenerate"] = to_string(v.nondegenerate);
  j["config_digest"] = v.config_digest;
  return j;
}

inline Json bounds_to_json(const BoundsReport& b) {
  Json j;
  j["obs_index"] = b.obs_index;
  j["M0"] = matrix_to_json(b.M0);
  j["M"] = matrix_to_json(b.M);
  j["P_bar"] = matrix_to_json(b.P_bar);
  j["J"] = matrix_to_json(b.J);
  j["H"] = matrix_to_json(b.H);
  j["jtj_condition"] = b.jtj_condition;
  j["a_lower"] = b.a_lower;
  j["tr_M"] = b.tr_M;
  j["tr_P_bar"] = b.tr_P_bar;
  Json ib = Json::array(), iu = Json::array();
  for (const auto& [c, k] : b.from_ceiling) ib.push_back(Json::array({c, k}));
  for (const auto& [c, k] : b.from_fixed_point) iu.push_back(Json::array({c, k}));
  j["I_bar"] = std::move(ib);
  j["I_under"] = std::move(iu);
  j["out_of_domain"] = b.out_of_domain;
  return j;
}

inline Json dichotomy_to_json(const DichotomyReport& r) {
  Json j;
  j["config_digest"] = r.config_digest;
  j["master_seed"] = r.master_seed;
  j["num_paths"] = r.num_paths;
  j["horizons"] = r.horizons;
  j["thresholds"] = r.thresholds;
  j["k0_fraction"] = r.k0_fraction;
  j["tr_ceiling"] = r.tr_ceiling;
  j["dichotomy_consistent"] = r.dichotomy_consistent;
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back(Json{{"threshold", c.threshold},
                         {"horizon", c.horizon},
                         {"p_exceed", c.p_exceed},
                         {"se_exceed", c.se_exceed},
                         {"p_tail_below", c.p_tail_below},
                         {"se_tail_below", c.se_tail_below},
                         {"consistent", c.consistent}});
  }
  j["cells"] = std::move(cells);
  return j;
}

inline Json consistency_to_json(const ConsistencyReport& r) {
  Json j;
  j["all_pass"] = r.all_pass;
  j["caveat"] = r.caveat;
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name},
                          {"threshold", c.threshold},
                          {"status", c.status},
                          {"detail", c.detail}});
  j["checks"] = std::move(checks);
  return j;
}

inline Json contraction_to_json(const ContractionReport& r) {
  Json j;
  j["applicable"] = r.applicable;
  j["q_hat"] = r.q_hat;
  j["max_h_ratio"] = r.max_h_ratio;
  j["pairs_used"] = r.pairs_used;
  j["pairs_skipped"] = r.pairs_skipped;
  j["window"] = r.window;
  j["contraction_ok"] = r.contraction_ok;
  j["nonexpansive_ok"] = r.nonexpansive_ok;
  return j;
}

inline Json mixing_to_json(const std::vector<MixingEstimate>& v) {
  Json arr = Json::array();
  for (const auto& e : v)
    arr.push_back(Json{{"lag", e.lag},
                       {"f_hat", e.f_hat},
                       {"stderr", e.stderr_f},
                       {"pairs_admissible", e.pairs_admissible},
                       {"pairs_excluded", e.pairs_excluded},
                       {"low_confidence", e.low_confidence}});
  return arr;
}

}  // namespace lossykf
