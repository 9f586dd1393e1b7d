#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lossykf/json_io.hpp"

namespace lossykf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int horizon = 1000;
  int num_paths = 200;
  std::uint64_t master_seed = 1;
  std::vector<double> thresholds;  // "C_list"
  double k0_fraction = 0.5;
  std::vector<int> horizons;       // ladder; empty means default
  int export_traces = 0;
  bool covariance_only = true;
};

struct OutputConfig {
  std::string directory = "out";
  bool json = true;
  bool csv = true;
};

struct Tolerances {
  double rank_tol = 1e-9;
  double mag_tol = 1e-8;
  double cond_cap = 1e8;
  double dare_tol = 1e-12;
  int dare_max_iter = 100000;
  double validate_tol = 1e-9;
};

struct ExperimentConfig {
  LtiSystem system;
  DropModel channel;
  RunConfig run;
  OutputConfig output;
  Tolerances tol;
};

inline ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    if (!j.contains("system")) throw ConfigError("config: missing \"system\"");
    const Json& sj = j.at("system");
    if (sj.contains("file")) {
      std::filesystem::path p = sj.at("file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p);
      if (!in) throw ConfigError("config: cannot open system file " + p.string());
      Json sys_json = Json::parse(in);
      cfg.system = system_from_json(sys_json);
    } else {
      cfg.system = system_from_json(sj);
    }

    if (!j.contains("channel")) throw ConfigError("config: missing \"channel\"");
    cfg.channel = channel_from_json(j.at("channel"));

    if (j.contains("run")) {
      const Json& r = j.at("run");
      cfg.run.horizon = r.value("horizon", cfg.run.horizon);
      cfg.run.num_paths = r.value("num_paths", cfg.run.num_paths);
      cfg.run.master_seed = r.value("master_seed", cfg.run.master_seed);
      if (r.contains("C_list")) cfg.run.thresholds = r.at("C_list").get<std::vector<double>>();
      cfg.run.k0_fraction = r.value("k0_fraction", cfg.run.k0_fraction);
      if (r.contains("horizons")) cfg.run.horizons = r.at("horizons").get<std::vector<int>>();
      cfg.run.export_traces = r.value("export_traces", cfg.run.export_traces);
      cfg.run.covariance_only = r.value("covariance_only", cfg.run.covariance_only);
    }
    if (j.contains("output")) {
      const Json& o = j.at("output");
      cfg.output.directory = o.value("directory", cfg.output.directory);
      if (o.contains("formats")) {
        cfg.output.json = cfg.output.csv = false;
        for (const auto& f : o.at("formats")) {
          if (f == "json") cfg.output.json = true;
          else if (f == "csv") cfg.output.csv = true;
          else throw ConfigError("config: unknown output format " + f.dump());
        }
      }
    }
    if (j.contains("tolerances")) {
      const Json& t = j.at("tolerances");
      cfg.tol.rank_tol = t.value("rank_tol", cfg.tol.rank_tol);
      cfg.tol.mag_tol = t.value("mag_tol", cfg.tol.mag_tol);
      cfg.tol.cond_cap = t.value("cond_cap", cfg.tol.cond_cap);
      cfg.tol.dare_tol = t.value("dare_tol", cfg.tol.dare_tol);
      cfg.tol.dare_max_iter = t.value("dare_max_iter", cfg.tol.dare_max_iter);
      cfg.tol.validate_tol = t.value("validate_tol", cfg.tol.validate_tol);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (cfg.run.horizon < 1) throw ConfigError("config: run.horizon must be >= 1");
  if (cfg.run.num_paths < 1) throw ConfigError("config: run.num_paths must be >= 1");
  if (cfg.run.thresholds.empty()) throw ConfigError("config: run.C_list must be non-empty");
  if (!std::is_sorted(cfg.run.thresholds.begin(), cfg.run.thresholds.end()))
    throw ConfigError("config: run.C_list must be sorted ascending");
  if (!(cfg.run.k0_fraction > 0.0 && cfg.run.k0_fraction <= 1.0))
    throw ConfigError("config: run.k0_fraction must lie in (0, 1]");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path());
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["system"] = system_to_json(cfg.system);
  j["channel"] = channel_to_json(cfg.channel);
  j["run"] = Json{{"horizon", cfg.run.horizon},
                  {"num_paths", cfg.run.num_paths},
                  {"master_seed", cfg.run.master_seed},
                  {"C_list", cfg.run.thresholds},
                  {"k0_fraction", cfg.run.k0_fraction},
                  {"horizons", cfg.run.horizons},
                  {"export_traces", cfg.run.export_traces},
                  {"covariance_only", cfg.run.covariance_only}};
  Json formats = Json::array();
  if (cfg.output.json) formats.push_back("json");
  if (cfg.output.csv) formats.push_back("csv");
  j["output"] = Json{{"directory", cfg.output.directory}, {"formats", formats}};
  j["tolerances"] = Json{{"rank_tol", cfg.tol.rank_tol},
                         {"mag_tol", cfg.tol.mag_tol},
                         {"cond_cap", cfg.tol.cond_cap},
                         {"dare_tol", cfg.tol.dare_tol},
                         {"dare_max_iter", cfg.tol.dare_max_iter},
                         {"validate_tol", cfg.tol.validate_tol}};
  return j;
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline std::string fmt17(double x) {
  char buf[40];
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Validation gate shared by the commands: returns false (and prints the
// report to stderr) when the system fails its checks.
inline bool gate_system(const ExperimentConfig& cfg, bool quiet) {
  ValidationReport rep = validate_system(cfg.system, cfg.tol.validate_tol);
  if (!rep.valid) {
    std::cerr << "invalid system:\n";
    for (const auto& c : rep.checks)
      if (!c.pass) std::cerr << "  [fail] " << c.name << ": " << c.detail << "\n";
    return false;
  }
  if (!quiet)
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  if (!quiet && cfg.channel.clamp_note) std::cerr << "warning: " << *cfg.channel.clamp_note << "\n";
  return true;
}

inline std::string trace_csv(const CovTrace& tr) {
  std::string csv = "k,gamma,trace_P,log2_trace_P,arrivals_so_far,longest_outage_so_far\n";
  int arrivals = 0, longest = 0, run = 0;
  for (int k = 1; k <= tr.horizon(); ++k) {
    const int gamma = tr.arrivals.bits[k - 1];
    arrivals += gamma;
    run = gamma ? 0 : run + 1;
    longest = std::max(longest, run);
    csv += std::to_string(k);
    csv += ',';
    csv += std::to_string(gamma);
    csv += ',';
    csv += fmt17(tr.trace_value[k - 1]);
    csv += ',';
    csv += fmt17(tr.trace_log2[k - 1]);
    csv += ',';
    csv += std::to_string(arrivals);
    csv += ',';
    csv += std::to_string(longest);
    csv += '\n';
  }
  return csv;
}

}  // namespace detail

// Exit codes shared by the commands: 0 success (verdicts may still be
// indeterminate), 1 I/O or config failure, 2 invalid system; cmd_verify
// additionally returns 3 when a property check fails.
inline int cmd_analyze(const ExperimentConfig& cfg, bool quiet = false) {
  if (!detail::gate_system(cfg, quiet)) return 2;
  const SystemProfile prof =
      profile_system(cfg.system, cfg.tol.validate_tol, cfg.tol.mag_tol, cfg.tol.cond_cap);
  const SeriesClass series = classify_series(cfg.channel);
  StabilityVerdict v =
      stability_verdict(prof, series, config_digest(cfg.system, cfg.channel));

  Json j;
  j["system_profile"] = profile_to_json(prof);
  j["series"] = Json{{"family", series.family},
                     {"monotone", series.monotone},
                     {"note", series.note}};
  j["verdict"] = verdict_to_json(v);

  std::filesystem::create_directories(cfg.output.directory);
  detail::write_text(std::filesystem::path(cfg.output.directory) / "verdict.json", j.dump(2) + "\n");
  if (!quiet)
    std::cerr << "verdict: lower_as=" << to_string(v.lower_as)
              << " upper_as=" << to_string(v.upper_as) << "\n";
  return 0;
}

inline int cmd_bounds(const ExperimentConfig& cfg, bool quiet = false) {
  if (!detail::gate_system(cfg, quiet)) return 2;
  BoundsReport rep = build_bounds(cfg.system, cfg.run.thresholds, cfg.tol.rank_tol,
                                  cfg.tol.dare_tol, cfg.tol.dare_max_iter);
  std::filesystem::create_directories(cfg.output.directory);
  detail::write_text(std::filesystem::path(cfg.output.directory) / "bounds.json",
                     bounds_to_json(rep).dump(2) + "\n");
  if (!quiet && !rep.out_of_domain.empty())
    std::cerr << "note: " << rep.out_of_domain.size()
              << " threshold(s) below Tr(M) are out of the outage-map domain\n";
  return 0;
}

inline int cmd_simulate(const ExperimentConfig& cfg, bool quiet = false) {
  if (!detail::gate_system(cfg, quiet)) return 2;
  DichotomyOptions opts;
  opts.horizons = cfg.run.horizons;
  opts.k0_fraction = cfg.run.k0_fraction;
  DichotomyReport rep =
      dichotomy_experiment(cfg.system, cfg.channel, cfg.run.horizon, cfg.run.num_paths,
                           cfg.run.thresholds, cfg.run.master_seed, opts);

  const std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  if (cfg.output.json)
    detail::write_text(dir / "dichotomy.json", dichotomy_to_json(rep).dump(2) + "\n");
  if (cfg.output.csv) {
    std::string csv = "C,horizon,p_exceed,stderr_exceed,p_tail,stderr_tail\n";
    for (const auto& c : rep.cells) {
      csv += detail::fmt17(c.threshold);
      csv += ',';
      csv += std::to_string(c.horizon);
      csv += ',';
      csv += detail::fmt17(c.p_exceed);
      csv += ',';
      csv += detail::fmt17(c.se_exceed);
      csv += ',';
      csv += detail::fmt17(c.p_tail_below);
      csv += ',';
      csv += detail::fmt17(c.se_tail_below);
      csv += '\n';
    }
    detail::write_text(dir / "dichotomy.csv", csv);
  }

  const int exported = std::min(cfg.run.export_traces, cfg.run.num_paths);
  if (exported > 0) {
    RunOptions ropts;
    ropts.covariance_only = cfg.run.covariance_only;
    ropts.track_window_bound = false;
    for (int p = 0; p < exported; ++p) {
      CovTrace tr = run_path(cfg.system, cfg.channel, cfg.run.horizon, cfg.run.master_seed,
                             static_cast<std::uint64_t>(p), ropts);
      char name[32];
      std::snprintf(name, sizeof(name), "trace_%04d.csv", p);
      detail::write_text(dir / name, detail::trace_csv(tr));
    }
  }
  if (!quiet)
    std::cerr << "simulated " << cfg.run.num_paths << " paths, horizon " << cfg.run.horizon
              << (rep.dichotomy_consistent ? "; estimates consistent with a zero-one split"
                                           : "; estimates not yet at a zero-one split")
              << "\n";
  return 0;
}

// Property battery over the configured system and channel; prints one
// line per check.
inline int cmd_verify(const ExperimentConfig& cfg, bool quiet = false) {
  if (!detail::gate_system(cfg, quiet)) return 2;
  const LtiSystem& sys = cfg.system;
  const std::uint64_t seed = cfg.run.master_seed;
  Json results = Json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool pass, const std::string& det) {
    all = all && pass;
    results.push_back(Json{{"name", name}, {"pass", pass}, {"detail", det}});
    std::cout << (pass ? "[ok]   " : "[FAIL] ") << name << (det.empty() ? "" : ": " + det)
              << "\n";
  };

  const int io = observability_index(sys, cfg.tol.rank_tol);
  const DareSolution dare = solve_dare(sys, cfg.tol.dare_tol, cfg.tol.dare_max_iter);
  const WindowEstimator west = window_estimator(sys, cfg.tol.rank_tol);
  const Matrix ceiling = window_bound(sys, west);

  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Matrix y = random_psd(sys.n, seed, i, 10);
      const Matrix x = y + random_psd(sys.n, seed, i, 11);
      worst = std::min({worst, min_eigenvalue(lyapunov_step(sys, x) - lyapunov_step(sys, y)),
                        min_eigenvalue(riccati_step(sys, x) - riccati_step(sys, y)),
                        min_eigenvalue(lyapunov_step(sys, x) - riccati_step(sys, x))});
    }
    check("monotone_updates", worst >= -1e-8, "worst min-eig " + detail::fmt17(worst));
  }
  {
    int t = -1;
    bool ok = true;
    try {
      t = time_to_pd(sys, 2 * sys.n * io);
    } catch (const std::exception&) {
      ok = false;
    }
    check("positive_definite_after_steps", ok, ok ? "t = " + std::to_string(t) : "no t found");
  }
  check("fixed_point_residual", dare.residual <= cfg.tol.dare_tol,
        detail::fmt17(dare.residual) + " in " + std::to_string(dare.iterations) + " iterations");
  {
    double worst_tri = 0.0, worst_cmp = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Matrix x = random_pd(sys.n, seed, i, 20);
      const Matrix y = random_pd(sys.n, seed, i, 21);
      const Matrix z = random_pd(sys.n, seed, i, 22);
      worst_tri = std::max(worst_tri, riemannian_distance(x, z) - riemannian_distance(x, y) -
                                          riemannian_distance(y, z));
      const double beta = comparability_factor(x, y);
      worst_cmp = std::min({worst_cmp, min_eigenvalue(y - beta * x),
                            min_eigenvalue(x / beta - y)});
    }
    check("metric_and_comparability", worst_tri <= 1e-9 && worst_cmp >= -1e-8,
          "triangle slack " + detail::fmt17(worst_tri) + ", order slack " +
              detail::fmt17(worst_cmp));
  }
  {
    const ContractionReport cr = estimate_contraction(sys, 2000, seed);
    check("windowed_contraction", cr.applicable && cr.contraction_ok && cr.nonexpansive_ok,
          "q_hat " + detail::fmt17(cr.q_hat) + ", max open-loop ratio " +
              detail::fmt17(cr.max_h_ratio));
  }
  check("ceiling_dominates_fixed_point", min_eigenvalue(ceiling - dare.P_bar) >= -1e-8,
        "min-eig(M - P_bar) = " + detail::fmt17(min_eigenvalue(ceiling - dare.P_bar)));
  {
    bool ok = true;
    int prev_bar = 0, prev_under = 0;
    for (int j = 0; j < 12 && ok; ++j) {
      const double c = ceiling.trace() * std::pow(1.6, j);
      const int ib = min_drops_from_ceiling(sys, ceiling, c);
      const int iu = min_drops_from_fixed_point(sys, ceiling, dare.P_bar, c);
      ok = ib <= iu && ib >= prev_bar && iu >= prev_under;
      prev_bar = ib;
      prev_under = iu;
    }
    check("outage_thresholds_ordered", ok, "");
  }
  {
    const double a = growth_floor_constant(sys, 20);
    const double rho = profile_system(sys).spectral_radius;
    bool ok = a > 0.0;
    for (int i = 0; i < 100 && ok; ++i) {
      Matrix x = random_psd(sys.n, seed, i, 30);
      for (int k = 1; k <= 20 && ok; ++k) {
        x = lyapunov_step(sys, x);
        ok = x.trace() >= a * std::pow(rho, 2.0 * k) * (1.0 - 1e-12);
      }
    }
    check("outage_growth_floor", ok, "a = " + detail::fmt17(a));
  }
  {
    RunOptions ropts;
    ropts.covariance_only = true;
    ropts.tr_ceiling = ceiling.trace();
    ropts.obs_index = io;
    bool ok = true;
    long checks_seen = 0;
    for (int p = 0; p < 100 && ok; ++p) {
      CovTrace tr = run_path(sys, cfg.channel, std::min(cfg.run.horizon, 500), seed,
                             static_cast<std::uint64_t>(p), ropts);
      for (const auto& c : tr.window_bound_checks) {
        ++checks_seen;
        ok = ok && c.satisfied;
      }
    }
    check("window_ceiling_on_paths", ok,
          std::to_string(checks_seen) + " post-window time points checked");
  }
  {
    RunOptions a, b;
    a.covariance_only = true;
    b.covariance_only = false;
    a.track_window_bound = b.track_window_bound = false;
    const int h = std::min(cfg.run.horizon, 300);
    CovTrace ta = run_path(sys, cfg.channel, h, seed, 0, a);
    CovTrace tb = run_path(sys, cfg.channel, h, seed, 0, b);
    check("covariance_mode_equivalence", ta.trace_log2 == tb.trace_log2, "");
  }

  std::filesystem::create_directories(cfg.output.directory);
  detail::write_text(std::filesystem::path(cfg.output.directory) / "verify.json",
                     Json{{"all_pass", all}, {"checks", results}}.dump(2) + "\n");
  return all ? 0 : 3;
}

}  // namespace lossykf
