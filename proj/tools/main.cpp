#include <CLI11.hpp>

#include "lossykf/commands.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  bool quiet = false;
};

int dispatch(const GlobalArgs& g, int (*cmd)(const lossykf::ExperimentConfig&, bool)) {
  try {
    lossykf::ExperimentConfig cfg = lossykf::load_config(g.config_path);
    if (g.seed_override) cfg.run.master_seed = *g.seed_override;
    if (g.out_override) cfg.output.directory = *g.out_override;
    return cmd(cfg, g.quiet);
  } catch (const lossykf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Kalman filtering over lossy packet channels: stability analysis, covariance bounds "
      "and Monte Carlo sample-path experiments"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config (JSON)")->required();
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "override run.master_seed");
  std::string out_val;
  auto* out_opt = app.add_option("--out", out_val, "override output.directory");
  app.add_flag("--quiet", g.quiet, "suppress informational messages");

  auto* analyze =
      app.add_subcommand("analyze", "series tests and per-notion stability verdicts");
  auto* bounds = app.add_subcommand(
      "bounds", "fixed point, window estimator covariance and outage thresholds");
  auto* simulate =
      app.add_subcommand("simulate", "Monte Carlo sample paths and zero-one statistics");
  auto* verify = app.add_subcommand("verify", "run the property battery on the configuration");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed_override = seed_val;
  if (*out_opt) g.out_override = out_val;

  if (analyze->parsed()) return dispatch(g, lossykf::cmd_analyze);
  if (bounds->parsed()) return dispatch(g, lossykf::cmd_bounds);
  if (simulate->parsed()) return dispatch(g, lossykf::cmd_simulate);
  if (verify->parsed()) return dispatch(g, lossykf::cmd_verify);
  return 1;
}
