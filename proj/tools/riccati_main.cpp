#include <optional>
#include <string>

#include <CLI11.hpp>

#include <riccati/riccati.hpp>

namespace {

riccati::ProblemConfig load_with_overrides(const std::string& path,
                                           std::optional<double> delta,
                                           std::optional<long long> steps,
                                           const std::string& strategy,
                                           bool refine_escape) {
  riccati::ProblemConfig cfg = riccati::load_config(path);
  if (delta) {
    if (*delta <= 0.0) throw riccati::ParseError("--delta must be positive");
    cfg.delta = *delta;
  }
  if (steps) {
    if (*steps < 1) throw riccati::ParseError("--steps must be at least 1");
    cfg.K = *steps;
  }
  if (!strategy.empty()) {
    if (strategy == "linear")
      cfg.strategy = riccati::BuildStrategy::Linear;
    else if (strategy == "doubling")
      cfg.strategy = riccati::BuildStrategy::Doubling;
    else
      throw riccati::ParseError("--strategy must be linear or doubling");
  }
  if (refine_escape) cfg.refine_escape = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Fundamental-solution semigroup solver for differential Riccati "
      "equations"};
  app.require_subcommand(1);

  std::string config_path, table_path, out_path, p0_arg;
  std::optional<double> delta;
  std::optional<long long> steps;
  std::string strategy;
  bool refine_escape = false;

  auto add_grid_flags = [&](CLI::App* cmd) {
    cmd->add_option("--delta", delta, "override grid step");
    cmd->add_option("--steps", steps, "override grid step count K");
    cmd->add_option("--strategy", strategy,
                    "table propagation strategy: linear|doubling");
  };

  CLI::App* build = app.add_subcommand("build", "build and persist a kernel table");
  build->add_option("--config", config_path, "problem config (JSON)")->required();
  build->add_option("--out", out_path, "output table path")->required();
  add_grid_flags(build);

  CLI::App* solve = app.add_subcommand("solve", "solve from a persisted table");
  solve->add_option("--table", table_path, "kernel table path")->required();
  solve->add_option("--p0", p0_arg, "initial condition: name or inline [[...]]")
      ->required();
  solve->add_option("--out", out_path, "output CSV path")->required();
  solve->add_option("--config", config_path,
                    "config providing named initial conditions");
  solve->add_flag("--refine-escape", refine_escape,
                  "bisect the escape bracket with fresh kernels");

  CLI::App* compare = app.add_subcommand("compare",
                                         "compare all three solution methods");
  compare->add_option("--config", config_path, "problem config (JSON)")->required();
  compare->add_option("--p0", p0_arg, "initial condition: name or inline [[...]]")
      ->required();
  compare->add_option("--out", out_path, "output CSV path")->required();
  add_grid_flags(compare);

  CLI::App* validate = app.add_subcommand("validate", "run the property suite");
  validate->add_option("--config", config_path, "problem config (JSON)")->required();
  add_grid_flags(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return riccati::run_guarded([&]() -> int {
    if (build->parsed()) {
      const auto cfg = load_with_overrides(config_path, delta, steps, strategy,
                                           refine_escape);
      return riccati::cmd_build(cfg, out_path);
    }
    if (solve->parsed()) {
      std::optional<riccati::ProblemConfig> cfg;
      if (!config_path.empty()) cfg = riccati::load_config(config_path);
      return riccati::cmd_solve(table_path, p0_arg, out_path, cfg,
                                refine_escape);
    }
    if (compare->parsed()) {
      const auto cfg = load_with_overrides(config_path, delta, steps, strategy,
                                           refine_escape);
      return riccati::cmd_compare(cfg, p0_arg, out_path);
    }
    const auto cfg = load_with_overrides(config_path, delta, steps, strategy,
                                         refine_escape);
    return riccati::cmd_validate(cfg);
  });
}
