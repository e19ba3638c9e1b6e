/*
* Copyright (C) 2026 t2dmpc contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "t2dmpc/config.hpp"
#include "t2dmpc/runner.hpp"
#include "t2dmpc/version.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;

  std::optional<double> ueq;
  std::optional<double> resolution;
  std::optional<int> runs;
  std::optional<double> phi;
  std::optional<std::uint64_t> seed;
};

t2dmpc::RunConfig build_config(const CliArgs& args, t2dmpc::Mode mode) {
  using namespace t2dmpc;
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config(args.config_path);
  for (const std::string& kv : args.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
  }
  cfg.mode = mode;
  if (args.ueq) cfg.ueq = *args.ueq;
  if (args.resolution) {
    if (!(*args.resolution > 0.0)) throw ConfigError("--resolution must be > 0");
    cfg.dosemin_resolution = *args.resolution;
  }
  if (args.runs) {
    if (*args.runs < 1) throw ConfigError("--runs must be >= 1");
    cfg.runs = *args.runs;
  }
  if (args.phi) {
    if (!(*args.phi >= 0.0) || !(*args.phi < 1.0)) throw ConfigError("--phi must be in [0, 1)");
    cfg.phi = *args.phi;
  }
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace t2dmpc;

  CLI::App app{std::string("t2dmpc ") + kVersion +
               " - long-term diabetes progression simulation and exercise recommendation"};
  app.require_subcommand(1);
  app.fallthrough(true);

  CliArgs args;
  app.add_option("--config", args.config_path, "config file (key = value lines)");
  app.add_option("--out", args.out_dir, "output directory (default '.')");
  app.add_option("--set", args.sets, "override a config key, e.g. --set lambda=600")
      ->take_all();

  CLI::App* openloop = app.add_subcommand("openloop", "simulate with no exercise");
  CLI::App* feedforward =
      app.add_subcommand("feedforward", "simulate a constant equivalent input");
  CLI::App* mpc = app.add_subcommand("mpc", "closed-loop receding-horizon run");
  CLI::App* dosemin =
      app.add_subcommand("dosemin", "smallest constant dose that prevents progression");
  CLI::App* montecarlo = app.add_subcommand("montecarlo", "perturbation campaign");
  CLI::App* dosemap = app.add_subcommand("dosemap", "convert an equivalent input to a prescription");

  double ueq = 0.0, resolution = 0.0, phi = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
  CLI::Option* ff_ueq = feedforward->add_option("--ueq", ueq, "equivalent input");
  CLI::Option* dm_ueq = dosemap->add_option("--ueq", ueq, "equivalent input");
  CLI::Option* opt_res = dosemin->add_option("--resolution", resolution, "dose grid step");
  CLI::Option* opt_runs = montecarlo->add_option("--runs", runs, "number of runs");
  CLI::Option* opt_phi = montecarlo->add_option("--phi", phi, "relative perturbation bound");
  CLI::Option* opt_seed = montecarlo->add_option("--seed", seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (ff_ueq->count() || dm_ueq->count()) args.ueq = ueq;
  if (opt_res->count()) args.resolution = resolution;
  if (opt_runs->count()) args.runs = runs;
  if (opt_phi->count()) args.phi = phi;
  if (opt_seed->count()) args.seed = seed;

  Mode mode = Mode::Mpc;
  if (openloop->parsed()) mode = Mode::OpenLoop;
  else if (feedforward->parsed()) mode = Mode::Feedforward;
  else if (mpc->parsed()) mode = Mode::Mpc;
  else if (dosemin->parsed()) mode = Mode::DoseMin;
  else if (montecarlo->parsed()) mode = Mode::MonteCarlo;
  else if (dosemap->parsed()) mode = Mode::DoseMap;

  RunConfig cfg;
  try {
    cfg = build_config(args, mode);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  return run_mode(cfg, std::cout, std::cerr);
}
