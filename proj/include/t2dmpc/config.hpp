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
#ifndef T2DMPC_CONFIG_HPP
#define T2DMPC_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "t2dmpc/csv.hpp"
#include "t2dmpc/model.hpp"
#include "t2dmpc/montecarlo.hpp"
#include "t2dmpc/mpc.hpp"
#include "t2dmpc/version.hpp"

namespace t2dmpc {

/// Bad configuration: unknown key, malformed value, or violated invariant.
/// Maps to the CLI usage-error exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { OpenLoop, Feedforward, Mpc, DoseMin, MonteCarlo, DoseMap };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::OpenLoop: return "openloop";
    case Mode::Feedforward: return "feedforward";
    case Mode::Mpc: return "mpc";
    case Mode::DoseMin: return "dosemin";
    case Mode::MonteCarlo: return "montecarlo";
    default: return "dosemap";
  }
}

inline Mode mode_from_string(std::string_view s) {
  if (s == "openloop") return Mode::OpenLoop;
  if (s == "feedforward") return Mode::Feedforward;
  if (s == "mpc") return Mode::Mpc;
  if (s == "dosemin") return Mode::DoseMin;
  if (s == "montecarlo") return Mode::MonteCarlo;
  if (s == "dosemap") return Mode::DoseMap;
  throw ConfigError("config key 'mode': unknown mode '" + std::string(s) + "'");
}

/// Everything one run needs. Defaults reproduce the nominal experiment:
/// Table-of-constants patient, x(0) = [100, 10, 300, 0.72, 0], T = 2 d,
/// N = 20, lambda = 60, ueq_max = 3, one-year horizon, u_bar = 60%.
struct RunConfig {
  Mode mode = Mode::Mpc;
  ModelParams params;
  State x0{100.0, 10.0, 300.0, 0.72, 0.0};
  MpcConfig mpc;

  // monte carlo
  int runs = 100;
  double phi = 0.05;
  std::uint64_t seed = 42;
  int workers = 2;
  PerturbFlags perturb = all_perturb_flags();

  // dosage / classification
  double u_bar = 60.0;
  double threshold_g = 300.0;

  // mode-specific
  std::optional<double> ueq;       // feedforward / dosemap
  double dosemin_resolution = 0.1;

  std::string out_dir = ".";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double config_number(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" +
                      std::string(value) + "'");
  return v;
}

inline std::int64_t config_integer(std::string_view key, std::string_view value) {
  std::int64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" +
                      std::string(value) + "'");
  return v;
}

inline bool config_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" +
                    std::string(value) + "'");
}

struct KeyDef {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> format;
};

enum class Positivity { StrictPositive, NonNegative, Any };

inline const std::vector<KeyDef>& config_keys() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> v;

    auto num = [&v](const char* key, auto getref, Positivity pos) {
      v.push_back({key,
                   [key, getref, pos](RunConfig& c, std::string_view s) {
                     const double value = config_number(key, s);
                     if (pos == Positivity::StrictPositive && !(value > 0.0))
                       throw ConfigError("config key '" + std::string(key) + "': must be > 0");
                     if (pos == Positivity::NonNegative && !(value >= 0.0))
                       throw ConfigError("config key '" + std::string(key) + "': must be >= 0");
                     getref(c) = value;
                   },
                   [getref](const RunConfig& c) {
                     return format_double(getref(const_cast<RunConfig&>(c)));
                   }});
    };

    v.push_back({"mode",
                 [](RunConfig& c, std::string_view s) { c.mode = mode_from_string(s); },
                 [](const RunConfig& c) { return std::string(to_string(c.mode)); }});

    // model constants
    num("r0", [](RunConfig& c) -> double& { return c.params.R0; }, Positivity::StrictPositive);
    num("eg0", [](RunConfig& c) -> double& { return c.params.Eg0; }, Positivity::StrictPositive);
    num("sigma", [](RunConfig& c) -> double& { return c.params.sigma; }, Positivity::StrictPositive);
    num("alpha", [](RunConfig& c) -> double& { return c.params.alpha; }, Positivity::StrictPositive);
    num("k", [](RunConfig& c) -> double& { return c.params.k; }, Positivity::StrictPositive);
    num("d0", [](RunConfig& c) -> double& { return c.params.d0; }, Positivity::StrictPositive);
    num("c", [](RunConfig& c) -> double& { return c.params.c; }, Positivity::StrictPositive);
    num("r1r", [](RunConfig& c) -> double& { return c.params.r1r; }, Positivity::StrictPositive);
    num("r2r", [](RunConfig& c) -> double& { return c.params.r2r; }, Positivity::StrictPositive);
    num("r1a", [](RunConfig& c) -> double& { return c.params.r1a; }, Positivity::StrictPositive);
    num("r2a", [](RunConfig& c) -> double& { return c.params.r2a; }, Positivity::StrictPositive);
    num("zeta_p", [](RunConfig& c) -> double& { return c.params.zeta_p; }, Positivity::StrictPositive);
    num("k_p", [](RunConfig& c) -> double& { return c.params.k_p; }, Positivity::StrictPositive);
    num("zeta_a", [](RunConfig& c) -> double& { return c.params.zeta_a; }, Positivity::StrictPositive);
    num("k_a", [](RunConfig& c) -> double& { return c.params.k_a; }, Positivity::StrictPositive);
    num("si_target", [](RunConfig& c) -> double& { return c.params.S_I_target; },
        Positivity::StrictPositive);
    num("zeta_si", [](RunConfig& c) -> double& { return c.params.zeta_si; }, Positivity::NonNegative);
    num("k_n_si", [](RunConfig& c) -> double& { return c.params.k_n_si; }, Positivity::StrictPositive);
    num("sr", [](RunConfig& c) -> double& { return c.params.SR; }, Positivity::StrictPositive);
    num("k_il6", [](RunConfig& c) -> double& { return c.params.K_IL6; }, Positivity::StrictPositive);
    num("k_s", [](RunConfig& c) -> double& { return c.params.k_s; }, Positivity::StrictPositive);

    // initial state
    num("g0", [](RunConfig& c) -> double& { return c.x0.G; }, Positivity::NonNegative);
    num("i0", [](RunConfig& c) -> double& { return c.x0.I; }, Positivity::NonNegative);
    num("beta0", [](RunConfig& c) -> double& { return c.x0.beta; }, Positivity::NonNegative);
    num("si0", [](RunConfig& c) -> double& { return c.x0.S_I; }, Positivity::NonNegative);
    num("vl0", [](RunConfig& c) -> double& { return c.x0.Vl; }, Positivity::NonNegative);

    // integrator
    v.push_back({"method",
                 [](RunConfig& c, std::string_view s) {
                   if (s == "rk4")
                     c.mpc.step.method = Method::FixedRk4;
                   else if (s == "adaptive")
                     c.mpc.step.method = Method::AdaptiveDopri;
                   else
                     throw ConfigError("config key 'method': expected rk4 or adaptive");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.mpc.step.method == Method::FixedRk4 ? "rk4" : "adaptive");
                 }});
    num("step_days", [](RunConfig& c) -> double& { return c.mpc.step.step_days; },
        Positivity::StrictPositive);
    num("rtol", [](RunConfig& c) -> double& { return c.mpc.step.rtol; }, Positivity::StrictPositive);
    num("atol", [](RunConfig& c) -> double& { return c.mpc.step.atol; }, Positivity::StrictPositive);
    num("sample_days", [](RunConfig& c) -> double& { return c.mpc.step.sample_days; },
        Positivity::StrictPositive);

    // controller
    num("period_days", [](RunConfig& c) -> double& { return c.mpc.period_days; },
        Positivity::StrictPositive);
    v.push_back({"window_periods",
                 [](RunConfig& c, std::string_view s) {
                   const auto n = config_integer("window_periods", s);
                   if (n < 1) throw ConfigError("config key 'window_periods': must be >= 1");
                   c.mpc.window_periods = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.mpc.window_periods); }});
    num("lambda", [](RunConfig& c) -> double& { return c.mpc.lambda; }, Positivity::NonNegative);
    num("ueq_max", [](RunConfig& c) -> double& { return c.mpc.ueq_max; }, Positivity::NonNegative);
    num("horizon_days", [](RunConfig& c) -> double& { return c.mpc.horizon_days; },
        Positivity::StrictPositive);
    v.push_back({"grid_points",
                 [](RunConfig& c, std::string_view s) {
                   const auto n = config_integer("grid_points", s);
                   if (n < 2) throw ConfigError("config key 'grid_points': must be >= 2");
                   c.mpc.grid_points = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.mpc.grid_points); }});
    num("refine_tol", [](RunConfig& c) -> double& { return c.mpc.refine_tol; },
        Positivity::StrictPositive);
    v.push_back({"solver_workers",
                 [](RunConfig& c, std::string_view s) {
                   const auto n = config_integer("solver_workers", s);
                   if (n < 1) throw ConfigError("config key 'solver_workers': must be >= 1");
                   c.mpc.solver_workers = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.mpc.solver_workers); }});

    // dosage / classification
    num("u_bar", [](RunConfig& c) -> double& { return c.u_bar; }, Positivity::StrictPositive);
    num("threshold_g", [](RunConfig& c) -> double& { return c.threshold_g; },
        Positivity::StrictPositive);
    v.push_back({"ueq",
                 [](RunConfig& c, std::string_view s) {
                   const double value = config_number("ueq", s);
                   if (!(value >= 0.0)) throw ConfigError("config key 'ueq': must be >= 0");
                   c.ueq = value;
                 },
                 [](const RunConfig& c) {
                   return c.ueq ? format_double(*c.ueq) : std::string();
                 }});
    num("dosemin_resolution", [](RunConfig& c) -> double& { return c.dosemin_resolution; },
        Positivity::StrictPositive);

    // monte carlo
    v.push_back({"runs",
                 [](RunConfig& c, std::string_view s) {
                   const auto n = config_integer("runs", s);
                   if (n < 1) throw ConfigError("config key 'runs': must be >= 1");
                   c.runs = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.runs); }});
    v.push_back({"phi",
                 [](RunConfig& c, std::string_view s) {
                   const double value = config_number("phi", s);
                   if (!(value >= 0.0) || !(value < 1.0))
                     throw ConfigError("config key 'phi': must be in [0, 1)");
                   c.phi = value;
                 },
                 [](const RunConfig& c) { return format_double(c.phi); }});
    v.push_back({"seed",
                 [](RunConfig& c, std::string_view s) {
                   std::uint64_t value = 0;
                   const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
                   if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
                     throw ConfigError("config key 'seed': expected an unsigned integer");
                   c.seed = value;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    v.push_back({"workers",
                 [](RunConfig& c, std::string_view s) {
                   const auto n = config_integer("workers", s);
                   if (n < 1) throw ConfigError("config key 'workers': must be >= 1");
                   c.workers = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.workers); }});
    for (std::size_t i = 0; i < kNumPerturbTargets; ++i) {
      const std::string key = std::string("perturb_") + kPerturbTargetNames[i];
      v.push_back({key,
                   [key, i](RunConfig& c, std::string_view s) { c.perturb[i] = config_bool(key, s); },
                   [i](const RunConfig& c) { return c.perturb[i] ? "true" : "false"; }});
    }

    v.push_back({"out_dir",
                 [](RunConfig& c, std::string_view s) { c.out_dir = std::string(s); },
                 [](const RunConfig& c) { return c.out_dir; }});
    return v;
  }();
  return defs;
}

}  // namespace detail

/// Apply one `key = value` override.
inline void apply_override(RunConfig& cfg, std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  for (const auto& def : detail::config_keys()) {
    if (def.key == key) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Apply a whole config document: one `key = value` per line, '#' comments.
inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_override(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

/// Read and apply a config file on top of the defaults.
inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

/// Cross-field checks that individual setters cannot see.
inline void validate_config(const RunConfig& cfg) {
  try {
    cfg.params.validate();
    cfg.mpc.validate();
    cfg.x0.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if ((cfg.mode == Mode::Feedforward || cfg.mode == Mode::DoseMap) && !cfg.ueq)
    throw ConfigError(std::string("mode '") + to_string(cfg.mode) +
                      "' requires key 'ueq' (or --ueq)");
  if (cfg.mode == Mode::Feedforward && cfg.ueq && *cfg.ueq > cfg.mpc.ueq_max + 1e-12)
    throw ConfigError("config key 'ueq': exceeds ueq_max");
}

/// Manifest: a comment block (version plus caller-supplied lines such as
/// timings) followed by the complete effective configuration. Feeding the
/// manifest back through --config reproduces the run byte for byte.
inline std::string manifest_text(const RunConfig& cfg,
                                 const std::vector<std::string>& comments = {}) {
  std::ostringstream os;
  os << "# t2dmpc " << kVersion << " run manifest\n";
  for (const std::string& c : comments) os << "# " << c << '\n';
  for (const auto& def : detail::config_keys()) {
    const std::string value = def.format(cfg);
    if (value.empty()) continue;  // unset optional
    os << def.key << " = " << value << '\n';
  }
  return os.str();
}

}  // namespace t2dmpc

#endif  // T2DMPC_CONFIG_HPP
