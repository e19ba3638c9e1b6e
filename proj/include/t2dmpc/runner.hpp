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
#ifndef T2DMPC_RUNNER_HPP
#define T2DMPC_RUNNER_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "t2dmpc/config.hpp"
#include "t2dmpc/csv.hpp"
#include "t2dmpc/dosage.hpp"
#include "t2dmpc/integrator.hpp"
#include "t2dmpc/montecarlo.hpp"
#include "t2dmpc/mpc.hpp"

namespace t2dmpc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void write_file(const std::string& dir, const std::string& name, const std::string& body) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string render_trajectory(const Trajectory& traj) {
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  return os.str();
}

inline CampaignConfig campaign_config(const RunConfig& cfg) {
  CampaignConfig cc;
  cc.runs = cfg.runs;
  cc.phi = cfg.phi;
  cc.master_seed = cfg.seed;
  cc.perturb = cfg.perturb;
  cc.mpc = cfg.mpc;
  cc.u_bar = cfg.u_bar;
  cc.threshold_g = cfg.threshold_g;
  cc.workers = cfg.workers;
  return cc;
}

}  // namespace detail

/// Execute one configured run, write its artifacts under cfg.out_dir, and
/// report on `out`. Returns a process exit status: 0 on success, 1 on a
/// domain failure (e.g. prevention infeasible), 2 on bad usage.
inline int run_mode(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto t_begin = clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(clock::now() - t_begin).count();
  };
  auto write_manifest = [&](const std::string& what) {
    std::ostringstream timing;
    timing << "wall_time_seconds = " << format_double(elapsed_s());
    detail::write_file(cfg.out_dir, "manifest.cfg",
                       manifest_text(cfg, {what, timing.str()}));
  };

  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    switch (cfg.mode) {
      case Mode::OpenLoop: {
        const Trajectory traj =
            simulate_constant(cfg.x0, 0.0, cfg.mpc.horizon_days, cfg.mpc.step, cfg.params);
        detail::write_file(cfg.out_dir, "trajectory.csv", detail::render_trajectory(traj));
        write_manifest("mode openloop");
        out << "openloop: final G = " << format_double(traj.final_state().G) << " mg/dl ("
            << to_string(classify_outcome(traj, cfg.threshold_g)) << ")\n";
        break;
      }

      case Mode::Feedforward: {
        const double u = *cfg.ueq;
        const Trajectory traj =
            simulate_constant(cfg.x0, u, cfg.mpc.horizon_days, cfg.mpc.step, cfg.params);
        detail::write_file(cfg.out_dir, "trajectory.csv", detail::render_trajectory(traj));
        write_manifest("mode feedforward");
        out << "feedforward u_eq = " << format_double(u)
            << ": final G = " << format_double(traj.final_state().G) << " mg/dl ("
            << to_string(classify_outcome(traj, cfg.threshold_g))
            << "), effort eta = " << format_double(control_effort(traj.input)) << '\n';
        break;
      }

      case Mode::Mpc: {
        const ControlledRun run = run_receding_horizon(cfg.x0, cfg.mpc, cfg.params);
        detail::write_file(cfg.out_dir, "trajectory.csv",
                           detail::render_trajectory(run.trajectory));
        std::ostringstream inputs;
        write_inputs_csv(inputs, run);
        detail::write_file(cfg.out_dir, "inputs.csv", inputs.str());
        const DurationSchedule sched = make_schedule(run.u_seq, cfg.u_bar, cfg.mpc.period_days);
        std::ostringstream schedule;
        write_schedule_csv(schedule, sched);
        detail::write_file(cfg.out_dir, "schedule.csv", schedule.str());
        write_manifest("mode mpc");
        out << "mpc: " << run.u_seq.size() << " periods, final G = "
            << format_double(run.trajectory.final_state().G) << " mg/dl ("
            << to_string(classify_outcome(run.trajectory, cfg.threshold_g))
            << "), effort eta = "
            << format_double(control_effort(run.u_seq, cfg.mpc.period_days)) << '\n';
        break;
      }

      case Mode::DoseMin: {
        const double u_min = min_feedforward_dose(cfg.x0, cfg.params, cfg.dosemin_resolution,
                                                  cfg.mpc.horizon_days, cfg.threshold_g,
                                                  cfg.mpc.ueq_max, cfg.mpc.step);
        write_manifest("mode dosemin");
        out << format_double(u_min) << '\n';
        break;
      }

      case Mode::MonteCarlo: {
        const CampaignSummary summary =
            run_campaign(detail::campaign_config(cfg), cfg.params, cfg.x0);
        std::ostringstream campaign;
        write_campaign_csv(campaign, summary);
        detail::write_file(cfg.out_dir, "campaign.csv", campaign.str());
        std::ostringstream single;
        write_summary_csv(single, summary);
        detail::write_file(cfg.out_dir, "summary.csv", single.str());
        detail::write_file(cfg.out_dir, "summary.txt", summary_text(summary));
        write_manifest("mode montecarlo");
        out << "montecarlo: " << summary.prevented << '/' << summary.n
            << " prevented (success rate " << format_double(summary.success_rate) << ")\n";
        break;
      }

      case Mode::DoseMap: {
        const double u = *cfg.ueq;
        const double period_min = cfg.mpc.period_days * kMinutesPerDay;
        const double delta = duration_from_input(u, cfg.u_bar, period_min);
        const double weekly = delta * 7.0 / cfg.mpc.period_days;
        const double eta = u * cfg.mpc.horizon_days;
        std::ostringstream table;
        table << "dose map (u_bar = " << format_double(cfg.u_bar)
              << " %, period = " << format_double(cfg.mpc.period_days) << " d)\n"
              << "  u_eq            " << format_double(u) << '\n'
              << "  session_min     " << format_double(delta) << '\n'
              << "  weekly_min      " << format_double(weekly) << '\n'
              << "  eta_over_horizon " << format_double(eta) << " (horizon "
              << format_double(cfg.mpc.horizon_days) << " d)\n";
        detail::write_file(cfg.out_dir, "dosemap.txt", table.str());
        write_manifest("mode dosemap");
        out << table.str();
        break;
      }
    }
  } catch (const PreventionInfeasibleError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const MpcAbort& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainFailure;
  }
  return kExitOk;
}

}  // namespace t2dmpc

#endif  // T2DMPC_RUNNER_HPP
