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
#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "t2dmpc/config.hpp"
#include "t2dmpc/csv.hpp"
#include "t2dmpc/montecarlo.hpp"
#include "t2dmpc/runner.hpp"

using namespace t2dmpc;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const char* tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   (std::string("t2dmpc_test_") + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("doubles survive the CSV format exactly") {
  SplitMix64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    double v = (rng.next_unit() - 0.5) * std::pow(10.0, rng.next_uniform(-12, 12));
    if (i % 7 == 0) v = std::floor(v);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.1) == "1.1");
  CHECK(parse_double(format_double(5e-4)) == 5e-4);
  CHECK_THROWS(parse_double("abc"));
  CHECK_THROWS(parse_double("1.0x"));
}

TEST_CASE("trajectory CSV round trip") {
  SplitMix64 rng(7);
  Trajectory traj;
  traj.input = InputProfile::constant(rng.next_unit(), 0.0, 10.0);
  for (int i = 0; i <= 10; ++i) {
    traj.t.push_back(static_cast<double>(i));
    traj.x.push_back({rng.next_uniform(0, 600), rng.next_uniform(0, 50), rng.next_uniform(0, 5e3),
                      rng.next_uniform(0, 1), rng.next_uniform(0, 1e7)});
  }
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::istringstream is(os.str());
  const TrajectoryRows rows = read_trajectory_csv(is);
  REQUIRE(rows.t.size() == traj.t.size());
  for (std::size_t i = 0; i < rows.t.size(); ++i) {
    CHECK(rows.t[i] == traj.t[i]);
    CHECK(rows.x[i].G == traj.x[i].G);
    CHECK(rows.x[i].I == traj.x[i].I);
    CHECK(rows.x[i].beta == traj.x[i].beta);
    CHECK(rows.x[i].S_I == traj.x[i].S_I);
    CHECK(rows.x[i].Vl == traj.x[i].Vl);
    CHECK(rows.u[i] == traj.input.segments[0].u_eq);
  }
  CHECK(os.str().substr(0, std::string(kTrajectoryHeader).size()) == kTrajectoryHeader);
}

TEST_CASE("inputs and schedule CSV round trips") {
  SplitMix64 rng(13);
  ControlledRun run;
  for (int k = 0; k < 12; ++k) {
    run.u_seq.push_back(rng.next_uniform(0, 3));
    run.steps.push_back({k, 2.0 * k, run.u_seq.back(), rng.next_uniform(1e5, 1e7),
                         rng.next_uniform(90, 300), 40 + k});
  }
  std::ostringstream os;
  write_inputs_csv(os, run);
  std::istringstream is(os.str());
  const auto rows = read_inputs_csv(is);
  REQUIRE(rows.size() == run.steps.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].k == run.steps[i].k);
    CHECK(rows[i].t_days == run.steps[i].t_days);
    CHECK(rows[i].u_star == run.steps[i].u_star);
    CHECK(rows[i].predicted_cost == run.steps[i].predicted_cost);
    CHECK(rows[i].g_at_start == run.steps[i].g_at_start);
  }

  const DurationSchedule sched = make_schedule(run.u_seq, 60.0, 2.0);
  std::ostringstream os2;
  write_schedule_csv(os2, sched);
  std::istringstream is2(os2.str());
  const DurationSchedule back = read_schedule_csv(is2);
  REQUIRE(back.delta_min.size() == sched.delta_min.size());
  for (std::size_t i = 0; i < back.delta_min.size(); ++i) {
    CHECK(back.t_days[i] == sched.t_days[i]);
    CHECK(back.delta_min[i] == sched.delta_min[i]);
    CHECK(back.weekly_min[i] == sched.weekly_min[i]);
  }
}

TEST_CASE("campaign CSV round trip") {
  CampaignSummary s;
  s.n = 3;
  SplitMix64 rng(5);
  for (int k = 0; k < 3; ++k) {
    RunRecord r;
    r.run = k;
    r.seed = rng.next();
    r.outcome = k == 1 ? RunOutcome::Progressed : RunOutcome::Prevented;
    r.final_state = {rng.next_uniform(90, 610), 1, rng.next_uniform(0, 8000), 0.03, 1e6};
    r.eta = rng.next_uniform(0, 400);
    r.peak_weekly_min = rng.next_uniform(0, 500);
    s.records.push_back(r);
  }
  std::ostringstream os;
  write_campaign_csv(os, s);
  std::istringstream is(os.str());
  const auto rows = read_campaign_csv(is);
  REQUIRE(rows.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(rows[k].run == k);
    CHECK(rows[k].seed == s.records[k].seed);
    CHECK(rows[k].outcome == to_string(s.records[k].outcome));
    CHECK(rows[k].g_final == s.records[k].final_state.G);
    CHECK(rows[k].beta_final == s.records[k].final_state.beta);
    CHECK(rows[k].eta == s.records[k].eta);
    CHECK(rows[k].peak_weekly_min == s.records[k].peak_weekly_min);
  }
}

TEST_CASE("empty config keeps the nominal defaults") {
  RunConfig cfg;
  apply_config_text(cfg, "# nothing but comments\n\n");
  CHECK(cfg.x0.G == 100.0);
  CHECK(cfg.x0.I == 10.0);
  CHECK(cfg.x0.beta == 300.0);
  CHECK(cfg.x0.S_I == 0.72);
  CHECK(cfg.x0.Vl == 0.0);
  CHECK(cfg.mpc.period_days == 2.0);
  CHECK(cfg.mpc.lambda == 60.0);
  CHECK(cfg.mpc.ueq_max == 3.0);
  CHECK(cfg.mpc.horizon_days == 365.0);
  CHECK(cfg.mpc.window_periods == 10);  // 20-day prediction window
  CHECK(cfg.mpc.step.step_days == 5e-4);
  CHECK(cfg.u_bar == 60.0);
  CHECK(cfg.runs == 100);
  CHECK(cfg.phi == 0.05);
  CHECK(cfg.params.R0 == 864.0);
  CHECK(cfg.params.k_s == Approx(-std::log(0.8) / 80640.0).epsilon(1e-15));
}

TEST_CASE("single override leaves everything else untouched") {
  RunConfig cfg;
  apply_config_text(cfg, "lambda = 600\n");
  CHECK(cfg.mpc.lambda == 600.0);
  CHECK(cfg.mpc.period_days == 2.0);
  CHECK(cfg.params.R0 == 864.0);
}

TEST_CASE("config errors name the offending key") {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "k_s = abc\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("k_s") != std::string::npos);
  }
  try {
    apply_override(cfg, "no_such_key", "1");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_override(cfg, "r0", "-5"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "phi", "1.5"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "runs", "0"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "just a line without equals\n"), ConfigError);
}

TEST_CASE("perturbation flags are config keys") {
  RunConfig cfg;
  apply_config_text(cfg, "perturb_k_s = false\nperturb_vl0 = false\n");
  CHECK_FALSE(cfg.perturb[20]);  // k_s
  CHECK_FALSE(cfg.perturb[25]);  // vl0
  CHECK(cfg.perturb[0]);
}

TEST_CASE("manifest is a parseable fixpoint") {
  RunConfig cfg;
  apply_config_text(cfg, "lambda = 600\nueq = 1.25\nmode = feedforward\nseed = 77\n");
  const std::string m1 = manifest_text(cfg, {"wall_time_seconds = 1.5"});
  RunConfig back;
  apply_config_text(back, m1);
  const std::string m2 = manifest_text(back);
  // comments differ; the key-value body must not
  const auto body = [](const std::string& s) {
    std::string out;
    std::istringstream is(s);
    std::string line;
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') out += line + '\n';
    return out;
  };
  CHECK(body(m1) == body(m2));
  CHECK(back.mpc.lambda == 600.0);
  CHECK(back.mode == Mode::Feedforward);
  REQUIRE(back.ueq.has_value());
  CHECK(*back.ueq == 1.25);
  CHECK(back.seed == 77);
}

TEST_CASE("mode-specific required keys") {
  RunConfig cfg;
  cfg.mode = Mode::Feedforward;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);  // ueq missing
  cfg.ueq = 1.1;
  CHECK_NOTHROW(validate_config(cfg));
  cfg.ueq = 5.0;  // beyond the input bound
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.mode = Mode::DoseMap;
  CHECK_NOTHROW(validate_config(cfg));  // dosemap maps any nonnegative dose
}

TEST_CASE("run_mode writes artifacts and reruns from its manifest byte-identically") {
  RunConfig cfg;
  cfg.mode = Mode::Mpc;
  cfg.mpc.horizon_days = 8.0;
  cfg.mpc.window_periods = 3;
  cfg.mpc.grid_points = 7;
  const auto dir1 = fresh_dir("mpc1");
  const auto dir2 = fresh_dir("mpc2");
  cfg.out_dir = dir1.string();

  std::ostringstream out, err;
  REQUIRE(run_mode(cfg, out, err) == kExitOk);
  REQUIRE(std::filesystem::exists(dir1 / "trajectory.csv"));
  REQUIRE(std::filesystem::exists(dir1 / "inputs.csv"));
  REQUIRE(std::filesystem::exists(dir1 / "schedule.csv"));
  REQUIRE(std::filesystem::exists(dir1 / "manifest.cfg"));

  RunConfig again;
  apply_config_text(again, slurp(dir1 / "manifest.cfg"));
  again.out_dir = dir2.string();
  std::ostringstream out2, err2;
  REQUIRE(run_mode(again, out2, err2) == kExitOk);
  CHECK(slurp(dir1 / "trajectory.csv") == slurp(dir2 / "trajectory.csv"));
  CHECK(slurp(dir1 / "inputs.csv") == slurp(dir2 / "inputs.csv"));
  CHECK(slurp(dir1 / "schedule.csv") == slurp(dir2 / "schedule.csv"));

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("run_mode exit codes") {
  std::ostringstream out, err;

  SECTION("usage error: feedforward without a dose") {
    RunConfig cfg;
    cfg.mode = Mode::Feedforward;
    cfg.out_dir = fresh_dir("ff").string();
    CHECK(run_mode(cfg, out, err) == kExitUsage);
    std::filesystem::remove_all(cfg.out_dir);
  }

  SECTION("domain failure: prevention infeasible") {
    RunConfig cfg;
    cfg.mode = Mode::DoseMin;
    cfg.threshold_g = 50.0;  // below both attractors: nothing can reach it
    cfg.mpc.horizon_days = 4.0;
    cfg.dosemin_resolution = 1.5;
    cfg.out_dir = fresh_dir("dm").string();
    CHECK(run_mode(cfg, out, err) == kExitDomainFailure);
    CHECK(err.str().find("infeasible") != std::string::npos);
    std::filesystem::remove_all(cfg.out_dir);
  }

  SECTION("successful openloop run") {
    RunConfig cfg;
    cfg.mode = Mode::OpenLoop;
    cfg.mpc.horizon_days = 3.0;
    cfg.out_dir = fresh_dir("ol").string();
    CHECK(run_mode(cfg, out, err) == kExitOk);
    CHECK(out.str().find("openloop") != std::string::npos);
    std::filesystem::remove_all(cfg.out_dir);
  }

  SECTION("dosemap prints the conversion table") {
    RunConfig cfg;
    cfg.mode = Mode::DoseMap;
    cfg.ueq = 1.5;
    cfg.out_dir = fresh_dir("dmap").string();
    CHECK(run_mode(cfg, out, err) == kExitOk);
    CHECK(out.str().find("session_min") != std::string::npos);
    CHECK(out.str().find("72") != std::string::npos);  // 1.5 * 2880 / 60
    std::filesystem::remove_all(cfg.out_dir);
  }
}
