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
#ifndef T2DMPC_CSV_HPP
#define T2DMPC_CSV_HPP

#include <charconv>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "t2dmpc/dosage.hpp"
#include "t2dmpc/integrator.hpp"
#include "t2dmpc/montecarlo.hpp"
#include "t2dmpc/mpc.hpp"

namespace t2dmpc {

/// Shortest decimal form that parses back to the same double. Always uses
/// '.' as the decimal point regardless of locale.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::runtime_error("csv: not a number: '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void expect_header(std::istream& is, std::string_view expected, const char* what) {
  std::string line;
  if (!std::getline(is, line) || line != expected)
    throw std::runtime_error(std::string("csv: bad ") + what + " header: '" + line + "'");
}

}  // namespace detail

// --- trajectory: t_days,G,I,beta,S_I,Vl,u_eq -------------------------------

inline constexpr const char* kTrajectoryHeader = "t_days,G,I,beta,S_I,Vl,u_eq";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const State& x = traj.x[i];
    os << format_double(traj.t[i]) << ',' << format_double(x.G) << ',' << format_double(x.I)
       << ',' << format_double(x.beta) << ',' << format_double(x.S_I) << ','
       << format_double(x.Vl) << ',' << format_double(traj.input.value_at(traj.t[i])) << '\n';
  }
}

struct TrajectoryRows {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<double> u;
};

inline TrajectoryRows read_trajectory_csv(std::istream& is) {
  detail::expect_header(is, kTrajectoryHeader, "trajectory");
  TrajectoryRows rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("csv: trajectory row needs 7 fields");
    rows.t.push_back(parse_double(f[0]));
    rows.x.push_back({parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                      parse_double(f[4]), parse_double(f[5])});
    rows.u.push_back(parse_double(f[6]));
  }
  return rows;
}

// --- controller inputs: k,t_days,u_eq_star,cost_predicted,G_at_k ------------

inline constexpr const char* kInputsHeader = "k,t_days,u_eq_star,cost_predicted,G_at_k";

inline void write_inputs_csv(std::ostream& os, const ControlledRun& run) {
  os << kInputsHeader << '\n';
  for (const MpcStepRecord& s : run.steps) {
    os << s.k << ',' << format_double(s.t_days) << ',' << format_double(s.u_star) << ','
       << format_double(s.predicted_cost) << ',' << format_double(s.g_at_start) << '\n';
  }
}

inline std::vector<MpcStepRecord> read_inputs_csv(std::istream& is) {
  detail::expect_header(is, kInputsHeader, "inputs");
  std::vector<MpcStepRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("csv: inputs row needs 5 fields");
    MpcStepRecord s;
    s.k = static_cast<std::int64_t>(parse_double(f[0]));
    s.t_days = parse_double(f[1]);
    s.u_star = parse_double(f[2]);
    s.predicted_cost = parse_double(f[3]);
    s.g_at_start = parse_double(f[4]);
    out.push_back(s);
  }
  return out;
}

// --- schedule: k,t_days,delta_min,weekly_min --------------------------------

inline constexpr const char* kScheduleHeader = "k,t_days,delta_min,weekly_min";

inline void write_schedule_csv(std::ostream& os, const DurationSchedule& s) {
  os << kScheduleHeader << '\n';
  for (std::size_t k = 0; k < s.delta_min.size(); ++k) {
    os << k << ',' << format_double(s.t_days[k]) << ',' << format_double(s.delta_min[k]) << ','
       << format_double(s.weekly_min[k]) << '\n';
  }
}

inline DurationSchedule read_schedule_csv(std::istream& is) {
  detail::expect_header(is, kScheduleHeader, "schedule");
  DurationSchedule s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw std::runtime_error("csv: schedule row needs 4 fields");
    s.t_days.push_back(parse_double(f[1]));
    s.delta_min.push_back(parse_double(f[2]));
    s.weekly_min.push_back(parse_double(f[3]));
  }
  return s;
}

// --- campaign: run,seed,outcome,G_final,beta_final,eta,peak_weekly_min ------

inline constexpr const char* kCampaignHeader =
    "run,seed,outcome,G_final,beta_final,eta,peak_weekly_min";

inline void write_campaign_csv(std::ostream& os, const CampaignSummary& summary) {
  os << kCampaignHeader << '\n';
  for (const RunRecord& r : summary.records) {
    os << r.run << ',' << r.seed << ',' << to_string(r.outcome) << ','
       << format_double(r.final_state.G) << ',' << format_double(r.final_state.beta) << ','
       << format_double(r.eta) << ',' << format_double(r.peak_weekly_min) << '\n';
  }
}

struct CampaignRow {
  int run = 0;
  std::uint64_t seed = 0;
  std::string outcome;
  double g_final = 0.0, beta_final = 0.0, eta = 0.0, peak_weekly_min = 0.0;
};

inline std::vector<CampaignRow> read_campaign_csv(std::istream& is) {
  detail::expect_header(is, kCampaignHeader, "campaign");
  std::vector<CampaignRow> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("csv: campaign row needs 7 fields");
    CampaignRow r;
    r.run = static_cast<int>(parse_double(f[0]));
    std::uint64_t seed = 0;
    const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), seed);
    if (res.ec != std::errc{}) throw std::runtime_error("csv: bad seed field");
    r.seed = seed;
    r.outcome = std::string(f[2]);
    r.g_final = parse_double(f[3]);
    r.beta_final = parse_double(f[4]);
    r.eta = parse_double(f[5]);
    r.peak_weekly_min = parse_double(f[6]);
    out.push_back(r);
  }
  return out;
}

// --- campaign summary (single row) ------------------------------------------

inline constexpr const char* kSummaryHeader =
    "n,prevented,progressed,failed,success_rate,"
    "g_final_min,g_final_median,g_final_max,"
    "beta_final_min,beta_final_median,beta_final_max";

inline void write_summary_csv(std::ostream& os, const CampaignSummary& s) {
  os << kSummaryHeader << '\n'
     << s.n << ',' << s.prevented << ',' << s.progressed << ',' << s.failed << ','
     << format_double(s.success_rate) << ',' << format_double(s.g_final_min) << ','
     << format_double(s.g_final_median) << ',' << format_double(s.g_final_max) << ','
     << format_double(s.beta_final_min) << ',' << format_double(s.beta_final_median) << ','
     << format_double(s.beta_final_max) << '\n';
}

inline std::string summary_text(const CampaignSummary& s) {
  std::ostringstream os;
  os << "monte carlo campaign: " << s.n << " runs\n"
     << "  prevented : " << s.prevented << "\n"
     << "  progressed: " << s.progressed << "\n"
     << "  failed    : " << s.failed << "\n"
     << "  success rate: " << format_double(s.success_rate) << "\n"
     << "  final G    [min/median/max]: " << format_double(s.g_final_min) << " / "
     << format_double(s.g_final_median) << " / " << format_double(s.g_final_max) << "\n"
     << "  final beta [min/median/max]: " << format_double(s.beta_final_min) << " / "
     << format_double(s.beta_final_median) << " / " << format_double(s.beta_final_max) << "\n";
  return os.str();
}

}  // namespace t2dmpc

#endif  // T2DMPC_CSV_HPP
