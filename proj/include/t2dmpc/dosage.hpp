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
#ifndef T2DMPC_DOSAGE_HPP
#define T2DMPC_DOSAGE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "t2dmpc/integrator.hpp"
#include "t2dmpc/model.hpp"

namespace t2dmpc {

/// No grid dose prevents progression over the requested horizon.
struct PreventionInfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Equivalent input of an exercise program: the time average of the
/// intensity over one period, u_eq = u_bar * delta / T.
///
/// Unit convention: u_bar is carried in percentage points and delta/T in
/// minutes, which makes u_eq a dimensionless O(1) quantity. Worked check:
/// 60% for 48 min out of a 2880-min (2-day) period gives 60*48/2880 = 1.0.
inline double equivalent_input(const ExerciseProgram& program) {
  program.validate();
  return program.u_bar * program.delta_min / program.period_min;
}

/// Inverse map: session duration (minutes) realizing `u_eq` at fixed
/// intensity and period, delta = u_eq * T / u_bar. Throws if the requested
/// duration exceeds the period itself.
inline double duration_from_input(double u_eq, double u_bar, double period_min) {
  if (!(u_bar > 0.0)) throw std::invalid_argument("duration_from_input: u_bar must be > 0");
  if (!(period_min > 0.0)) throw std::invalid_argument("duration_from_input: period must be > 0");
  if (!(u_eq >= 0.0)) throw std::invalid_argument("duration_from_input: u_eq must be >= 0");
  const double delta = u_eq * period_min / u_bar;
  if (delta > period_min * (1.0 + 1e-12))
    throw std::domain_error("duration_from_input: infeasible prescription (delta > period)");
  return delta;
}

/// Per-period exercise prescription derived from an input sequence at fixed
/// intensity and period.
struct DurationSchedule {
  double u_bar = 60.0;           // [%]
  double period_min = 2880.0;    // [min]
  double period_days = 2.0;      // same period, day units
  std::vector<double> t_days;    // period start times
  std::vector<double> delta_min; // recommended session durations
  std::vector<double> weekly_min;// sliding weekly-minute series
};

/// Sliding weekly aggregation: for the window of 7 days starting at period k,
/// minutes/week = (sessions per week) * (mean session duration in the window)
/// = (7/T) * mean(delta_j : t_j in [t_k, t_k+7)). A constant 52.8-min
/// schedule at T = 2 d reads 52.8 * 3.5 = 184.8 min/week.
inline std::vector<double> weekly_minutes(const DurationSchedule& schedule) {
  const std::size_t n = schedule.delta_min.size();
  if (n == 0) throw std::invalid_argument("weekly_minutes: empty schedule");
  const double sessions_per_week = 7.0 / schedule.period_days;
  std::vector<double> out(n);
  std::size_t hi = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (hi < k) hi = k;
    while (hi < n && schedule.t_days[hi] < schedule.t_days[k] + 7.0 - 1e-9) ++hi;
    double sum = 0.0;
    for (std::size_t j = k; j < hi; ++j) sum += schedule.delta_min[j];
    out[k] = sessions_per_week * sum / static_cast<double>(hi - k);
  }
  return out;
}

/// Build the full schedule (durations + weekly series) for a per-period
/// input sequence.
inline DurationSchedule make_schedule(const std::vector<double>& u_seq, double u_bar,
                                      double period_days) {
  if (!(period_days > 0.0)) throw std::invalid_argument("make_schedule: period must be > 0");
  DurationSchedule s;
  s.u_bar = u_bar;
  s.period_days = period_days;
  s.period_min = period_days * kMinutesPerDay;
  s.t_days.reserve(u_seq.size());
  s.delta_min.reserve(u_seq.size());
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    s.t_days.push_back(static_cast<double>(k) * period_days);
    s.delta_min.push_back(duration_from_input(u_seq[k], u_bar, s.period_min));
  }
  if (!u_seq.empty()) s.weekly_min = weekly_minutes(s);
  return s;
}

/// Total control effort: the L1 norm of the input over its span,
/// exact for piecewise-constant profiles.
inline double control_effort(const InputProfile& profile) {
  if (profile.segments.empty()) throw std::invalid_argument("control_effort: empty profile");
  double eta = 0.0;
  for (const InputSegment& s : profile.segments)
    eta += std::abs(s.u_eq) * (s.t_end - s.t_start);
  return eta;
}

/// Effort of a per-period sequence with hold length `period_days`:
/// eta = T * sum_k u_k.
inline double control_effort(const std::vector<double>& u_seq, double period_days) {
  double sum = 0.0;
  for (double u : u_seq) sum += std::abs(u);
  return period_days * sum;
}

/// Smallest constant dose on the grid {0, res, 2*res, ..., ueq_max} whose
/// one-shot run is classified Prevented. Monotonicity of prevention in the
/// dose is assumed and spot-checked on the upper grid neighbor.
inline double min_feedforward_dose(const State& x0, const ModelParams& params, double resolution,
                                   double horizon_days, double threshold_g, double ueq_max,
                                   const StepConfig& cfg) {
  if (!(resolution > 0.0)) throw std::invalid_argument("min_feedforward_dose: resolution must be > 0");
  if (!(ueq_max >= 0.0)) throw std::invalid_argument("min_feedforward_dose: ueq_max must be >= 0");

  auto prevented = [&](double u) {
    return classify_outcome(simulate_constant(x0, u, horizon_days, cfg, params), threshold_g) ==
           Outcome::Prevented;
  };

  double found = -1.0;
  bool found_any = false;
  for (std::int64_t i = 0;; ++i) {
    double u = static_cast<double>(i) * resolution;
    if (u > ueq_max + 1e-12) break;
    if (u > ueq_max) u = ueq_max;
    if (prevented(u)) {
      found = u;
      found_any = true;
      break;
    }
  }
  if (!found_any)
    throw PreventionInfeasibleError("min_feedforward_dose: prevention infeasible within the input bound");

  const double above = found + resolution;
  if (above <= ueq_max + 1e-12 && !prevented(std::min(above, ueq_max)))
    throw std::runtime_error("min_feedforward_dose: prevention is not monotone around the result");
  return found;
}

}  // namespace t2dmpc

#endif  // T2DMPC_DOSAGE_HPP
