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
#ifndef T2DMPC_MONTECARLO_HPP
#define T2DMPC_MONTECARLO_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "t2dmpc/dosage.hpp"
#include "t2dmpc/integrator.hpp"
#include "t2dmpc/model.hpp"
#include "t2dmpc/mpc.hpp"

namespace t2dmpc {

/// SplitMix64 (Steele, Lea, Flood 2014; Vigna's reference constants).
/// Counter-based and platform-independent: campaign outputs are regression
/// artifacts, so the generator identity is pinned here and in the docs.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
};

/// Seed of run k's private stream: a pure function of (master seed, k), so
/// runs are reproducible under any execution order or worker count.
inline std::uint64_t run_stream_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  SplitMix64 g(master_seed ^ (0x9E3779B97F4A7C15ULL * (run_index + 1)));
  return g.next();
}

/// Quantities eligible for relative perturbation, in draw order: the 21
/// model constants first, then the 5 initial-state components.
inline constexpr std::size_t kNumPerturbTargets = 26;

inline constexpr std::array<const char*, kNumPerturbTargets> kPerturbTargetNames = {
    "r0",     "eg0",    "sigma",   "alpha",  "k",      "d0",     "c",
    "r1r",    "r2r",    "r1a",     "r2a",    "zeta_p", "k_p",    "zeta_a",
    "k_a",    "si_target", "zeta_si", "k_n_si", "sr",   "k_il6",  "k_s",
    "g0",     "i0",     "beta0",   "si0",    "vl0"};

namespace detail {

inline const std::array<double ModelParams::*, 21>& param_members() {
  static const std::array<double ModelParams::*, 21> members = {
      &ModelParams::R0,     &ModelParams::Eg0,    &ModelParams::sigma,
      &ModelParams::alpha,  &ModelParams::k,      &ModelParams::d0,
      &ModelParams::c,      &ModelParams::r1r,    &ModelParams::r2r,
      &ModelParams::r1a,    &ModelParams::r2a,    &ModelParams::zeta_p,
      &ModelParams::k_p,    &ModelParams::zeta_a, &ModelParams::k_a,
      &ModelParams::S_I_target, &ModelParams::zeta_si, &ModelParams::k_n_si,
      &ModelParams::SR,     &ModelParams::K_IL6,  &ModelParams::k_s};
  return members;
}

inline const std::array<double State::*, 5>& state_members() {
  static const std::array<double State::*, 5> members = {
      &State::G, &State::I, &State::beta, &State::S_I, &State::Vl};
  return members;
}

}  // namespace detail

using PerturbFlags = std::array<bool, kNumPerturbTargets>;

inline PerturbFlags all_perturb_flags(bool value = true) {
  PerturbFlags f;
  f.fill(value);
  return f;
}

/// Draw one perturbed patient: each selected scalar q becomes q*(1 + eps)
/// with eps ~ Uniform[-phi, phi], independent draws in the fixed target
/// order. A draw is consumed for every target whether or not its flag is
/// set, so excluding a quantity never shifts the other draws; perturbing a
/// zero-valued quantity is a no-op.
inline std::pair<ModelParams, State> sample_perturbed(const ModelParams& nominal_params,
                                                      const State& nominal_x0, double phi,
                                                      SplitMix64& rng,
                                                      const PerturbFlags& flags =
                                                          all_perturb_flags()) {
  if (!(phi >= 0.0) || !(phi < 1.0))
    throw std::invalid_argument("sample_perturbed: phi must be in [0, 1)");
  ModelParams p = nominal_params;
  State x = nominal_x0;
  std::size_t idx = 0;
  for (auto member : detail::param_members()) {
    const double eps = rng.next_uniform(-phi, phi);
    if (flags[idx]) p.*member *= 1.0 + eps;
    ++idx;
  }
  for (auto member : detail::state_members()) {
    const double eps = rng.next_uniform(-phi, phi);
    if (flags[idx]) x.*member *= 1.0 + eps;
    ++idx;
  }
  return {p, x};
}

enum class RunOutcome { Prevented, Progressed, Failed };

inline const char* to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Prevented: return "prevented";
    case RunOutcome::Progressed: return "progressed";
    default: return "failed";
  }
}

struct CampaignConfig {
  int runs = 100;
  double phi = 0.05;
  std::uint64_t master_seed = 42;
  PerturbFlags perturb = all_perturb_flags();
  MpcConfig mpc;                 // controller applied to every patient
  double u_bar = 60.0;           // intensity used for the weekly-minute series
  double threshold_g = 300.0;    // outcome classification threshold
  int workers = 1;               // concurrent runs

  void validate() const {
    if (runs < 1) throw std::invalid_argument("CampaignConfig: runs must be >= 1");
    if (!(phi >= 0.0) || !(phi < 1.0))
      throw std::invalid_argument("CampaignConfig: phi must be in [0, 1)");
    if (workers < 1) throw std::invalid_argument("CampaignConfig: workers must be >= 1");
    if (!(u_bar > 0.0)) throw std::invalid_argument("CampaignConfig: u_bar must be > 0");
    if (!(threshold_g > 0.0)) throw std::invalid_argument("CampaignConfig: threshold_g must be > 0");
    mpc.validate();
  }
};

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;        // the run's stream seed
  RunOutcome outcome = RunOutcome::Failed;
  State final_state;             // NaNs when the run failed before producing one
  double eta = std::numeric_limits<double>::quiet_NaN();
  double peak_weekly_min = std::numeric_limits<double>::quiet_NaN();
  ModelParams params;            // the perturbed patient
  State x0;
  std::string error;             // nonempty iff outcome == Failed
};

struct CampaignSummary {
  int n = 0;
  int prevented = 0;
  int progressed = 0;
  int failed = 0;
  double success_rate = 0.0;     // prevented / n, exactly
  double g_final_min = 0.0, g_final_median = 0.0, g_final_max = 0.0;
  double beta_final_min = 0.0, beta_final_median = 0.0, beta_final_max = 0.0;
  std::vector<RunRecord> records;
};

namespace detail {

inline double median_of_sorted(std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Run the perturbation campaign: `runs` independent MPC closed loops, each
/// on its own patient drawn from the nominal values. Failed runs are
/// recorded (and count against the success rate), never aborted on.
/// Aggregation is a fold by run index, so worker scheduling cannot change
/// the result.
inline CampaignSummary run_campaign(const CampaignConfig& cfg, const ModelParams& nominal_params,
                                    const State& nominal_x0) {
  cfg.validate();
  nominal_params.validate();
  nominal_x0.validate();

  CampaignSummary summary;
  summary.n = cfg.runs;
  summary.records.resize(cfg.runs);

  auto execute = [&](int k) {
    RunRecord rec;
    rec.run = k;
    rec.seed = run_stream_seed(cfg.master_seed, static_cast<std::uint64_t>(k));
    SplitMix64 rng(rec.seed);
    auto [p, x0] = sample_perturbed(nominal_params, nominal_x0, cfg.phi, rng, cfg.perturb);
    rec.params = p;
    rec.x0 = x0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.final_state = {nan, nan, nan, nan, nan};
    try {
      const ControlledRun run = run_receding_horizon(x0, cfg.mpc, p);
      rec.final_state = run.trajectory.x.back();
      rec.eta = control_effort(run.u_seq, cfg.mpc.period_days);
      const DurationSchedule sched = make_schedule(run.u_seq, cfg.u_bar, cfg.mpc.period_days);
      rec.peak_weekly_min =
          sched.weekly_min.empty()
              ? 0.0
              : *std::max_element(sched.weekly_min.begin(), sched.weekly_min.end());
      rec.outcome = classify_outcome(run.trajectory, cfg.threshold_g) == Outcome::Prevented
                        ? RunOutcome::Prevented
                        : RunOutcome::Progressed;
    } catch (const MpcAbort& e) {
      rec.outcome = RunOutcome::Failed;
      rec.error = e.what();
      if (!e.partial.trajectory.x.empty()) rec.final_state = e.partial.trajectory.x.back();
      if (!e.partial.u_seq.empty())
        rec.eta = control_effort(e.partial.u_seq, cfg.mpc.period_days);
    } catch (const std::exception& e) {
      rec.outcome = RunOutcome::Failed;
      rec.error = e.what();
    }
    summary.records[static_cast<std::size_t>(k)] = std::move(rec);
  };

  const int workers = std::min(cfg.workers, cfg.runs);
  if (workers > 1) {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    auto drain = [&](int w) {
      try {
        for (int k = next.fetch_add(1); k < cfg.runs; k = next.fetch_add(1)) execute(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(drain, w);
    drain(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int k = 0; k < cfg.runs; ++k) execute(k);
  }

  std::vector<double> g_finals, beta_finals;
  for (const RunRecord& rec : summary.records) {
    switch (rec.outcome) {
      case RunOutcome::Prevented: ++summary.prevented; break;
      case RunOutcome::Progressed: ++summary.progressed; break;
      case RunOutcome::Failed: ++summary.failed; break;
    }
    if (rec.outcome != RunOutcome::Failed) {
      g_finals.push_back(rec.final_state.G);
      beta_finals.push_back(rec.final_state.beta);
    }
  }
  summary.success_rate = static_cast<double>(summary.prevented) / static_cast<double>(summary.n);
  if (!g_finals.empty()) {
    summary.g_final_min = *std::min_element(g_finals.begin(), g_finals.end());
    summary.g_final_max = *std::max_element(g_finals.begin(), g_finals.end());
    summary.beta_final_min = *std::min_element(beta_finals.begin(), beta_finals.end());
    summary.beta_final_max = *std::max_element(beta_finals.begin(), beta_finals.end());
    summary.g_final_median = detail::median_of_sorted(g_finals);
    summary.beta_final_median = detail::median_of_sorted(beta_finals);
  }
  return summary;
}

}  // namespace t2dmpc

#endif  // T2DMPC_MONTECARLO_HPP
