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
#ifndef T2DMPC_INTEGRATOR_HPP
#define T2DMPC_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "t2dmpc/model.hpp"

namespace t2dmpc {

/// Integration failed (state left the admissible domain, diverged, or the
/// adaptive step size underflowed). Carries the failure time.
struct IntegrationError : std::runtime_error {
  double t_days;
  IntegrationError(double t, const std::string& what)
      : std::runtime_error(what + " at t = " + std::to_string(t) + " d"), t_days(t) {}
};

enum class Method { FixedRk4, AdaptiveDopri };

/// How to integrate: classical fixed-step RK4 (default, deterministic cost)
/// or an embedded Dormand-Prince 5(4) pair used as reference.
struct StepConfig {
  Method method = Method::FixedRk4;
  double step_days = 5e-4;   // fixed-step size
  double rtol = 1e-8;        // adaptive relative tolerance
  double atol = 1e-10;       // adaptive absolute tolerance
  double sample_days = 1.0;  // output sampling interval

  void validate() const {
    if (!(step_days > 0.0)) throw std::invalid_argument("StepConfig: step_days must be > 0");
    if (!(rtol > 0.0)) throw std::invalid_argument("StepConfig: rtol must be > 0");
    if (!(atol > 0.0)) throw std::invalid_argument("StepConfig: atol must be > 0");
    if (!(sample_days > 0.0)) throw std::invalid_argument("StepConfig: sample_days must be > 0");
  }
};

/// One hold interval of a piecewise-constant input signal, [t_start, t_end).
struct InputSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double u_eq = 0.0;
};

/// Piecewise-constant equivalent input. Segments must be contiguous and
/// non-overlapping; the integrator restarts exactly at every boundary.
struct InputProfile {
  std::vector<InputSegment> segments;

  static InputProfile constant(double u_eq, double t0, double t1) {
    InputProfile p;
    p.segments.push_back({t0, t1, u_eq});
    return p;
  }

  /// Input value at time t; segments are half-open on the right, times at or
  /// past the final boundary take the last segment's value.
  double value_at(double t) const {
    if (segments.empty()) throw std::invalid_argument("InputProfile: empty");
    for (std::size_t i = 0; i + 1 < segments.size(); ++i)
      if (t < segments[i].t_end) return segments[i].u_eq;
    return segments.back().u_eq;
  }

  void validate_cover(double t0, double t1) const {
    if (segments.empty()) throw std::invalid_argument("InputProfile: empty");
    constexpr double tol = 1e-9;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const InputSegment& s = segments[i];
      if (!(s.t_end > s.t_start))
        throw std::invalid_argument("InputProfile: segment must have positive length");
      if (!std::isfinite(s.u_eq) || !(s.u_eq >= 0.0))
        throw std::invalid_argument("InputProfile: u_eq must be finite and >= 0");
      if (i > 0 && std::abs(segments[i - 1].t_end - s.t_start) > tol)
        throw std::invalid_argument("InputProfile: segments must be contiguous");
    }
    if (segments.front().t_start > t0 + tol || segments.back().t_end < t1 - tol)
      throw std::invalid_argument("InputProfile: does not cover the requested span");
  }
};

struct IntegrationStats {
  std::int64_t steps = 0;           // accepted steps
  std::int64_t rejected = 0;        // adaptive rejections
  std::int64_t clamped = 0;         // roundoff negatives snapped to zero
  double max_error_estimate = 0.0;  // scaled embedded-pair estimate (adaptive)
};

/// Sampled solution: times, states, the input that produced it, and counters.
struct Trajectory {
  std::vector<double> t;
  std::vector<State> x;
  InputProfile input;
  IntegrationStats stats;

  const State& final_state() const {
    if (x.empty()) throw std::invalid_argument("Trajectory: empty");
    return x.back();
  }
};

namespace detail {

// Largest negative excursion we attribute to roundoff; anything lower is a bug.
inline constexpr double kNegativityTol = 1e-6;
inline constexpr double kDivergenceGuard = 1e300;

/// Hot-loop constants for one constant-input span: model parameters plus the
/// day-clock IL-6 terms folded together.
struct SpanParams {
  double R0, Eg0, sigma, alpha, k;
  double r1r, r2r, r1a, r2a, d0;
  double zeta_p, kp2, zeta_a, ka2;
  double c, S_I_target, zeta_si, k_n_si;
  double il6_in;  // kMinutesPerDay * SR/K_IL6 * u_eq
  double ks_day;  // kMinutesPerDay * k_s

  static SpanParams make(const ModelParams& p, double u_eq) {
    SpanParams sp;
    sp.R0 = p.R0; sp.Eg0 = p.Eg0; sp.sigma = p.sigma; sp.alpha = p.alpha; sp.k = p.k;
    sp.r1r = p.r1r; sp.r2r = p.r2r; sp.r1a = p.r1a; sp.r2a = p.r2a; sp.d0 = p.d0;
    sp.zeta_p = p.zeta_p; sp.kp2 = p.k_p * p.k_p;
    sp.zeta_a = p.zeta_a; sp.ka2 = p.k_a * p.k_a;
    sp.c = p.c; sp.S_I_target = p.S_I_target;
    sp.zeta_si = p.zeta_si; sp.k_n_si = p.k_n_si;
    sp.il6_in = kMinutesPerDay * (p.SR / p.K_IL6) * u_eq;
    sp.ks_day = kMinutesPerDay * p.k_s;
    return sp;
  }
};

/// Same vector field as t2dmpc::derivative, with the four Hill/secretion
/// quotients funneled through a single division.
inline StateDerivative rhs(const State& x, const SpanParams& sp) {
  const double g2 = x.G * x.G;
  const double vl2 = x.Vl * x.Vl;
  const double d1 = sp.alpha + g2;
  const double d2 = sp.kp2 + vl2;
  const double d3 = sp.ka2 + vl2;
  const double d4 = sp.k_n_si + x.Vl;
  const double p12 = d1 * d2;
  const double p34 = d3 * d4;
  const double r = 1.0 / (p12 * p34);
  const double r12 = r * p34;
  const double r34 = r * p12;
  StateDerivative d;
  d.G = sp.R0 - (sp.Eg0 + x.S_I * x.I) * x.G;
  d.I = sp.sigma * x.beta * (g2 * (r12 * d2)) - sp.k * x.I;
  const double prolif = sp.r1r * x.G - sp.r2r * g2;
  const double apopt = sp.d0 - sp.r1a * x.G + sp.r2a * g2;
  const double boost = 1.0 + sp.zeta_p * (vl2 * (r12 * d1));
  const double damp = 1.0 - sp.zeta_a * (vl2 * (r34 * d4));
  d.beta = (prolif * boost - apopt * damp) * x.beta;
  d.S_I = -sp.c * (x.S_I - sp.S_I_target) * (1.0 - sp.zeta_si * (x.Vl * (r34 * d3)));
  d.Vl = sp.il6_in - sp.ks_day * x.Vl;
  return d;
}

/// x + a*k with stage values clamped into the model's nonnegative domain.
inline State stage(const State& x, double a, const StateDerivative& k) {
  State y;
  y.G = std::max(0.0, x.G + a * k.G);
  y.I = std::max(0.0, x.I + a * k.I);
  y.beta = std::max(0.0, x.beta + a * k.beta);
  y.S_I = std::max(0.0, x.S_I + a * k.S_I);
  y.Vl = std::max(0.0, x.Vl + a * k.Vl);
  return y;
}

inline void commit_clamp(State& x, double t, IntegrationStats& st) {
  auto fix = [&](double& v) {
    if (!(v >= 0.0)) {
      if (!(v >= -kNegativityTol))
        throw IntegrationError(t, "integration failure: state left the nonnegative domain");
      v = 0.0;
      ++st.clamped;
    } else if (v > kDivergenceGuard) {
      throw IntegrationError(t, "integration failure: state diverged");
    }
  };
  fix(x.G);
  fix(x.I);
  fix(x.beta);
  fix(x.S_I);
  fix(x.Vl);
}

/// Advance `x` over a span of `len` days under constant input, fixed-step
/// classical RK4. The number of steps depends only on (len, h_max), so equal
/// spans integrate bitwise identically regardless of their absolute start
/// time. Calls on_step(x_before, x_after, h) after every committed step.
template <class OnStep>
inline void rk4_span(State& x, double t_abs, double len, double h_max,
                     const SpanParams& sp, IntegrationStats& st, OnStep&& on_step) {
  auto n = static_cast<std::int64_t>(std::ceil(len / h_max - 1e-9));
  if (n < 1) n = 1;
  const double h = len / static_cast<double>(n);
  const double h2 = 0.5 * h;
  const double h6 = h / 6.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const StateDerivative k1 = rhs(x, sp);
    const StateDerivative k2 = rhs(stage(x, h2, k1), sp);
    const StateDerivative k3 = rhs(stage(x, h2, k2), sp);
    const StateDerivative k4 = rhs(stage(x, h, k3), sp);
    State xn;
    xn.G = x.G + h6 * (k1.G + 2.0 * (k2.G + k3.G) + k4.G);
    xn.I = x.I + h6 * (k1.I + 2.0 * (k2.I + k3.I) + k4.I);
    xn.beta = x.beta + h6 * (k1.beta + 2.0 * (k2.beta + k3.beta) + k4.beta);
    xn.S_I = x.S_I + h6 * (k1.S_I + 2.0 * (k2.S_I + k3.S_I) + k4.S_I);
    xn.Vl = x.Vl + h6 * (k1.Vl + 2.0 * (k2.Vl + k3.Vl) + k4.Vl);
    commit_clamp(xn, t_abs + static_cast<double>(i + 1) * h, st);
    on_step(x, xn, h);
    x = xn;
  }
  st.steps += n;
}

/// Dormand-Prince 5(4) embedded pair with standard step control; reference
/// mode for the fixed-step default.
template <class OnStep>
inline void dopri_span(State& x, double t_abs, double len, const StepConfig& cfg,
                       const SpanParams& sp, IntegrationStats& st, OnStep&& on_step) {
  auto lin = [](const State& y, std::initializer_list<std::pair<double, const StateDerivative*>> terms,
                double h) {
    State out = y;
    for (auto& [coef, kp] : terms) {
      out.G += h * coef * kp->G;
      out.I += h * coef * kp->I;
      out.beta += h * coef * kp->beta;
      out.S_I += h * coef * kp->S_I;
      out.Vl += h * coef * kp->Vl;
    }
    out.G = std::max(0.0, out.G);
    out.I = std::max(0.0, out.I);
    out.beta = std::max(0.0, out.beta);
    out.S_I = std::max(0.0, out.S_I);
    out.Vl = std::max(0.0, out.Vl);
    return out;
  };

  double done = 0.0;
  double h = std::min(len, 1e-2);
  StateDerivative k1 = rhs(x, sp);
  while (done < len) {
    if (h > len - done) h = len - done;
    const State& y = x;
    const State y2 = lin(y, {{1.0 / 5.0, &k1}}, h);
    const StateDerivative k2 = rhs(y2, sp);
    const State y3 = lin(y, {{3.0 / 40.0, &k1}, {9.0 / 40.0, &k2}}, h);
    const StateDerivative k3 = rhs(y3, sp);
    const State y4 = lin(y, {{44.0 / 45.0, &k1}, {-56.0 / 15.0, &k2}, {32.0 / 9.0, &k3}}, h);
    const StateDerivative k4 = rhs(y4, sp);
    const State y5 = lin(y, {{19372.0 / 6561.0, &k1}, {-25360.0 / 2187.0, &k2},
                             {64448.0 / 6561.0, &k3}, {-212.0 / 729.0, &k4}}, h);
    const StateDerivative k5 = rhs(y5, sp);
    const State y6 = lin(y, {{9017.0 / 3168.0, &k1}, {-355.0 / 33.0, &k2},
                             {46732.0 / 5247.0, &k3}, {49.0 / 176.0, &k4},
                             {-5103.0 / 18656.0, &k5}}, h);
    const StateDerivative k6 = rhs(y6, sp);
    State y7 = lin(y, {{35.0 / 384.0, &k1}, {500.0 / 1113.0, &k3}, {125.0 / 192.0, &k4},
                       {-2187.0 / 6784.0, &k5}, {11.0 / 84.0, &k6}}, h);
    const StateDerivative k7 = rhs(y7, sp);

    // 5th-minus-4th order error coefficients
    const double e1 = 35.0 / 384.0 - 5179.0 / 57600.0;
    const double e3 = 500.0 / 1113.0 - 7571.0 / 16695.0;
    const double e4 = 125.0 / 192.0 - 393.0 / 640.0;
    const double e5 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
    const double e6 = 11.0 / 84.0 - 187.0 / 2100.0;
    const double e7 = -1.0 / 40.0;
    auto comp_err = [&](double err_v, double y_v, double yn_v) {
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y_v), std::abs(yn_v));
      const double q = err_v / sc;
      return q * q;
    };
    const double eG = h * (e1 * k1.G + e3 * k3.G + e4 * k4.G + e5 * k5.G + e6 * k6.G + e7 * k7.G);
    const double eI = h * (e1 * k1.I + e3 * k3.I + e4 * k4.I + e5 * k5.I + e6 * k6.I + e7 * k7.I);
    const double eB = h * (e1 * k1.beta + e3 * k3.beta + e4 * k4.beta + e5 * k5.beta + e6 * k6.beta + e7 * k7.beta);
    const double eS = h * (e1 * k1.S_I + e3 * k3.S_I + e4 * k4.S_I + e5 * k5.S_I + e6 * k6.S_I + e7 * k7.S_I);
    const double eV = h * (e1 * k1.Vl + e3 * k3.Vl + e4 * k4.Vl + e5 * k5.Vl + e6 * k6.Vl + e7 * k7.Vl);
    const double err = std::sqrt((comp_err(eG, y.G, y7.G) + comp_err(eI, y.I, y7.I) +
                                  comp_err(eB, y.beta, y7.beta) + comp_err(eS, y.S_I, y7.S_I) +
                                  comp_err(eV, y.Vl, y7.Vl)) /
                                 5.0);
    if (err <= 1.0) {
      done += h;
      const std::int64_t clamps_before = st.clamped;
      commit_clamp(y7, t_abs + done, st);
      on_step(x, y7, h);
      x = y7;
      // first-same-as-last; only valid if the commit clamp left y7 untouched
      k1 = (st.clamped == clamps_before) ? k7 : rhs(x, sp);
      ++st.steps;
      st.max_error_estimate = std::max(st.max_error_estimate, err);
      const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      ++st.rejected;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
    }
    if (!(h > std::max(1.0, std::abs(t_abs + done)) * 1e-14))
      throw IntegrationError(t_abs + done, "integration failure: step size underflow");
  }
}

template <class OnStep>
inline void advance_span(State& x, double t_abs, double len, double u_eq,
                         const StepConfig& cfg, const ModelParams& p,
                         IntegrationStats& st, OnStep&& on_step) {
  const SpanParams sp = SpanParams::make(p, u_eq);
  if (cfg.method == Method::FixedRk4)
    rk4_span(x, t_abs, len, cfg.step_days, sp, st, on_step);
  else
    dopri_span(x, t_abs, len, cfg, sp, st, on_step);
}

}  // namespace detail

/// Integrate the model from `x0` over [t0, t1] under a piecewise-constant
/// input. Integration restarts exactly at every segment boundary, and output
/// samples land exactly on the grid t0 + j*sample_days (plus t1).
inline Trajectory integrate(const State& x0, const InputProfile& profile, double t0, double t1,
                            const StepConfig& cfg, const ModelParams& params) {
  cfg.validate();
  params.validate();
  x0.validate();
  if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
  profile.validate_cover(t0, t1);

  constexpr double tol = 1e-9;
  Trajectory traj;
  traj.input = profile;
  traj.t.push_back(t0);
  traj.x.push_back(x0);

  State x = x0;
  const double s = cfg.sample_days;
  for (const InputSegment& seg : profile.segments) {
    const double a = std::max(seg.t_start, t0);
    const double b = std::min(seg.t_end, t1);
    if (!(b > a + tol)) continue;

    double cursor = a;
    auto j = static_cast<std::int64_t>(std::floor((a - t0) / s + tol)) + 1;
    while (cursor < b - tol) {
      const double t_sample = t0 + static_cast<double>(j) * s;
      double t_event = t_sample;
      bool is_sample = true;
      if (t_sample > b - tol) {
        t_event = b;
        is_sample = std::abs(t_sample - b) <= tol;
      }
      detail::advance_span(x, cursor, t_event - cursor, seg.u_eq, cfg, params, traj.stats,
                           [](const State&, const State&, double) {});
      cursor = t_event;
      if (is_sample) {
        traj.t.push_back(t_event);
        traj.x.push_back(x);
        ++j;
      }
    }
  }
  if (traj.t.back() < t1 - tol) {
    traj.t.push_back(t1);
    traj.x.push_back(x);
  }
  return traj;
}

/// One-segment convenience wrapper: constant input over [0, horizon_days].
inline Trajectory simulate_constant(const State& x0, double u_eq, double horizon_days,
                                    const StepConfig& cfg, const ModelParams& params) {
  return integrate(x0, InputProfile::constant(u_eq, 0.0, horizon_days), 0.0, horizon_days, cfg,
                   params);
}

enum class Outcome { Prevented, Progressed };

/// A run counts as Prevented iff the final glucose sample is strictly below
/// the threshold (default 300 mg/dl, the separatrix midpoint between the
/// attractors at 100 and 600).
inline Outcome classify_outcome(const Trajectory& traj, double threshold_g = 300.0) {
  if (traj.x.empty()) throw std::invalid_argument("classify_outcome: empty trajectory");
  return traj.x.back().G < threshold_g ? Outcome::Prevented : Outcome::Progressed;
}

inline const char* to_string(Outcome o) {
  return o == Outcome::Prevented ? "prevented" : "progressed";
}

}  // namespace t2dmpc

#endif  // T2DMPC_INTEGRATOR_HPP
