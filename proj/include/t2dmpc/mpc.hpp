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
#ifndef T2DMPC_MPC_HPP
#define T2DMPC_MPC_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "t2dmpc/integrator.hpp"
#include "t2dmpc/model.hpp"

namespace t2dmpc {

/// Receding-horizon controller settings. Each period boundary solves a 1-D
/// bounded minimization of the integral cost over a window of
/// `window_periods` periods; only the first period of the minimizer is
/// applied.
struct MpcConfig {
  double period_days = 2.0;   // control period T (also the hold interval)
  // Prediction window, in periods. The default gives a 20-day window at the
  // default 2-day period, the time constant of the insulin-sensitivity decay;
  // longer windows make the G^2 term swamp the input penalty and the solver
  // rides the input bound.
  int window_periods = 10;
  double lambda = 60.0;       // input penalty weight
  double ueq_max = 3.0;       // upper input bound (0 disables exercise)
  double horizon_days = 365.0;
  int grid_points = 31;       // coarse scan of [0, ueq_max]
  double refine_tol = 1e-3;   // golden-section bracket width in u
  int solver_workers = 1;     // concurrent grid evaluations
  StepConfig step;

  void validate() const {
    if (!(period_days > 0.0)) throw std::invalid_argument("MpcConfig: period_days must be > 0");
    if (window_periods < 1) throw std::invalid_argument("MpcConfig: window_periods must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("MpcConfig: lambda must be finite and >= 0");
    if (!(ueq_max >= 0.0)) throw std::invalid_argument("MpcConfig: ueq_max must be >= 0");
    if (!(horizon_days > 0.0)) throw std::invalid_argument("MpcConfig: horizon_days must be > 0");
    if (grid_points < 2) throw std::invalid_argument("MpcConfig: grid_points must be >= 2");
    if (!(refine_tol > 0.0)) throw std::invalid_argument("MpcConfig: refine_tol must be > 0");
    if (solver_workers < 1) throw std::invalid_argument("MpcConfig: solver_workers must be >= 1");
    step.validate();
  }

  /// Number of control periods covering the horizon (rounded up when the
  /// horizon is not an exact multiple of the period, e.g. 365 d at T = 2 d
  /// runs 183 periods).
  std::int64_t num_periods() const {
    return static_cast<std::int64_t>(std::ceil(horizon_days / period_days - 1e-9));
  }
};

struct MpcStepRecord {
  std::int64_t k = 0;
  double t_days = 0.0;
  double u_star = 0.0;
  double predicted_cost = 0.0;
  double g_at_start = 0.0;
  int evals = 0;  // cost evaluations spent by the solver
};

/// Closed-loop result: the applied input sequence, the concatenated
/// trajectory, and per-step solver records.
struct ControlledRun {
  std::vector<double> u_seq;
  Trajectory trajectory;
  std::vector<MpcStepRecord> steps;
};

/// A receding-horizon run failed mid-way; carries everything applied so far.
struct MpcAbort : std::runtime_error {
  ControlledRun partial;
  MpcAbort(const std::string& what, ControlledRun run)
      : std::runtime_error(what), partial(std::move(run)) {}
};

namespace detail {

struct PruneSignal {};

/// Integral cost of holding `u` over the whole prediction window, by the
/// trapezoidal rule on the integrator's own step grid. Aborts (returns
/// +inf) as soon as the accumulating cost provably exceeds `bound`; the
/// integrand is nonnegative, so a partial sum is a valid lower bound.
inline double predicted_cost_bounded(const State& x_k, double u, const MpcConfig& cfg,
                                     const ModelParams& p, double bound) {
  const double len = static_cast<double>(cfg.window_periods) * cfg.period_days;
  double acc = cfg.lambda * u * u * len;
  if (acc > bound) return std::numeric_limits<double>::infinity();
  State x = x_k;
  IntegrationStats scratch;
  try {
    advance_span(x, 0.0, len, u, cfg.step, p, scratch,
                 [&acc, bound](const State& before, const State& after, double h) {
                   acc += 0.5 * h * (before.G * before.G + after.G * after.G);
                   if (acc > bound) throw PruneSignal{};
                 });
  } catch (const PruneSignal&) {
    return std::numeric_limits<double>::infinity();
  }
  return acc;
}

}  // namespace detail

/// Predicted cost of candidate input `u` from state `x_k`: the model is run
/// over the N-period window with u held constant, and the running cost
/// integral(G(s)^2 + lambda*u^2) ds is returned.
inline double predicted_cost(const State& x_k, double u, const MpcConfig& cfg,
                             const ModelParams& p) {
  cfg.validate();
  x_k.validate();
  if (!(u >= 0.0) || !(u <= cfg.ueq_max + 1e-12))
    throw std::invalid_argument("predicted_cost: u outside [0, ueq_max]");
  return detail::predicted_cost_bounded(x_k, u, cfg, p, std::numeric_limits<double>::infinity());
}

struct SolveStepResult {
  double u_star = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  int evals = 0;
};

/// One controller step: minimize the predicted cost over u in [0, ueq_max]
/// by a coarse uniform grid followed by golden-section refinement of the
/// bracketing interval. Returns the best evaluated candidate, so exact
/// boundary minimizers (0 or ueq_max) are returned exactly. Deterministic
/// for a fixed configuration.
inline SolveStepResult solve_step_detailed(const State& x_k, const MpcConfig& cfg,
                                           const ModelParams& p) {
  cfg.validate();
  x_k.validate();
  const double inf = std::numeric_limits<double>::infinity();

  SolveStepResult best;
  std::atomic<double> shared_bound{inf};
  std::atomic<int> evals{0};

  auto eval = [&](double u, double bound) {
    ++evals;
    try {
      return detail::predicted_cost_bounded(x_k, u, cfg, p, bound);
    } catch (const IntegrationError&) {
      return inf;
    }
  };

  if (cfg.ueq_max == 0.0) {
    best.u_star = 0.0;
    best.cost = eval(0.0, inf);
    best.evals = evals.load();
    if (!std::isfinite(best.cost)) throw std::runtime_error("solve_step: cost evaluation failed");
    return best;
  }

  const int m = cfg.grid_points;
  std::vector<double> grid_u(m), grid_cost(m, inf);
  for (int i = 0; i < m; ++i)
    grid_u[i] = cfg.ueq_max * (static_cast<double>(i) / static_cast<double>(m - 1));

  auto lower_bound_shared = [&](double c) {
    double cur = shared_bound.load(std::memory_order_relaxed);
    while (c < cur && !shared_bound.compare_exchange_weak(cur, c, std::memory_order_relaxed)) {
    }
  };

  const int workers = std::min(cfg.solver_workers, m);
  auto worker = [&](int w) {
    for (int i = w; i < m; i += workers) {
      const double c = eval(grid_u[i], shared_bound.load(std::memory_order_relaxed));
      grid_cost[i] = c;
      if (std::isfinite(c)) lower_bound_shared(c);
    }
  };
  if (workers > 1) {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 1; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          worker(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    try {
      worker(0);
    } catch (...) {
      errors[0] = std::current_exception();
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    worker(0);
  }

  int i_best = 0;
  for (int i = 1; i < m; ++i)
    if (grid_cost[i] < grid_cost[i_best]) i_best = i;
  if (!std::isfinite(grid_cost[i_best]))
    throw std::runtime_error("solve_step: all grid evaluations failed");
  best.u_star = grid_u[i_best];
  best.cost = grid_cost[i_best];

  // Golden-section refinement on the bracketing interval around the grid
  // minimizer; every evaluation competes against the best candidate seen.
  double a = grid_u[i_best > 0 ? i_best - 1 : 0];
  double b = grid_u[i_best + 1 < m ? i_best + 1 : m - 1];
  auto refine_eval = [&](double u) {
    const double c = eval(u, best.cost);
    if (c < best.cost) {
      best.cost = c;
      best.u_star = u;
    }
    return c;
  };
  if (b - a > cfg.refine_tol) {
    constexpr double invphi = 0.6180339887498949;  // (sqrt(5)-1)/2
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = refine_eval(c);
    double fd = refine_eval(d);
    while (b - a > cfg.refine_tol) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = refine_eval(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = refine_eval(d);
      }
    }
  }

  best.evals = evals.load();
  return best;
}

/// Spec'd entry point: just the minimizer.
inline double solve_step(const State& x_k, const MpcConfig& cfg, const ModelParams& p) {
  return solve_step_detailed(x_k, cfg, p).u_star;
}

/// Full receding-horizon run: at every period boundary solve for u*, hold it
/// for one period, advance the plant, repeat. The closed-loop trajectory is
/// the concatenation of the one-period segments.
inline ControlledRun run_receding_horizon(const State& x0, const MpcConfig& cfg,
                                          const ModelParams& p) {
  cfg.validate();
  p.validate();
  x0.validate();

  ControlledRun run;
  run.trajectory.t.push_back(0.0);
  run.trajectory.x.push_back(x0);

  const std::int64_t periods = cfg.num_periods();
  const double T = cfg.period_days;
  State x = x0;
  for (std::int64_t k = 0; k < periods; ++k) {
    const double t_k = static_cast<double>(k) * T;
    SolveStepResult res;
    try {
      res = solve_step_detailed(x, cfg, p);
    } catch (const std::runtime_error& e) {
      throw MpcAbort(std::string("receding horizon aborted at period ") + std::to_string(k) +
                         ": " + e.what(),
                     std::move(run));
    }

    Trajectory period;
    try {
      period = integrate(x, InputProfile::constant(res.u_star, t_k, t_k + T), t_k, t_k + T,
                         cfg.step, p);
    } catch (const IntegrationError& e) {
      throw MpcAbort(std::string("receding horizon aborted at period ") + std::to_string(k) +
                         ": " + e.what(),
                     std::move(run));
    }

    run.u_seq.push_back(res.u_star);
    run.steps.push_back({k, t_k, res.u_star, res.cost, x.G, res.evals});
    run.trajectory.input.segments.push_back({t_k, t_k + T, res.u_star});
    for (std::size_t i = 1; i < period.t.size(); ++i) {
      run.trajectory.t.push_back(period.t[i]);
      run.trajectory.x.push_back(period.x[i]);
    }
    run.trajectory.stats.steps += period.stats.steps;
    run.trajectory.stats.rejected += period.stats.rejected;
    run.trajectory.stats.clamped += period.stats.clamped;
    run.trajectory.stats.max_error_estimate =
        std::max(run.trajectory.stats.max_error_estimate, period.stats.max_error_estimate);
    x = period.x.back();
  }
  return run;
}

}  // namespace t2dmpc

#endif  // T2DMPC_MPC_HPP
