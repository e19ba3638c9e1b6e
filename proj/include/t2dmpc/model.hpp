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
#ifndef T2DMPC_MODEL_HPP
#define T2DMPC_MODEL_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace t2dmpc {

/// Number of minutes in a day; converts the minute-rate IL-6 balance to the
/// day clock used by the simulation.
inline constexpr double kMinutesPerDay = 1440.0;

/// Physiological state of the long-term progression model.
///
/// All simulations run on a day clock. Units:
///   G    plasma glucose concentration [mg/dl]
///   I    serum insulin concentration [uU/ml]
///   beta beta-cell mass [mg]
///   S_I  insulin sensitivity [ml/uU/d]
///   Vl   integral IL-6 effect of exercise [(pg/ml)*min]
struct State {
  double G = 0.0;
  double I = 0.0;
  double beta = 0.0;
  double S_I = 0.0;
  double Vl = 0.0;

  bool finite() const {
    return std::isfinite(G) && std::isfinite(I) && std::isfinite(beta) &&
           std::isfinite(S_I) && std::isfinite(Vl);
  }
  bool nonnegative() const {
    return G >= 0.0 && I >= 0.0 && beta >= 0.0 && S_I >= 0.0 && Vl >= 0.0;
  }
  /// The model is a positive system: every component must be finite and >= 0.
  void validate() const {
    if (!finite()) throw std::invalid_argument("State: non-finite component");
    if (!nonnegative()) throw std::invalid_argument("State: negative component");
  }
};

/// Time derivative of a State, in per-day units.
struct StateDerivative {
  double G = 0.0;
  double I = 0.0;
  double beta = 0.0;
  double S_I = 0.0;
  double Vl = 0.0;
};

/// Model constants. Defaults are the nominal patient values; the IL-6 side
/// (SR, K_IL6, k_s) is specified in per-minute units and carried as such,
/// conversion to the day clock happens inside derivative().
struct ModelParams {
  double R0 = 864.0;        // net glucose production at zero glycemia [mg/dl/d]
  double Eg0 = 1.44;        // insulin-independent glucose clearance [1/d]
  double sigma = 43.2;      // maximal insulin secretion rate [uU/ml/d]
  double alpha = 20000.0;   // half-saturation of secretion vs G^2 [mg^2/dl^2]
  double k = 432.0;         // insulin clearance [1/d]
  double d0 = 0.06;         // baseline beta-cell apoptosis [1/d]
  double c = 0.05;          // insulin-sensitivity decay rate [1/d]
  double r1r = 0.42e-3;     // proliferation, linear in G [dl/mg/d]
  double r2r = 0.12e-5;     // proliferation, quadratic in G [dl^2/mg^2/d]
  double r1a = 0.42e-3;     // apoptosis, linear in G [dl/mg/d]
  double r2a = 0.12e-5;     // apoptosis, quadratic in G [dl^2/mg^2/d]
  double zeta_p = 1e-4;     // exercise gain on proliferation [-]
  double k_p = 1e6;         // half-saturation of psi1 [(pg/ml)*min]
  double zeta_a = 1e-3;     // exercise damping of apoptosis [-]
  double k_a = 1e6;         // half-saturation of psi2 [(pg/ml)*min]
  double S_I_target = 0.028;  // insulin-sensitivity floor [ml/uU/d]
  double zeta_si = 1.4;     // exercise brake on S_I decay [-]
  double k_n_si = 5e6;      // half-saturation of the S_I brake [(pg/ml)*min]
  double SR = 0.045;        // IL-6 secretion rate scale [pg/ml/min]
  double K_IL6 = 0.004;     // IL-6 clearance [1/min]
  double k_s = -std::log(0.8) / 80640.0;  // Vl washout [1/min]

  /// All constants must be strictly positive; zeta_a < 1 keeps psi2 positive
  /// and zeta_si >= 0 keeps the S_I brake well-signed.
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("ModelParams: ") + name +
                                    " must be positive and finite");
    };
    positive(R0, "R0");
    positive(Eg0, "Eg0");
    positive(sigma, "sigma");
    positive(alpha, "alpha");
    positive(k, "k");
    positive(d0, "d0");
    positive(c, "c");
    positive(r1r, "r1r");
    positive(r2r, "r2r");
    positive(r1a, "r1a");
    positive(r2a, "r2a");
    positive(zeta_p, "zeta_p");
    positive(k_p, "k_p");
    positive(zeta_a, "zeta_a");
    positive(k_a, "k_a");
    positive(S_I_target, "S_I_target");
    positive(k_n_si, "k_n_si");
    positive(SR, "SR");
    positive(K_IL6, "K_IL6");
    positive(k_s, "k_s");
    if (!(zeta_a < 1.0))
      throw std::invalid_argument("ModelParams: zeta_a must be < 1");
    if (!(zeta_si >= 0.0) || !std::isfinite(zeta_si))
      throw std::invalid_argument("ModelParams: zeta_si must be >= 0");
  }
};

/// An exercise program: sessions of `delta_min` minutes at intensity
/// `u_bar` (in percent, e.g. 60 means 60%), repeated every `period_min`
/// minutes.
struct ExerciseProgram {
  double u_bar = 60.0;        // intensity [%]
  double delta_min = 0.0;     // session duration [min]
  double period_min = 2880.0; // training period [min]

  void validate() const {
    if (!(u_bar > 0.0)) throw std::invalid_argument("ExerciseProgram: u_bar must be > 0");
    if (!(period_min > 0.0)) throw std::invalid_argument("ExerciseProgram: period must be > 0");
    if (!(delta_min >= 0.0) || !(delta_min <= period_min))
      throw std::invalid_argument("ExerciseProgram: need 0 <= delta <= period");
  }
};

/// Exercise boost on beta-cell proliferation, a Hill function of order 2.
/// Returns 1 + zeta_p*Vl^2/(k_p^2 + Vl^2), in [1, 1+zeta_p).
inline double psi1(double vl, const ModelParams& p) {
  if (!(vl >= 0.0)) throw std::domain_error("psi1: Vl must be >= 0");
  const double vl2 = vl * vl;
  return 1.0 + p.zeta_p * vl2 / (p.k_p * p.k_p + vl2);
}

/// Exercise damping of beta-cell apoptosis, a Hill function of order 2.
/// Returns 1 - zeta_a*Vl^2/(k_a^2 + Vl^2), in (1-zeta_a, 1].
inline double psi2(double vl, const ModelParams& p) {
  if (!(vl >= 0.0)) throw std::domain_error("psi2: Vl must be >= 0");
  const double vl2 = vl * vl;
  return 1.0 - p.zeta_a * vl2 / (p.k_a * p.k_a + vl2);
}

/// Glucose-dependent beta-cell proliferation rate P(G) = r1r*G - r2r*G^2 [1/d].
inline double proliferation(double g, const ModelParams& p) {
  return p.r1r * g - p.r2r * g * g;
}

/// Glucose-dependent beta-cell apoptosis rate A(G) = d0 - r1a*G + r2a*G^2 [1/d].
inline double apoptosis(double g, const ModelParams& p) {
  return p.d0 - p.r1a * g + p.r2a * g * g;
}

namespace detail {

/// Right-hand side without input validation; callers guarantee a finite,
/// componentwise non-negative state and u_eq >= 0.
inline StateDerivative rhs(const State& x, double u_eq, const ModelParams& p) {
  const double g2 = x.G * x.G;
  const double vl2 = x.Vl * x.Vl;
  StateDerivative d;
  d.G = p.R0 - (p.Eg0 + x.S_I * x.I) * x.G;
  d.I = p.sigma * x.beta * g2 / (p.alpha + g2) - p.k * x.I;
  const double prolif = p.r1r * x.G - p.r2r * g2;
  const double apopt = p.d0 - p.r1a * x.G + p.r2a * g2;
  const double boost = 1.0 + p.zeta_p * vl2 / (p.k_p * p.k_p + vl2);
  const double damp = 1.0 - p.zeta_a * vl2 / (p.k_a * p.k_a + vl2);
  d.beta = (prolif * boost - apopt * damp) * x.beta;
  const double brake = 1.0 - p.zeta_si * x.Vl / (p.k_n_si + x.Vl);
  d.S_I = -p.c * (x.S_I - p.S_I_target) * brake;
  // IL-6 balance is written per minute; the day clock needs the factor 1440.
  d.Vl = kMinutesPerDay * (p.SR / p.K_IL6 * u_eq - p.k_s * x.Vl);
  return d;
}

}  // namespace detail

/// Full model right-hand side at state `x` under equivalent input `u_eq`,
/// in per-day units.
inline StateDerivative derivative(const State& x, double u_eq, const ModelParams& p) {
  if (!x.finite() || !std::isfinite(u_eq))
    throw std::invalid_argument("derivative: non-finite input");
  if (!(u_eq >= 0.0)) throw std::invalid_argument("derivative: u_eq must be >= 0");
  if (!(x.Vl >= 0.0)) throw std::domain_error("derivative: Vl must be >= 0");
  return detail::rhs(x, u_eq, p);
}

/// Glucose values where net beta-cell growth P(G) - A(G) crosses zero at
/// Vl = 0, ascending. With d0 = 0 the lower root degenerates to G = 0 (the
/// no-glucose point), leaving the upper root as the only meaningful crossing.
/// Throws if the discriminant is negative (no physiological roots).
inline std::pair<double, double> beta_growth_roots(const ModelParams& p) {
  // (r2r + r2a) G^2 - (r1r + r1a) G + d0 = 0
  const double a = p.r2r + p.r2a;
  const double b = p.r1r + p.r1a;
  const double disc = b * b - 4.0 * a * p.d0;
  if (disc < 0.0)
    throw std::domain_error("beta_growth_roots: no physiological roots");
  const double s = std::sqrt(disc);
  return {(b - s) / (2.0 * a), (b + s) / (2.0 * a)};
}

/// Fixed point of the Vl balance under constant input: SR*u/(K_IL6*k_s).
/// Independent of the clock the equation is integrated on.
inline double vl_steady_state(double u_eq, const ModelParams& p) {
  return p.SR * u_eq / (p.K_IL6 * p.k_s);
}

}  // namespace t2dmpc

#endif  // T2DMPC_MODEL_HPP
