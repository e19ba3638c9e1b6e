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

#include <cmath>

#include "t2dmpc/model.hpp"

using namespace t2dmpc;
using Catch::Approx;

namespace {
const State kNominalX0{100.0, 10.0, 300.0, 0.72, 0.0};
}

TEST_CASE("psi1: proliferation boost") {
  const ModelParams p;
  CHECK(psi1(0.0, p) == 1.0);
  CHECK(psi1(1e6, p) == Approx(1.00005).epsilon(1e-12));  // Vl at half saturation
  CHECK(psi1(1e12, p) == Approx(1.0 + 1e-4).margin(1e-9));
  CHECK_THROWS_AS(psi1(-1.0, p), std::domain_error);
  CHECK_THROWS_AS(psi1(std::nan(""), p), std::domain_error);
}

TEST_CASE("psi2: apoptosis damping") {
  const ModelParams p;
  CHECK(psi2(0.0, p) == 1.0);
  CHECK(psi2(1e6, p) == Approx(0.9995).epsilon(1e-12));
  CHECK(psi2(1e12, p) == Approx(0.999).margin(1e-9));
  CHECK_THROWS_AS(psi2(-1e-9, p), std::domain_error);
}

TEST_CASE("psi monotonicity and continuity on a grid") {
  const ModelParams p;
  double prev1 = psi1(0.0, p);
  double prev2 = psi2(0.0, p);
  const int n = 1000;
  for (int i = 1; i <= n; ++i) {
    const double vl = 1e8 * static_cast<double>(i) / n;
    const double v1 = psi1(vl, p);
    const double v2 = psi2(vl, p);
    CHECK(v1 >= prev1);          // nondecreasing
    CHECK(v2 <= prev2);          // nonincreasing
    CHECK(v1 - prev1 < 1e-4);    // no jumps on this grid
    CHECK(prev2 - v2 < 1e-3);
    CHECK(v1 >= 1.0);
    CHECK(v1 < 1.0 + p.zeta_p);
    CHECK(v2 <= 1.0);
    CHECK(v2 > 1.0 - p.zeta_a);
    prev1 = v1;
    prev2 = v2;
  }
}

TEST_CASE("proliferation values") {
  const ModelParams p;
  CHECK(proliferation(0.0, p) == 0.0);
  CHECK(proliferation(100.0, p) == Approx(0.030).epsilon(1e-12));
  CHECK(proliferation(350.0, p) == Approx(0.0).margin(1e-12));  // r1r/r2r = 350
}

TEST_CASE("apoptosis values") {
  const ModelParams p;
  CHECK(apoptosis(0.0, p) == Approx(0.06).epsilon(1e-12));
  CHECK(apoptosis(100.0, p) == Approx(0.030).epsilon(1e-12));
  CHECK(apoptosis(250.0, p) == Approx(0.030).epsilon(1e-12));
}

TEST_CASE("net beta growth sign pattern at Vl = 0") {
  const ModelParams p;
  CHECK(proliferation(50.0, p) - apoptosis(50.0, p) < 0.0);
  CHECK(proliferation(150.0, p) - apoptosis(150.0, p) > 0.0);
  CHECK(proliferation(300.0, p) - apoptosis(300.0, p) < 0.0);
}

TEST_CASE("derivative at the nominal initial state") {
  const ModelParams p;
  const StateDerivative d = derivative(kNominalX0, 0.0, p);
  // x(0) is an equilibrium of the G/I/beta subsystem at S_I = 0.72
  CHECK(d.G == Approx(0.0).margin(1e-9));
  CHECK(d.I == Approx(0.0).margin(1e-9));
  CHECK(d.beta == Approx(0.0).margin(1e-12));
  CHECK(d.S_I == Approx(-0.0346).epsilon(1e-12));
  CHECK(d.Vl == 0.0);
}

TEST_CASE("derivative at the hyperglycemic equilibrium") {
  const ModelParams p;
  for (double si : {0.0, 0.028, 0.72}) {
    const StateDerivative d = derivative({600.0, 0.0, 0.0, si, 0.0}, 0.0, p);
    CHECK(d.G == Approx(0.0).margin(1e-9));
    CHECK(d.I == 0.0);
    CHECK(d.beta == 0.0);
  }
}

TEST_CASE("derivative: Vl source under unit input") {
  const ModelParams p;
  const StateDerivative d = derivative(kNominalX0, 1.0, p);
  // SR/K_IL6 = 11.25 pg/ml, on the day clock 1440 * 11.25 = 16200
  CHECK(d.Vl == Approx(16200.0).epsilon(1e-12));
}

TEST_CASE("derivative rejects bad input") {
  const ModelParams p;
  CHECK_THROWS_AS(derivative({std::nan(""), 0, 0, 0, 0}, 0.0, p), std::invalid_argument);
  CHECK_THROWS_AS(derivative(kNominalX0, std::nan(""), p), std::invalid_argument);
  CHECK_THROWS_AS(derivative(kNominalX0, -0.5, p), std::invalid_argument);
  State neg = kNominalX0;
  neg.Vl = -1.0;
  CHECK_THROWS_AS(derivative(neg, 0.0, p), std::domain_error);
}

TEST_CASE("boundary flow keeps the state nonnegative") {
  const ModelParams p;
  // G = 0
  CHECK(derivative({0.0, 5.0, 100.0, 0.5, 1e5}, 0.5, p).G > 0.0);
  // I = 0
  CHECK(derivative({120.0, 0.0, 100.0, 0.5, 1e5}, 0.5, p).I >= 0.0);
  // beta = 0
  CHECK(derivative({120.0, 5.0, 0.0, 0.5, 1e5}, 0.5, p).beta == 0.0);
  // S_I below target gets pushed back up
  CHECK(derivative({120.0, 5.0, 100.0, 0.01, 1e5}, 0.5, p).S_I > 0.0);
  // Vl = 0 with nonnegative input
  CHECK(derivative({120.0, 5.0, 100.0, 0.5, 0.0}, 0.0, p).Vl == 0.0);
  CHECK(derivative({120.0, 5.0, 100.0, 0.5, 0.0}, 1.0, p).Vl > 0.0);
}

TEST_CASE("beta equation is homogeneous in beta") {
  const ModelParams p;
  const State base{150.0, 8.0, 200.0, 0.4, 2e6};
  const double d1 = derivative(base, 1.0, p).beta;
  State doubled = base;
  doubled.beta = 2.0 * base.beta;
  CHECK(derivative(doubled, 1.0, p).beta == 2.0 * d1);  // exact: scaling by 2

  State scaled = base;
  scaled.beta = 1.7 * base.beta;
  CHECK(derivative(scaled, 1.0, p).beta == Approx(1.7 * d1).epsilon(1e-12));
}

TEST_CASE("beta growth roots") {
  const ModelParams p;
  const auto [lo, hi] = beta_growth_roots(p);
  CHECK(lo == Approx(100.0).epsilon(1e-9));  // G^2 - 350 G + 25000 = 0
  CHECK(hi == Approx(250.0).epsilon(1e-9));

  SECTION("degenerate quadratic at d0 -> 0 keeps only the upper crossing") {
    ModelParams q = p;
    q.d0 = 1e-300;  // effectively zero while staying positive
    const auto [lo2, hi2] = beta_growth_roots(q);
    CHECK(lo2 == Approx(0.0).margin(1e-6));
    CHECK(hi2 == Approx(350.0).epsilon(1e-9));
  }

  SECTION("no real roots when baseline apoptosis is too strong") {
    ModelParams q = p;
    q.d0 = 10.0;
    CHECK_THROWS_AS(beta_growth_roots(q), std::domain_error);
  }
}

TEST_CASE("vl steady state") {
  const ModelParams p;
  CHECK(vl_steady_state(0.0, p) == 0.0);
  CHECK(vl_steady_state(1.0, p) == Approx(4.066e6).epsilon(1e-3));
  CHECK(vl_steady_state(3.0, p) == Approx(1.220e7).epsilon(1e-3));
  CHECK(vl_steady_state(3.0, p) == Approx(3.0 * vl_steady_state(1.0, p)).epsilon(1e-12));

  SECTION("zeroes the Vl component of the derivative") {
    for (double u : {0.0, 0.5, 1.0, 3.0}) {
      State x = kNominalX0;
      x.Vl = vl_steady_state(u, p);
      const StateDerivative d = derivative(x, u, p);
      CHECK(std::abs(d.Vl) <= 1e-9 * std::max(1.0, 16200.0 * u));
    }
  }
}

TEST_CASE("params validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.k_s == Approx(-std::log(0.8) / 80640.0).epsilon(1e-15));

  SECTION("rejects nonpositive constants") {
    ModelParams q;
    q.sigma = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
  SECTION("rejects zeta_a >= 1") {
    ModelParams q;
    q.zeta_a = 1.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
}

TEST_CASE("exercise program validation") {
  ExerciseProgram ok{60.0, 48.0, 2880.0};
  CHECK_NOTHROW(ok.validate());
  ExerciseProgram bad = ok;
  bad.delta_min = 3000.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.u_bar = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
