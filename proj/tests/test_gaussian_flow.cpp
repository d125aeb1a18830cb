// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nanofb/metrics.hpp"
#include "nanofb/reduced_beam.hpp"

using namespace nanofb;

namespace {

struct Setup {
  PhysicalParams p;
  DerivedParams d;
};

// Rates in units of gamma_M.
Setup softened() {
  Setup s;
  s.p.omega_M = 0.05;
  s.p.omega_T = 20.0;
  s.p.gamma_T = 16.0;
  s.p.gamma_S = 100.0;
  s.p.g_ST = 1.0;
  s.p.eta = 0.6;
  s.d.omega_S = 2000.0;
  s.d.g_MT = 3.8;
  s.d.gamma_M = 1.0;
  s.d.nbar_M = 0.8;
  return s;
}

ControlGains gains(const Setup& s, double x, double p) { return {x * s.p.omega_T, p * s.p.omega_T}; }

double cold_rate(const Setup& s) {
  const double chi = s.p.gamma_T * s.p.gamma_T / 4.0 + s.p.omega_T * s.p.omega_T;
  const double c1 = s.d.g_MT * s.d.g_MT / (chi * chi) *
                    (s.p.gamma_T * s.p.gamma_T / 4.0 + s.p.omega_T * s.p.omega_T);
  return s.p.gamma_T * c1;
}

}  // namespace

TEST_CASE("gaussian flow: zero gains without measurement relax to the cold-damped thermal state") {
  Setup s = softened();
  s.p.eta = 0.0;
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  const double n_eff = s.d.gamma_M * s.d.nbar_M / (s.d.gamma_M + cold_rate(s));
  const GaussianFlowResult r = gaussian_moment_flow(ControlGains{}, rc, s.d, s.p, GaussianMoments::thermal(0.8));
  REQUIRE(r.converged());
  CHECK(r.moments.V_x == doctest::Approx(n_eff + 0.5).epsilon(1e-8));
  CHECK(r.moments.V_p == doctest::Approx(n_eff + 0.5).epsilon(1e-8));
  CHECK(std::abs(r.moments.C_xp) < 1e-10);
  CHECK(r.moments.V_mean_x == 0.0);
  CHECK(r.moments.nbar() == doctest::Approx(n_eff).epsilon(1e-8));
  CHECK(r.max_mean_growth_rate == doctest::Approx(-0.5 * (s.d.gamma_M + cold_rate(s))).epsilon(1e-10));
}

TEST_CASE("gaussian flow: measurement splits the unconditional variance without changing it") {
  const Setup s = softened();
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  const double n_eff = s.d.gamma_M * s.d.nbar_M / (s.d.gamma_M + cold_rate(s));
  const GaussianFlowResult r = gaussian_moment_flow(ControlGains{}, rc, s.d, s.p, GaussianMoments::thermal(0.8));
  REQUIRE(r.converged());
  CHECK(r.moments.V_x < n_eff + 0.5);
  CHECK(r.moments.V_mean_x > 0.0);
  CHECK(r.moments.V_x + r.moments.V_mean_x == doctest::Approx(n_eff + 0.5).epsilon(1e-8));
  CHECK(r.moments.V_p + r.moments.V_mean_p == doctest::Approx(n_eff + 0.5).epsilon(1e-8));
  CHECK(r.moments.nbar() == doctest::Approx(n_eff).epsilon(1e-8));
  // conditional state stays above the uncertainty bound
  CHECK(r.moments.V_x * r.moments.V_p - r.moments.C_xp * r.moments.C_xp >= 0.25);
}

TEST_CASE("gaussian flow: decoupled beam stays at the bath occupation") {
  Setup s = softened();
  s.d.g_MT = 0.0;
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  CHECK(rc.C1 == Complex(0.0, 0.0));
  const GaussianFlowResult r = gaussian_moment_flow(ControlGains{}, rc, s.d, s.p, GaussianMoments::thermal(0.0));
  REQUIRE(r.converged());
  CHECK(r.moments.V_x == doctest::Approx(s.d.nbar_M + 0.5).epsilon(1e-8));
  CHECK(r.moments.V_p == doctest::Approx(s.d.nbar_M + 0.5).epsilon(1e-8));
  CHECK(r.moments.V_mean_x == 0.0);
}

TEST_CASE("gaussian flow: transient occupation follows the rate equation") {
  const Setup s = softened();
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  const double rate = s.d.gamma_M + cold_rate(s);
  const double n_eff = s.d.gamma_M * s.d.nbar_M / rate;
  for (double t : {0.25, 1.0, 2.0, 4.0}) {
    const GaussianMoments m = gaussian_moments_at(ControlGains{}, rc, s.d, s.p, GaussianMoments::thermal(0.8), t);
    const double exact = n_eff + (0.8 - n_eff) * std::exp(-rate * t);
    CHECK(m.nbar() == doctest::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("gaussian flow: matches the density-matrix evolution at nonzero gains without measurement") {
  Setup s = softened();
  s.p.eta = 0.0;
  const ControlGains g = gains(s, 0.1, 0.2);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const int n = 30;
  const ReducedSmeModel model(rc, s.d, s.p, g, n);
  const Complex amp(0.5, -0.3);
  ComplexMatrix rho = coherent_state(n, amp);
  const double dt = 1e-4;
  const int steps = 20000;
  for (int k = 0; k < steps; ++k) model.step(rho, k * dt, 0.0, dt, false, true);
  const double t = steps * dt;
  const BeamMoments dm = model.moments(rho, t);

  GaussianMoments x0;
  x0.mean_x = std::sqrt(2.0) * amp.real();
  x0.mean_p = std::sqrt(2.0) * amp.imag();
  const GaussianMoments gm = gaussian_moments_at(g, rc, s.d, s.p, x0, t);
  CHECK(gm.V_x == doctest::Approx(dm.V_x).epsilon(2e-3));
  CHECK(gm.V_p == doctest::Approx(dm.V_p).epsilon(2e-3));
  CHECK(gm.C_xp == doctest::Approx(dm.C_xp).epsilon(2e-3));
  CHECK(std::abs(gm.mean_x - dm.mean_x) < 2e-3 * (1.0 + std::abs(dm.mean_x)));
  CHECK(std::abs(gm.mean_p - dm.mean_p) < 2e-3 * (1.0 + std::abs(dm.mean_p)));
  CHECK(gm.V_mean_x == 0.0);
  CHECK(std::abs(dm.V_x - 0.5) > 0.1);
}

TEST_CASE("gaussian flow: agrees with a conditional ensemble at nonzero gains") {
  const Setup s = softened();
  const ControlGains g = gains(s, 0.1, 0.2);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const int n = 24;
  const ReducedSmeModel model(rc, s.d, s.p, g, n);
  const double t = 1.0;
  ReducedConfig cfg;
  cfg.dt = default_reduced_dt(model);
  cfg.steps = static_cast<long>(std::ceil(t / cfg.dt));
  cfg.dt = t / static_cast<double>(cfg.steps);
  cfg.seed = 5;
  const DensityState rho0({n}, thermal_state(n, s.d.nbar_M));
  const std::vector<ReducedRecord> runs = run_reduced_ensemble(rho0, model, cfg, 200);
  std::vector<BeamMoments> finals;
  for (const ReducedRecord& r : runs) {
    REQUIRE_FALSE(r.blowup);
    CHECK(r.max_leakage < 1e-4);
    finals.push_back(r.final_moments);
  }
  const EnsembleStats e = ensemble_reduce(finals);
  const GaussianMoments gm = gaussian_moments_at(g, rc, s.d, s.p, GaussianMoments::thermal(s.d.nbar_M), t);
  auto within = [](double a, double b, double se) { return std::abs(a - b) <= 3.0 * se + 2e-3 * std::abs(b); };
  INFO("V_x ", gm.V_x, " vs ", e.V_xM, " se ", e.se_V_xM, "; V_p ", gm.V_p, " vs ", e.V_pM, " se ", e.se_V_pM,
       "; Vm_x ", gm.V_mean_x, " vs ", e.V_mean_xM, " se ", e.se_V_mean_xM, "; Vm_p ", gm.V_mean_p, " vs ",
       e.V_mean_pM, " se ", e.se_V_mean_pM, "; dt ", cfg.dt);
  CHECK(within(gm.V_x, e.V_xM, e.se_V_xM));
  CHECK(within(gm.V_p, e.V_pM, e.se_V_pM));
  CHECK(within(gm.V_mean_x, e.V_mean_xM, e.se_V_mean_xM));
  CHECK(within(gm.V_mean_p, e.V_mean_pM, e.se_V_mean_pM));
  CHECK(std::abs(e.mean_xM) <= 3.0 * e.se_mean_xM);
}

TEST_CASE("gaussian flow: unstable gains are reported as diverged") {
  const Setup s = softened();
  const ControlGains g = gains(s, 0.5, 0.0);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  GaussianMoments x0 = GaussianMoments::thermal(0.8);
  x0.mean_x = 0.1;
  const GaussianFlowResult r = gaussian_moment_flow(g, rc, s.d, s.p, x0);
  CHECK(r.status == FlowStatus::diverged);
  CHECK_FALSE(r.converged());
  CHECK(r.max_mean_growth_rate > 0.0);
  CHECK(std::string(flow_status_name(r.status)) == "diverged");
}
