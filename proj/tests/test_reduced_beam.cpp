// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "nanofb/config.hpp"
#include "nanofb/reduced_beam.hpp"

using namespace nanofb;

namespace {

const Complex kI(0.0, 1.0);

struct Setup {
  PhysicalParams p;
  DerivedParams d;
};

Setup eq22() {
  const RunConfig cfg = load_preset("paper_eq22");
  return {cfg.physical, cfg.derive()};
}

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

using CL = std::complex<long double>;

struct LongCoeffs {
  CL C1, C2, xi;
};

LongCoeffs long_coeffs(const Setup& s, const ControlGains& g) {
  const long double gT = s.p.gamma_T, wT = s.p.omega_T, gm = s.d.g_MT;
  const long double vx = g.v_x, vp = g.v_p;
  const long double chi = gT * (gT + 4.0L * vp) / 4.0L + wT * (wT - 2.0L * vx);
  LongCoeffs c;
  c.C1 = (gm / chi) * CL(vp + gT / 2.0L, -(-vx + wT));
  c.C2 = (gm / chi) * CL(vp, -vx);
  c.xi = wT * std::conj(c.C2) * c.C1 - CL(0.0L, 1.0L) * gm * std::conj(c.C2);
  return c;
}

double rel(Complex a, CL b) {
  const CL diff = CL(a.real(), a.imag()) - b;
  return static_cast<double>(std::abs(diff) / std::abs(b));
}

}  // namespace

TEST_CASE("compute_coeffs: zero gains collapse") {
  const Setup s = eq22();
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  CHECK(rc.C2 == Complex(0.0, 0.0));
  CHECK(rc.xi_M == Complex(0.0, 0.0));
  const double chi = s.p.gamma_T * s.p.gamma_T / 4.0 + s.p.omega_T * s.p.omega_T;
  CHECK(rc.chi == doctest::Approx(chi).epsilon(1e-14));
  const Complex c1 = (s.d.g_MT / chi) * Complex(s.p.gamma_T / 2.0, -s.p.omega_T);
  CHECK(std::abs(rc.C1 - c1) / std::abs(c1) < 1e-14);
}

TEST_CASE("compute_coeffs: alpha identities for arbitrary gains") {
  const Setup s = eq22();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const ControlGains g = gains(s, u(rng), u(rng));
    ReducedCoeffs rc;
    try {
      rc = compute_coeffs(g, s.d, s.p);
    } catch (const Error&) {
      continue;
    }
    CHECK(rc.alpha_x == rc.C1 + std::conj(rc.C2));
    CHECK(rc.alpha_p == -kI * rc.C1 + kI * std::conj(rc.C2));
  }
}

TEST_CASE("compute_coeffs: circuit-set gains against an extended-precision evaluation") {
  const Setup s = eq22();
  const ControlGains g = gains(s, 0.5, 0.75);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const LongCoeffs ref = long_coeffs(s, g);
  CHECK(rel(rc.C1, ref.C1) < 1e-13);
  CHECK(rel(rc.C2, ref.C2) < 1e-13);
  CHECK(rel(rc.xi_M, ref.xi) < 1e-12);
}

TEST_CASE("xi_M_real_approx vanishes on the diagonal") {
  const Setup s = eq22();
  for (double v : {0.1, 0.3, 0.5}) {
    const ControlGains g = gains(s, v, v);
    const double re = xi_M_real_approx(g, s.d, s.p);
    CHECK(re == 0.0);
    CHECK((s.p.omega_M - 2.0 * re) / (s.p.omega_M + 2.0 * re) == 1.0);
  }
  const ControlGains g = gains(s, 0.5, 0.75);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const double expected = s.p.omega_T * s.d.g_MT * s.d.g_MT / (rc.chi * rc.chi) * (g.v_p * g.v_p - g.v_x * g.v_x);
  CHECK(xi_M_real_approx(g, s.d, s.p) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("compute_coeffs: near-singular gains are rejected") {
  const Setup s = eq22();
  const double vp = 0.4 * s.p.omega_T;
  const double vx = (s.p.omega_T * s.p.omega_T + s.p.gamma_T * (s.p.gamma_T + 4.0 * vp) / 4.0) / (2.0 * s.p.omega_T);
  try {
    compute_coeffs(ControlGains{vx, vp}, s.d, s.p);
    FAIL("expected near-singular gain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::near_singular_gain);
  }
}

TEST_CASE("check_gain_region: figure windows") {
  const Setup s = eq22();
  const GainRegionReport x = check_gain_region(gains(s, 0.5, 0.75), s.d, s.p, GainPurpose::squeeze_x);
  CHECK(x.in_window);
  CHECK(x.window_margin == doctest::Approx(0.25));
  CHECK(x.ratios[0] == doctest::Approx(s.p.gamma_T / (s.p.gamma_T + 3.0 * s.p.omega_T)).epsilon(1e-14));
  CHECK(x.ratio_ok[0]);
  // v_x = omega_T/2 puts the second ratio on the open boundary
  CHECK(x.ratios[1] == 0.0);
  CHECK_FALSE(x.ratio_ok[1]);
  CHECK_FALSE(x.passed());

  const GainRegionReport p = check_gain_region(gains(s, 0.5, 0.4), s.d, s.p, GainPurpose::squeeze_p);
  CHECK(p.in_window);
  CHECK_FALSE(check_gain_region(gains(s, 0.5, 0.4), s.d, s.p, GainPurpose::squeeze_x).in_window);
  CHECK_FALSE(check_gain_region(gains(s, 0.5, 0.75), s.d, s.p, GainPurpose::squeeze_p).in_window);
  CHECK_FALSE(check_gain_region(gains(s, 0.45, 0.75), s.d, s.p, GainPurpose::squeeze_x).in_window);
}

TEST_CASE("check_gain_region: zero gains fail") {
  const Setup s = eq22();
  const GainRegionReport r = check_gain_region(ControlGains{}, s.d, s.p, GainPurpose::cool);
  CHECK(r.ratios[0] == 1.0);
  CHECK(r.ratios[1] == 1.0);
  const double chi = s.p.gamma_T * s.p.gamma_T / 4.0 + s.p.omega_T * s.p.omega_T;
  const double r3 = s.p.gamma_T * s.d.g_MT * s.d.g_MT * s.p.omega_T * s.p.omega_T / (s.p.omega_M * chi * chi);
  CHECK(r.ratios[2] == doctest::Approx(r3).epsilon(1e-13));
  CHECK_FALSE(r.ratio_ok[0]);
  CHECK_FALSE(r.ratio_ok[1]);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.in_window);
}

TEST_CASE("closed_form_prediction: arithmetic and product identity") {
  const Setup s = eq22();
  const ReducedCoeffs rc0 = compute_coeffs(ControlGains{}, s.d, s.p);
  const ClosedFormPrediction z = closed_form_prediction(ControlGains{}, rc0, s.d, s.p);
  CHECK(z.xi == 1.0);
  CHECK(z.V_x_pred == doctest::Approx(0.5 / std::sqrt(0.6)).epsilon(1e-15));
  CHECK(z.V_p_pred == doctest::Approx(0.6454972243679028).epsilon(1e-15));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  int valid = 0;
  for (int k = 0; k < 40; ++k) {
    const ControlGains g = gains(s, 0.5, u(rng));
    const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
    try {
      const ClosedFormPrediction cf = closed_form_prediction(g, rc, s.d, s.p);
      ++valid;
      CHECK(cf.V_x_pred * cf.V_p_pred == doctest::Approx(0.25 / s.p.eta).epsilon(1e-14));
      const double re = rc.xi_M.real();
      CHECK(cf.xi == doctest::Approx((s.p.omega_M - 2.0 * re) / (s.p.omega_M + 2.0 * re)).epsilon(1e-14));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::out_of_validity);
    }
  }
  CHECK(valid > 0);
}

TEST_CASE("closed_form_prediction: v_p > v_x squeezes position under the approximation") {
  const Setup s = eq22();
  const ControlGains g = gains(s, 0.5, 0.75);
  CHECK(xi_M_real_approx(g, s.d, s.p) > 0.0);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  try {
    const ClosedFormPrediction cf = closed_form_prediction(g, rc, s.d, s.p);
    CHECK(cf.xi_approx < 1.0);
    CHECK(cf.re_xi_M_approx == doctest::Approx(xi_M_real_approx(g, s.d, s.p)));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_validity);
  }
}

TEST_CASE("closed_form_prediction: non-positive xi is out of validity") {
  Setup s = softened();
  ReducedCoeffs rc;
  rc.xi_M = Complex(-s.p.omega_M, 0.0);
  try {
    closed_form_prediction(ControlGains{}, rc, s.d, s.p);
    FAIL("expected out_of_validity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_validity);
  }
}

TEST_CASE("reduced model: zero-gain occupation fixed point") {
  const Setup s = softened();
  const ReducedCoeffs rc = compute_coeffs(ControlGains{}, s.d, s.p);
  const double cold = s.p.gamma_T * std::norm(rc.C1);
  const double fixed = s.d.gamma_M * s.d.nbar_M / (s.d.gamma_M + cold);
  const int n = 30;
  const ReducedSmeModel model(rc, s.d, s.p, ControlGains{}, n, true);
  ComplexMatrix rho = thermal_state(n, s.d.nbar_M);
  const double dt = 1e-3;
  for (int k = 0; k < 25000; ++k) model.step(rho, k * dt, 0.0, dt, false, false);
  CHECK(model.moments(rho, 25000 * dt).nbar == doctest::Approx(fixed).epsilon(1e-8));
  CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
}

TEST_CASE("reduced model: pure two-photon squeezing conserves the principal-variance product") {
  Setup s = softened();
  s.p.omega_M = 0.0;
  s.p.gamma_T = 0.0;
  s.p.eta = 0.0;
  s.d.gamma_M = 0.0;
  s.d.nbar_M = 0.0;
  ReducedCoeffs rc;
  const double xi = 0.1;
  rc.xi_M = Complex(xi, 0.0);
  const int n = 40;
  const ReducedSmeModel model(rc, s.d, s.p, ControlGains{}, n);
  ComplexMatrix rho = fock_state(n, 0);
  const double dt = 1e-4;
  const int steps = 25000;
  for (int k = 0; k < steps; ++k) model.step(rho, k * dt, 0.0, dt, false, false);
  const double t = steps * dt;
  const BeamMoments m = model.moments(rho, t);
  Eigen::Matrix2d cov;
  cov << m.V_x, m.C_xp, m.C_xp, m.V_p;
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  // H = xi (x^2 - p^2): (x + p) contracts as exp(-2 xi t), (x - p) expands
  CHECK(ev(0) == doctest::Approx(0.5 * std::exp(-4.0 * xi * t)).epsilon(1e-3));
  CHECK(ev(1) == doctest::Approx(0.5 * std::exp(4.0 * xi * t)).epsilon(1e-3));
  CHECK(ev(0) * ev(1) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(m.C_xp == doctest::Approx(-0.5 * std::sinh(4.0 * xi * t)).epsilon(1e-3));
}

TEST_CASE("reduced model: dense step and model step agree") {
  const Setup s = softened();
  const ControlGains g = gains(s, 0.5, 0.6);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const int n = 20;
  const ReducedSmeModel model(rc, s.d, s.p, g, n);
  DensityState dense({n}, coherent_state(n, Complex(0.4, -0.2)));
  ComplexMatrix fast = dense.matrix;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const double dt = 1e-4;
  for (int k = 0; k < 200; ++k) {
    const double dW = std::sqrt(dt) * nd(rng);
    const ReducedStep a = reduced_sme_step(dense, rc, s.d, s.p, g, dW, dt, false);
    const ReducedSmeModel::Outcome b = model.step(fast, k * dt, dW, dt, false, true);
    CHECK(std::abs(a.dY - b.dY) < 1e-13);
    CHECK(std::abs(a.u_tilde - b.u_tilde) < 1e-12);
    dense = a.rho;
  }
  CHECK((dense.matrix - fast).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reduced model: rotating frame needs zero gains") {
  const Setup s = softened();
  const ControlGains g = gains(s, 0.5, 0.6);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  try {
    ReducedSmeModel(rc, s.d, s.p, g, 10, true);
    FAIL("expected invalid_argument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
  CHECK_THROWS_AS(reduced_sme_step(DensityState({2, 2}, identity(4) / 4.0), rc, s.d, s.p, g, 0.0, 1e-3), Error);
}

TEST_CASE("reduced trajectories: seed determinism") {
  const Setup s = softened();
  const ControlGains g = gains(s, 0.5, 0.6);
  const ReducedCoeffs rc = compute_coeffs(g, s.d, s.p);
  const ReducedSmeModel model(rc, s.d, s.p, g, 15);
  const DensityState rho0({15}, thermal_state(15, 0.5));
  ReducedConfig cfg;
  cfg.dt = default_reduced_dt(model);
  cfg.steps = 2000;
  cfg.seed = 77;
  cfg.sample_stride = 100;
  const ReducedRecord a = simulate_reduced_trajectory(rho0, model, cfg, 3);
  const ReducedRecord b = simulate_reduced_trajectory(rho0, model, cfg, 3);
  const ReducedRecord c = simulate_reduced_trajectory(rho0, model, cfg, 4);
  REQUIRE(a.dY.size() == 20);
  CHECK(a.dY == b.dY);
  CHECK(a.samples.size() == 20);
  CHECK(a.final_moments.V_x == b.final_moments.V_x);
  CHECK(a.final_moments.mean_p == b.final_moments.mean_p);
  CHECK(a.dY != c.dY);
  CHECK_FALSE(a.blowup);
  CHECK(a.min_robertson_margin > -1e-6);

  const std::vector<ReducedRecord> e1 = run_reduced_ensemble(rho0, model, cfg, 6, 1);
  const std::vector<ReducedRecord> e3 = run_reduced_ensemble(rho0, model, cfg, 6, 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(e1[i].dY == e3[i].dY);
  CHECK(e1[3].dY == a.dY);
}
