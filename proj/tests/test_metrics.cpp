// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nanofb/metrics.hpp"

using namespace nanofb;

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr double kHbar = 1.054571817e-34;
constexpr double kBoltzmann = 1.380649e-23;

// Squeezed coherent state on a truncated space, built by applying exp(-iHt)
// of a quadratic generator to the vacuum through its eigen-decomposition.
ComplexMatrix squeezed_coherent(int n, Complex amp, double r, double phase) {
  const ComplexMatrix a = fock_annihilation(n);
  const ComplexMatrix ad = a.adjoint();
  const Complex z = r * std::exp(Complex(0.0, phase));
  ComplexMatrix gen = 0.5 * (std::conj(z) * a * a - z * ad * ad);  // anti-Hermitian
  ComplexMatrix disp = amp * ad - std::conj(amp) * a;
  auto expm_anti = [](const ComplexMatrix& k) {
    const ComplexMatrix h = Complex(0.0, 1.0) * k;  // Hermitian
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const Eigen::VectorXcd ph = (-Complex(0.0, 1.0) * es.eigenvalues().cast<Complex>()).array().exp();
    return ComplexMatrix(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
  };
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
  psi(0) = 1.0;
  psi = expm_anti(disp) * (expm_anti(gen) * psi);
  return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("conditional_variances: vacuum, thermal and Fock states") {
  const auto vac = conditional_variances(DensityState({12}, fock_state(12, 0)));
  CHECK(vac.first == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(vac.second == doctest::Approx(0.5).epsilon(1e-14));

  // thermal: diagonal sum of (2k + 1)/2 p_k
  const int n = 80;
  const double nbar = 1.3;
  const ComplexMatrix th = thermal_state(n, nbar);
  double oracle = 0.0;
  for (int k = 0; k < n; ++k) oracle += th(k, k).real() * (2.0 * k + 1.0) / 2.0;
  const auto tv = conditional_variances(DensityState({n}, th));
  CHECK(tv.first == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(tv.second == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(nbar + 0.5).epsilon(1e-8));

  const auto f1 = conditional_variances(DensityState({6}, fock_state(6, 1)));
  CHECK(f1.first == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(f1.second == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("conditional_variances: beam factor of a joint state") {
  const ComplexMatrix beam = thermal_state(10, 0.4);
  ComplexMatrix qubit(2, 2);
  qubit << 0.3, 0.1, 0.1, 0.7;
  const ComplexMatrix tlr = thermal_state(4, 0.2);
  const DensityState joint({10, 2, 4}, kron(kron(beam, qubit), tlr));
  const auto j = conditional_variances(joint);
  const auto b = conditional_variances(DensityState({10}, beam));
  CHECK(j.first == doctest::Approx(b.first).epsilon(1e-12));
  CHECK(j.second == doctest::Approx(b.second).epsilon(1e-12));
}

TEST_CASE("mode_moments: squeezed coherent state against the symplectic oracle") {
  const int n = 60;
  const Complex amp(0.7, -0.4);
  const double r = 0.4, phase = 0.6;
  const BeamMoments m = mode_moments(squeezed_coherent(n, amp, r, phase));
  CHECK(m.mean_x == doctest::Approx(std::sqrt(2.0) * amp.real()).epsilon(1e-10));
  CHECK(m.mean_p == doctest::Approx(std::sqrt(2.0) * amp.imag()).epsilon(1e-10));
  // S^+ b S = b cosh r - b^+ e^{i phase} sinh r
  const double ch = std::cosh(2.0 * r), sh = std::sinh(2.0 * r);
  CHECK(m.V_x == doctest::Approx(0.5 * (ch - sh * std::cos(phase))).epsilon(1e-10));
  CHECK(m.V_p == doctest::Approx(0.5 * (ch + sh * std::cos(phase))).epsilon(1e-10));
  CHECK(m.C_xp == doctest::Approx(-0.5 * sh * std::sin(phase)).epsilon(1e-10));
  CHECK(m.V_x * m.V_p - m.C_xp * m.C_xp == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(m.nbar == doctest::Approx(std::norm(amp) + std::sinh(r) * std::sinh(r)).epsilon(1e-10));
}

TEST_CASE("conditional_variances: Robertson bound on random states") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  const int n = 24, support = 12;
  for (int k = 0; k < 50; ++k) {
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < support; ++i)
      for (int j = 0; j < support; ++j) a(i, j) = Complex(nd(rng), nd(rng));
    ComplexMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    const auto v = conditional_variances(DensityState({n}, rho));
    CHECK(v.first * v.second >= 0.25 - 1e-8);
    CHECK(v.first >= -1e-10);
  }
}

TEST_CASE("BeamMoments::rotated preserves the covariance invariants") {
  BeamMoments m;
  m.mean_x = 1.0;
  m.mean_p = -0.5;
  m.V_x = 0.8;
  m.V_p = 2.1;
  m.C_xp = 0.3;
  const BeamMoments r = m.rotated(0.9);
  CHECK(r.V_x + r.V_p == doctest::Approx(m.V_x + m.V_p).epsilon(1e-14));
  CHECK(r.V_x * r.V_p - r.C_xp * r.C_xp == doctest::Approx(m.V_x * m.V_p - m.C_xp * m.C_xp).epsilon(1e-13));
  CHECK(r.mean_x * r.mean_x + r.mean_p * r.mean_p == doctest::Approx(1.25).epsilon(1e-14));
  const BeamMoments back = r.rotated(-0.9);
  CHECK(back.C_xp == doctest::Approx(m.C_xp).epsilon(1e-13));
  const BeamMoments q = m.rotated(kTwoPi / 4.0);
  CHECK(q.V_x == doctest::Approx(m.V_p).epsilon(1e-14));
}

TEST_CASE("ensemble_reduce: vacuum and displaced vacuum") {
  const BeamMoments vac = mode_moments(fock_state(10, 0));
  const EnsembleStats e = ensemble_reduce(std::vector<BeamMoments>(20, vac));
  CHECK(std::abs(e.nbar) < 1e-14);
  CHECK(e.V_xM == doctest::Approx(0.5));
  CHECK(e.V_mean_xM == doctest::Approx(0.0));
  CHECK(e.se_nbar < 1e-14);
  CHECK(e.n_traj == 20);
  CHECK(e.Teff_linear == 0.0);

  const BeamMoments disp = mode_moments(coherent_state(40, Complex(1.0, 0.0)));
  CHECK(disp.mean_x == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  const EnsembleStats d = ensemble_reduce(std::vector<BeamMoments>(5, disp));
  CHECK(d.nbar == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(d.V_mean_xM) < 1e-12);

  CHECK_THROWS_AS(ensemble_reduce({}), Error);
}

TEST_CASE("ensemble_reduce: coherent unravelling of a thermal state") {
  // thermal state = Gaussian mixture of coherent states with E|a|^2 = nbar
  const double nbar = 0.8;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd(0.0, std::sqrt(nbar / 2.0));
  std::vector<BeamMoments> traj;
  for (int k = 0; k < 400; ++k) {
    const Complex a(nd(rng), nd(rng));
    BeamMoments m;
    m.mean_x = std::sqrt(2.0) * a.real();
    m.mean_p = std::sqrt(2.0) * a.imag();
    m.nbar = std::norm(a);
    traj.push_back(m);
  }
  const EnsembleStats e = ensemble_reduce(traj, kTwoPi * 1e9);
  CHECK(std::abs(e.nbar - nbar) <= 3.0 * e.se_nbar);
  CHECK(e.se_nbar > 0.0);
  CHECK(e.nbar == doctest::Approx(e.nbar_direct).epsilon(1e-12));
  CHECK(e.Teff_angular == doctest::Approx(effective_temperature(e.nbar, kTwoPi * 1e9, EnergyConvention::angular)));
  CHECK(e.V_mean_xM == doctest::Approx(nbar).epsilon(0.25));
}

TEST_CASE("ensemble_reduce: order and batch invariance") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<BeamMoments> traj;
  for (int k = 0; k < 64; ++k) {
    BeamMoments m;
    m.mean_x = u(rng);
    m.mean_p = u(rng);
    m.V_x = 0.6 + 0.1 * u(rng);
    m.V_p = 0.7 + 0.1 * u(rng);
    m.nbar = 0.5 * (m.V_x + m.V_p - 1.0 + m.mean_x * m.mean_x + m.mean_p * m.mean_p);
    traj.push_back(m);
  }
  const EnsembleStats a = ensemble_reduce(traj);
  std::vector<BeamMoments> shuffled = traj;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  // two worker batches concatenated in the opposite order
  std::vector<BeamMoments> merged(shuffled.begin() + 40, shuffled.end());
  merged.insert(merged.end(), shuffled.begin(), shuffled.begin() + 40);
  for (const auto& v : {shuffled, merged}) {
    const EnsembleStats b = ensemble_reduce(v);
    CHECK(b.nbar == doctest::Approx(a.nbar).epsilon(1e-12));
    CHECK(b.V_mean_pM == doctest::Approx(a.V_mean_pM).epsilon(1e-12));
    CHECK(b.se_nbar == doctest::Approx(a.se_nbar).epsilon(1e-9));
    CHECK(b.se_V_xM == doctest::Approx(a.se_V_xM).epsilon(1e-9));
  }
  // jackknife of a plain mean is the textbook standard error
  double mean = 0.0, ss = 0.0;
  for (const auto& m : traj) mean += m.V_x / 64.0;
  for (const auto& m : traj) ss += (m.V_x - mean) * (m.V_x - mean);
  CHECK(a.se_V_xM == doctest::Approx(std::sqrt(ss / 63.0 / 64.0)).epsilon(1e-10));
}

TEST_CASE("ensemble_reduce: occupation decomposition on Gaussian states") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<BeamMoments> traj;
  double direct = 0.0;
  const int count = 30;
  for (int k = 0; k < count; ++k) {
    const ComplexMatrix rho = squeezed_coherent(70, Complex(u(rng), u(rng)), 0.3 + 0.2 * u(rng), 3.0 * u(rng));
    const BeamMoments m = mode_moments(rho);
    direct += expectation(number_operator(70), rho).real() / count;
    traj.push_back(m);
  }
  const EnsembleStats e = ensemble_reduce(traj);
  CHECK(e.nbar == doctest::Approx(direct).epsilon(1e-10));
  CHECK(e.nbar_direct == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("effective_temperature: quoted occupations in the linear convention") {
  const double w = kTwoPi * 1e9;
  CHECK(effective_temperature(0.43, w, EnergyConvention::linear) == doctest::Approx(6.3e-3).epsilon(0.01));
  CHECK(effective_temperature(0.35, w, EnergyConvention::linear) == doctest::Approx(5.6e-3).epsilon(0.015));
  const double oracle = kHbar * 1e9 / (kBoltzmann * std::log(1.43 / 0.43));
  CHECK(effective_temperature(0.43, w, EnergyConvention::linear) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(effective_temperature(0.43, w, EnergyConvention::angular) ==
        doctest::Approx(kTwoPi * oracle).epsilon(1e-12));
}

TEST_CASE("effective_temperature: monotone, invertible, classical limit") {
  const double w = kTwoPi * 1e9;
  for (EnergyConvention c : {EnergyConvention::angular, EnergyConvention::linear}) {
    double prev = 0.0;
    for (double n = 0.01; n < 50.0; n *= 1.3) {
      const double t = effective_temperature(n, w, c);
      CHECK(t > prev);
      prev = t;
      CHECK(occupation_at_temperature(t, w, c) == doctest::Approx(n).epsilon(1e-12));
    }
  }
  const double t = effective_temperature(100.0, w, EnergyConvention::angular);
  CHECK(std::abs(t - kHbar * w * 100.0 / kBoltzmann) / t < 0.01);
  CHECK_THROWS_AS(effective_temperature(0.0, w, EnergyConvention::angular), Error);
  CHECK_THROWS_AS(effective_temperature(-1.0, w, EnergyConvention::linear), Error);
}

TEST_CASE("uncertainty_product: classes and flags") {
  const UncertaintyProduct vac = uncertainty_product(0.5, 0.5, 0.6);
  CHECK(vac.product == 0.25);
  CHECK_FALSE(vac.squeezed_x);
  CHECK_FALSE(vac.squeezed_p);
  CHECK(vac.classification != ProductClass::below_heisenberg);

  const double v = 0.5 / std::sqrt(0.6);
  const UncertaintyProduct lim = uncertainty_product(v, v, 0.6);
  CHECK(lim.product == doctest::Approx(0.25 / 0.6).epsilon(1e-15));
  CHECK(lim.classification == ProductClass::near_measurement_limit);

  const UncertaintyProduct sq = uncertainty_product(1.2, 0.45, 0.6);
  CHECK(sq.squeezed_p);
  CHECK_FALSE(sq.squeezed_x);
  CHECK(sq.classification == ProductClass::near_measurement_limit);

  CHECK(uncertainty_product(0.3, 0.5, 0.6).classification == ProductClass::below_heisenberg);
  CHECK(uncertainty_product(3.0, 3.0, 0.6).classification == ProductClass::thermal_scale);
  CHECK(std::string(product_class_name(ProductClass::thermal_scale)) == "thermal-scale");
  CHECK_THROWS_AS(uncertainty_product(-0.1, 0.5, 0.6), Error);
}
