// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/metrics.hpp"

#include <array>
#include <cmath>
#include <functional>

#include "nanofb/constants.hpp"

namespace nanofb {

namespace {

const Complex kI(0.0, 1.0);

ComplexMatrix x_quadrature(const ComplexMatrix& a) { return (a + a.adjoint()) / std::sqrt(2.0); }
ComplexMatrix p_quadrature(const ComplexMatrix& a) { return (a - a.adjoint()) / (kI * std::sqrt(2.0)); }

}  // namespace

QuadratureSet QuadratureSet::beam_only(int n_beam) {
  const ComplexMatrix b = fock_annihilation(n_beam);
  return {x_quadrature(b), p_quadrature(b), {}, {}};
}

QuadratureSet QuadratureSet::full(const HilbertSpec& space) {
  const ComplexMatrix b = embed(fock_annihilation(space.n_beam), Slot::beam, space);
  const ComplexMatrix a = embed(fock_annihilation(space.n_tlr), Slot::tlr, space);
  return {x_quadrature(b), p_quadrature(b), x_quadrature(a), p_quadrature(a)};
}

BeamMoments BeamMoments::rotated(double theta) const {
  const double c = std::cos(theta), s = std::sin(theta);
  BeamMoments r = *this;
  r.mean_x = c * mean_x + s * mean_p;
  r.mean_p = c * mean_p - s * mean_x;
  r.V_x = c * c * V_x + s * s * V_p + 2.0 * c * s * C_xp;
  r.V_p = s * s * V_x + c * c * V_p - 2.0 * c * s * C_xp;
  r.C_xp = c * s * (V_p - V_x) + (c * c - s * s) * C_xp;
  return r;
}

BeamMoments mode_moments(const ComplexMatrix& rho) {
  require_square(rho, "mode_moments");
  const int n = static_cast<int>(rho.rows());
  const ComplexMatrix a = fock_annihilation(n);
  const ComplexMatrix x = x_quadrature(a), p = p_quadrature(a);
  const ComplexMatrix xr = x * rho, pr = p * rho;
  BeamMoments m;
  m.mean_x = xr.trace().real();
  m.mean_p = pr.trace().real();
  m.V_x = (x * xr).trace().real() - m.mean_x * m.mean_x;
  m.V_p = (p * pr).trace().real() - m.mean_p * m.mean_p;
  m.C_xp = 0.5 * ((x * pr).trace().real() + (p * xr).trace().real()) - m.mean_x * m.mean_p;
  m.nbar = expectation(number_operator(n), rho).real();
  return m;
}

BeamMoments beam_moments(const DensityState& rho) {
  if (rho.dims.size() == 1) return mode_moments(rho.matrix);
  return mode_moments(partial_trace(rho, std::vector<int>{0}).matrix);
}

std::pair<double, double> conditional_variances(const DensityState& rho) {
  const BeamMoments m = beam_moments(rho);
  return {m.V_x, m.V_p};
}

double average_occupation(double V_x, double V_p, double V_mean_x, double V_mean_p, double mean_x, double mean_p) {
  return 0.5 * (V_x + V_p) - 0.5 + 0.5 * (V_mean_x + V_mean_p) + 0.5 * (mean_x * mean_x + mean_p * mean_p);
}

namespace {

// Per-trajectory sums from which every ensemble statistic is a smooth function.
struct Sums {
  std::array<double, 7> s{};  // x, p, x^2, p^2, V_x, V_p, nbar
  void add(const BeamMoments& m, double w) {
    s[0] += w * m.mean_x;
    s[1] += w * m.mean_p;
    s[2] += w * m.mean_x * m.mean_x;
    s[3] += w * m.mean_p * m.mean_p;
    s[4] += w * m.V_x;
    s[5] += w * m.V_p;
    s[6] += w * m.nbar;
  }
};

using StatVector = std::array<double, 9>;  // mean_x, mean_p, V_x, V_p, Vm_x, Vm_p, nbar, nbar_direct, unused

StatVector stats_from(const Sums& sums, double n) {
  StatVector v{};
  const auto& s = sums.s;
  v[0] = s[0] / n;
  v[1] = s[1] / n;
  v[2] = s[4] / n;
  v[3] = s[5] / n;
  v[4] = s[2] / n - v[0] * v[0];
  v[5] = s[3] / n - v[1] * v[1];
  v[6] = average_occupation(v[2], v[3], v[4], v[5], v[0], v[1]);
  v[7] = s[6] / n;
  return v;
}

}  // namespace

EnsembleStats ensemble_reduce(const std::vector<BeamMoments>& trajectories, double omega_M) {
  if (trajectories.empty()) throw Error(ErrorCode::empty_input, "ensemble_reduce: no trajectories");
  const std::size_t n = trajectories.size();
  Sums total;
  for (const auto& m : trajectories) total.add(m, 1.0);
  const StatVector full = stats_from(total, static_cast<double>(n));

  StatVector se{};
  if (n >= 2) {
    std::vector<StatVector> loo(n);
    StatVector avg{};
    for (std::size_t i = 0; i < n; ++i) {
      Sums s = total;
      s.add(trajectories[i], -1.0);
      loo[i] = stats_from(s, static_cast<double>(n - 1));
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += loo[i][k] / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < se.size(); ++k) se[k] += std::pow(loo[i][k] - avg[k], 2);
    for (auto& v : se) v = std::sqrt(v * static_cast<double>(n - 1) / static_cast<double>(n));
  }

  EnsembleStats e;
  e.n_traj = static_cast<int>(n);
  e.mean_xM = full[0];
  e.mean_pM = full[1];
  e.V_xM = full[2];
  e.V_pM = full[3];
  e.V_mean_xM = full[4];
  e.V_mean_pM = full[5];
  e.nbar = full[6];
  e.nbar_direct = full[7];
  e.se_mean_xM = se[0];
  e.se_mean_pM = se[1];
  e.se_V_xM = se[2];
  e.se_V_pM = se[3];
  e.se_V_mean_xM = se[4];
  e.se_V_mean_pM = se[5];
  e.se_nbar = se[6];
  e.se_nbar_direct = se[7];
  if (omega_M > 0.0 && e.nbar > 0.0) {
    e.Teff_angular = effective_temperature(e.nbar, omega_M, EnergyConvention::angular);
    e.Teff_linear = effective_temperature(e.nbar, omega_M, EnergyConvention::linear);
  }
  return e;
}

double effective_temperature(double nbar, double omega_M, EnergyConvention convention) {
  if (!(nbar > 0.0)) throw Error(ErrorCode::invalid_argument, "effective_temperature: nbar must be positive");
  const double w = convention == EnergyConvention::angular ? omega_M : omega_M / constants::two_pi;
  return constants::hbar * w / (constants::k_boltzmann * std::log1p(1.0 / nbar));
}

double occupation_at_temperature(double temperature, double omega_M, EnergyConvention convention) {
  return thermal_occupation(omega_M, temperature, convention);
}

const char* product_class_name(ProductClass c) {
  switch (c) {
    case ProductClass::below_heisenberg: return "below-heisenberg";
    case ProductClass::near_measurement_limit: return "near-measurement-limit";
    case ProductClass::thermal_scale: return "thermal-scale";
  }
  return "?";
}

UncertaintyProduct uncertainty_product(double V_x, double V_p, double eta) {
  if (V_x < 0.0 || V_p < 0.0) throw Error(ErrorCode::invalid_argument, "uncertainty_product: negative variance");
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorCode::invalid_argument, "uncertainty_product: eta out of (0,1]");
  UncertaintyProduct u;
  u.product = V_x * V_p;
  const double limit = 0.25 / eta;
  if (u.product < 0.25 - 1e-8) {
    u.classification = ProductClass::below_heisenberg;
  } else if (u.product <= 2.0 * limit) {
    u.classification = ProductClass::near_measurement_limit;
  } else {
    u.classification = ProductClass::thermal_scale;
  }
  u.squeezed_x = V_x < 0.5;
  u.squeezed_p = V_p < 0.5;
  return u;
}

}  // namespace nanofb
