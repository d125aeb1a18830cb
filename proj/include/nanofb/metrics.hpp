// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "nanofb/operators.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

// Quadrature moments throughout are in units of hbar (variances) and
// sqrt(hbar) (means): x = (b + b^+)/sqrt(2), p = (b - b^+)/(i sqrt(2)).

struct QuadratureSet {
  ComplexMatrix x_M, p_M, x_T, p_T;  // x_T, p_T empty on a beam-only space

  static QuadratureSet beam_only(int n_beam);
  static QuadratureSet full(const HilbertSpec& space);
};

struct BeamMoments {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double V_x = 0.5;
  double V_p = 0.5;
  double C_xp = 0.0;  // symmetrized
  double nbar = 0.0;  // <b^+ b>

  /// Moments of the frame rotated by angle theta: b -> b e^{-i theta}.
  BeamMoments rotated(double theta) const;
};

/// Single-mode moments from a density matrix on one Fock factor.
BeamMoments mode_moments(const ComplexMatrix& rho_mode);
BeamMoments beam_moments(const DensityState& rho);

/// (V_xM, V_pM) of the conditional state, in units of hbar.
std::pair<double, double> conditional_variances(const DensityState& rho);

struct EnsembleStats {
  double mean_xM = 0.0, mean_pM = 0.0;
  double V_xM = 0.0, V_pM = 0.0;
  double V_mean_xM = 0.0, V_mean_pM = 0.0;
  double nbar = 0.0;
  double nbar_direct = 0.0;  // ensemble mean of <b^+ b>
  double Teff_angular = 0.0, Teff_linear = 0.0;
  int n_traj = 0;

  double se_mean_xM = 0.0, se_mean_pM = 0.0;
  double se_V_xM = 0.0, se_V_pM = 0.0;
  double se_V_mean_xM = 0.0, se_V_mean_pM = 0.0;
  double se_nbar = 0.0, se_nbar_direct = 0.0;
};

/// Reduction over trajectories with jackknife standard errors. omega_M is
/// used only for the effective temperatures (left at 0 when omega_M <= 0
/// or nbar <= 0).
EnsembleStats ensemble_reduce(const std::vector<BeamMoments>& trajectories, double omega_M = 0.0);

/// Occupation from stationary moments: (V_x + V_p)/2 - 1/2 + (V<x> + V<p>)/2 + (x^2 + p^2)/2.
double average_occupation(double V_x, double V_p, double V_mean_x, double V_mean_p, double mean_x, double mean_p);

double effective_temperature(double nbar, double omega_M, EnergyConvention convention);
double occupation_at_temperature(double temperature, double omega_M, EnergyConvention convention);

enum class ProductClass { below_heisenberg, near_measurement_limit, thermal_scale };

const char* product_class_name(ProductClass c);

struct UncertaintyProduct {
  double product = 0.0;  // units of hbar^2
  ProductClass classification = ProductClass::thermal_scale;
  bool squeezed_x = false;
  bool squeezed_p = false;
};

/// near_measurement_limit: within a factor 2 of 1/(4 eta).
UncertaintyProduct uncertainty_product(double V_x, double V_p, double eta);

}  // namespace nanofb
