// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "nanofb/operators.hpp"

namespace nanofb {

/// Circuit and bath quantities, SI units. Frequencies and rates in rad/s.
struct PhysicalParams {
  double L = 0.0;        // H
  double C_j = 0.0;      // F, carried only
  double I_c = 0.0;      // A
  double m = 0.0;        // kg
  double eta = 1.0;
  double omega_M = 0.0;
  double Bl = 0.0;       // T m
  double Q = 1.0;
  double T_bath = 0.0;   // K
  double phi_e = 0.0;
  double gamma_S = 0.0;
  double gamma_T = 0.0;
  double g_ST = 0.0;
  double omega_T = 0.0;
  double M_phi = 1.0;
  double M_r = 1.0;

  void validate() const;
};

/// How the two-level splitting and tunnelling energies are turned into frequencies.
/// angular: E / hbar.  linear: E / h, with the number used as if it were rad/s.
enum class EnergyConvention { angular, linear };

const char* convention_name(EnergyConvention c);

struct DerivedParams {
  double beta_L = 0.0;
  double U_0 = 0.0;       // J
  double epsilon = 0.0;
  double Delta = 0.0;
  double omega_S = 0.0;
  double g_MS = 0.0;
  double g_MT = 0.0;
  double gamma_M = 0.0;
  double nbar_M = 0.0;
  double Delta_MS = 0.0;
  double Delta_ST = 0.0;

  double nbar_M_linear = 0.0;
  EnergyConvention convention = EnergyConvention::angular;
  /// Values obtained from the formulas, for every field that was overridden.
  std::map<std::string, double> formula_values;
  std::map<std::string, double> overrides;

  double chi_M() const { return g_MS * g_MS / Delta_MS; }
  double chi_T(double g_ST) const { return g_ST * g_ST / Delta_ST; }
};

/// Recognized override keys: omega_S, g_MS, g_MT, gamma_M.
DerivedParams derive_params(const PhysicalParams& p, const std::map<std::string, double>& overrides = {},
                            EnergyConvention convention = EnergyConvention::angular);

double thermal_occupation(double omega, double temperature, EnergyConvention convention = EnergyConvention::angular);

struct RegimeCheck {
  std::string name;
  double ratio = 0.0;
  double threshold = 0.0;
  bool upper_bound = true;  // pass iff ratio < threshold, else ratio > threshold
  bool passed = false;
};

struct RegimeReport {
  std::vector<RegimeCheck> checks;
  bool all_passed() const;
  const RegimeCheck* find(const std::string& name) const;
};

RegimeReport validate_regime(const PhysicalParams& p, const DerivedParams& d);

/// H(t)/hbar = H0 + sum_k (O_k e^{i nu_k t} + h.c.) + u (D e^{i nu_D t} + h.c.)
struct RotatingTerm {
  ComplexMatrix op;
  double frequency = 0.0;
};

struct HamiltonianParts {
  ComplexMatrix static_part;
  std::vector<RotatingTerm> rotating;
  RotatingTerm drive;
  ComplexMatrix at(double t, double u) const;
};

enum class HamiltonianKind { rwa, effective };

HamiltonianParts build_hamiltonian_parts(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                         HamiltonianKind kind, bool rotating_frame);

ComplexMatrix build_rwa_hamiltonian(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                    double u);
ComplexMatrix build_effective_hamiltonian(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                          double u);

}  // namespace nanofb
