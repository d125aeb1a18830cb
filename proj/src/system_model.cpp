// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/system_model.hpp"

#include <cmath>
#include <sstream>

#include "nanofb/constants.hpp"

namespace nanofb {

namespace c = constants;

void PhysicalParams::validate() const {
  std::ostringstream bad;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) bad << " " << name << "=" << v;
  };
  positive("L", L);
  positive("I_c", I_c);
  positive("m", m);
  positive("omega_M", omega_M);
  positive("Bl", Bl);
  positive("Q", Q);
  positive("T_bath", T_bath);
  positive("gamma_S", gamma_S);
  positive("gamma_T", gamma_T);
  positive("g_ST", g_ST);
  positive("omega_T", omega_T);
  if (!(eta > 0.0 && eta <= 1.0)) bad << " eta=" << eta;
  if (!(M_phi >= 0.0) || !(M_r >= 0.0)) bad << " M_phi/M_r negative";
  if (!std::isfinite(phi_e)) bad << " phi_e=" << phi_e;
  if (!bad.str().empty()) throw Error(ErrorCode::invalid_argument, "invalid physical parameters:" + bad.str());
}

const char* convention_name(EnergyConvention conv) {
  return conv == EnergyConvention::angular ? "angular" : "linear";
}

double thermal_occupation(double omega, double temperature, EnergyConvention convention) {
  const double w = convention == EnergyConvention::angular ? omega : omega / c::two_pi;
  return 1.0 / std::expm1(c::hbar * w / (c::k_boltzmann * temperature));
}

DerivedParams derive_params(const PhysicalParams& p, const std::map<std::string, double>& overrides,
                            EnergyConvention convention) {
  p.validate();
  DerivedParams d;
  d.convention = convention;
  d.beta_L = c::two_pi * p.L * p.I_c / c::flux_quantum;
  if (!(d.beta_L > 1.0)) {
    throw Error(ErrorCode::regime, "two-level reduction invalid: beta_L = " + std::to_string(d.beta_L) + " <= 1");
  }
  d.U_0 = c::flux_quantum * c::flux_quantum / (8.0 * c::pi * p.L);

  const double eps_energy = p.I_c * c::flux_quantum * std::sqrt(6.0 * (d.beta_L - 1.0)) / c::pi;
  const double delta_energy = 3.0 * d.U_0 * std::pow(1.0 - 1.0 / d.beta_L, 2);
  const double to_freq = convention == EnergyConvention::angular ? 1.0 / c::hbar : 1.0 / (c::two_pi * c::hbar);
  d.epsilon = eps_energy * to_freq;
  d.Delta = delta_energy * to_freq;

  d.omega_S = d.Delta;
  d.g_MS = c::pi * c::hbar * d.epsilon * p.Bl / (c::flux_quantum * std::sqrt(2.0 * c::hbar * p.m * p.omega_M));
  d.gamma_M = p.omega_M / p.Q;

  auto apply = [&](const char* key, double& field) {
    auto it = overrides.find(key);
    if (it == overrides.end()) return;
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      throw Error(ErrorCode::invalid_argument, std::string("override ") + key + " must be positive");
    }
    d.formula_values[key] = field;
    d.overrides[key] = it->second;
    field = it->second;
  };
  for (const auto& [key, value] : overrides) {
    (void)value;
    if (key != "omega_S" && key != "g_MS" && key != "g_MT" && key != "gamma_M") {
      throw Error(ErrorCode::invalid_argument, "unknown derived override '" + key + "'");
    }
  }
  apply("omega_S", d.omega_S);
  apply("g_MS", d.g_MS);
  apply("gamma_M", d.gamma_M);

  d.Delta_MS = d.omega_S - p.omega_M;
  d.Delta_ST = d.omega_S - p.omega_T;
  if (!(d.Delta_MS > 0.0) || !(d.Delta_ST > 0.0)) {
    std::ostringstream msg;
    msg << "detunings must be positive: Delta_MS=" << d.Delta_MS << " Delta_ST=" << d.Delta_ST << " rad/s";
    throw Error(ErrorCode::detuning_sign, msg.str());
  }
  d.g_MT = d.g_MS * p.g_ST * (1.0 / d.Delta_MS + 1.0 / d.Delta_ST);
  apply("g_MT", d.g_MT);

  d.nbar_M = thermal_occupation(p.omega_M, p.T_bath, EnergyConvention::angular);
  d.nbar_M_linear = thermal_occupation(p.omega_M, p.T_bath, EnergyConvention::linear);
  return d;
}

bool RegimeReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const RegimeCheck* RegimeReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

RegimeReport validate_regime(const PhysicalParams& p, const DerivedParams& d) {
  RegimeReport r;
  auto below = [&](std::string name, double ratio, double thr) {
    r.checks.push_back({std::move(name), ratio, thr, true, ratio < thr});
  };
  auto above = [&](std::string name, double ratio, double thr) {
    r.checks.push_back({std::move(name), ratio, thr, false, ratio > thr});
  };
  below("large_detuning_MS", d.g_MS / d.Delta_MS, 0.1);
  below("large_detuning_ST", p.g_ST / d.Delta_ST, 0.1);
  const double thermal_rate = d.gamma_M * d.nbar_M;
  above("adiabatic_gamma_S", p.gamma_S / thermal_rate, 10.0);
  above("adiabatic_gamma_T", p.gamma_T / thermal_rate, 10.0);
  const double excess = d.beta_L - 1.0;
  r.checks.push_back({"beta_L_minus_1", excess, 0.2, true, excess > 0.0 && excess < 0.2});
  below("flux_bias_small", std::abs(p.phi_e), 0.1);
  const double wmin = std::min({p.omega_M, p.omega_T, d.omega_S});
  below("shift_gMS2_over_DeltaMS", d.g_MS * d.g_MS / d.Delta_MS / wmin, 0.05);
  below("shift_gST2_over_DeltaST", p.g_ST * p.g_ST / d.Delta_ST / wmin, 0.05);
  below("shift_gMT", d.g_MT / wmin, 0.05);
  return r;
}

ComplexMatrix HamiltonianParts::at(double t, double u) const {
  ComplexMatrix h = static_part;
  for (const auto& term : rotating) {
    const Complex ph = std::polar(1.0, term.frequency * t);
    h += ph * term.op + std::conj(ph) * term.op.adjoint();
  }
  if (u != 0.0) {
    const Complex ph = u * std::polar(1.0, drive.frequency * t);
    h += ph * drive.op + std::conj(ph) * drive.op.adjoint();
  }
  return h;
}

HamiltonianParts build_hamiltonian_parts(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                         HamiltonianKind kind, bool rotating_frame) {
  space.validate();
  const Complex I(0.0, 1.0);
  const ComplexMatrix b = embed(fock_annihilation(space.n_beam), Slot::beam, space);
  const ComplexMatrix a = embed(fock_annihilation(space.n_tlr), Slot::tlr, space);
  const ComplexMatrix sz = embed(pauli(Pauli::z), Slot::qubit, space);
  const ComplexMatrix sp = embed(pauli(Pauli::plus), Slot::qubit, space);
  const ComplexMatrix nb = b.adjoint() * b;
  const ComplexMatrix na = a.adjoint() * a;
  const int n = space.dim();

  HamiltonianParts h;
  h.static_part = ComplexMatrix::Zero(n, n);
  h.drive = {a.adjoint(), rotating_frame ? p.omega_T : 0.0};
  if (!rotating_frame) h.static_part += 0.5 * d.omega_S * sz + p.omega_M * nb + p.omega_T * na;

  if (kind == HamiltonianKind::rwa) {
    const ComplexMatrix ms = d.g_MS * b * sp;
    const ComplexMatrix st = -I * p.g_ST * a * sp;
    if (rotating_frame) {
      h.rotating.push_back({ms, d.omega_S - p.omega_M});
      h.rotating.push_back({st, d.omega_S - p.omega_T});
    } else {
      h.static_part += ms + ms.adjoint() + st + st.adjoint();
    }
  } else {
    h.static_part += (d.g_MS * d.g_MS / d.Delta_MS * nb + p.g_ST * p.g_ST / d.Delta_ST * na) * sz;
    const ComplexMatrix swap = -I * d.g_MT * b * a.adjoint() * sz;
    if (rotating_frame) {
      h.rotating.push_back({swap, p.omega_T - p.omega_M});
    } else {
      h.static_part += swap + swap.adjoint();
    }
  }
  return h;
}

ComplexMatrix build_rwa_hamiltonian(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                    double u) {
  return build_hamiltonian_parts(d, p, space, HamiltonianKind::rwa, false).at(0.0, u);
}

ComplexMatrix build_effective_hamiltonian(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                                          double u) {
  return build_hamiltonian_parts(d, p, space, HamiltonianKind::effective, false).at(0.0, u);
}

}  // namespace nanofb
