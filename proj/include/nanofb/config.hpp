// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nanofb/estimator.hpp"
#include "nanofb/reduced_beam.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

enum class Engine { full, reduced_sme, reduced_gaussian, filter_selfloop };

const char* engine_name(Engine e);
Engine parse_engine(const std::string& name);

struct SweepSpec {
  double v_x_over_omega_T = 0.5;
  double v_p_over_omega_T_min = 0.0;
  double v_p_over_omega_T_max = 0.0;
  int points = 0;
  std::vector<double> v_p_over_omega_T() const;
};

/// Everything a run needs, SI units throughout.
struct RunConfig {
  PhysicalParams physical;
  std::map<std::string, double> overrides;  // omega_S, g_MS, g_MT, gamma_M
  EnergyConvention convention = EnergyConvention::angular;

  int n_beam = 30;  // beam-only model
  int n_beam_full = 10;
  int n_tlr = 6;
  HamiltonianKind hamiltonian = HamiltonianKind::effective;
  bool rotating_frame = false;

  double dt = 0.0;  // s; 0 selects the engine default
  double dt_full = 0.0;
  double horizon = 0.0;  // s; 0 selects the engine default
  double dt_gamma_M = 0.0;  // alternatives in units of 1/gamma_M
  double dt_full_gamma_M = 0.0;
  double horizon_gamma_M = 0.0;
  std::uint64_t seed = 1;
  int n_traj = 1;
  int sample_stride = 1;
  int workers = 0;

  ControlGains gains;
  SweepSpec sweep;
  bool has_sweep = false;
  GainPurpose purpose = GainPurpose::cool;
  double region_threshold = 0.2;
  double flow_horizon_gamma_M = 200.0;

  Engine engine = Engine::reduced_gaussian;
  std::string out_dir = ".";

  DerivedParams derive() const;
  /// Step sizes and horizon resolved against gamma_M; zero when unset.
  double resolved_dt(const DerivedParams& d) const;
  double resolved_dt_full(const DerivedParams& d) const;
  double resolved_horizon(const DerivedParams& d) const;
  void validate() const;
};

/// Flat "key = value" text; '#' starts a comment. Frequency keys accept
/// _GHz, _MHz, _kHz and _Hz suffixes (cycles per second, converted to rad/s);
/// T_bath accepts _mK. Throws Error(config) on unknown or duplicate keys,
/// missing required keys, misplaced suffixes and bad values.
RunConfig parse_config(const std::string& text, const std::string& origin = "<text>");
RunConfig load_config(const std::string& path);

/// Applies one key in the same syntax as the file format.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical SI echo, parseable by parse_config and exact under round trip.
std::string config_echo(const RunConfig& cfg);

std::vector<std::string> required_keys();

std::vector<std::string> preset_names();
/// Throws Error(config) for an unknown name.
const std::string& preset_text(const std::string& name);
RunConfig load_preset(const std::string& name);

}  // namespace nanofb
