// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nanofb/config.hpp"
#include "nanofb/metrics.hpp"
#include "nanofb/reduced_beam.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

const char* version_string();

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunManifest {
  std::string command;
  std::string version;
  std::string config_echo;
  DerivedParams derived;
  RegimeReport regime;
  std::vector<StageTiming> timings;
  std::vector<std::string> notes;
};

/// Config echo first, everything else as '#' comment lines, so the text
/// loads back with parse_config.
std::string manifest_text(const RunManifest& m);

/// Formula and pinned values side by side.
std::string derived_table(const DerivedParams& d);
std::string regime_text(const RegimeReport& r);
std::string derive_report(const RunConfig& cfg);

/// Stationary (reduced-gaussian) or end-of-horizon (ensemble engines)
/// moments for one gain pair.
struct PointResult {
  EnsembleStats stats;
  std::string status = "ok";  // ok, converged, diverged, not_converged, blowup
  std::string note;
  long steps = 0;  // per trajectory
  long repairs = 0;  // summed over trajectories
  long total_steps = 0;
  double min_robertson_margin = 0.0;
  double max_trace_error = 0.0;
  double max_leakage = 0.0;
  double t_end = 0.0;
  bool ok() const { return status == "ok" || status == "converged"; }
};

/// Thermal start at nbar_M; seed selects the noise of the ensemble engines.
PointResult evaluate_point(const RunConfig& cfg, const DerivedParams& d, const ControlGains& g, Engine engine,
                           std::uint64_t seed);

struct SweepRow {
  double v_p_over_omega_T = 0.0;
  double v_x_over_omega_T = 0.0;
  ControlGains gains;
  PointResult controlled;
  double xi = 0.0;  // NaN when the closed form is outside its validity
  double V_x_pred = 0.0;
  double V_p_pred = 0.0;
  bool region_ok = false;
  std::string notes;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  PointResult uncontrolled;
  RunManifest manifest;
  double eta = 1.0;
  double omega_M = 0.0;
  int diverged_rows() const;
};

/// A config without a sweep block gives a single row at (v_x, v_p).
SweepResult run_sweep(const RunConfig& cfg);

void write_sweep_csv(std::ostream& os, const SweepResult& s);
std::string sweep_summary(const SweepResult& s);

struct CrosscheckLine {
  std::string pair;    // e.g. "reduced-gaussian/reduced-sme"
  std::string moment;  // nbar, V_xM, V_pM, V_mean_xM, V_mean_pM
  double a = 0.0, b = 0.0;
  double se = 0.0;  // combined
  bool passed = false;
};

struct CrosscheckReport {
  std::vector<CrosscheckLine> lines;
  std::vector<std::string> inconsistencies;
  std::vector<std::string> notes;
  PointResult gaussian, reduced, full;
  bool full_run = false;
  RunManifest manifest;
  bool passed() const;
  std::string text() const;
};

/// The full model joins when cfg.engine == Engine::full.
CrosscheckReport run_crosscheck(const RunConfig& cfg);

struct SimulationResult {
  std::string csv;
  std::string summary;
  long steps = 0;
  long repairs = 0;
  RunManifest manifest;
};

/// One trajectory (index 0) with its full record.
SimulationResult run_simulation(const RunConfig& cfg);

/// Creates the directory as needed; throws Error(io).
void write_text_file(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace nanofb
