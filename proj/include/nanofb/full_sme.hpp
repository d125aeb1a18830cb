// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "nanofb/metrics.hpp"
#include "nanofb/operators.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

struct SmeConfig {
  double dt = 0.0;                 // s
  long steps = 0;
  std::uint64_t seed = 0;
  HamiltonianKind hamiltonian_kind = HamiltonianKind::effective;
  int renormalize_every = 1;
  bool clamp_negativity = true;
  int sample_stride = 1;
  bool rotating_frame = false;

  void validate() const;
};

/// 200 steps per period of the qubit splitting.
double default_full_dt(const DerivedParams& d);

/// Receives the homodyne record and returns the control amplitude u (rad/s).
/// Implementations only ever see the record, never the simulated state.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual double control(double t) = 0;
  virtual void observe(double t, double dY, double dt) = 0;
};

class NullController final : public Controller {
 public:
  double control(double) override { return 0.0; }
  void observe(double, double, double) override {}
};

using ControllerFactory = std::function<std::unique_ptr<Controller>(std::size_t trajectory)>;

struct TrajectorySample {
  double time = 0.0;
  double dY = 0.0;
  double u = 0.0;
  double exp_xM = 0.0, exp_pM = 0.0;
  double V_xM = 0.0, V_pM = 0.0;
  double exp_xT = 0.0, exp_pT = 0.0;
  double exp_sz = 0.0;
  long repairs = 0;
  double nbar_M = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  double dt = 0.0;
  long steps = 0;
  long repairs = 0;
  double measurement_strength = 0.0;  // sqrt(eta gamma_T)
  double max_leakage_beam = 0.0;
  double max_leakage_tlr = 0.0;
  double max_trace_error = 0.0;
  bool dt_guard_exceeded = false;
  BeamMoments final_beam;
  DensityState final_state;
};

/// Columns time_s, dY, u, exp_xM, exp_pM, V_xM, V_pM, exp_xT, exp_pT, exp_sz, repairs.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);

struct StepResult {
  DensityState rho;
  double dY = 0.0;
  bool repaired = false;
};

/// Dense reference step of the conditional master equation with homodyne
/// monitoring of the resonator (lab frame, measured operator a).
StepResult sme_step(const DensityState& rho, const ComplexMatrix& H, const DerivedParams& d, const PhysicalParams& p,
                    double dW, double dt, bool clamp_negativity = true, long step_index = -1);

/// Precomputed sparse operators for fast repeated stepping.
class FullSmeModel {
 public:
  FullSmeModel(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space, HamiltonianKind kind,
               bool rotating_frame);

  struct Outcome {
    double dY = 0.0;
    bool repaired = false;
  };
  /// Advances rho in place from t to t + dt.
  Outcome step(ComplexMatrix& rho, double t, double u, double dW, double dt, bool clamp, bool renormalize) const;

  const HilbertSpec& space() const { return space_; }
  /// True when the Hamiltonian and channels keep qubit-diagonal states qubit-diagonal,
  /// so those states are propagated as two independent sectors.
  bool sector_mode() const;
  bool rotating_frame() const { return rotating_; }
  double measurement_strength() const { return meas_strength_; }
  double fastest_scale() const { return fastest_; }
  double omega_M() const { return omega_M_; }
  double omega_T() const { return omega_T_; }

  /// Lab-frame <a> for a state expressed in the model frame at time t.
  Complex tlr_amplitude(const ComplexMatrix& rho, double t) const;
  Complex qubit_sz(const ComplexMatrix& rho) const;
  BeamMoments lab_beam_moments(const ComplexMatrix& rho, double t) const;
  /// Top-two-level populations of beam and resonator.
  std::pair<double, double> leakage(const ComplexMatrix& rho) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  HilbertSpec space_;
  bool rotating_;
  double omega_M_, omega_T_;
  double meas_strength_;
  double fastest_;
};

TrajectoryRecord simulate_trajectory(const DensityState& rho0, const FullSmeModel& model, const SmeConfig& cfg,
                                     Controller& controller, std::uint64_t trajectory_index = 0,
                                     const std::vector<double>* replay_dW = nullptr);

TrajectoryRecord simulate_trajectory(const DensityState& rho0, const DerivedParams& d, const PhysicalParams& p,
                                     const SmeConfig& cfg, Controller& controller);

std::vector<TrajectoryRecord> run_full_ensemble(const DensityState& rho0, const FullSmeModel& model,
                                                const SmeConfig& cfg, std::size_t n_traj,
                                                const ControllerFactory& controllers, int workers = 0,
                                                bool keep_final_state = false);

struct InnovationReport {
  long samples = 0;
  double mean = 0.0;
  double variance_over_dt = 0.0;
  double mean_bound = 0.0;  // 4 sqrt(dt / N)
  double lag1_autocorrelation = 0.0;
  bool mean_ok = false;
  bool variance_ok = false;
};

/// Reconstructs dW = dY - sqrt(eta gamma_T) <a + a^+> dt from stored samples.
InnovationReport innovation_stats(const std::vector<TrajectoryRecord>& records, std::size_t min_trajectories = 30);

}  // namespace nanofb
