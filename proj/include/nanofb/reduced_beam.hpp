// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nanofb/estimator.hpp"
#include "nanofb/metrics.hpp"
#include "nanofb/operators.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

/// Coefficients of the beam-only model for one gain pair.
/// a ~ C1 b + C2 b^+ after eliminating resonator and qubit.
struct ReducedCoeffs {
  Complex C1{0.0, 0.0};
  Complex C2{0.0, 0.0};
  double chi = 0.0;  // rad^2/s^2
  Complex alpha_x{0.0, 0.0};
  Complex alpha_p{0.0, 0.0};
  Complex xi_M{0.0, 0.0};  // rad/s
  double g_MT = 0.0;

  /// Fills alpha_x, alpha_p and xi_M from C1, C2.
  static ReducedCoeffs assemble(Complex C1, Complex C2, double chi, double g_MT, double omega_T);
};

double gain_determinant(const ControlGains& g, const PhysicalParams& p);

/// Throws near_singular_gain when |chi| < 1e-6 omega_T^2.
ReducedCoeffs compute_coeffs(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p);

/// (omega_T g_MT^2 / chi^2)(v_p^2 - v_x^2)
double xi_M_real_approx(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p);

enum class GainPurpose { squeeze_x, squeeze_p, cool };

const char* gain_purpose_name(GainPurpose purpose);

struct GainRegionReport {
  /// gamma_T/(gamma_T + 4 v_p), (omega_T - 2 v_x)/omega_T, gamma_T g_MT^2 omega_T^2/(omega_M chi^2)
  std::array<double, 3> ratios{};
  std::array<bool, 3> ratio_ok{};
  double threshold = 0.2;
  bool in_window = false;
  double window_margin = 0.0;  // distance to the nearest window edge in units of omega_T; negative outside
  bool ratios_passed() const { return ratio_ok[0] && ratio_ok[1] && ratio_ok[2]; }
  bool passed() const { return ratios_passed() && in_window; }
};

/// Windows: v_x = omega_T/2 and v_p/omega_T in [0.5, 1] (squeeze_x), [0.3, 0.5]
/// (squeeze_p), [0.3, 1] (cool).
GainRegionReport check_gain_region(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p,
                                   GainPurpose purpose, double threshold = 0.2);

struct ClosedFormPrediction {
  double V_x_pred = 0.0;  // units of hbar
  double V_p_pred = 0.0;
  double xi = 0.0;
  double xi_approx = 0.0;  // xi evaluated with the approximate Re xi_M
  double re_xi_M = 0.0;
  double re_xi_M_approx = 0.0;
  bool region_ok = false;
  std::string warning;
};

/// Throws out_of_validity when xi <= 0.
ClosedFormPrediction closed_form_prediction(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                            const PhysicalParams& p, GainPurpose purpose = GainPurpose::cool,
                                            double threshold = 0.2);

// ---------------------------------------------------------------------------
// Beam-only conditional master equation on a truncated Fock space

struct ReducedStep {
  DensityState rho;
  double dY = 0.0;
  double u_tilde = 0.0;
  bool repaired = false;
};

/// Dense reference step, lab frame.
ReducedStep reduced_sme_step(const DensityState& rho, const ReducedCoeffs& rc, const DerivedParams& d,
                             const PhysicalParams& p, const ControlGains& g, double dW, double dt,
                             bool clamp_negativity = true);

class ReducedSmeModel {
 public:
  /// rotating_frame removes the omega_M rotation; only allowed when the model
  /// is phase covariant (zero gains).
  ReducedSmeModel(const ReducedCoeffs& rc, const DerivedParams& d, const PhysicalParams& p, const ControlGains& g,
                  int n_beam, bool rotating_frame = false);

  struct Outcome {
    double dY = 0.0;
    double u_tilde = 0.0;
    bool repaired = false;
  };
  Outcome step(ComplexMatrix& rho, double t, double dW, double dt, bool clamp, bool renormalize) const;

  int n_beam() const { return n_beam_; }
  bool rotating_frame() const { return rotating_; }
  double measurement_strength() const { return meas_strength_; }
  double fastest_scale() const { return fastest_; }
  /// Moments in the lab frame.
  BeamMoments moments(const ComplexMatrix& rho, double t) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  int n_beam_;
  bool rotating_;
  double omega_M_;
  double meas_strength_;
  double fastest_;
};

/// Euler step bound: dt * fastest_scale <= 0.01.
double default_reduced_dt(const ReducedSmeModel& model);

struct ReducedConfig {
  double dt = 0.0;
  long steps = 0;
  std::uint64_t seed = 0;
  bool clamp_negativity = true;
  int sample_stride = 0;  // 0: no samples, only the final moments
};

struct ReducedRecord {
  std::vector<double> time;
  std::vector<BeamMoments> samples;
  std::vector<double> dY;
  long steps = 0;
  long repairs = 0;
  double max_leakage = 0.0;  // top-two-level population
  double max_trace_error = 0.0;
  double min_robertson_margin = 0.0;  // min over sampled states of V_x V_p - C^2 - 1/4
  bool blowup = false;
  std::string error;
  BeamMoments final_moments;
};

ReducedRecord simulate_reduced_trajectory(const DensityState& rho0, const ReducedSmeModel& model,
                                          const ReducedConfig& cfg, std::uint64_t trajectory_index);

/// Trajectories that blow up are kept with blowup = true.
std::vector<ReducedRecord> run_reduced_ensemble(const DensityState& rho0, const ReducedSmeModel& model,
                                                const ReducedConfig& cfg, std::size_t n_traj, int workers = 0);

// ---------------------------------------------------------------------------
// Gaussian moment flow

struct GaussianMoments {
  double mean_x = 0.0, mean_p = 0.0;
  double V_x = 0.5, V_p = 0.5, C_xp = 0.0;                // conditional (quantum) covariance
  double V_mean_x = 0.0, V_mean_p = 0.0, C_mean_xp = 0.0;  // spread of conditional means

  static GaussianMoments thermal(double nbar);
  double nbar() const;
};

struct GaussianFlowOptions {
  double horizon_gamma_M = 200.0;  // cap, units of 1/gamma_M
  double window_gamma_M = 1.0;
  double tolerance = 1e-10;
  double divergence_limit = 1e12;
};

enum class FlowStatus { converged, diverged, not_converged };

const char* flow_status_name(FlowStatus s);

struct GaussianFlowResult {
  GaussianMoments moments;
  FlowStatus status = FlowStatus::not_converged;
  double time = 0.0;  // s
  int windows = 0;
  double last_change = 0.0;
  double max_mean_growth_rate = 0.0;  // largest real part of the mean-drift spectrum
  bool converged() const { return status == FlowStatus::converged; }
};

GaussianFlowResult gaussian_moment_flow(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                        const PhysicalParams& p, const GaussianMoments& x0,
                                        const GaussianFlowOptions& opt = {});

/// Moments after a fixed time t from x0.
GaussianMoments gaussian_moments_at(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                    const PhysicalParams& p, const GaussianMoments& x0, double t);

}  // namespace nanofb
