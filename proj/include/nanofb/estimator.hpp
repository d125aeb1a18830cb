// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nanofb/full_sme.hpp"
#include "nanofb/system_model.hpp"

namespace nanofb {

/// Semiclassical estimator state. Resonator moments in units of hbar.
struct FilterState {
  double sx = 0.0, sy = 0.0, sz = -1.0;
  Complex b_mean{0.0, 0.0};
  Complex a_mean{0.0, 0.0};
  double V_xT = 0.5, V_pT = 0.5;
  double C_xTpT = 0.0;

  /// Throws invalid_argument when the Bloch vector or the covariance is unphysical.
  void validate() const;
};

/// Feedback gains, rad/s.
struct ControlGains {
  double v_x = 0.0;
  double v_p = 0.0;
};

/// One Euler-Maruyama step of the mean equations with the feedback terms
/// substituted into the resonator equation. dW is the innovation.
FilterState mb_step(const FilterState& f, const DerivedParams& d, const PhysicalParams& p, const ControlGains& g,
                    double dW, double dt);

/// One Euler step of the resonator variance equations.
FilterState variance_step(const FilterState& f, const PhysicalParams& p, double dt);

/// u = -2 v_x Re<a> + 2 v_p Im<a>, rad/s.
double feedback_u(const FilterState& f, const ControlGains& g);

/// Estimator that drives the plant through the Controller hook.
class EstimatorController final : public Controller {
 public:
  EstimatorController(const FilterState& f0, const DerivedParams& d, const PhysicalParams& p, const ControlGains& g,
                      bool keep_history = false);

  double control(double t) override;
  void observe(double t, double dY, double dt) override;

  const FilterState& state() const { return state_; }
  const std::vector<FilterState>& history() const { return history_; }

 private:
  FilterState state_;
  DerivedParams d_;
  PhysicalParams p_;
  ControlGains g_;
  bool keep_;
  std::vector<FilterState> history_;
};

enum class PlantKind { self, replay, full_sme };

struct ClosedLoopConfig {
  double dt = 0.0;
  long steps = 0;
  std::uint64_t seed = 0;
  PlantKind plant = PlantKind::self;

  // replay
  std::vector<double> replay_dY;
  double replay_dt = 0.0;

  // full_sme
  const FullSmeModel* model = nullptr;
  DensityState rho0;
  SmeConfig sme;
};

struct ClosedLoopSeries {
  std::vector<double> time;
  std::vector<FilterState> states;  // state at each time, before the step
  std::vector<double> u;
  std::vector<double> dY;
  long repairs = 0;  // full_sme plant only
};

ClosedLoopSeries run_closed_loop(const FilterState& f0, const DerivedParams& d, const PhysicalParams& p,
                                 const ClosedLoopConfig& cfg, const ControlGains& g);

void write_closed_loop_csv(std::ostream& os, const ClosedLoopSeries& s);

}  // namespace nanofb
