// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/estimator.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "nanofb/rng.hpp"

namespace nanofb {

namespace {

const Complex kI(0.0, 1.0);

void check_finite(const FilterState& f) {
  const bool ok = std::isfinite(f.sx) && std::isfinite(f.sy) && std::isfinite(f.sz) && std::isfinite(f.b_mean.real()) &&
                  std::isfinite(f.b_mean.imag()) && std::isfinite(f.a_mean.real()) && std::isfinite(f.a_mean.imag()) &&
                  std::isfinite(f.V_xT) && std::isfinite(f.V_pT) && std::isfinite(f.C_xTpT);
  if (!ok) throw Error(ErrorCode::blowup, "filter blowup: non-finite estimator state");
}

bool same_dt(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

void FilterState::validate() const {
  if (sx * sx + sy * sy + sz * sz > 1.0 + 1e-6) throw Error(ErrorCode::invalid_argument, "Bloch vector longer than 1");
  if (V_xT < 0.0 || V_pT < 0.0) throw Error(ErrorCode::invalid_argument, "negative resonator variance");
  if (std::abs(C_xTpT) > std::sqrt(V_xT * V_pT) + 1e-9) {
    throw Error(ErrorCode::invalid_argument, "resonator covariance exceeds the Cauchy-Schwarz bound");
  }
}

FilterState mb_step(const FilterState& f, const DerivedParams& d, const PhysicalParams& p, const ControlGains& g,
                    double dW, double dt) {
  const double dephase = 2.0 * p.gamma_S * (p.M_phi * p.M_phi + 0.25 * p.M_r * p.M_r);
  const double relax = p.gamma_S * p.M_r * p.M_r;
  const double w = d.omega_S;
  const double x = 2.0 * f.a_mean.real();  // <a + a^+>
  const double y = 2.0 * f.a_mean.imag();  // <-i a + i a^+>

  FilterState n = f;
  n.sx = f.sx + dt * (-w * f.sy - dephase * f.sx);
  n.sy = f.sy + dt * (w * f.sx - dephase * f.sy);
  n.sz = f.sz + dt * (-relax * f.sz - relax);
  n.b_mean = f.b_mean + dt * (-kI * p.omega_M * f.b_mean + d.g_MT * f.sz * f.a_mean - 0.5 * d.gamma_M * f.b_mean);
  n.a_mean = f.a_mean +
             dt * (-kI * p.omega_T * f.a_mean - d.g_MT * f.sz * f.b_mean - 0.5 * p.gamma_T * f.a_mean +
                   kI * g.v_x * x - kI * g.v_p * y) +
             std::sqrt(p.eta * p.gamma_T) * Complex(f.V_xT - 0.5, f.C_xTpT) * dW;
  check_finite(n);
  return n;
}

FilterState variance_step(const FilterState& f, const PhysicalParams& p, double dt) {
  const double gt = p.gamma_T, wt = p.omega_T, k = 2.0 * p.eta * p.gamma_T;
  const double ex = f.V_xT - 0.5;
  FilterState n = f;
  n.V_xT = f.V_xT + dt * (-gt * f.V_xT + 2.0 * wt * f.C_xTpT + 0.5 * gt - k * ex * ex);
  n.V_pT = f.V_pT + dt * (-gt * f.V_pT - 2.0 * wt * f.C_xTpT + 0.5 * gt - k * f.C_xTpT * f.C_xTpT);
  n.C_xTpT = f.C_xTpT + dt * (-gt * f.C_xTpT + wt * f.V_pT - wt * f.V_xT - k * ex * f.C_xTpT);
  check_finite(n);
  return n;
}

double feedback_u(const FilterState& f, const ControlGains& g) {
  return -2.0 * g.v_x * f.a_mean.real() + 2.0 * g.v_p * f.a_mean.imag();
}

EstimatorController::EstimatorController(const FilterState& f0, const DerivedParams& d, const PhysicalParams& p,
                                         const ControlGains& g, bool keep_history)
    : state_(f0), d_(d), p_(p), g_(g), keep_(keep_history) {
  f0.validate();
}

double EstimatorController::control(double) {
  if (keep_) history_.push_back(state_);
  return feedback_u(state_, g_);
}

void EstimatorController::observe(double, double dY, double dt) {
  const double dW = dY - std::sqrt(p_.eta * p_.gamma_T) * 2.0 * state_.a_mean.real() * dt;
  FilterState next = mb_step(state_, d_, p_, g_, dW, dt);
  const FilterState var = variance_step(state_, p_, dt);
  next.V_xT = var.V_xT;
  next.V_pT = var.V_pT;
  next.C_xTpT = var.C_xTpT;
  state_ = next;
}

ClosedLoopSeries run_closed_loop(const FilterState& f0, const DerivedParams& d, const PhysicalParams& p,
                                 const ClosedLoopConfig& cfg, const ControlGains& g) {
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::invalid_argument, "closed loop: dt must be positive");
  if (cfg.steps < 0) throw Error(ErrorCode::invalid_argument, "closed loop: steps must be >= 0");
  ClosedLoopSeries out;
  const auto n = static_cast<std::size_t>(cfg.steps);

  if (cfg.plant == PlantKind::full_sme) {
    if (!cfg.model) throw Error(ErrorCode::invalid_argument, "closed loop: full-sme plant needs a model");
    if (!same_dt(cfg.sme.dt, cfg.dt)) throw Error(ErrorCode::invalid_argument, "closed loop: plant and filter dt differ");
    SmeConfig sme = cfg.sme;
    sme.steps = cfg.steps;
    sme.sample_stride = 1;
    EstimatorController ctl(f0, d, p, g, true);
    const TrajectoryRecord rec = simulate_trajectory(cfg.rho0, *cfg.model, sme, ctl, 0);
    out.states = ctl.history();
    out.repairs = rec.repairs;
    for (const auto& s : rec.samples) {
      out.time.push_back(s.time);
      out.u.push_back(s.u);
      out.dY.push_back(s.dY);
    }
    return out;
  }

  if (cfg.plant == PlantKind::replay) {
    if (cfg.replay_dt > 0.0 && !same_dt(cfg.replay_dt, cfg.dt)) {
      throw Error(ErrorCode::invalid_argument, "closed loop: replayed record dt differs from the filter dt");
    }
    if (cfg.replay_dY.size() < n) throw Error(ErrorCode::invalid_argument, "closed loop: replayed record too short");
  }

  GaussianStream rng(cfg.seed);
  EstimatorController ctl(f0, d, p, g, false);
  const double k = std::sqrt(p.eta * p.gamma_T);
  out.time.reserve(n);
  out.states.reserve(n);
  out.u.reserve(n);
  out.dY.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    out.time.push_back(t);
    out.states.push_back(ctl.state());
    out.u.push_back(ctl.control(t));
    const double dY = cfg.plant == PlantKind::replay
                          ? cfg.replay_dY[i]
                          : k * 2.0 * ctl.state().a_mean.real() * cfg.dt + rng.wiener(cfg.dt);
    out.dY.push_back(dY);
    ctl.observe(t, dY, cfg.dt);
  }
  return out;
}

void write_closed_loop_csv(std::ostream& os, const ClosedLoopSeries& s) {
  os << "time_s,sx,sy,sz,re_b,im_b,re_a,im_a,VxT,VpT,CxTpT,u,dY\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < s.time.size(); ++i) {
    const FilterState& f = s.states[i];
    os << s.time[i] << ',' << f.sx << ',' << f.sy << ',' << f.sz << ',' << f.b_mean.real() << ',' << f.b_mean.imag()
       << ',' << f.a_mean.real() << ',' << f.a_mean.imag() << ',' << f.V_xT << ',' << f.V_pT << ',' << f.C_xTpT << ','
       << s.u[i] << ',' << s.dY[i] << '\n';
  }
}

}  // namespace nanofb
