// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/reduced_beam.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kernels.hpp"
#include "nanofb/parallel.hpp"
#include "nanofb/rng.hpp"

namespace nanofb {

namespace {

const Complex kI(0.0, 1.0);

double one_norm(const ComplexMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

}  // namespace

ReducedCoeffs ReducedCoeffs::assemble(Complex C1, Complex C2, double chi, double g_MT, double omega_T) {
  ReducedCoeffs rc;
  rc.C1 = C1;
  rc.C2 = C2;
  rc.chi = chi;
  rc.g_MT = g_MT;
  rc.alpha_x = C1 + std::conj(C2);
  rc.alpha_p = -kI * C1 + kI * std::conj(C2);
  rc.xi_M = omega_T * std::conj(C2) * C1 - kI * g_MT * std::conj(C2);
  return rc;
}

double gain_determinant(const ControlGains& g, const PhysicalParams& p) {
  return 0.25 * p.gamma_T * (p.gamma_T + 4.0 * g.v_p) + p.omega_T * (p.omega_T - 2.0 * g.v_x);
}

ReducedCoeffs compute_coeffs(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p) {
  const double chi = gain_determinant(g, p);
  if (!(std::abs(chi) >= 1e-6 * p.omega_T * p.omega_T)) {
    std::ostringstream msg;
    msg << "near-singular gains: |chi| = " << std::abs(chi) << " below 1e-6 omega_T^2";
    throw Error(ErrorCode::near_singular_gain, msg.str());
  }
  const double s = d.g_MT / chi;
  const Complex C1 = s * Complex(g.v_p + 0.5 * p.gamma_T, -(-g.v_x + p.omega_T));
  const Complex C2 = s * Complex(g.v_p, -g.v_x);
  return ReducedCoeffs::assemble(C1, C2, chi, d.g_MT, p.omega_T);
}

double xi_M_real_approx(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p) {
  const double chi = gain_determinant(g, p);
  return p.omega_T * d.g_MT * d.g_MT / (chi * chi) * (g.v_p - g.v_x) * (g.v_p + g.v_x);
}

const char* gain_purpose_name(GainPurpose purpose) {
  switch (purpose) {
    case GainPurpose::squeeze_x: return "squeeze-x";
    case GainPurpose::squeeze_p: return "squeeze-p";
    case GainPurpose::cool: return "cool";
  }
  return "?";
}

GainRegionReport check_gain_region(const ControlGains& g, const DerivedParams& d, const PhysicalParams& p,
                                   GainPurpose purpose, double threshold) {
  GainRegionReport r;
  r.threshold = threshold;
  const double chi = gain_determinant(g, p);
  r.ratios[0] = p.gamma_T / (p.gamma_T + 4.0 * g.v_p);
  r.ratios[1] = (p.omega_T - 2.0 * g.v_x) / p.omega_T;
  r.ratios[2] = p.gamma_T * d.g_MT * d.g_MT * p.omega_T * p.omega_T / (p.omega_M * chi * chi);
  for (int i = 0; i < 3; ++i) r.ratio_ok[i] = r.ratios[i] > 0.0 && r.ratios[i] < threshold;

  double lo = 0.3, hi = 1.0;
  if (purpose == GainPurpose::squeeze_x) lo = 0.5;
  if (purpose == GainPurpose::squeeze_p) hi = 0.5;
  const double vp = g.v_p / p.omega_T;
  const bool vx_ok = std::abs(g.v_x / p.omega_T - 0.5) <= 1e-9;
  r.window_margin = std::min(vp - lo, hi - vp);
  if (!vx_ok) r.window_margin = std::min(r.window_margin, -std::abs(g.v_x / p.omega_T - 0.5));
  r.in_window = vx_ok && r.window_margin >= -1e-12;
  return r;
}

ClosedFormPrediction closed_form_prediction(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                            const PhysicalParams& p, GainPurpose purpose, double threshold) {
  ClosedFormPrediction out;
  const GainRegionReport region = check_gain_region(g, d, p, purpose, threshold);
  out.region_ok = region.passed();
  if (!out.region_ok) out.warning = "gains outside the validity region of the closed-form estimate";
  out.re_xi_M = rc.xi_M.real();
  out.re_xi_M_approx = xi_M_real_approx(g, d, p);
  const double w = p.omega_M;
  out.xi = (w - 2.0 * out.re_xi_M) / (w + 2.0 * out.re_xi_M);
  out.xi_approx = (w - 2.0 * out.re_xi_M_approx) / (w + 2.0 * out.re_xi_M_approx);
  if (!(out.xi > 0.0)) {
    std::ostringstream msg;
    msg << "closed-form estimate invalid: xi = " << out.xi << " <= 0";
    throw Error(ErrorCode::out_of_validity, msg.str());
  }
  out.V_x_pred = 0.5 * std::sqrt(out.xi / p.eta);
  out.V_p_pred = 0.5 / std::sqrt(out.xi * p.eta);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BeamOps {
  ComplexMatrix b, bd, x_op, L;
};

BeamOps beam_ops(int n, const ReducedCoeffs& rc) {
  BeamOps o;
  o.b = fock_annihilation(n);
  o.bd = o.b.adjoint();
  o.L = rc.C1 * o.b + rc.C2 * o.bd;
  return o;
}

bool phase_covariant(const ReducedCoeffs& rc, const ControlGains& g) {
  return rc.C2 == Complex(0.0) && rc.xi_M == Complex(0.0) && g.v_x == 0.0 && g.v_p == 0.0;
}

double u_tilde_from(Complex b_mean, const ReducedCoeffs& rc, const ControlGains& g) {
  const double ax = 2.0 * (rc.alpha_x * b_mean).real();
  const double ap = 2.0 * (rc.alpha_p * b_mean).real();
  return -g.v_x * ax + g.v_p * ap;
}

}  // namespace

ReducedStep reduced_sme_step(const DensityState& rho, const ReducedCoeffs& rc, const DerivedParams& d,
                             const PhysicalParams& p, const ControlGains& g, double dW, double dt,
                             bool clamp_negativity) {
  if (rho.dims.size() != 1) throw Error(ErrorCode::shape, "reduced_sme_step needs a beam-only state");
  const int n = rho.dims[0];
  const BeamOps o = beam_ops(n, rc);
  const ComplexMatrix& r = rho.matrix;
  const Complex b_mean = (o.b * r).trace();

  ReducedStep out;
  out.u_tilde = u_tilde_from(b_mean, rc, g);
  const ComplexMatrix drive = rc.alpha_x * o.b + std::conj(rc.alpha_x) * o.bd;
  const ComplexMatrix H = p.omega_M * (o.bd * o.b) + rc.xi_M * (o.b * o.b) + std::conj(rc.xi_M) * (o.bd * o.bd) +
                          out.u_tilde * drive;
  ComplexMatrix drift = -kI * commutator(H, r);
  drift += d.gamma_M * d.nbar_M * dissipator(o.bd, r);
  drift += d.gamma_M * (d.nbar_M + 1.0) * dissipator(o.b, r);
  drift += p.gamma_T * dissipator(o.L, r);
  const double k = std::sqrt(p.eta * p.gamma_T);
  out.dY = k * (drive * r).trace().real() * dt + dW;
  ComplexMatrix next = r + dt * drift + k * dW * meas_superop(o.L, r);
  next = 0.5 * (next + next.adjoint()).eval();
  if (!next.allFinite()) throw Error(ErrorCode::blowup, "integration blowup: non-finite reduced density matrix");
  if (clamp_negativity) out.repaired = repair_positivity(next);
  next /= next.trace().real();
  out.rho = DensityState(rho.dims, std::move(next));
  return out;
}

struct ReducedSmeModel::Impl {
  detail::CombinedCsr k;  // static part, control drive, measured operator
  struct Channel {
    detail::Csr op;
    double rate;
  };
  std::vector<Channel> channels;
  detail::Csr meas;  // L
  detail::Csr b;
  ReducedCoeffs rc;
  ControlGains g;
};

ReducedSmeModel::ReducedSmeModel(const ReducedCoeffs& rc, const DerivedParams& d, const PhysicalParams& p,
                                 const ControlGains& g, int n_beam, bool rotating_frame)
    : n_beam_(n_beam), rotating_(rotating_frame), omega_M_(p.omega_M) {
  if (n_beam < 2) throw Error(ErrorCode::dimension, "beam truncation must be at least 2");
  if (rotating_frame && !phase_covariant(rc, g)) {
    throw Error(ErrorCode::invalid_argument, "rotating frame for the beam-only model requires zero gains");
  }
  auto impl = std::make_shared<Impl>();
  impl->rc = rc;
  impl->g = g;
  const BeamOps o = beam_ops(n_beam, rc);

  struct Jump {
    ComplexMatrix op;
    double rate;
  };
  const std::vector<Jump> jumps = {
      {o.bd, d.gamma_M * d.nbar_M},
      {o.b, d.gamma_M * (d.nbar_M + 1.0)},
      {o.L, p.gamma_T},
  };
  ComplexMatrix H = ComplexMatrix::Zero(n_beam, n_beam);
  if (!rotating_frame) {
    H = p.omega_M * (o.bd * o.b) + rc.xi_M * (o.b * o.b) + std::conj(rc.xi_M) * (o.bd * o.bd);
  }
  ComplexMatrix kstat = -kI * H;
  const double levels = static_cast<double>(n_beam - 1);
  double rates = 0.0;
  for (const auto& j : jumps) {
    if (j.rate <= 0.0 || j.op.isZero(0.0)) continue;
    kstat -= 0.5 * j.rate * (j.op.adjoint() * j.op);
    impl->channels.push_back({detail::Csr::from(to_sparse(j.op)), j.rate});
    rates += j.rate * one_norm(j.op.adjoint() * j.op);
  }
  const ComplexMatrix drive = -kI * (rc.alpha_x * o.b + std::conj(rc.alpha_x) * o.bd);
  impl->k = detail::CombinedCsr({to_sparse(kstat), to_sparse(drive), to_sparse(o.L)});
  impl->meas = detail::Csr::from(to_sparse(o.L));
  impl->b = detail::Csr::from(to_sparse(o.b));
  fastest_ = std::max(rates, (rotating_frame ? 0.0 : p.omega_M * levels) + 2.0 * std::abs(rc.xi_M) * levels);
  const double fb = std::abs(g.v_x) * std::abs(rc.alpha_x) + std::abs(g.v_p) * std::abs(rc.alpha_p);
  fastest_ = std::max(fastest_, 2.0 * fb * std::abs(rc.alpha_x) * levels);
  meas_strength_ = std::sqrt(p.eta * p.gamma_T);
  impl_ = std::move(impl);
}

double default_reduced_dt(const ReducedSmeModel& model) { return 0.01 / model.fastest_scale(); }

ReducedSmeModel::Outcome ReducedSmeModel::step(ComplexMatrix& rho, double t, double dW, double dt, bool clamp,
                                               bool renormalize) const {
  const Impl& im = *impl_;
  Outcome out;
  const Complex b_mean = detail::csr_trace_product(im.b, rho);
  out.u_tilde = u_tilde_from(b_mean, im.rc, im.g);
  const Complex phase = rotating_ ? std::polar(1.0, -omega_M_ * t) : Complex(1.0);
  const double mean_l = 2.0 * (phase * detail::csr_trace_product(im.meas, rho)).real();  // <L + L^+>
  const double ds = meas_strength_ * dW;
  out.dY = meas_strength_ * mean_l * dt + dW;

  detail::Csr k;
  im.k.assemble({Complex(dt), Complex(dt * out.u_tilde), ds * phase}, k);
  ComplexMatrix w, tmp;
  detail::csr_right_adjoint(rho, k, w);
  w -= (0.5 * ds * mean_l) * rho;
  ComplexMatrix next = rho + w + w.adjoint();
  for (const auto& ch : im.channels) detail::csr_sandwich_add(ch.op, rho, dt * ch.rate, tmp, next);
  next = 0.5 * (next + next.adjoint()).eval();
  if (!next.allFinite()) throw Error(ErrorCode::blowup, "integration blowup: non-finite reduced density matrix");
  if (clamp) out.repaired = repair_positivity(next, kNegativityClamp, false);
  if (renormalize || out.repaired) next /= next.trace().real();
  rho = std::move(next);
  return out;
}

BeamMoments ReducedSmeModel::moments(const ComplexMatrix& rho, double t) const {
  const BeamMoments m = mode_moments(rho);
  return rotating_ ? m.rotated(omega_M_ * t) : m;
}

ReducedRecord simulate_reduced_trajectory(const DensityState& rho0, const ReducedSmeModel& model,
                                          const ReducedConfig& cfg, std::uint64_t trajectory_index) {
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::invalid_argument, "reduced trajectory: dt must be positive");
  if (rho0.dims.size() != 1 || rho0.dims[0] != model.n_beam()) {
    throw Error(ErrorCode::shape, "initial state does not match the beam truncation");
  }
  GaussianStream rng = GaussianStream::substream(cfg.seed, trajectory_index);
  ReducedRecord rec;
  rec.steps = cfg.steps;
  rec.min_robertson_margin = std::numeric_limits<double>::infinity();
  ComplexMatrix rho = rho0.matrix;
  const int n = model.n_beam();
  auto observe = [&](double t) {
    const BeamMoments m = model.moments(rho, t);
    rec.min_robertson_margin = std::min(rec.min_robertson_margin, m.V_x * m.V_p - m.C_xp * m.C_xp - 0.25);
    return m;
  };
  long n_step = 0;
  try {
    for (; n_step < cfg.steps; ++n_step) {
      const double t = static_cast<double>(n_step) * cfg.dt;
      const double dW = rng.wiener(cfg.dt);
      const auto out = model.step(rho, t, dW, cfg.dt, cfg.clamp_negativity, true);
      if (out.repaired) ++rec.repairs;
      rec.max_trace_error = std::max(rec.max_trace_error, std::abs(rho.trace().real() - 1.0));
      rec.max_leakage = std::max(rec.max_leakage, rho(n - 1, n - 1).real() + rho(n - 2, n - 2).real());
      if (cfg.sample_stride > 0 && (n_step + 1) % cfg.sample_stride == 0) {
        const double tn = static_cast<double>(n_step + 1) * cfg.dt;
        rec.time.push_back(tn);
        rec.samples.push_back(observe(tn));
        rec.dY.push_back(out.dY);
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::blowup) throw;
    rec.blowup = true;
    rec.error = std::string(e.what()) + " at step " + std::to_string(n_step);
    return rec;
  }
  rec.final_moments = observe(static_cast<double>(cfg.steps) * cfg.dt);
  return rec;
}

std::vector<ReducedRecord> run_reduced_ensemble(const DensityState& rho0, const ReducedSmeModel& model,
                                                const ReducedConfig& cfg, std::size_t n_traj, int workers) {
  std::vector<ReducedRecord> out(n_traj);
  parallel_for(n_traj, workers, [&](std::size_t i) { out[i] = simulate_reduced_trajectory(rho0, model, cfg, i); });
  return out;
}

}  // namespace nanofb
