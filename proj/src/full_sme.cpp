// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/full_sme.hpp"

#include <cmath>
#include <sstream>

#include "kernels.hpp"
#include "nanofb/constants.hpp"
#include "nanofb/parallel.hpp"
#include "nanofb/rng.hpp"

namespace nanofb {

namespace {

const Complex kI(0.0, 1.0);

void check_finite(const ComplexMatrix& rho, long step_index) {
  if (!rho.allFinite()) {
    std::ostringstream msg;
    msg << "integration blowup: non-finite density matrix";
    if (step_index >= 0) msg << " at step " << step_index;
    throw Error(ErrorCode::blowup, msg.str());
  }
}

}  // namespace

void SmeConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::invalid_argument, "SmeConfig: dt must be positive");
  if (steps < 0) throw Error(ErrorCode::invalid_argument, "SmeConfig: steps must be >= 0");
  if (renormalize_every < 1 || sample_stride < 1) {
    throw Error(ErrorCode::invalid_argument, "SmeConfig: renormalize_every and sample_stride must be >= 1");
  }
}

double default_full_dt(const DerivedParams& d) { return constants::two_pi / (200.0 * d.omega_S); }

StepResult sme_step(const DensityState& rho, const ComplexMatrix& H, const DerivedParams& d, const PhysicalParams& p,
                    double dW, double dt, bool clamp_negativity, long step_index) {
  if (!rho.is_full_space()) throw Error(ErrorCode::shape, "sme_step needs a beam x qubit x resonator state");
  const HilbertSpec space{rho.dims[0], rho.dims[2]};
  require_same_shape(H, rho.matrix, "sme_step");
  const ComplexMatrix b = embed(fock_annihilation(space.n_beam), Slot::beam, space);
  const ComplexMatrix a = embed(fock_annihilation(space.n_tlr), Slot::tlr, space);
  const ComplexMatrix sz = embed(pauli(Pauli::z), Slot::qubit, space);
  const ComplexMatrix sm = embed(pauli(Pauli::minus), Slot::qubit, space);
  const ComplexMatrix& r = rho.matrix;

  ComplexMatrix drift = -kI * commutator(H, r);
  drift += d.gamma_M * d.nbar_M * dissipator(ComplexMatrix(b.adjoint()), r);
  drift += d.gamma_M * (d.nbar_M + 1.0) * dissipator(b, r);
  drift += p.gamma_S * p.M_phi * p.M_phi * dissipator(sz, r);
  drift += p.gamma_S * p.M_r * p.M_r * dissipator(sm, r);
  drift += p.gamma_T * dissipator(a, r);
  const double k = std::sqrt(p.eta * p.gamma_T);

  StepResult out;
  out.dY = k * expectation(ComplexMatrix(a + a.adjoint()), r).real() * dt + dW;
  ComplexMatrix next = r + dt * drift + k * dW * meas_superop(a, r);
  next = 0.5 * (next + next.adjoint()).eval();
  check_finite(next, step_index);
  if (clamp_negativity) out.repaired = repair_positivity(next);
  next /= next.trace().real();
  out.rho = DensityState(rho.dims, std::move(next));
  return out;
}

struct FullSmeModel::Impl {
  struct Channel {
    detail::Csr op;
    double rate;
  };
  struct Sector {
    std::vector<int> index;  // global basis indices, ascending
    detail::CombinedCsr k;   // -i H - 1/2 sum rate c^+ c, rotating and drive terms, measured operator
    std::vector<Channel> channels;
    detail::Csr meas;
  };
  struct Transfer {
    int from = -1, to = -1;
    double rate = 0.0;
  };

  std::vector<Sector> whole;    // single sector covering the full space
  std::vector<Sector> sectors;  // qubit-excited, qubit-ground
  Transfer lowering;            // qubit relaxation between sectors
  bool sector_mode = false;
  std::vector<double> rotating_frequencies;
  double drive_frequency = 0.0;
  SparseOperator a, sz;
  int n_tlr = 0;

  bool qubit_diagonal(const ComplexMatrix& rho) const {
    const auto& e = sectors[0].index;
    const auto& g = sectors[1].index;
    for (int j : g)
      for (int i : e)
        if (rho(i, j) != Complex(0.0)) return false;
    return true;
  }
};

namespace {

ComplexMatrix restrict_to(const ComplexMatrix& m, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  ComplexMatrix out(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = m(idx[i], idx[j]);
  return out;
}

bool crosses_sectors(const ComplexMatrix& m, const std::vector<int>& e, const std::vector<int>& g) {
  for (int i : e)
    for (int j : g)
      if (m(i, j) != Complex(0.0) || m(j, i) != Complex(0.0)) return true;
  return false;
}

}  // namespace

FullSmeModel::FullSmeModel(const DerivedParams& d, const PhysicalParams& p, const HilbertSpec& space,
                           HamiltonianKind kind, bool rotating_frame)
    : space_(space), rotating_(rotating_frame), omega_M_(p.omega_M), omega_T_(p.omega_T) {
  space.validate();
  auto impl = std::make_shared<Impl>();
  const HamiltonianParts h = build_hamiltonian_parts(d, p, space, kind, rotating_frame);
  const ComplexMatrix b = embed(fock_annihilation(space.n_beam), Slot::beam, space);
  const ComplexMatrix a = embed(fock_annihilation(space.n_tlr), Slot::tlr, space);
  const ComplexMatrix sz = embed(pauli(Pauli::z), Slot::qubit, space);
  const ComplexMatrix sm = embed(pauli(Pauli::minus), Slot::qubit, space);

  struct Jump {
    ComplexMatrix op;
    double rate;
    bool lowering;
  };
  const std::vector<Jump> jumps = {
      {b.adjoint(), d.gamma_M * d.nbar_M, false},
      {b, d.gamma_M * (d.nbar_M + 1.0), false},
      {sz, p.gamma_S * p.M_phi * p.M_phi, false},
      {sm, p.gamma_S * p.M_r * p.M_r, true},
      {a, p.gamma_T, false},
  };
  ComplexMatrix k = -kI * h.static_part;
  fastest_ = 0.0;
  for (const auto& j : jumps) {
    if (j.rate <= 0.0) continue;
    k -= 0.5 * j.rate * (j.op.adjoint() * j.op);
    fastest_ = std::max(fastest_, j.rate);
  }
  std::vector<ComplexMatrix> k_terms = {k};
  for (const auto& term : h.rotating) {
    k_terms.push_back(-kI * term.op);
    k_terms.push_back(-kI * term.op.adjoint());
    impl->rotating_frequencies.push_back(term.frequency);
    fastest_ = std::max(fastest_, std::abs(term.frequency));
  }
  k_terms.push_back(-kI * h.drive.op);
  k_terms.push_back(-kI * h.drive.op.adjoint());
  impl->drive_frequency = h.drive.frequency;
  if (!rotating_frame) fastest_ = std::max({fastest_, d.omega_S, p.omega_T, p.omega_M});

  auto make_sector = [&](const std::vector<int>& idx, bool skip_lowering) {
    Impl::Sector sec;
    sec.index = idx;
    std::vector<SparseOperator> terms;
    for (const auto& t : k_terms) terms.push_back(to_sparse(restrict_to(t, idx)));
    terms.push_back(to_sparse(restrict_to(a, idx)));
    sec.k = detail::CombinedCsr(terms);
    for (const auto& j : jumps) {
      if (j.rate <= 0.0 || (skip_lowering && j.lowering)) continue;
      const ComplexMatrix r = restrict_to(j.op, idx);
      if (r.isZero(0.0)) continue;
      sec.channels.push_back({detail::Csr::from(to_sparse(r)), j.rate});
    }
    sec.meas = detail::Csr::from(to_sparse(restrict_to(a, idx)));
    return sec;
  };

  const int n = space.dim();
  std::vector<int> all(n), excited, ground;
  for (int i = 0; i < n; ++i) {
    all[i] = i;
    ((i / space.n_tlr) % 2 == 0 ? excited : ground).push_back(i);
  }
  impl->whole.push_back(make_sector(all, false));

  bool separable = true;
  for (const auto& t : k_terms) separable = separable && !crosses_sectors(t, excited, ground);
  for (const auto& j : jumps)
    if (!j.lowering && j.rate > 0.0) separable = separable && !crosses_sectors(j.op, excited, ground);
  if (separable) {
    impl->sector_mode = true;
    impl->sectors.push_back(make_sector(excited, true));
    impl->sectors.push_back(make_sector(ground, true));
    impl->lowering = {0, 1, p.gamma_S * p.M_r * p.M_r};
  }
  impl->a = to_sparse(a);
  impl->sz = to_sparse(sz);
  impl->n_tlr = space.n_tlr;
  meas_strength_ = std::sqrt(p.eta * p.gamma_T);
  impl_ = std::move(impl);
}

bool FullSmeModel::sector_mode() const { return impl_->sector_mode; }

FullSmeModel::Outcome FullSmeModel::step(ComplexMatrix& rho, double t, double u, double dW, double dt, bool clamp,
                                         bool renormalize) const {
  const Impl& im = *impl_;
  std::vector<Complex> coeffs = {1.0};
  for (double f : im.rotating_frequencies) {
    const Complex ph = std::polar(1.0, f * t);
    coeffs.push_back(ph);
    coeffs.push_back(std::conj(ph));
  }
  const Complex drive = u * std::polar(1.0, im.drive_frequency * t);
  coeffs.push_back(drive);
  coeffs.push_back(std::conj(drive));

  const bool split = im.sector_mode && im.qubit_diagonal(rho);
  const auto& sectors = split ? im.sectors : im.whole;
  const std::size_t ns = sectors.size();
  std::vector<ComplexMatrix> r(ns);
  std::vector<bool> active(ns, false);
  for (std::size_t s = 0; s < ns; ++s) {
    r[s] = split ? restrict_to(rho, sectors[s].index) : rho;
    active[s] = !r[s].isZero(0.0);
  }
  const bool transfer = split && im.lowering.rate > 0.0 && active[im.lowering.from];
  if (transfer) active[im.lowering.to] = true;

  const Complex meas_phase = rotating_ ? std::polar(1.0, -omega_T_ * t) : Complex(1.0);
  double mean_x = 0.0;  // <L + L^+>
  for (std::size_t s = 0; s < ns; ++s)
    if (active[s]) mean_x += 2.0 * (meas_phase * detail::csr_trace_product(sectors[s].meas, r[s])).real();
  const double ds = meas_strength_ * dW;

  Outcome out;
  out.dY = meas_strength_ * mean_x * dt + dW;

  // per sector: W = rho (dt K + ds L)^+ - ds <L + L^+>/2 rho, rho' = rho + W + W^+ + dt sum rate c rho c^+
  for (auto& c : coeffs) c *= dt;
  coeffs.push_back(ds * meas_phase);
  std::vector<ComplexMatrix> next(ns);
  detail::Csr k;
  ComplexMatrix w, tmp;
  for (std::size_t s = 0; s < ns; ++s) {
    if (!active[s]) {
      next[s] = r[s];
      continue;
    }
    const auto& sec = sectors[s];
    sec.k.assemble(coeffs, k);
    detail::csr_right_adjoint(r[s], k, w);
    w -= (0.5 * ds * mean_x) * r[s];
    next[s] = r[s] + w + w.adjoint();
    for (const auto& ch : sec.channels) detail::csr_sandwich_add(ch.op, r[s], dt * ch.rate, tmp, next[s]);
  }
  if (transfer) next[im.lowering.to] += (dt * im.lowering.rate) * r[im.lowering.from];

  double trace = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (!active[s]) continue;
    next[s] = 0.5 * (next[s] + next[s].adjoint()).eval();
    check_finite(next[s], -1);
    if (clamp && repair_positivity(next[s], kNegativityClamp, false)) out.repaired = true;
    trace += next[s].trace().real();
  }
  const double scale = (renormalize || out.repaired) ? 1.0 / trace : 1.0;
  if (split) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& idx = sectors[s].index;
      const int m = static_cast<int>(idx.size());
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) rho(idx[i], idx[j]) = scale * next[s](i, j);
    }
  } else {
    rho = scale * next[0];
  }
  return out;
}

Complex FullSmeModel::tlr_amplitude(const ComplexMatrix& rho, double t) const {
  const Complex a = expectation(impl_->a, rho);
  return rotating_ ? a * std::polar(1.0, -omega_T_ * t) : a;
}

Complex FullSmeModel::qubit_sz(const ComplexMatrix& rho) const { return expectation(impl_->sz, rho); }

BeamMoments FullSmeModel::lab_beam_moments(const ComplexMatrix& rho, double t) const {
  const int nb = space_.n_beam, blk = 2 * space_.n_tlr;
  ComplexMatrix rb = ComplexMatrix::Zero(nb, nb);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) rb(i, j) = rho.block(i * blk, j * blk, blk, blk).trace();
  const BeamMoments m = mode_moments(rb);
  return rotating_ ? m.rotated(omega_M_ * t) : m;
}

std::pair<double, double> FullSmeModel::leakage(const ComplexMatrix& rho) const {
  const int nb = space_.n_beam, nt = space_.n_tlr;
  double beam = 0.0, tlr = 0.0;
  for (int i = 0; i < rho.rows(); ++i) {
    const double p = rho(i, i).real();
    const int lb = i / (2 * nt), lt = i % nt;
    if (lb >= nb - 2) beam += p;
    if (lt >= nt - 2) tlr += p;
  }
  return {beam, tlr};
}

TrajectoryRecord simulate_trajectory(const DensityState& rho0, const FullSmeModel& model, const SmeConfig& cfg,
                                     Controller& controller, std::uint64_t trajectory_index,
                                     const std::vector<double>* replay_dW) {
  cfg.validate();
  const HilbertSpec& space = model.space();
  if (rho0.dims != space.factor_dims()) throw Error(ErrorCode::shape, "initial state does not match the model space");
  if (replay_dW && static_cast<long>(replay_dW->size()) < cfg.steps) {
    throw Error(ErrorCode::invalid_argument, "replayed noise shorter than the requested number of steps");
  }
  GaussianStream rng = GaussianStream::substream(cfg.seed, trajectory_index);
  TrajectoryRecord rec;
  rec.dt = cfg.dt;
  rec.steps = cfg.steps;
  rec.measurement_strength = model.measurement_strength();
  rec.dt_guard_exceeded = cfg.dt * model.fastest_scale() > 0.1;
  rec.samples.reserve(static_cast<std::size_t>(cfg.steps / cfg.sample_stride + 1));

  ComplexMatrix rho = rho0.matrix;
  for (long n = 0; n < cfg.steps; ++n) {
    const double t = static_cast<double>(n) * cfg.dt;
    const double u = controller.control(t);
    const double dW = replay_dW ? (*replay_dW)[static_cast<std::size_t>(n)] : rng.wiener(cfg.dt);
    const bool sample = n % cfg.sample_stride == 0;
    TrajectorySample s;
    if (sample) {
      const BeamMoments m = model.lab_beam_moments(rho, t);
      const Complex a = model.tlr_amplitude(rho, t);
      s.time = t;
      s.u = u;
      s.exp_xM = m.mean_x;
      s.exp_pM = m.mean_p;
      s.V_xM = m.V_x;
      s.V_pM = m.V_p;
      s.nbar_M = m.nbar;
      s.exp_xT = std::sqrt(2.0) * a.real();
      s.exp_pT = std::sqrt(2.0) * a.imag();
      s.exp_sz = model.qubit_sz(rho).real();
      s.repairs = rec.repairs;
    }
    FullSmeModel::Outcome out;
    try {
      const bool renorm = (n + 1) % cfg.renormalize_every == 0;
      out = model.step(rho, t, u, dW, cfg.dt, cfg.clamp_negativity, renorm);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::blowup) throw;
      throw Error(ErrorCode::blowup, "integration blowup: non-finite density matrix at step " + std::to_string(n));
    }
    rec.max_trace_error = std::max(rec.max_trace_error, std::abs(rho.trace().real() - 1.0));
    if (out.repaired) ++rec.repairs;
    const auto [lb, lt] = model.leakage(rho);
    rec.max_leakage_beam = std::max(rec.max_leakage_beam, lb);
    rec.max_leakage_tlr = std::max(rec.max_leakage_tlr, lt);
    controller.observe(t, out.dY, cfg.dt);
    if (sample) {
      s.dY = out.dY;
      rec.samples.push_back(s);
    }
  }
  const double t_end = static_cast<double>(cfg.steps) * cfg.dt;
  rec.final_beam = model.lab_beam_moments(rho, t_end);
  rec.final_state = DensityState(space.factor_dims(), std::move(rho));
  return rec;
}

TrajectoryRecord simulate_trajectory(const DensityState& rho0, const DerivedParams& d, const PhysicalParams& p,
                                     const SmeConfig& cfg, Controller& controller) {
  if (!rho0.is_full_space()) throw Error(ErrorCode::shape, "simulate_trajectory needs a full-space state");
  const FullSmeModel model(d, p, HilbertSpec{rho0.dims[0], rho0.dims[2]}, cfg.hamiltonian_kind, cfg.rotating_frame);
  return simulate_trajectory(rho0, model, cfg, controller);
}

std::vector<TrajectoryRecord> run_full_ensemble(const DensityState& rho0, const FullSmeModel& model,
                                                const SmeConfig& cfg, std::size_t n_traj,
                                                const ControllerFactory& controllers, int workers,
                                                bool keep_final_state) {
  std::vector<TrajectoryRecord> out(n_traj);
  parallel_for(n_traj, workers, [&](std::size_t i) {
    std::unique_ptr<Controller> ctl = controllers ? controllers(i) : std::make_unique<NullController>();
    out[i] = simulate_trajectory(rho0, model, cfg, *ctl, i);
    if (!keep_final_state) out[i].final_state = DensityState();
  });
  return out;
}

InnovationReport innovation_stats(const std::vector<TrajectoryRecord>& records, std::size_t min_trajectories) {
  if (records.size() < min_trajectories) {
    throw Error(ErrorCode::too_few_samples, "innovation_stats needs at least " + std::to_string(min_trajectories) +
                                                " trajectories, got " + std::to_string(records.size()));
  }
  InnovationReport r;
  double sum = 0.0, sum2 = 0.0, lag = 0.0, dt = 0.0;
  long lag_pairs = 0;
  for (const auto& rec : records) {
    dt = rec.dt;
    double prev = 0.0;
    bool have_prev = false;
    for (const auto& s : rec.samples) {
      const double dw = s.dY - rec.measurement_strength * std::sqrt(2.0) * s.exp_xT * rec.dt;
      sum += dw;
      sum2 += dw * dw;
      ++r.samples;
      if (have_prev) {
        lag += dw * prev;
        ++lag_pairs;
      }
      prev = dw;
      have_prev = true;
    }
  }
  if (r.samples < 2) throw Error(ErrorCode::too_few_samples, "innovation_stats: no samples recorded");
  const double n = static_cast<double>(r.samples);
  r.mean = sum / n;
  const double var = sum2 / n - r.mean * r.mean;
  r.variance_over_dt = var / dt;
  r.mean_bound = 4.0 * std::sqrt(dt / n);
  r.lag1_autocorrelation = lag_pairs > 0 ? (lag / lag_pairs - r.mean * r.mean) / var : 0.0;
  r.mean_ok = std::abs(r.mean) < r.mean_bound;
  r.variance_ok = r.variance_over_dt >= 0.95 && r.variance_over_dt <= 1.05;
  return r;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  os << "time_s,dY,u,exp_xM,exp_pM,V_xM,V_pM,exp_xT,exp_pT,exp_sz,repairs\n";
  const auto old = os.precision(17);
  for (const auto& s : rec.samples) {
    os << s.time << ',' << s.dY << ',' << s.u << ',' << s.exp_xM << ',' << s.exp_pM << ',' << s.V_xM << ',' << s.V_pM
       << ',' << s.exp_xT << ',' << s.exp_pT << ',' << s.exp_sz << ',' << s.repairs << '\n';
  }
  os.precision(old);
}

}  // namespace nanofb
