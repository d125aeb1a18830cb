// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "nanofb/constants.hpp"
#include "nanofb/error.hpp"
#include "nanofb/estimator.hpp"
#include "nanofb/full_sme.hpp"
#include "nanofb/parallel.hpp"

#ifndef NANOFB_VERSION_STRING
#define NANOFB_VERSION_STRING "unknown"
#endif

namespace nanofb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v, const char* f = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

bool zero_gains(const ControlGains& g) { return g.v_x == 0.0 && g.v_p == 0.0; }

void append_note(std::string& notes, const std::string& n) {
  if (n.empty()) return;
  if (!notes.empty()) notes += ';';
  notes += n;
}

double temperature_or_nan(double nbar, double omega_M, EnergyConvention c) {
  if (!(nbar > 0.0) || !std::isfinite(nbar)) return kNaN;
  return effective_temperature(nbar, omega_M, c);
}

EnsembleStats stats_from_gaussian(const GaussianMoments& m, double omega_M) {
  EnsembleStats s;
  s.mean_xM = m.mean_x;
  s.mean_pM = m.mean_p;
  s.V_xM = m.V_x;
  s.V_pM = m.V_p;
  s.V_mean_xM = m.V_mean_x;
  s.V_mean_pM = m.V_mean_p;
  s.nbar = m.nbar();
  s.nbar_direct = s.nbar;
  s.Teff_angular = temperature_or_nan(s.nbar, omega_M, EnergyConvention::angular);
  s.Teff_linear = temperature_or_nan(s.nbar, omega_M, EnergyConvention::linear);
  return s;
}

RunManifest base_manifest(const RunConfig& cfg, const DerivedParams& d, const char* command) {
  RunManifest m;
  m.command = command;
  m.version = version_string();
  m.config_echo = config_echo(cfg);
  m.derived = d;
  m.regime = validate_regime(cfg.physical, d);
  return m;
}

double horizon_or(const RunConfig& cfg, const DerivedParams& d, double fallback_gamma_M) {
  const double h = cfg.resolved_horizon(d);
  return h > 0.0 ? h : fallback_gamma_M / d.gamma_M;
}

long step_count(double horizon, double dt) { return std::max(1L, std::lround(horizon / dt)); }

DensityState full_initial_state(const RunConfig& cfg, const DerivedParams& d) {
  const HilbertSpec space{cfg.n_beam_full, cfg.n_tlr};
  return DensityState::on(space, kron(kron(thermal_state(cfg.n_beam_full, d.nbar_M), fock_state(2, 1)),
                                      fock_state(cfg.n_tlr, 0)));
}

double full_dt(const RunConfig& cfg, const DerivedParams& d, const FullSmeModel& model) {
  const double dt = cfg.resolved_dt_full(d);
  if (dt > 0.0) return dt;
  return cfg.rotating_frame ? 0.05 / model.fastest_scale() : default_full_dt(d);
}

ControllerFactory controller_factory(const DerivedParams& d, const PhysicalParams& p, const ControlGains& g) {
  if (zero_gains(g)) return [](std::size_t) { return std::make_unique<NullController>(); };
  return [d, p, g](std::size_t) { return std::make_unique<EstimatorController>(FilterState{}, d, p, g, false); };
}

PointResult evaluate_gaussian(const RunConfig& cfg, const DerivedParams& d, const ControlGains& g) {
  PointResult r;
  const ReducedCoeffs rc = compute_coeffs(g, d, cfg.physical);
  GaussianFlowOptions opt;
  opt.horizon_gamma_M = cfg.flow_horizon_gamma_M;
  const GaussianFlowResult f = gaussian_moment_flow(g, rc, d, cfg.physical, GaussianMoments::thermal(d.nbar_M), opt);
  r.status = flow_status_name(f.status);
  r.t_end = f.time;
  if (f.status != FlowStatus::converged) {
    r.note = "mean growth rate " + fmt(f.max_mean_growth_rate / d.gamma_M, "%.4g") + " gamma_M";
  }
  r.stats = stats_from_gaussian(f.moments, cfg.physical.omega_M);
  r.min_robertson_margin = f.moments.V_x * f.moments.V_p - f.moments.C_xp * f.moments.C_xp - 0.25;
  return r;
}

PointResult evaluate_reduced_sme(const RunConfig& cfg, const DerivedParams& d, const ControlGains& g,
                                 std::uint64_t seed) {
  PointResult r;
  const ReducedCoeffs rc = compute_coeffs(g, d, cfg.physical);
  const bool rotating = cfg.rotating_frame && zero_gains(g);
  if (cfg.rotating_frame && !rotating) r.note = "lab frame (nonzero gains)";
  const ReducedSmeModel model(rc, d, cfg.physical, g, cfg.n_beam, rotating);
  ReducedConfig rcfg;
  rcfg.dt = cfg.resolved_dt(d) > 0.0 ? cfg.resolved_dt(d) : default_reduced_dt(model);
  rcfg.steps = step_count(horizon_or(cfg, d, 10.0), rcfg.dt);
  rcfg.seed = seed;
  rcfg.sample_stride = cfg.sample_stride;
  const DensityState rho0({cfg.n_beam}, thermal_state(cfg.n_beam, d.nbar_M));
  const auto records = run_reduced_ensemble(rho0, model, rcfg, static_cast<std::size_t>(cfg.n_traj), cfg.workers);

  std::vector<BeamMoments> finals;
  long blowups = 0;
  r.steps = rcfg.steps;
  r.t_end = static_cast<double>(rcfg.steps) * rcfg.dt;
  r.min_robertson_margin = std::numeric_limits<double>::infinity();
  for (const auto& rec : records) {
    r.repairs += rec.repairs;
    r.total_steps += rec.steps;
    r.max_trace_error = std::max(r.max_trace_error, rec.max_trace_error);
    r.max_leakage = std::max(r.max_leakage, rec.max_leakage);
    r.min_robertson_margin = std::min(r.min_robertson_margin, rec.min_robertson_margin);
    if (rec.blowup) {
      ++blowups;
      continue;
    }
    finals.push_back(rec.final_moments);
  }
  if (blowups > 0) {
    r.status = "blowup";
    append_note(r.note, std::to_string(blowups) + " trajectories blew up");
  }
  if (finals.size() >= 2) r.stats = ensemble_reduce(finals, cfg.physical.omega_M);
  else r.status = "blowup";
  if (r.max_leakage > 1e-3) append_note(r.note, "truncation leakage " + fmt(r.max_leakage, "%.3g"));
  return r;
}

PointResult evaluate_full(const RunConfig& cfg, const DerivedParams& d, const ControlGains& g, std::uint64_t seed) {
  PointResult r;
  const HilbertSpec space{cfg.n_beam_full, cfg.n_tlr};
  const FullSmeModel model(d, cfg.physical, space, cfg.hamiltonian, cfg.rotating_frame);
  SmeConfig sc;
  sc.dt = full_dt(cfg, d, model);
  sc.steps = step_count(horizon_or(cfg, d, 5.0), sc.dt);
  sc.seed = seed;
  sc.hamiltonian_kind = cfg.hamiltonian;
  sc.rotating_frame = cfg.rotating_frame;
  sc.sample_stride = cfg.sample_stride > 0 ? cfg.sample_stride : static_cast<int>(std::min<long>(sc.steps, 1 << 30));
  r.steps = sc.steps;
  r.t_end = static_cast<double>(sc.steps) * sc.dt;
  std::vector<TrajectoryRecord> records;
  try {
    records = run_full_ensemble(full_initial_state(cfg, d), model, sc, static_cast<std::size_t>(cfg.n_traj),
                                controller_factory(d, cfg.physical, g), cfg.workers);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::blowup) throw;
    r.status = "blowup";
    r.note = e.what();
    return r;
  }
  std::vector<BeamMoments> finals;
  r.min_robertson_margin = std::numeric_limits<double>::infinity();
  for (const auto& rec : records) {
    r.repairs += rec.repairs;
    r.total_steps += rec.steps;
    r.max_trace_error = std::max(r.max_trace_error, rec.max_trace_error);
    r.max_leakage = std::max({r.max_leakage, rec.max_leakage_beam, rec.max_leakage_tlr});
    for (const auto& s : rec.samples) r.min_robertson_margin = std::min(r.min_robertson_margin, s.V_xM * s.V_pM - 0.25);
    const BeamMoments& f = rec.final_beam;
    r.min_robertson_margin = std::min(r.min_robertson_margin, f.V_x * f.V_p - f.C_xp * f.C_xp - 0.25);
    finals.push_back(f);
  }
  if (finals.size() >= 2) r.stats = ensemble_reduce(finals, cfg.physical.omega_M);
  if (r.max_leakage > 1e-3) append_note(r.note, "truncation leakage " + fmt(r.max_leakage, "%.3g"));
  if (records.front().dt_guard_exceeded) append_note(r.note, "dt exceeds 0.1/fastest scale");
  return r;
}

std::string stage_line(const StageTiming& t) { return "# wall_clock." + t.stage + " = " + fmt(t.seconds, "%.3f") + " s"; }

}  // namespace

const char* version_string() { return NANOFB_VERSION_STRING; }

std::string derived_table(const DerivedParams& d) {
  std::ostringstream o;
  auto row = [&](const char* name, double v, const char* unit) {
    o << name << " = " << fmt(v);
    if (*unit) o << " " << unit;
    auto it = d.formula_values.find(name);
    if (it != d.formula_values.end()) o << "  (pinned; formula " << fmt(it->second) << ")";
    o << '\n';
  };
  o << "convention = " << convention_name(d.convention) << '\n';
  row("beta_L", d.beta_L, "");
  row("U_0", d.U_0, "J");
  row("epsilon", d.epsilon, "rad/s");
  row("Delta", d.Delta, "rad/s");
  row("omega_S", d.omega_S, "rad/s");
  row("g_MS", d.g_MS, "rad/s");
  row("g_MT", d.g_MT, "rad/s");
  row("gamma_M", d.gamma_M, "rad/s");
  row("nbar_M", d.nbar_M, "");
  row("nbar_M_linear", d.nbar_M_linear, "");
  row("Delta_MS", d.Delta_MS, "rad/s");
  row("Delta_ST", d.Delta_ST, "rad/s");
  return o.str();
}

std::string regime_text(const RegimeReport& r) {
  std::ostringstream o;
  for (const auto& c : r.checks) {
    o << c.name << " ratio=" << fmt(c.ratio, "%.6g") << (c.upper_bound ? " < " : " > ") << fmt(c.threshold, "%.6g")
      << " " << (c.passed ? "pass" : "FAIL") << '\n';
  }
  o << "regime " << (r.all_passed() ? "pass" : "FAIL") << '\n';
  return o.str();
}

std::string derive_report(const RunConfig& cfg) {
  const DerivedParams d = cfg.derive();
  std::ostringstream o;
  o << "# derived parameters\n" << derived_table(d) << "# regime checks\n" << regime_text(validate_regime(cfg.physical, d));
  return o.str();
}

std::string manifest_text(const RunManifest& m) {
  std::ostringstream o;
  o << "# nanofb run manifest\n";
  o << "# version = " << m.version << '\n';
  o << "# command = " << m.command << '\n';
  o << m.config_echo;
  auto commented = [&](const std::string& title, const std::string& body) {
    o << "# [" << title << "]\n";
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) o << "# " << line << '\n';
  };
  commented("derived", derived_table(m.derived));
  commented("regime", regime_text(m.regime));
  if (!m.notes.empty()) {
    std::string body;
    for (const auto& n : m.notes) body += n + '\n';
    commented("notes", body);
  }
  o << "# [timing]\n";
  for (const auto& t : m.timings) o << stage_line(t) << '\n';
  return o.str();
}

PointResult evaluate_point(const RunConfig& cfg, const DerivedParams& d, const ControlGains& g, Engine engine,
                           std::uint64_t seed) {
  switch (engine) {
    case Engine::reduced_gaussian: return evaluate_gaussian(cfg, d, g);
    case Engine::reduced_sme: return evaluate_reduced_sme(cfg, d, g, seed);
    case Engine::full: return evaluate_full(cfg, d, g, seed);
    case Engine::filter_selfloop: break;
  }
  throw Error(ErrorCode::config, "engine filter-selfloop produces no beam moments; use it with simulate");
}

int SweepResult::diverged_rows() const {
  int n = 0;
  for (const auto& r : rows) n += r.controlled.ok() ? 0 : 1;
  return n;
}

SweepResult run_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.engine == Engine::filter_selfloop) {
    throw Error(ErrorCode::config, "engine filter-selfloop produces no beam moments; use it with simulate");
  }
  Stopwatch clock;
  const DerivedParams d = cfg.derive();
  const PhysicalParams& p = cfg.physical;
  SweepResult out;
  out.manifest = base_manifest(cfg, d, "sweep");
  out.eta = p.eta;
  out.omega_M = p.omega_M;
  out.manifest.timings.push_back({"derive", clock.lap()});

  std::string regime_notes;
  for (const auto& c : out.manifest.regime.checks) {
    if (!c.passed) append_note(regime_notes, "regime:" + c.name);
  }

  auto guarded = [&](const ControlGains& g, std::uint64_t seed) {
    try {
      return evaluate_point(cfg, d, g, cfg.engine, seed);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config) throw;
      PointResult r;
      r.status = "error";
      r.note = std::string(error_code_name(e.code())) + ": " + e.what();
      return r;
    }
  };

  out.uncontrolled = guarded(ControlGains{}, mix_seed(cfg.seed, 0));
  out.manifest.timings.push_back({"uncontrolled", clock.lap()});

  if (cfg.has_sweep) {
    for (double f : cfg.sweep.v_p_over_omega_T()) {
      SweepRow row;
      row.v_p_over_omega_T = f;
      row.v_x_over_omega_T = cfg.sweep.v_x_over_omega_T;
      row.gains = ControlGains{row.v_x_over_omega_T * p.omega_T, f * p.omega_T};
      out.rows.push_back(row);
    }
  } else {
    SweepRow row;
    row.gains = cfg.gains;
    row.v_x_over_omega_T = cfg.gains.v_x / p.omega_T;
    row.v_p_over_omega_T = cfg.gains.v_p / p.omega_T;
    out.rows.push_back(row);
  }

  auto fill = [&](std::size_t i) {
    SweepRow& row = out.rows[i];
    row.controlled = guarded(row.gains, mix_seed(cfg.seed, i + 1));
    row.xi = kNaN;
    row.V_x_pred = kNaN;
    row.V_p_pred = kNaN;
    try {
      const ReducedCoeffs rc = compute_coeffs(row.gains, d, p);
      const GainRegionReport region = check_gain_region(row.gains, d, p, cfg.purpose, cfg.region_threshold);
      row.region_ok = region.passed();
      for (int k = 0; k < 3; ++k) {
        if (!region.ratio_ok[k]) append_note(row.notes, "region:r" + std::to_string(k + 1));
      }
      if (!region.in_window) append_note(row.notes, std::string("window:") + gain_purpose_name(cfg.purpose));
      try {
        const ClosedFormPrediction cf = closed_form_prediction(row.gains, rc, d, p, cfg.purpose, cfg.region_threshold);
        row.xi = cf.xi;
        row.V_x_pred = cf.V_x_pred;
        row.V_p_pred = cf.V_p_pred;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::out_of_validity) throw;
        append_note(row.notes, "closed-form:out_of_validity");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::near_singular_gain) throw;
      append_note(row.notes, "near_singular_gain");
    }
    if (!row.controlled.ok()) append_note(row.notes, row.controlled.note);
    append_note(row.notes, regime_notes);
  };
  // Ensemble engines parallelize over trajectories instead.
  const int point_workers = cfg.engine == Engine::reduced_gaussian ? cfg.workers : 1;
  parallel_for(out.rows.size(), point_workers, fill);
  out.manifest.timings.push_back({"sweep", clock.lap()});
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& s) {
  os << "v_p_over_wT,v_x_over_wT,VxM_c,VpM_c,VxM_uc,VpM_uc,product_c,product_uc,xi,VxM_pred,VpM_pred,nbar_c,nbar_uc,"
        "Teff_c,Teff_uc,Teff_c_angular,Teff_uc_angular,status,notes\n";
  const EnsembleStats& u = s.uncontrolled.stats;
  const bool u_ok = s.uncontrolled.ok();
  auto num = [](double v, bool ok) { return ok && std::isfinite(v) ? fmt(v, "%.12g") : std::string("nan"); };
  for (const auto& r : s.rows) {
    const EnsembleStats& c = r.controlled.stats;
    const bool ok = r.controlled.ok();
    os << fmt(r.v_p_over_omega_T, "%.12g") << ',' << fmt(r.v_x_over_omega_T, "%.12g") << ',' << num(c.V_xM, ok) << ','
       << num(c.V_pM, ok) << ',' << num(u.V_xM, u_ok) << ',' << num(u.V_pM, u_ok) << ',' << num(c.V_xM * c.V_pM, ok)
       << ',' << num(u.V_xM * u.V_pM, u_ok) << ',' << num(r.xi, true) << ',' << num(r.V_x_pred, true) << ','
       << num(r.V_p_pred, true) << ',' << num(c.nbar, ok) << ',' << num(u.nbar, u_ok) << ','
       << num(c.Teff_linear, ok) << ',' << num(u.Teff_linear, u_ok) << ',' << num(c.Teff_angular, ok) << ','
       << num(u.Teff_angular, u_ok) << ',' << r.controlled.status << ',' << r.notes << '\n';
  }
}

std::string sweep_summary(const SweepResult& s) {
  std::ostringstream o;
  o << "rows = " << s.rows.size() << '\n';
  o << "diverged_rows = " << s.diverged_rows() << '\n';
  o << "uncontrolled status = " << s.uncontrolled.status << '\n';
  const EnsembleStats& u = s.uncontrolled.stats;
  o << "uncontrolled V_xM = " << fmt(u.V_xM, "%.8g") << ", V_pM = " << fmt(u.V_pM, "%.8g") << ", nbar = "
    << fmt(u.nbar, "%.8g") << '\n';
  o << "measurement-limited product 1/(4 eta) = " << fmt(0.25 / s.eta, "%.8g") << '\n';
  const SweepRow* best_n = nullptr;
  const SweepRow* best_x = nullptr;
  const SweepRow* best_p = nullptr;
  int x_below_p = 0, p_below_x = 0, cooled = 0, ok_rows = 0;
  for (const auto& r : s.rows) {
    if (!r.controlled.ok()) continue;
    const EnsembleStats& c = r.controlled.stats;
    ++ok_rows;
    if (c.V_xM < c.V_pM) ++x_below_p;
    if (c.V_pM < c.V_xM) ++p_below_x;
    if (c.nbar < u.nbar) ++cooled;
    if (!best_n || c.nbar < best_n->controlled.stats.nbar) best_n = &r;
    if (!best_x || c.V_xM < best_x->controlled.stats.V_xM) best_x = &r;
    if (!best_p || c.V_pM < best_p->controlled.stats.V_pM) best_p = &r;
  }
  o << "rows with V_xM < V_pM = " << x_below_p << " of " << ok_rows << '\n';
  o << "rows with V_pM < V_xM = " << p_below_x << " of " << ok_rows << '\n';
  o << "rows with nbar below uncontrolled = " << cooled << " of " << ok_rows << '\n';
  if (best_n) {
    const EnsembleStats& c = best_n->controlled.stats;
    o << "min nbar = " << fmt(c.nbar, "%.8g") << " at v_p/omega_T = " << fmt(best_n->v_p_over_omega_T, "%.6g")
      << " (T_eff linear " << fmt(c.Teff_linear, "%.6g") << " K, angular " << fmt(c.Teff_angular, "%.6g") << " K)\n";
    o << "min V_xM = " << fmt(best_x->controlled.stats.V_xM, "%.8g") << " at v_p/omega_T = "
      << fmt(best_x->v_p_over_omega_T, "%.6g") << '\n';
    o << "min V_pM = " << fmt(best_p->controlled.stats.V_pM, "%.8g") << " at v_p/omega_T = "
      << fmt(best_p->v_p_over_omega_T, "%.6g") << '\n';
  }
  return o.str();
}

bool CrosscheckReport::passed() const {
  if (!inconsistencies.empty()) return false;
  for (const auto& l : lines) {
    if (!l.passed) return false;
  }
  return !lines.empty();
}

std::string CrosscheckReport::text() const {
  std::ostringstream o;
  for (const auto& i : inconsistencies) o << "INCONSISTENT " << i << '\n';
  for (const auto& n : notes) o << "note " << n << '\n';
  auto engine_line = [&](const char* name, const PointResult& r) {
    o << name << " status=" << r.status << " t_end=" << fmt(r.t_end, "%.6g") << " nbar=" << fmt(r.stats.nbar, "%.8g")
      << " V_xM=" << fmt(r.stats.V_xM, "%.8g") << " V_pM=" << fmt(r.stats.V_pM, "%.8g") << " repairs=" << r.repairs
      << "/" << r.total_steps;
    if (!r.note.empty()) o << " (" << r.note << ")";
    o << '\n';
  };
  engine_line("reduced-gaussian", gaussian);
  engine_line("reduced-sme", reduced);
  if (full_run) engine_line("full", full);
  for (const auto& l : lines) {
    o << l.pair << ' ' << l.moment << ": " << fmt(l.a, "%.8g") << " vs " << fmt(l.b, "%.8g")
      << " diff=" << fmt(l.a - l.b, "%.3g") << " 3se=" << fmt(3.0 * l.se, "%.3g") << ' '
      << (l.passed ? "pass" : "FAIL") << '\n';
  }
  o << "crosscheck " << (passed() ? "pass" : "FAIL") << '\n';
  return o.str();
}

CrosscheckReport run_crosscheck(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.has_sweep) throw Error(ErrorCode::config, "crosscheck takes a single gain pair (v_x, v_p), not a sweep");
  if (cfg.n_traj < 2) throw Error(ErrorCode::config, "crosscheck needs n_traj >= 2");
  Stopwatch clock;
  const DerivedParams d = cfg.derive();
  const PhysicalParams& p = cfg.physical;
  const ControlGains g = cfg.gains;
  CrosscheckReport rep;
  rep.manifest = base_manifest(cfg, d, "crosscheck");
  rep.manifest.timings.push_back({"derive", clock.lap()});

  rep.reduced = evaluate_reduced_sme(cfg, d, g, mix_seed(cfg.seed, 1));
  rep.manifest.timings.push_back({"reduced-sme", clock.lap()});
  const double t_end = rep.reduced.t_end;

  const ReducedCoeffs rc = compute_coeffs(g, d, p);
  const GaussianMoments gm = gaussian_moments_at(g, rc, d, p, GaussianMoments::thermal(d.nbar_M), t_end);
  rep.gaussian.stats = stats_from_gaussian(gm, p.omega_M);
  rep.gaussian.t_end = t_end;
  const bool finite = std::isfinite(gm.nbar()) && std::abs(gm.nbar()) < 1e12;
  rep.gaussian.status = finite ? "ok" : "diverged";
  rep.manifest.timings.push_back({"reduced-gaussian", clock.lap()});

  if (cfg.engine == Engine::full) {
    rep.full_run = true;
    rep.full = evaluate_full(cfg, d, g, mix_seed(cfg.seed, 2));
    rep.manifest.timings.push_back({"full", clock.lap()});
    if (std::abs(rep.full.t_end - t_end) > 1e-9 * t_end) {
      rep.inconsistencies.push_back("engines stop at different times: full " + fmt(rep.full.t_end, "%.9g") +
                                    " s, reduced " + fmt(t_end, "%.9g") + " s (dt does not divide the horizon equally)");
    }
  }
  if (rep.reduced.repairs > 0) {
    rep.notes.push_back("reduced-sme positivity repairs " + std::to_string(rep.reduced.repairs) + " of " +
                        std::to_string(rep.reduced.total_steps) + " steps");
  }
  if (rep.full_run && rep.full.repairs > 0) {
    rep.notes.push_back("full positivity repairs " + std::to_string(rep.full.repairs) + " of " +
                        std::to_string(rep.full.total_steps) + " steps");
  }

  auto compare = [&](const std::string& pair, const PointResult& a, const PointResult& b) {
    struct Field {
      const char* name;
      double EnsembleStats::*value;
      double EnsembleStats::*se;
    };
    static const Field fields[] = {
        {"nbar", &EnsembleStats::nbar, &EnsembleStats::se_nbar},
        {"V_xM", &EnsembleStats::V_xM, &EnsembleStats::se_V_xM},
        {"V_pM", &EnsembleStats::V_pM, &EnsembleStats::se_V_pM},
        {"V_mean_xM", &EnsembleStats::V_mean_xM, &EnsembleStats::se_V_mean_xM},
        {"V_mean_pM", &EnsembleStats::V_mean_pM, &EnsembleStats::se_V_mean_pM},
    };
    for (const auto& f : fields) {
      CrosscheckLine l;
      l.pair = pair;
      l.moment = f.name;
      l.a = a.stats.*f.value;
      l.b = b.stats.*f.value;
      l.se = std::hypot(a.stats.*f.se, b.stats.*f.se);
      l.passed = a.ok() && b.ok() && std::isfinite(l.a) && std::isfinite(l.b) && std::abs(l.a - l.b) <= 3.0 * l.se;
      rep.lines.push_back(l);
    }
  };
  compare("reduced-gaussian/reduced-sme", rep.gaussian, rep.reduced);
  if (rep.full_run) compare("full/reduced-sme", rep.full, rep.reduced);
  return rep;
}

SimulationResult run_simulation(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.has_sweep) throw Error(ErrorCode::config, "simulate takes a single gain pair (v_x, v_p), not a sweep");
  Stopwatch clock;
  const DerivedParams d = cfg.derive();
  const PhysicalParams& p = cfg.physical;
  const ControlGains g = cfg.gains;
  SimulationResult out;
  out.manifest = base_manifest(cfg, d, "simulate");
  std::ostringstream csv, sum;
  const std::uint64_t seed = mix_seed(cfg.seed, 1);

  switch (cfg.engine) {
    case Engine::full: {
      const HilbertSpec space{cfg.n_beam_full, cfg.n_tlr};
      const FullSmeModel model(d, p, space, cfg.hamiltonian, cfg.rotating_frame);
      SmeConfig sc;
      sc.dt = full_dt(cfg, d, model);
      sc.steps = step_count(horizon_or(cfg, d, 5.0), sc.dt);
      sc.seed = seed;
      sc.hamiltonian_kind = cfg.hamiltonian;
      sc.rotating_frame = cfg.rotating_frame;
      sc.sample_stride = std::max(1, cfg.sample_stride);
      auto ctl = controller_factory(d, p, g)(0);
      const TrajectoryRecord rec = simulate_trajectory(full_initial_state(cfg, d), model, sc, *ctl, 0);
      write_trajectory_csv(csv, rec);
      out.steps = rec.steps;
      out.repairs = rec.repairs;
      sum << "engine = full\ndt = " << fmt(sc.dt) << "\nsteps = " << rec.steps << "\nrepairs = " << rec.repairs
          << "\nmax_trace_error = " << fmt(rec.max_trace_error, "%.3g") << "\nmax_leakage_beam = "
          << fmt(rec.max_leakage_beam, "%.3g") << "\nmax_leakage_tlr = " << fmt(rec.max_leakage_tlr, "%.3g")
          << "\nfinal nbar = " << fmt(rec.final_beam.nbar, "%.8g") << "\nfinal V_xM = " << fmt(rec.final_beam.V_x, "%.8g")
          << "\nfinal V_pM = " << fmt(rec.final_beam.V_p, "%.8g") << '\n';
      break;
    }
    case Engine::reduced_sme: {
      const ReducedCoeffs rc = compute_coeffs(g, d, p);
      const bool rotating = cfg.rotating_frame && zero_gains(g);
      const ReducedSmeModel model(rc, d, p, g, cfg.n_beam, rotating);
      ReducedConfig rcfg;
      rcfg.dt = cfg.resolved_dt(d) > 0.0 ? cfg.resolved_dt(d) : default_reduced_dt(model);
      rcfg.steps = step_count(horizon_or(cfg, d, 10.0), rcfg.dt);
      rcfg.seed = seed;
      rcfg.sample_stride = std::max(1, cfg.sample_stride);
      const ReducedRecord rec =
          simulate_reduced_trajectory(DensityState({cfg.n_beam}, thermal_state(cfg.n_beam, d.nbar_M)), model, rcfg, 0);
      csv << "time_s,dY,exp_xM,exp_pM,V_xM,V_pM,C_xpM,nbar_M\n";
      for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const BeamMoments& m = rec.samples[i];
        csv << fmt(rec.time[i]) << ',' << fmt(rec.dY[i]) << ',' << fmt(m.mean_x) << ',' << fmt(m.mean_p) << ','
            << fmt(m.V_x) << ',' << fmt(m.V_p) << ',' << fmt(m.C_xp) << ',' << fmt(m.nbar) << '\n';
      }
      out.steps = rec.steps;
      out.repairs = rec.repairs;
      sum << "engine = reduced-sme\ndt = " << fmt(rcfg.dt) << "\nsteps = " << rec.steps << "\nrepairs = " << rec.repairs
          << "\nblowup = " << (rec.blowup ? "true" : "false") << "\nmax_leakage = " << fmt(rec.max_leakage, "%.3g")
          << "\nfinal nbar = " << fmt(rec.final_moments.nbar, "%.8g") << '\n';
      if (rec.blowup) sum << "error = " << rec.error << '\n';
      break;
    }
    case Engine::filter_selfloop: {
      ClosedLoopConfig lc;
      const double dt = cfg.resolved_dt(d);
      lc.dt = dt > 0.0 ? dt : constants::two_pi / (200.0 * std::max({d.omega_S, p.omega_T, p.omega_M}));
      lc.steps = step_count(horizon_or(cfg, d, 0.01), lc.dt);
      lc.seed = seed;
      lc.plant = PlantKind::self;
      try {
        const ClosedLoopSeries s = run_closed_loop(FilterState{}, d, p, lc, g);
        write_closed_loop_csv(csv, s);
        out.steps = static_cast<long>(s.time.size());
        sum << "engine = filter-selfloop\ndt = " << fmt(lc.dt) << "\nsteps = " << out.steps << '\n';
      } catch (const Error& e) {
        if (e.code() != ErrorCode::blowup) throw;
        sum << "engine = filter-selfloop\nerror = " << e.what() << '\n';
        out.manifest.notes.push_back(e.what());
      }
      break;
    }
    case Engine::reduced_gaussian: {
      const ReducedCoeffs rc = compute_coeffs(g, d, p);
      const double horizon = horizon_or(cfg, d, 10.0);
      const int samples = 200;
      csv << "time_s,mean_xM,mean_pM,V_xM,V_pM,C_xpM,V_mean_xM,V_mean_pM,nbar\n";
      const GaussianMoments x0 = GaussianMoments::thermal(d.nbar_M);
      for (int i = 0; i <= samples; ++i) {
        const double t = horizon * i / samples;
        const GaussianMoments m = gaussian_moments_at(g, rc, d, p, x0, t);
        csv << fmt(t) << ',' << fmt(m.mean_x) << ',' << fmt(m.mean_p) << ',' << fmt(m.V_x) << ',' << fmt(m.V_p) << ','
            << fmt(m.C_xp) << ',' << fmt(m.V_mean_x) << ',' << fmt(m.V_mean_p) << ',' << fmt(m.nbar()) << '\n';
      }
      sum << "engine = reduced-gaussian\nsamples = " << samples + 1 << '\n';
      break;
    }
  }
  out.manifest.timings.push_back({"simulate", clock.lap()});
  out.csv = csv.str();
  out.summary = sum.str();
  return out;
}

void write_text_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
}

}  // namespace nanofb
