// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "nanofb/constants.hpp"
#include "nanofb/error.hpp"

namespace nanofb {

namespace {

enum class Kind { frequency, temperature, real, integer, seed, flag, text };

struct KeySpec {
  const char* name;
  Kind kind;
  bool required;
};

// Frequencies are stored in rad/s, so a bare frequency key takes rad/s.
const KeySpec kKeys[] = {
    {"L", Kind::real, true},
    {"C_j", Kind::real, false},
    {"I_c", Kind::real, true},
    {"m", Kind::real, true},
    {"eta", Kind::real, true},
    {"omega_M", Kind::frequency, true},
    {"Bl", Kind::real, true},
    {"Q", Kind::real, true},
    {"T_bath", Kind::temperature, true},
    {"phi_e", Kind::real, false},
    {"gamma_S", Kind::frequency, true},
    {"gamma_T", Kind::frequency, true},
    {"g_ST", Kind::frequency, true},
    {"omega_T", Kind::frequency, true},
    {"M_phi", Kind::real, false},
    {"M_r", Kind::real, false},
    {"override_omega_S", Kind::frequency, false},
    {"override_g_MS", Kind::frequency, false},
    {"override_g_MT", Kind::frequency, false},
    {"override_gamma_M", Kind::frequency, false},
    {"energy_convention", Kind::text, false},
    {"n_beam", Kind::integer, false},
    {"n_beam_full", Kind::integer, false},
    {"n_tlr", Kind::integer, false},
    {"hamiltonian", Kind::text, false},
    {"rotating_frame", Kind::flag, false},
    {"dt", Kind::real, false},
    {"dt_full", Kind::real, false},
    {"horizon", Kind::real, false},
    {"dt_gamma_M", Kind::real, false},
    {"dt_full_gamma_M", Kind::real, false},
    {"horizon_gamma_M", Kind::real, false},
    {"seed", Kind::seed, false},
    {"n_traj", Kind::integer, false},
    {"sample_stride", Kind::integer, false},
    {"workers", Kind::integer, false},
    {"v_x", Kind::frequency, false},
    {"v_p", Kind::frequency, false},
    {"sweep_v_x_over_omega_T", Kind::real, false},
    {"sweep_v_p_over_omega_T_min", Kind::real, false},
    {"sweep_v_p_over_omega_T_max", Kind::real, false},
    {"sweep_points", Kind::integer, false},
    {"gain_purpose", Kind::text, false},
    {"region_threshold", Kind::real, false},
    {"flow_horizon_gamma_M", Kind::real, false},
    {"engine", Kind::text, true},
    {"out_dir", Kind::text, false},
};

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

struct Suffix {
  const char* text;
  Kind kind;
  double scale;
};

const Suffix kSuffixes[] = {
    {"_GHz", Kind::frequency, constants::two_pi * 1e9},
    {"_MHz", Kind::frequency, constants::two_pi * 1e6},
    {"_kHz", Kind::frequency, constants::two_pi * 1e3},
    {"_Hz", Kind::frequency, constants::two_pi},
    {"_mK", Kind::temperature, 1e-3},
};

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() > tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::config, msg); }

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || v.empty()) fail("key '" + key + "': cannot parse '" + v + "' as a number");
  if (!std::isfinite(out)) fail("key '" + key + "': value must be finite");
  return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    fail("key '" + key + "': cannot parse '" + v + "' as an integer");
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail("key '" + key + "': expected true or false, got '" + v + "'");
}

int to_int(const std::string& key, long long v) {
  if (v < -2147483647LL || v > 2147483647LL) fail("key '" + key + "': integer out of range");
  return static_cast<int>(v);
}

struct Resolved {
  const KeySpec* spec;
  double scale;
};

Resolved resolve_key(const std::string& key) {
  if (const KeySpec* k = find_key(key)) return {k, 1.0};
  for (const auto& s : kSuffixes) {
    if (!ends_with(key, s.text)) continue;
    const std::string base = key.substr(0, key.size() - std::char_traits<char>::length(s.text));
    const KeySpec* k = find_key(base);
    if (!k) fail("unknown key '" + key + "'");
    if (k->kind != s.kind) fail("key '" + key + "': unit suffix '" + s.text + "' not allowed on '" + base + "'");
    return {k, s.scale};
  }
  fail("unknown key '" + key + "'");
}

void assign(RunConfig& cfg, const std::string& name, double scale, const std::string& v) {
  PhysicalParams& p = cfg.physical;
  auto real = [&] { return parse_real(name, v) * scale; };
  auto integer = [&] { return to_int(name, parse_integer(name, v)); };

  static const std::map<std::string, double PhysicalParams::*> physical = {
      {"L", &PhysicalParams::L},         {"C_j", &PhysicalParams::C_j},       {"I_c", &PhysicalParams::I_c},
      {"m", &PhysicalParams::m},         {"eta", &PhysicalParams::eta},       {"omega_M", &PhysicalParams::omega_M},
      {"Bl", &PhysicalParams::Bl},       {"Q", &PhysicalParams::Q},           {"T_bath", &PhysicalParams::T_bath},
      {"phi_e", &PhysicalParams::phi_e}, {"gamma_S", &PhysicalParams::gamma_S}, {"gamma_T", &PhysicalParams::gamma_T},
      {"g_ST", &PhysicalParams::g_ST},   {"omega_T", &PhysicalParams::omega_T}, {"M_phi", &PhysicalParams::M_phi},
      {"M_r", &PhysicalParams::M_r},
  };
  if (auto it = physical.find(name); it != physical.end()) {
    p.*(it->second) = real();
    return;
  }
  if (name.rfind("override_", 0) == 0) {
    cfg.overrides[name.substr(9)] = real();
    return;
  }
  if (name == "energy_convention") {
    if (v == "angular") cfg.convention = EnergyConvention::angular;
    else if (v == "linear") cfg.convention = EnergyConvention::linear;
    else fail("key 'energy_convention': expected angular or linear, got '" + v + "'");
  } else if (name == "n_beam") {
    cfg.n_beam = integer();
  } else if (name == "n_beam_full") {
    cfg.n_beam_full = integer();
  } else if (name == "n_tlr") {
    cfg.n_tlr = integer();
  } else if (name == "hamiltonian") {
    if (v == "rwa") cfg.hamiltonian = HamiltonianKind::rwa;
    else if (v == "effective") cfg.hamiltonian = HamiltonianKind::effective;
    else fail("key 'hamiltonian': expected rwa or effective, got '" + v + "'");
  } else if (name == "rotating_frame") {
    cfg.rotating_frame = parse_flag(name, v);
  } else if (name == "dt") {
    cfg.dt = real();
  } else if (name == "dt_full") {
    cfg.dt_full = real();
  } else if (name == "horizon") {
    cfg.horizon = real();
  } else if (name == "dt_gamma_M") {
    cfg.dt_gamma_M = real();
  } else if (name == "dt_full_gamma_M") {
    cfg.dt_full_gamma_M = real();
  } else if (name == "horizon_gamma_M") {
    cfg.horizon_gamma_M = real();
  } else if (name == "seed") {
    std::uint64_t s = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) fail("key 'seed': expected an unsigned integer");
    cfg.seed = s;
  } else if (name == "n_traj") {
    cfg.n_traj = integer();
  } else if (name == "sample_stride") {
    cfg.sample_stride = integer();
  } else if (name == "workers") {
    cfg.workers = integer();
  } else if (name == "v_x") {
    cfg.gains.v_x = real();
  } else if (name == "v_p") {
    cfg.gains.v_p = real();
  } else if (name == "sweep_v_x_over_omega_T") {
    cfg.sweep.v_x_over_omega_T = real();
    cfg.has_sweep = true;
  } else if (name == "sweep_v_p_over_omega_T_min") {
    cfg.sweep.v_p_over_omega_T_min = real();
    cfg.has_sweep = true;
  } else if (name == "sweep_v_p_over_omega_T_max") {
    cfg.sweep.v_p_over_omega_T_max = real();
    cfg.has_sweep = true;
  } else if (name == "sweep_points") {
    cfg.sweep.points = integer();
    cfg.has_sweep = true;
  } else if (name == "gain_purpose") {
    if (v == "squeeze-x") cfg.purpose = GainPurpose::squeeze_x;
    else if (v == "squeeze-p") cfg.purpose = GainPurpose::squeeze_p;
    else if (v == "cool") cfg.purpose = GainPurpose::cool;
    else fail("key 'gain_purpose': expected squeeze-x, squeeze-p or cool, got '" + v + "'");
  } else if (name == "region_threshold") {
    cfg.region_threshold = real();
  } else if (name == "flow_horizon_gamma_M") {
    cfg.flow_horizon_gamma_M = real();
  } else if (name == "engine") {
    cfg.engine = parse_engine(v);
  } else if (name == "out_dir") {
    if (v.empty()) fail("key 'out_dir': empty path");
    cfg.out_dir = v;
  } else {
    fail("unknown key '" + name + "'");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* engine_name(Engine e) {
  switch (e) {
    case Engine::full: return "full";
    case Engine::reduced_sme: return "reduced-sme";
    case Engine::reduced_gaussian: return "reduced-gaussian";
    case Engine::filter_selfloop: return "filter-selfloop";
  }
  return "?";
}

Engine parse_engine(const std::string& name) {
  for (Engine e : {Engine::full, Engine::reduced_sme, Engine::reduced_gaussian, Engine::filter_selfloop}) {
    if (name == engine_name(e)) return e;
  }
  fail("unknown engine '" + name + "' (full, reduced-sme, reduced-gaussian, filter-selfloop)");
}

std::vector<double> SweepSpec::v_p_over_omega_T() const {
  std::vector<double> out;
  if (points == 1) {
    out.push_back(v_p_over_omega_T_min);
  } else {
    for (int i = 0; i < points; ++i) {
      const double f = static_cast<double>(i) / (points - 1);
      out.push_back(v_p_over_omega_T_min + f * (v_p_over_omega_T_max - v_p_over_omega_T_min));
    }
  }
  return out;
}

DerivedParams RunConfig::derive() const { return derive_params(physical, overrides, convention); }

double RunConfig::resolved_dt(const DerivedParams& d) const { return dt > 0.0 ? dt : dt_gamma_M / d.gamma_M; }

double RunConfig::resolved_dt_full(const DerivedParams& d) const {
  return dt_full > 0.0 ? dt_full : dt_full_gamma_M / d.gamma_M;
}

double RunConfig::resolved_horizon(const DerivedParams& d) const {
  return horizon > 0.0 ? horizon : horizon_gamma_M / d.gamma_M;
}

void RunConfig::validate() const {
  try {
    physical.validate();
  } catch (const Error& e) {
    fail(std::string("physical parameters: ") + e.what());
  }
  for (const auto& [k, v] : overrides) {
    if (!(v > 0.0)) fail("override_" + k + " must be positive");
  }
  if (n_beam < 2 || n_beam_full < 2 || n_tlr < 2) fail("truncations must be at least 2");
  if (n_traj < 1) fail("n_traj must be >= 1");
  if (sample_stride < 0) fail("sample_stride must be >= 0");
  if (workers < 0) fail("workers must be >= 0");
  auto exclusive = [](double a, double b, const char* x, const char* y) {
    if (a != 0.0 && b != 0.0) fail(std::string("keys '") + x + "' and '" + y + "' are mutually exclusive");
    if (a < 0.0 || b < 0.0) fail(std::string("'") + x + "' / '" + y + "' must be positive");
  };
  exclusive(dt, dt_gamma_M, "dt", "dt_gamma_M");
  exclusive(dt_full, dt_full_gamma_M, "dt_full", "dt_full_gamma_M");
  exclusive(horizon, horizon_gamma_M, "horizon", "horizon_gamma_M");
  if (has_sweep) {
    if (sweep.points < 1) fail("sweep_points must be >= 1 when a sweep is given");
    if (sweep.points > 1 && !(sweep.v_p_over_omega_T_max > sweep.v_p_over_omega_T_min)) {
      fail("sweep_v_p_over_omega_T_max must exceed sweep_v_p_over_omega_T_min");
    }
    if (gains.v_x != 0.0 || gains.v_p != 0.0) fail("give either a sweep or a single gain pair (v_x, v_p), not both");
  }
  if (!(region_threshold > 0.0)) fail("region_threshold must be positive");
  if (!(flow_horizon_gamma_M > 0.0)) fail("flow_horizon_gamma_M must be positive");
}

std::vector<std::string> required_keys() {
  std::vector<std::string> out;
  for (const auto& k : kKeys) {
    if (k.required) out.emplace_back(k.name);
  }
  return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Resolved r = resolve_key(key);
  assign(cfg, r.spec->name, r.scale, value);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) fail(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      const Resolved r = resolve_key(key);
      if (!seen.insert(r.spec->name).second) fail("duplicate key '" + std::string(r.spec->name) + "'");
      assign(cfg, r.spec->name, r.scale, value);
    } catch (const Error& e) {
      fail(where + e.what());
    }
  }
  std::vector<std::string> missing;
  for (const auto& k : kKeys) {
    if (k.required && !seen.count(k.name)) missing.emplace_back(k.name);
  }
  if (!missing.empty()) {
    std::string msg = origin + ": missing required keys:";
    for (const auto& m : missing) msg += " " + m;
    fail(msg);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_echo(const RunConfig& cfg) {
  const PhysicalParams& p = cfg.physical;
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("L", fmt(p.L));
  kv("C_j", fmt(p.C_j));
  kv("I_c", fmt(p.I_c));
  kv("m", fmt(p.m));
  kv("eta", fmt(p.eta));
  kv("omega_M", fmt(p.omega_M));
  kv("Bl", fmt(p.Bl));
  kv("Q", fmt(p.Q));
  kv("T_bath", fmt(p.T_bath));
  kv("phi_e", fmt(p.phi_e));
  kv("gamma_S", fmt(p.gamma_S));
  kv("gamma_T", fmt(p.gamma_T));
  kv("g_ST", fmt(p.g_ST));
  kv("omega_T", fmt(p.omega_T));
  kv("M_phi", fmt(p.M_phi));
  kv("M_r", fmt(p.M_r));
  for (const auto& [k, v] : cfg.overrides) o << "override_" << k << " = " << fmt(v) << '\n';
  kv("energy_convention", convention_name(cfg.convention));
  kv("n_beam", std::to_string(cfg.n_beam));
  kv("n_beam_full", std::to_string(cfg.n_beam_full));
  kv("n_tlr", std::to_string(cfg.n_tlr));
  kv("hamiltonian", cfg.hamiltonian == HamiltonianKind::rwa ? "rwa" : "effective");
  kv("rotating_frame", cfg.rotating_frame ? "true" : "false");
  if (cfg.dt != 0.0) kv("dt", fmt(cfg.dt));
  if (cfg.dt_gamma_M != 0.0) kv("dt_gamma_M", fmt(cfg.dt_gamma_M));
  if (cfg.dt_full != 0.0) kv("dt_full", fmt(cfg.dt_full));
  if (cfg.dt_full_gamma_M != 0.0) kv("dt_full_gamma_M", fmt(cfg.dt_full_gamma_M));
  if (cfg.horizon != 0.0) kv("horizon", fmt(cfg.horizon));
  if (cfg.horizon_gamma_M != 0.0) kv("horizon_gamma_M", fmt(cfg.horizon_gamma_M));
  kv("seed", std::to_string(cfg.seed));
  kv("n_traj", std::to_string(cfg.n_traj));
  kv("sample_stride", std::to_string(cfg.sample_stride));
  kv("workers", std::to_string(cfg.workers));
  if (cfg.has_sweep) {
    kv("sweep_v_x_over_omega_T", fmt(cfg.sweep.v_x_over_omega_T));
    kv("sweep_v_p_over_omega_T_min", fmt(cfg.sweep.v_p_over_omega_T_min));
    kv("sweep_v_p_over_omega_T_max", fmt(cfg.sweep.v_p_over_omega_T_max));
    kv("sweep_points", std::to_string(cfg.sweep.points));
  } else {
    kv("v_x", fmt(cfg.gains.v_x));
    kv("v_p", fmt(cfg.gains.v_p));
  }
  kv("gain_purpose", gain_purpose_name(cfg.purpose));
  kv("region_threshold", fmt(cfg.region_threshold));
  kv("flow_horizon_gamma_M", fmt(cfg.flow_horizon_gamma_M));
  kv("engine", engine_name(cfg.engine));
  kv("out_dir", cfg.out_dir);
  return o.str();
}

}  // namespace nanofb
