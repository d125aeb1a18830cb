// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/nanofb.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "nanofb/config.hpp"
#include "nanofb/error.hpp"
#include "nanofb/runner.hpp"

struct nanofb_config {
  nanofb::RunConfig cfg;
};

struct nanofb_sweep {
  nanofb::SweepResult result;
};

struct nanofb_crosscheck {
  nanofb::CrosscheckReport report;
};

namespace {

thread_local std::string g_last_error;

nanofb_status fail(nanofb_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
nanofb_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return NANOFB_OK;
  } catch (const nanofb::Error& e) {
    return fail(static_cast<nanofb_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NANOFB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NANOFB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NANOFB_ERR_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nanofb_status null_arg(const char* what) { return fail(NANOFB_ERR_NULL, std::string("null argument: ") + what); }

}  // namespace

extern "C" {

const char* nanofb_version(void) { return nanofb::version_string(); }

const char* nanofb_last_error(void) { return g_last_error.c_str(); }

const char* nanofb_status_name(nanofb_status s) {
  if (s == NANOFB_ERR_NULL) return "null_argument";
  if (s == NANOFB_ERR_INTERNAL) return "internal";
  return nanofb::error_code_name(static_cast<nanofb::ErrorCode>(static_cast<int>(s)));
}

void nanofb_string_free(char* s) { std::free(s); }

nanofb_status nanofb_config_load(const char* path, nanofb_config** out) {
  if (!path || !out) return null_arg("path/out");
  *out = nullptr;
  return guard([&] { *out = new nanofb_config{nanofb::load_config(path)}; });
}

nanofb_status nanofb_config_parse(const char* text, nanofb_config** out) {
  if (!text || !out) return null_arg("text/out");
  *out = nullptr;
  return guard([&] { *out = new nanofb_config{nanofb::parse_config(text)}; });
}

nanofb_status nanofb_config_preset(const char* name, nanofb_config** out) {
  if (!name || !out) return null_arg("name/out");
  *out = nullptr;
  return guard([&] { *out = new nanofb_config{nanofb::load_preset(name)}; });
}

nanofb_status nanofb_config_set(nanofb_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return null_arg("cfg/key/value");
  return guard([&] {
    nanofb::RunConfig next = cfg->cfg;
    nanofb::set_config_value(next, key, value);
    cfg->cfg = std::move(next);
  });
}

nanofb_status nanofb_config_echo(const nanofb_config* cfg, char** text) {
  if (!cfg || !text) return null_arg("cfg/text");
  return guard([&] { *text = dup_string(nanofb::config_echo(cfg->cfg)); });
}

nanofb_status nanofb_config_get(const nanofb_config* cfg, const char* key, char** value) {
  if (!cfg || !key || !value) return null_arg("cfg/key/value");
  return guard([&] {
    std::istringstream in(nanofb::config_echo(cfg->cfg));
    const std::string prefix = std::string(key) + " = ";
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind(prefix, 0) == 0) {
        *value = dup_string(line.substr(prefix.size()));
        return;
      }
    }
    throw nanofb::Error(nanofb::ErrorCode::config, std::string("key '") + key + "' not set");
  });
}

void nanofb_config_free(nanofb_config* cfg) { delete cfg; }

nanofb_status nanofb_derive_report(const nanofb_config* cfg, char** text, int* regime_ok) {
  if (!cfg || !text) return null_arg("cfg/text");
  return guard([&] {
    const nanofb::DerivedParams d = cfg->cfg.derive();
    if (regime_ok) *regime_ok = nanofb::validate_regime(cfg->cfg.physical, d).all_passed() ? 1 : 0;
    *text = dup_string(nanofb::derive_report(cfg->cfg));
  });
}

nanofb_status nanofb_reduced_coeffs(const nanofb_config* cfg, double v_x, double v_p, nanofb_coeffs* out) {
  if (!cfg || !out) return null_arg("cfg/out");
  return guard([&] {
    const nanofb::DerivedParams d = cfg->cfg.derive();
    const nanofb::ReducedCoeffs rc = nanofb::compute_coeffs(nanofb::ControlGains{v_x, v_p}, d, cfg->cfg.physical);
    *out = nanofb_coeffs{rc.C1.real(), rc.C1.imag(), rc.C2.real(), rc.C2.imag(),
                         rc.chi,       rc.xi_M.real(), rc.xi_M.imag()};
  });
}

nanofb_status nanofb_sweep_run(const nanofb_config* cfg, nanofb_sweep** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guard([&] { *out = new nanofb_sweep{nanofb::run_sweep(cfg->cfg)}; });
}

size_t nanofb_sweep_size(const nanofb_sweep* s) { return s ? s->result.rows.size() : 0; }

nanofb_status nanofb_sweep_get(const nanofb_sweep* s, size_t i, nanofb_sweep_row* row) {
  if (!s || !row) return null_arg("sweep/row");
  if (i >= s->result.rows.size()) return fail(NANOFB_ERR_INVALID_ARGUMENT, "row index out of range");
  const nanofb::SweepRow& r = s->result.rows[i];
  const nanofb::EnsembleStats& c = r.controlled.stats;
  const nanofb::EnsembleStats& u = s->result.uncontrolled.stats;
  *row = nanofb_sweep_row{r.v_p_over_omega_T, r.v_x_over_omega_T, c.V_xM, c.V_pM, u.V_xM, u.V_pM, r.xi,
                          r.V_x_pred, r.V_p_pred, c.nbar, u.nbar, c.Teff_linear, u.Teff_linear, c.Teff_angular,
                          u.Teff_angular, r.controlled.ok() ? 1 : 0, r.region_ok ? 1 : 0};
  return NANOFB_OK;
}

int nanofb_sweep_diverged(const nanofb_sweep* s) { return s ? s->result.diverged_rows() : 0; }

nanofb_status nanofb_sweep_csv(const nanofb_sweep* s, char** text) {
  if (!s || !text) return null_arg("sweep/text");
  return guard([&] {
    std::ostringstream os;
    nanofb::write_sweep_csv(os, s->result);
    *text = dup_string(os.str());
  });
}

nanofb_status nanofb_sweep_write(const nanofb_sweep* s, const char* dir) {
  if (!s || !dir) return null_arg("sweep/dir");
  return guard([&] {
    std::ostringstream os;
    nanofb::write_sweep_csv(os, s->result);
    nanofb::write_text_file(dir, "sweep.csv", os.str());
    nanofb::write_text_file(dir, "summary.txt", nanofb::sweep_summary(s->result));
    nanofb::write_text_file(dir, "manifest.txt", nanofb::manifest_text(s->result.manifest));
  });
}

void nanofb_sweep_free(nanofb_sweep* s) { delete s; }

nanofb_status nanofb_crosscheck_run(const nanofb_config* cfg, nanofb_crosscheck** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guard([&] { *out = new nanofb_crosscheck{nanofb::run_crosscheck(cfg->cfg)}; });
}

int nanofb_crosscheck_passed(const nanofb_crosscheck* c) { return c && c->report.passed() ? 1 : 0; }

nanofb_status nanofb_crosscheck_text(const nanofb_crosscheck* c, char** text) {
  if (!c || !text) return null_arg("crosscheck/text");
  return guard([&] { *text = dup_string(c->report.text()); });
}

nanofb_status nanofb_crosscheck_write(const nanofb_crosscheck* c, const char* dir) {
  if (!c || !dir) return null_arg("crosscheck/dir");
  return guard([&] {
    nanofb::write_text_file(dir, "crosscheck.txt", c->report.text());
    nanofb::write_text_file(dir, "manifest.txt", nanofb::manifest_text(c->report.manifest));
  });
}

void nanofb_crosscheck_free(nanofb_crosscheck* c) { delete c; }

nanofb_status nanofb_simulate(const nanofb_config* cfg, const char* dir, char** summary) {
  if (!cfg || !dir) return null_arg("cfg/dir");
  return guard([&] {
    const nanofb::SimulationResult r = nanofb::run_simulation(cfg->cfg);
    nanofb::write_text_file(dir, "trajectory.csv", r.csv);
    nanofb::write_text_file(dir, "summary.txt", r.summary);
    nanofb::write_text_file(dir, "manifest.txt", nanofb::manifest_text(r.manifest));
    if (summary) *summary = dup_string(r.summary);
  });
}

}  // extern "C"
