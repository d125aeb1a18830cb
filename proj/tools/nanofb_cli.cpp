// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "nanofb/nanofb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitCrosscheck = 4;

struct Options {
  std::string config_path;
  std::string preset;
  std::uint64_t seed = 0;
  int ntraj = 0;
  std::string engine;
  std::string out;
  bool strict = false;
};

int report(nanofb_status s, const char* what) {
  std::fprintf(stderr, "nanofb: %s: %s (%s)\n", what, nanofb_last_error(), nanofb_status_name(s));
  return s == NANOFB_ERR_CONFIG ? kExitConfig : kExitError;
}

class Config {
 public:
  ~Config() { nanofb_config_free(cfg_); }
  nanofb_config* get() const { return cfg_; }
  nanofb_config** out() { return &cfg_; }

 private:
  nanofb_config* cfg_ = nullptr;
};

class OwnedString {
 public:
  ~OwnedString() { nanofb_string_free(s_); }
  char** out() { return &s_; }
  const char* c_str() const { return s_ ? s_ : ""; }

 private:
  char* s_ = nullptr;
};

int load(const Options& o, Config& cfg) {
  if (o.config_path.empty() == o.preset.empty()) {
    std::fprintf(stderr, "nanofb: give exactly one of --config or --preset\n");
    return kExitConfig;
  }
  nanofb_status s = o.preset.empty() ? nanofb_config_load(o.config_path.c_str(), cfg.out())
                                     : nanofb_config_preset(o.preset.c_str(), cfg.out());
  if (s != NANOFB_OK) return report(s, "loading configuration");
  auto set = [&](const char* key, const std::string& value) {
    const nanofb_status st = nanofb_config_set(cfg.get(), key, value.c_str());
    return st == NANOFB_OK ? kExitOk : report(st, "applying command-line option");
  };
  int rc = kExitOk;
  if (o.seed != 0 && (rc = set("seed", std::to_string(o.seed))) != kExitOk) return rc;
  if (o.ntraj != 0 && (rc = set("n_traj", std::to_string(o.ntraj))) != kExitOk) return rc;
  if (!o.engine.empty() && (rc = set("engine", o.engine)) != kExitOk) return rc;
  if (!o.out.empty() && (rc = set("out_dir", o.out)) != kExitOk) return rc;
  return kExitOk;
}

// Prints the regime report; in strict mode a failed check ends the run.
int regime_gate(const Options& o, const Config& cfg, bool print) {
  OwnedString text;
  int ok = 0;
  const nanofb_status s = nanofb_derive_report(cfg.get(), text.out(), &ok);
  if (s != NANOFB_OK) return report(s, "deriving parameters");
  if (print) std::fputs(text.c_str(), stdout);
  if (!ok && o.strict) {
    std::fprintf(stderr, "nanofb: regime check failed (--strict)\n");
    return kExitDivergence;
  }
  if (!ok) std::fprintf(stderr, "nanofb: warning: regime check failed; results are annotated\n");
  return kExitOk;
}

std::string out_dir(const Config& cfg) {
  OwnedString v;
  if (nanofb_config_get(cfg.get(), "out_dir", v.out()) != NANOFB_OK) return ".";
  return v.c_str();
}

int cmd_derive(const Options& o) {
  Config cfg;
  if (const int rc = load(o, cfg)) return rc;
  return regime_gate(o, cfg, true);
}

int cmd_sweep(const Options& o) {
  Config cfg;
  if (const int rc = load(o, cfg)) return rc;
  if (const int rc = regime_gate(o, cfg, false)) return rc;
  nanofb_sweep* sweep = nullptr;
  nanofb_status s = nanofb_sweep_run(cfg.get(), &sweep);
  if (s != NANOFB_OK) return report(s, "sweep");
  const std::string dir = out_dir(cfg);
  s = nanofb_sweep_write(sweep, dir.c_str());
  const int diverged = nanofb_sweep_diverged(sweep);
  const std::size_t rows = nanofb_sweep_size(sweep);
  nanofb_sweep_free(sweep);
  if (s != NANOFB_OK) return report(s, "writing sweep output");
  std::printf("sweep: %zu rows, %d diverged; output in %s\n", rows, diverged, dir.c_str());
  if (diverged > 0 && o.strict) {
    std::fprintf(stderr, "nanofb: %d sweep points diverged (--strict)\n", diverged);
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_crosscheck(const Options& o) {
  Config cfg;
  if (const int rc = load(o, cfg)) return rc;
  if (const int rc = regime_gate(o, cfg, false)) return rc;
  nanofb_crosscheck* cc = nullptr;
  nanofb_status s = nanofb_crosscheck_run(cfg.get(), &cc);
  if (s != NANOFB_OK) return report(s, "crosscheck");
  OwnedString text;
  nanofb_crosscheck_text(cc, text.out());
  std::fputs(text.c_str(), stdout);
  const std::string dir = out_dir(cfg);
  s = nanofb_crosscheck_write(cc, dir.c_str());
  const bool passed = nanofb_crosscheck_passed(cc) != 0;
  nanofb_crosscheck_free(cc);
  if (s != NANOFB_OK) return report(s, "writing crosscheck output");
  return passed ? kExitOk : kExitCrosscheck;
}

int cmd_simulate(const Options& o) {
  Config cfg;
  if (const int rc = load(o, cfg)) return rc;
  if (const int rc = regime_gate(o, cfg, false)) return rc;
  OwnedString summary;
  const std::string dir = out_dir(cfg);
  const nanofb_status s = nanofb_simulate(cfg.get(), dir.c_str(), summary.out());
  if (s != NANOFB_OK) return s == NANOFB_ERR_BLOWUP && o.strict ? kExitDivergence : report(s, "simulate");
  std::fputs(summary.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nanofb: measurement-based feedback on a nanomechanical beam"};
  app.set_version_flag("--version", std::string(nanofb_version()));
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Configuration file (key = value)");
    sub->add_option("--preset", o.preset, "Shipped preset: paper_eq22, fig3, fig4, fig5, crosscheck_small, softened");
    sub->add_option("--seed", o.seed, "Override the seed");
    sub->add_option("--ntraj", o.ntraj, "Override the number of trajectories")->check(CLI::PositiveNumber);
    sub->add_option("--engine", o.engine, "full, reduced-sme, reduced-gaussian or filter-selfloop");
    sub->add_flag("--strict", o.strict, "Abort on failed regime checks or diverged points");
    sub->add_option("--out", o.out, "Output directory");
  };
  CLI::App* derive = app.add_subcommand("derive", "Print derived parameters and the regime report");
  CLI::App* sweep = app.add_subcommand("sweep", "Gain sweep: CSV, manifest and summary");
  CLI::App* crosscheck = app.add_subcommand("crosscheck", "Compare the engines on a small instance");
  CLI::App* simulate = app.add_subcommand("simulate", "One trajectory with its full record");
  for (CLI::App* sub : {derive, sweep, crosscheck, simulate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (derive->parsed()) return cmd_derive(o);
  if (sweep->parsed()) return cmd_sweep(o);
  if (crosscheck->parsed()) return cmd_crosscheck(o);
  return cmd_simulate(o);
}
