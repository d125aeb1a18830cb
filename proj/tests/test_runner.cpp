// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nanofb/runner.hpp"

using namespace nanofb;

namespace {

std::string csv_of(const SweepResult& s) {
  std::ostringstream os;
  write_sweep_csv(os, s);
  return os.str();
}

// Small reduced-sme sweep on the softened instance; omega_T = 2 pi x 2 MHz.
RunConfig small_sweep() {
  RunConfig cfg = load_preset("crosscheck_small");
  set_config_value(cfg, "engine", "reduced-sme");
  set_config_value(cfg, "n_beam", "12");
  set_config_value(cfg, "rotating_frame", "false");
  set_config_value(cfg, "n_traj", "4");
  set_config_value(cfg, "horizon_gamma_M", "0.05");
  set_config_value(cfg, "dt_gamma_M", "1e-4");
  set_config_value(cfg, "sweep_v_x_over_omega_T", "0.1");
  set_config_value(cfg, "sweep_v_p_over_omega_T_min", "0.1");
  set_config_value(cfg, "sweep_v_p_over_omega_T_max", "0.3");
  set_config_value(cfg, "sweep_points", "3");
  return cfg;
}

}  // namespace

TEST_CASE("run_sweep: identical CSV for any worker count") {
  RunConfig cfg = small_sweep();
  set_config_value(cfg, "workers", "1");
  const SweepResult a = run_sweep(cfg);
  set_config_value(cfg, "workers", "3");
  const SweepResult b = run_sweep(cfg);
  REQUIRE(a.rows.size() == 3);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(a.diverged_rows() == 0);
  set_config_value(cfg, "seed", "12");
  CHECK(csv_of(run_sweep(cfg)) != csv_of(a));
}

TEST_CASE("run_sweep: CSV columns") {
  const SweepResult s = run_sweep(small_sweep());
  const std::string csv = csv_of(s);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  for (const char* col : {"v_p_over_wT", "VxM_c", "VpM_c", "VxM_uc", "VpM_uc", "xi", "VxM_pred", "VpM_pred", "nbar_c",
                          "nbar_uc", "Teff_c", "Teff_uc", "status"}) {
    CHECK_MESSAGE(header.find(col) != std::string::npos, col);
  }
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 3);
  CHECK(s.rows[1].v_p_over_omega_T == doctest::Approx(0.2));
  CHECK(s.rows[1].gains.v_p == doctest::Approx(0.2 * 2.0 * 3.14159265358979323846 * 2e6));
}

TEST_CASE("run_sweep: manifest reproduces the CSV byte for byte") {
  const RunConfig cfg = small_sweep();
  const SweepResult a = run_sweep(cfg);
  const std::string manifest = manifest_text(a.manifest);
  CHECK(manifest.find("# [derived]") != std::string::npos);
  const RunConfig again = parse_config(manifest, "manifest");
  const SweepResult b = run_sweep(again);
  CHECK(csv_of(a) == csv_of(b));

  RunConfig fig = load_preset("fig4");
  const SweepResult g1 = run_sweep(fig);
  const SweepResult g2 = run_sweep(parse_config(manifest_text(g1.manifest)));
  CHECK(csv_of(g1) == csv_of(g2));
  CHECK(g1.rows.size() == static_cast<std::size_t>(fig.sweep.points));
}

TEST_CASE("run_crosscheck: zero-gain small instance agrees") {
  const CrosscheckReport r = run_crosscheck(load_preset("crosscheck_small"));
  INFO(r.text());
  CHECK(r.passed());
  CHECK_FALSE(r.full_run);
  CHECK(r.lines.size() == 5);
  CHECK(r.inconsistencies.empty());
}

TEST_CASE("run_crosscheck: squeeze-p gains, reduced engines") {
  RunConfig cfg = load_preset("crosscheck_small");
  set_config_value(cfg, "rotating_frame", "false");
  set_config_value(cfg, "v_x_MHz", "1");    // 0.5 omega_T
  set_config_value(cfg, "v_p_MHz", "0.8");  // 0.4 omega_T
  set_config_value(cfg, "gain_purpose", "squeeze-p");
  set_config_value(cfg, "n_beam", "40");
  set_config_value(cfg, "dt_gamma_M", "5e-5");
  set_config_value(cfg, "horizon_gamma_M", "0.25");
  const CrosscheckReport r = run_crosscheck(cfg);
  INFO(r.text());
  CHECK(r.passed());
  CHECK(r.reduced.repairs == 0);
  CHECK(r.reduced.max_leakage < 1e-2);
}

TEST_CASE("run_crosscheck: mismatched step sizes are flagged") {
  RunConfig cfg = load_preset("crosscheck_small");
  set_config_value(cfg, "engine", "full");
  set_config_value(cfg, "n_beam_full", "4");
  set_config_value(cfg, "n_tlr", "2");
  set_config_value(cfg, "n_traj", "2");
  set_config_value(cfg, "horizon_gamma_M", "0.01");
  set_config_value(cfg, "dt_gamma_M", "5e-4");
  set_config_value(cfg, "dt_full_gamma_M", "3e-4");
  const CrosscheckReport r = run_crosscheck(cfg);
  CHECK(r.full_run);
  REQUIRE_FALSE(r.inconsistencies.empty());
  CHECK(r.inconsistencies[0].find("different times") != std::string::npos);
  CHECK_FALSE(r.passed());
  CHECK(r.text().find("different times") != std::string::npos);
}

TEST_CASE("run_crosscheck: rejects sweeps and single trajectories") {
  CHECK_THROWS_AS(run_crosscheck(small_sweep()), Error);
  RunConfig cfg = load_preset("crosscheck_small");
  set_config_value(cfg, "n_traj", "1");
  CHECK_THROWS_AS(run_crosscheck(cfg), Error);
}

TEST_CASE("run_simulation: one trajectory with its record") {
  RunConfig cfg = load_preset("crosscheck_small");
  set_config_value(cfg, "horizon_gamma_M", "0.05");
  set_config_value(cfg, "sample_stride", "10");
  const SimulationResult a = run_simulation(cfg);
  const SimulationResult b = run_simulation(cfg);
  CHECK(a.steps == 100);
  CHECK(a.csv == b.csv);
  std::istringstream in(a.csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("dY") != std::string::npos);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 10);
  CHECK_FALSE(a.summary.empty());
}

TEST_CASE("derive_report: formula and pinned values side by side") {
  const std::string text = derive_report(load_preset("paper_eq22"));
  CHECK(text.find("g_MT") != std::string::npos);
  CHECK(text.find("beta_L") != std::string::npos);
  CHECK(text.find("# regime checks") != std::string::npos);
  CHECK(std::string(version_string()).size() > 0);
}

TEST_CASE("write_text_file: creates directories and reports failures") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "nanofb_runner_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file(dir.string(), "a.txt", "hello\n");
  std::ifstream in(dir / "a.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line == "hello");
  std::filesystem::remove_all(dir.parent_path());
  try {
    write_text_file("/proc/definitely/not/writable", "a.txt", "x");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}
