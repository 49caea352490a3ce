// Copyright 2026 The msqkd-sim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run honest executions, measure attack strategies,
// sweep detection curves and verify the exact analysis against Monte Carlo,
// with machine-readable JSON and plot-ready CSV output.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msqkd/analysis.hpp"
#include "msqkd/errors.hpp"
#include "msqkd/protocol.hpp"
#include "msqkd/serialize.hpp"

namespace {

using namespace msqkd;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMismatch = 2;

struct CommonOptions {
  std::string config_path;
  std::string strategy_name;
  std::string out_path;
  std::string format;
  std::vector<std::uint64_t> n_values;
  std::uint64_t rounds = 0;
  std::uint64_t seed = 0;
  double p_alice_mh = -1, p_bob_mh = -1, check_fraction = -1, threshold = -1;
  unsigned threads = 1;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool with_strategy) {
  cmd->add_option("--config", opt.config_path, "Scenario config file (JSON)");
  cmd->add_option("--rounds", opt.rounds, "Number of protocol rounds");
  cmd->add_option("--seed", opt.seed,
                  "Master seed (fallback: MSQKD_SEED, then 0)");
  cmd->add_option("--p-alice-mh", opt.p_alice_mh,
                  "Probability Alice picks the MH operation");
  cmd->add_option("--p-bob-mh", opt.p_bob_mh,
                  "Probability Bob picks the MH operation");
  cmd->add_option("--check-fraction", opt.check_fraction,
                  "Fraction of key rounds disclosed for checking");
  cmd->add_option("--threshold", opt.threshold,
                  "Per-situation error-rate threshold");
  cmd->add_option("--out", opt.out_path, "Output file (default: stdout)");
  cmd->add_option("--format", opt.format, "Output format: json or csv");
  cmd->add_option("--n-values", opt.n_values,
                  "Round-group sizes for detection curves")
      ->delimiter(',');
  cmd->add_option("--threads", opt.threads, "Worker threads for rounds");
  if (with_strategy) {
    cmd->add_option("--strategy", opt.strategy_name,
                    "Built-in strategy name or JSON via --config");
  }
}

bool flag_given(const CLI::App* cmd, const char* name) {
  const CLI::Option* o = cmd->get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

// Flags override the config file; the config file overrides the defaults.
ScenarioConfig resolve_scenario(const CLI::App* cmd, const CommonOptions& opt) {
  ScenarioConfig sc;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config file " + opt.config_path);
    Json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") +
                        e.what());
    }
    sc = scenario_from_json(j);
  }
  if (flag_given(cmd, "--rounds")) sc.protocol.rounds = opt.rounds;
  if (flag_given(cmd, "--seed")) {
    sc.protocol.master_seed = opt.seed;
  } else if (opt.config_path.empty() || sc.protocol.master_seed == 0) {
    if (const char* env = std::getenv("MSQKD_SEED")) {
      sc.protocol.master_seed = std::strtoull(env, nullptr, 10);
    }
  }
  if (flag_given(cmd, "--p-alice-mh")) sc.protocol.p_alice_mh = opt.p_alice_mh;
  if (flag_given(cmd, "--p-bob-mh")) sc.protocol.p_bob_mh = opt.p_bob_mh;
  if (flag_given(cmd, "--check-fraction")) {
    sc.protocol.check_fraction = opt.check_fraction;
  }
  if (flag_given(cmd, "--threshold")) sc.protocol.error_threshold = opt.threshold;
  if (flag_given(cmd, "--strategy")) {
    sc.strategy = strategy_from_name(opt.strategy_name);
  }
  if (flag_given(cmd, "--n-values")) sc.n_values = opt.n_values;
  if (flag_given(cmd, "--out")) sc.out_path = opt.out_path;
  if (flag_given(cmd, "--format")) {
    if (opt.format != "json" && opt.format != "csv") {
      throw ConfigError("format must be json or csv");
    }
    sc.format = opt.format;
  }
  return sc;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << text;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string curve_csv(const DetectionReport& report) {
  std::ostringstream csv;
  csv << "n,analytic,empirical,groups\n";
  for (const auto& pt : report.curve) {
    csv << pt.n << ',' << csv_number(pt.analytic) << ','
        << csv_number(pt.empirical) << ',' << pt.groups << '\n';
  }
  return csv.str();
}

int cmd_run(const CLI::App* cmd, const CommonOptions& opt, bool emit_keys,
            const std::string& transcript_path) {
  const ScenarioConfig sc = resolve_scenario(cmd, opt);
  sc.protocol.validate();

  const auto transcripts =
      run_protocol(sc.protocol, honest_strategy(), opt.threads);
  RngStream sift_rng(sc.protocol.master_seed, kSiftStreamId);
  const SiftOutcome outcome = sift(transcripts, sc.protocol, sift_rng);

  if (!transcript_path.empty()) {
    std::ofstream log(transcript_path, std::ios::binary);
    if (!log) {
      throw ConfigError("cannot open transcript file " + transcript_path);
    }
    write_transcript_log(log, transcripts);
  }

  if (sc.format == "csv") {
    std::ostringstream csv;
    csv << "rounds,aborted,raw_key_length,efficiency,err_sit1,err_sit2,"
           "err_sit3,err_sit4\n";
    csv << sc.protocol.rounds << ',' << (outcome.aborted ? 1 : 0) << ','
        << outcome.raw_key_alice.size() << ','
        << csv_number(qubit_efficiency(outcome, sc.protocol));
    for (int s = 0; s < 4; ++s) {
      csv << ',' << csv_number(outcome.situation_error_rate[s]);
    }
    csv << '\n';
    write_text(sc.out_path, csv.str());
  } else {
    Json j = Json::object();
    j["config"] = to_json(sc.protocol);
    j["result"] = sift_summary_json(outcome, sc.protocol, emit_keys);
    write_text(sc.out_path, j.dump(2) + "\n");
  }
  return outcome.aborted ? kExitMismatch : kExitOk;
}

int cmd_attack(const CLI::App* cmd, const CommonOptions& opt) {
  const ScenarioConfig sc = resolve_scenario(cmd, opt);
  sc.protocol.validate();
  if (sc.strategy.kind == AttackKind::Honest) {
    throw ConfigError("attack requires a strategy other than honest");
  }

  const std::vector<std::uint64_t> n_values =
      sc.n_values.empty() ? std::vector<std::uint64_t>{1, 4, 16, 64}
                          : sc.n_values;
  const DetectionReport report =
      detection_report(sc.strategy, sc.protocol, n_values, opt.threads);

  if (report.distinguishability && *report.distinguishability <= 1e-10) {
    std::cerr << "adversary records carry no key information "
                 "(trace distance "
              << *report.distinguishability << ")\n";
  }

  if (sc.format == "csv") {
    write_text(sc.out_path, curve_csv(report));
  } else {
    Json j = Json::object();
    j["strategy_name"] = strategy_name(sc.strategy);
    j["strategy"] = to_json(sc.strategy);
    j["config"] = to_json(sc.protocol);
    j["report"] = to_json(report);
    j["verdict"] = report.consistent ? "pass" : "fail";
    write_text(sc.out_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_sweep(const CLI::App* cmd, const CommonOptions& opt) {
  const ScenarioConfig sc = resolve_scenario(cmd, opt);
  sc.protocol.validate();
  if (sc.n_values.empty()) throw ConfigError("sweep requires --n-values");

  const DetectionReport report =
      detection_report(sc.strategy, sc.protocol, sc.n_values, opt.threads);
  write_text(sc.out_path, curve_csv(report));
  return kExitOk;
}

struct VerifyRow {
  std::string name;
  bool pass;
  std::string detail;
};

int cmd_verify(const CLI::App* cmd, const CommonOptions& opt, bool perturb) {
  ScenarioConfig sc = resolve_scenario(cmd, opt);
  if (!flag_given(cmd, "--rounds")) sc.protocol.rounds = 100000;
  if (!flag_given(cmd, "--seed") && sc.protocol.master_seed == 0) {
    sc.protocol.master_seed = 20260809;
  }
  sc.protocol.validate();
  const ProtocolConfig& cfg = sc.protocol;

  std::vector<VerifyRow> rows;
  const auto add = [&rows](const std::string& name, bool pass,
                           const std::string& detail) {
    rows.push_back({name, pass, detail});
  };
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12;
  };

  {
    const auto weights =
        enumerate_branches(honest_strategy(), cfg).case_weights();
    const auto expected = honest_case_probabilities();
    bool ok = true;
    for (int c = 1; c <= 9; ++c) {
      ok = ok && close(static_cast<double>(weights[c]), expected[c - 1]);
    }
    add("honest-case-distribution", ok, "exact nine-case weights");
  }

  const double breidbart_expected =
      0.25 * std::pow(std::cos(std::numbers::pi / 8) -
                          std::sin(std::numbers::pi / 8),
                      2);
  const std::vector<std::pair<std::string, double>> expected_detection = {
      {"z-measure", perturb ? 0.26 : 0.25},
      {"breidbart", breidbart_expected},
      {"faked-zero-z", 7.0 / 16},
      {"faked-zero-x", 0.25},
      {"faked-one-z", 7.0 / 16},
      {"faked-one-x", 0.25},
      {"faked-bell-bell", 3.0 / 8},
      {"faked-bell-computational", 7.0 / 16},
  };
  for (const auto& [name, expected] : expected_detection) {
    const double oracle = per_round_detection(strategy_from_name(name), cfg);
    std::ostringstream detail;
    detail << "oracle " << oracle << " expected " << expected;
    add("detection-" + name, close(oracle, expected), detail.str());
  }

  {
    ProtocolConfig defaults;
    defaults.rounds = 1;
    add("efficiency-analytic", efficiency_expected(defaults) == 0.125,
        "expected raw-key bits per server qubit");
  }

  {
    const auto transcripts = run_protocol(cfg, honest_strategy(), opt.threads);
    RngStream rng(cfg.master_seed, kSiftStreamId);
    const auto outcome = sift(transcripts, cfg, rng);
    bool zero_errors = !outcome.aborted;
    for (const double r : outcome.situation_error_rate) {
      zero_errors = zero_errors && r == 0.0;
    }
    add("honest-zero-errors", zero_errors, "all four situation error rates");
    add("honest-key-agreement",
        outcome.raw_key_alice == outcome.raw_key_bob &&
            !outcome.raw_key_alice.empty(),
        "raw keys bitwise equal");
    const double eff = qubit_efficiency(outcome, cfg);
    std::ostringstream detail;
    detail << "efficiency " << eff;
    add("honest-efficiency", std::abs(eff - 0.125) < 0.01, detail.str());
    const auto chi = chi_square_case_test(outcome.case_counts,
                                          honest_case_probabilities(), 0.01);
    std::ostringstream chid;
    chid << "statistic " << chi.statistic << " p " << chi.p_value;
    add("honest-case-chi-square", chi.pass, chid.str());
    const auto balance =
        chi_square_balance_test(outcome.situation4_announcements[0],
                                outcome.situation4_announcements[1], 0.01);
    add("honest-announcement-balance", balance.pass, "situation-4 split");
  }

  for (const auto& name :
       {"z-measure", "breidbart", "faked-zero-z", "faked-zero-x",
        "faked-bell-bell", "faked-bell-computational"}) {
    const auto report = detection_report(strategy_from_name(name), cfg,
                                         {1, 4, 16, 64}, opt.threads);
    std::ostringstream detail;
    detail << "empirical " << report.empirical << " oracle " << report.oracle;
    add(std::string("monte-carlo-") + name, report.consistent, detail.str());
  }

  {
    const auto stealth = strategy_from_name("collective-zero-detection");
    const auto en = enumerate_branches(stealth, cfg);
    const double detection = static_cast<double>(en.detection_weight());
    const double info = oracle_distinguishability(en);
    std::ostringstream detail;
    detail << "detection " << detection << " distinguishability " << info;
    add("collective-stealth-uninformative", detection == 0.0 && info <= 1e-10,
        detail.str());

    const auto cnot = strategy_from_name("collective-cnot");
    const auto en2 = enumerate_branches(cnot, cfg);
    const double detection2 = static_cast<double>(en2.detection_weight());
    const double info2 = oracle_distinguishability(en2);
    std::ostringstream detail2;
    detail2 << "detection " << detection2 << " distinguishability " << info2;
    add("collective-informative-detected", detection2 > 0.0 && info2 > 0.9,
        detail2.str());
  }

  bool all_pass = true;
  std::ostringstream table;
  for (const auto& row : rows) {
    all_pass = all_pass && row.pass;
    table << (row.pass ? "PASS" : "FAIL") << "  " << row.name << "  ("
          << row.detail << ")\n";
  }
  table << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
  std::cout << table.str();

  if (!sc.out_path.empty()) {
    Json j = Json::object();
    j["seed"] = cfg.master_seed;
    j["rounds"] = cfg.rounds;
    Json rows_json = Json::array();
    for (const auto& row : rows) {
      Json r = Json::object();
      r["name"] = row.name;
      r["pass"] = row.pass;
      r["detail"] = row.detail;
      rows_json.push_back(std::move(r));
    }
    j["checks"] = std::move(rows_json);
    j["all_pass"] = all_pass;
    write_text(sc.out_path, j.dump(2) + "\n");
  }
  return all_pass ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator and exact verifier for a mediated semi-quantum key "
      "distribution protocol with an untrusted server"};
  app.require_subcommand(1);

  CommonOptions run_opt, attack_opt, sweep_opt, verify_opt;
  bool emit_keys = false;
  bool perturb = false;
  bool list_strategies = false;
  std::string transcript_path;

  CLI::App* run = app.add_subcommand("run", "Execute the honest protocol");
  add_common_flags(run, run_opt, false);
  run->add_flag("--emit-keys", emit_keys, "Include raw keys in the output");
  run->add_option("--transcript", transcript_path,
                  "Write a per-round transcript log to this file");

  CLI::App* attack =
      app.add_subcommand("attack", "Measure detection of an attack strategy");
  add_common_flags(attack, attack_opt, true);
  attack->add_flag("--list-strategies", list_strategies,
                   "List built-in strategies and exit");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Detection curve over round-group sizes (CSV)");
  add_common_flags(sweep, sweep_opt, true);

  CLI::App* verify = app.add_subcommand(
      "verify", "Cross-check the exact analysis against Monte Carlo");
  add_common_flags(verify, verify_opt, false);
  verify->add_flag("--self-test-perturb", perturb,
                   "Negative control: perturb one expected value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      return cmd_run(run, run_opt, emit_keys, transcript_path);
    }
    if (attack->parsed()) {
      if (list_strategies) {
        for (const auto& name : builtin_strategy_names()) {
          std::cout << name << "\n";
        }
        return kExitOk;
      }
      return cmd_attack(attack, attack_opt);
    }
    if (sweep->parsed()) return cmd_sweep(sweep, sweep_opt);
    if (verify->parsed()) return cmd_verify(verify, verify_opt, perturb);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
