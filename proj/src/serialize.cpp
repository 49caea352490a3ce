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

#include "msqkd/serialize.hpp"

#include <cmath>

#include "msqkd/errors.hpp"

namespace msqkd {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key +
                      "' has the wrong type");
  }
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(std::string("config field '") + key + "' is missing");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key +
                      "' has the wrong type");
  }
}

const char* basis_name(Basis1Q::Tag tag) {
  switch (tag) {
    case Basis1Q::Tag::Z: return "z";
    case Basis1Q::Tag::X: return "x";
    case Basis1Q::Tag::Breidbart: return "breidbart";
    default: return "custom";
  }
}

Basis1Q basis_from_name(const std::string& name) {
  if (name == "z") return Basis1Q::z();
  if (name == "x") return Basis1Q::x();
  if (name == "breidbart") return Basis1Q::breidbart();
  throw ConfigError("unknown single-qubit basis '" + name + "'");
}

Eigen::VectorXcd vector_from_json(const Json& j) {
  const Eigen::MatrixXcd m = matrix_from_json(j);
  if (m.cols() != 1) throw ConfigError("expected a column vector");
  return m.col(0);
}

CollectiveCoefficients coefficients_from_json(const Json& j) {
  CollectiveCoefficients p;
  const auto pair = [&](const char* key) {
    const Eigen::VectorXcd v = vector_from_json(j.at(key));
    if (v.size() != 2) {
      throw ConfigError(std::string("coefficient pair '") + key +
                        "' must have two entries");
    }
    return Eigen::Vector2cd(v(0), v(1));
  };
  for (const char* key : {"a", "b", "c", "d", "e", "f0", "f1", "g0", "g1",
                          "h0", "h1", "i0", "i1", "j0", "j1"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("coefficients field '") + key +
                        "' is missing");
    }
  }
  p.a = pair("a");
  p.b = pair("b");
  p.c = pair("c");
  p.d = pair("d");
  p.e = pair("e");
  p.f0 = vector_from_json(j.at("f0"));
  p.f1 = vector_from_json(j.at("f1"));
  p.g0 = vector_from_json(j.at("g0"));
  p.g1 = vector_from_json(j.at("g1"));
  p.h0 = vector_from_json(j.at("h0"));
  p.h1 = vector_from_json(j.at("h1"));
  p.i0 = vector_from_json(j.at("i0"));
  p.i1 = vector_from_json(j.at("i1"));
  p.j0 = vector_from_json(j.at("j0"));
  p.j1 = vector_from_json(j.at("j1"));
  return p;
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXcd& m) {
  Json j = Json::object();
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  Json entries = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      entries.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    }
  }
  j["entries"] = std::move(entries);
  return j;
}

Eigen::MatrixXcd matrix_from_json(const Json& j) {
  const auto rows = require<Eigen::Index>(j, "rows");
  const auto cols = require<Eigen::Index>(j, "cols");
  const Json& entries = j.at("entries");
  if (rows < 1 || cols < 1 ||
      entries.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError("matrix entry count does not match rows * cols");
  }
  Eigen::MatrixXcd m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c, ++idx) {
      const Json& e = entries.at(idx);
      if (!e.is_array() || e.size() != 2) {
        throw ConfigError("matrix entries must be [re, im] pairs");
      }
      m(r, c) = std::complex<double>(e.at(0).get<double>(),
                                     e.at(1).get<double>());
    }
  }
  return m;
}

Json to_json(const ProtocolConfig& cfg) {
  Json j = Json::object();
  j["rounds"] = cfg.rounds;
  j["p_alice_mh"] = cfg.p_alice_mh;
  j["p_bob_mh"] = cfg.p_bob_mh;
  j["check_fraction"] = cfg.check_fraction;
  j["error_threshold"] = cfg.error_threshold;
  j["master_seed"] = cfg.master_seed;
  return j;
}

ProtocolConfig protocol_config_from_json(const Json& j) {
  ProtocolConfig cfg;
  cfg.rounds = get_or<std::uint64_t>(j, "rounds", cfg.rounds);
  cfg.p_alice_mh = get_or<double>(j, "p_alice_mh", cfg.p_alice_mh);
  cfg.p_bob_mh = get_or<double>(j, "p_bob_mh", cfg.p_bob_mh);
  cfg.check_fraction = get_or<double>(j, "check_fraction", cfg.check_fraction);
  cfg.error_threshold =
      get_or<double>(j, "error_threshold", cfg.error_threshold);
  cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", cfg.master_seed);
  return cfg;
}

Json to_json(const AttackStrategy& s) {
  Json j = Json::object();
  switch (s.kind) {
    case AttackKind::Honest:
      j["type"] = "honest";
      break;
    case AttackKind::TpMeasureBasis:
      j["type"] = "tp-measure";
      j["basis"] = basis_name(s.tp_basis.tag());
      break;
    case AttackKind::FakedSingle:
      j["type"] = "faked-single";
      j["prep"] = s.faked_prep_bit;
      j["tp_basis"] = basis_name(s.tp_basis.tag());
      break;
    case AttackKind::FakedBell:
      j["type"] = "faked-bell";
      j["tp_basis"] = s.tp_basis_2q.tag() == Basis2Q::Tag::Bell
                          ? "bell"
                          : "computational";
      break;
    default:
      j["type"] = s.kind == AttackKind::CollectiveFresh ? "collective-fresh"
                                                        : "collective-shared";
      j["tp_basis"] = basis_name(s.tp_basis.tag());
      j["ancilla_dim"] = s.ancilla_dim;
      j["u1"] = matrix_to_json(s.u1);
      j["u2"] = matrix_to_json(s.u2);
      j["u3"] = matrix_to_json(s.u3);
      break;
  }
  if (s.policy_override) j["policy"] = *s.policy_override;
  return j;
}

AttackStrategy strategy_from_json(const Json& j) {
  if (j.is_string()) return strategy_from_name(j.get<std::string>());
  const std::string type = require<std::string>(j, "type");
  AttackStrategy s;
  if (type == "honest") {
    s = honest_strategy();
  } else if (type == "tp-measure") {
    s = tp_measure_attack(basis_from_name(require<std::string>(j, "basis")));
  } else if (type == "faked-single") {
    s = faked_single_attack(
        require<int>(j, "prep"),
        basis_from_name(require<std::string>(j, "tp_basis")));
  } else if (type == "faked-bell") {
    const std::string b = require<std::string>(j, "tp_basis");
    if (b != "bell" && b != "computational") {
      throw ConfigError("faked-bell tp_basis must be bell or computational");
    }
    s = faked_bell_attack(b == "bell" ? Basis2Q::bell()
                                      : Basis2Q::computational());
  } else if (type == "collective-fresh" || type == "collective-shared") {
    const AttackKind kind = type == "collective-fresh"
                                ? AttackKind::CollectiveFresh
                                : AttackKind::CollectiveShared;
    const Basis1Q basis =
        basis_from_name(get_or<std::string>(j, "tp_basis", "x"));
    if (j.contains("coefficients")) {
      s = collective_attack_from_coefficients(
          coefficients_from_json(j.at("coefficients")), kind, basis);
    } else {
      const auto dim = require<Eigen::Index>(j, "ancilla_dim");
      s = collective_attack(kind, matrix_from_json(j.at("u1")),
                            matrix_from_json(j.at("u2")),
                            matrix_from_json(j.at("u3")), dim, basis);
    }
  } else {
    throw ConfigError("unknown strategy type '" + type + "'");
  }
  if (j.contains("policy")) {
    s.policy_override = j.at("policy").get<AnnouncementPolicy>();
    s.policy();  // validates coverage
  }
  return s;
}

AttackStrategy strategy_from_name(const std::string& name) {
  if (name == "honest") return honest_strategy();
  if (name == "z-measure") return tp_measure_attack(Basis1Q::z());
  if (name == "breidbart") return tp_measure_attack(Basis1Q::breidbart());
  if (name == "faked-zero-z") return faked_single_attack(0, Basis1Q::z());
  if (name == "faked-zero-x") return faked_single_attack(0, Basis1Q::x());
  if (name == "faked-one-z") return faked_single_attack(1, Basis1Q::z());
  if (name == "faked-one-x") return faked_single_attack(1, Basis1Q::x());
  if (name == "faked-bell-bell") return faked_bell_attack(Basis2Q::bell());
  if (name == "faked-bell-computational") {
    return faked_bell_attack(Basis2Q::computational());
  }
  if (name == "collective-cnot") return cnot_collective();
  if (name == "collective-zero-detection") return zero_detection_collective();
  throw ConfigError("unknown strategy '" + name + "'");
}

std::vector<std::string> builtin_strategy_names() {
  return {"honest",        "z-measure",      "breidbart",
          "faked-zero-z",  "faked-zero-x",   "faked-one-z",
          "faked-one-x",   "faked-bell-bell", "faked-bell-computational",
          "collective-cnot", "collective-zero-detection"};
}

std::string strategy_name(const AttackStrategy& s) {
  switch (s.kind) {
    case AttackKind::Honest:
      return "honest";
    case AttackKind::TpMeasureBasis:
      switch (s.tp_basis.tag()) {
        case Basis1Q::Tag::Z: return "z-measure";
        case Basis1Q::Tag::Breidbart: return "breidbart";
        case Basis1Q::Tag::X: return "x-measure";
        default: return "custom-measure";
      }
    case AttackKind::FakedSingle:
      return std::string("faked-") + (s.faked_prep_bit ? "one" : "zero") +
             (s.tp_basis.tag() == Basis1Q::Tag::Z ? "-z" : "-x");
    case AttackKind::FakedBell:
      return s.tp_basis_2q.tag() == Basis2Q::Tag::Bell
                 ? "faked-bell-bell"
                 : "faked-bell-computational";
    case AttackKind::CollectiveFresh:
      return "collective-fresh";
    default:
      return "collective-shared";
  }
}

Json to_json(const ScenarioConfig& sc) {
  Json j = Json::object();
  j["protocol"] = to_json(sc.protocol);
  j["strategy"] = to_json(sc.strategy);
  j["n_values"] = sc.n_values;
  Json out = Json::object();
  out["path"] = sc.out_path;
  out["format"] = sc.format;
  j["output"] = std::move(out);
  return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig sc;
  if (j.contains("protocol")) {
    sc.protocol = protocol_config_from_json(j.at("protocol"));
  }
  if (j.contains("strategy")) sc.strategy = strategy_from_json(j.at("strategy"));
  sc.n_values = get_or<std::vector<std::uint64_t>>(j, "n_values", {});
  if (j.contains("output")) {
    const Json& out = j.at("output");
    sc.out_path = get_or<std::string>(out, "path", "");
    sc.format = get_or<std::string>(out, "format", "json");
    if (sc.format != "json" && sc.format != "csv") {
      throw ConfigError("output format must be json or csv");
    }
  }
  return sc;
}

Json sift_summary_json(const SiftOutcome& outcome, const ProtocolConfig& cfg,
                       bool include_keys) {
  Json j = Json::object();
  j["rounds"] = cfg.rounds;
  j["aborted"] = outcome.aborted;
  j["abort_reason"] = to_string(outcome.abort_reason);
  j["situation_error_rates"] = outcome.situation_error_rate;
  j["situation_counts"] = outcome.situation_counts;
  j["situation_errors"] = outcome.situation_errors;
  Json cases = Json::array();
  for (int c = 1; c <= 9; ++c) cases.push_back(outcome.case_counts[c]);
  j["case_counts"] = std::move(cases);
  j["undefined_case_count"] = outcome.case_counts[kUndefinedCase];
  j["situation4_announcements"] = outcome.situation4_announcements;
  j["disclosed_count"] = outcome.disclosed_positions.size();
  j["flagged_count"] = outcome.flagged_rounds.size();
  j["raw_key_length"] = outcome.raw_key_alice.size();
  j["keys_match"] = outcome.raw_key_alice == outcome.raw_key_bob;
  j["efficiency"] = qubit_efficiency(outcome, cfg);
  if (include_keys) {
    const auto bits = [](const std::vector<std::uint8_t>& key) {
      std::string s;
      s.reserve(key.size());
      for (const auto b : key) s.push_back(b ? '1' : '0');
      return s;
    };
    j["raw_key_alice"] = bits(outcome.raw_key_alice);
    j["raw_key_bob"] = bits(outcome.raw_key_bob);
  }
  return j;
}

Json to_json(const DetectionReport& report) {
  Json j = Json::object();
  j["rounds"] = report.rounds;
  j["oracle_detection"] = report.oracle;
  j["empirical_detection"] = report.empirical;
  j["standard_error"] = report.standard_error;
  j["consistent"] = report.consistent;
  Json curve = Json::array();
  for (const auto& pt : report.curve) {
    Json p = Json::object();
    p["n"] = pt.n;
    p["analytic"] = pt.analytic;
    p["empirical"] = pt.empirical;
    p["groups"] = pt.groups;
    curve.push_back(std::move(p));
  }
  j["curve"] = std::move(curve);
  if (report.distinguishability) {
    j["distinguishability"] = *report.distinguishability;
    j["distinguishability_empirical"] = *report.distinguishability_empirical;
  }
  return j;
}

Json to_json(const CollectiveConstraintReport& r) {
  Json j = Json::object();
  j["variant"] = r.variant == AttackKind::CollectiveFresh ? "fresh" : "shared";
  j["tp_basis"] = basis_name(r.tp_basis);
  Json res = Json::object();
  res["hm_abort"] = r.residual_hm_abort;
  res["bob_flip"] = r.residual_bob_flip;
  res["key_anti_plus"] = r.residual_key_anti_plus;
  res["key_anti_minus"] = r.residual_key_anti_minus;
  res["announce_plus"] = r.residual_announce_plus;
  res["announce_minus"] = r.residual_announce_minus;
  res["max"] = r.max_residual;
  j["residuals"] = std::move(res);
  j["detection"] = r.detection;
  j["detection_channels_1_2"] = r.detection_channels_1_2;
  j["distinguishability"] = r.distinguishability;
  j["record_bases_orthonormal"] = r.record_bases_orthonormal;
  j["stealth_unsatisfiable"] = r.stealth_unsatisfiable;
  j["no_go_consistent"] = r.no_go_consistent;
  return j;
}

}  // namespace msqkd
