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

/// JSON schemas for configurations, strategies and reports. Keys mirror the
/// config field names exactly; complex matrices are row-major arrays of
/// [re, im] pairs. Serialisation uses ordered documents so identical inputs
/// produce byte-identical output.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "msqkd/analysis.hpp"
#include "msqkd/attack.hpp"
#include "msqkd/protocol.hpp"

namespace msqkd {

using Json = nlohmann::ordered_json;

/// A full scenario: protocol settings, the strategy under test, sweep
/// points and output destination.
struct ScenarioConfig {
  ProtocolConfig protocol;
  AttackStrategy strategy;
  std::vector<std::uint64_t> n_values;
  std::string out_path;          // empty means stdout
  std::string format = "json";   // "json" or "csv"
};

Json to_json(const ProtocolConfig& cfg);
ProtocolConfig protocol_config_from_json(const Json& j);

Json to_json(const AttackStrategy& s);
AttackStrategy strategy_from_json(const Json& j);

/// Built-in strategy names: honest, z-measure, breidbart, faked-zero-z,
/// faked-zero-x, faked-one-z, faked-one-x, faked-bell-bell,
/// faked-bell-computational, collective-cnot, collective-zero-detection.
AttackStrategy strategy_from_name(const std::string& name);
std::vector<std::string> builtin_strategy_names();
std::string strategy_name(const AttackStrategy& s);

Json to_json(const ScenarioConfig& sc);
ScenarioConfig scenario_from_json(const Json& j);

Json matrix_to_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd matrix_from_json(const Json& j);

/// Result documents.
Json sift_summary_json(const SiftOutcome& outcome, const ProtocolConfig& cfg,
                       bool include_keys);
Json to_json(const DetectionReport& report);
Json to_json(const CollectiveConstraintReport& report);

}  // namespace msqkd
