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

/// The round engine of the mediated semi-quantum key distribution protocol.
///
/// Per round the server prepares |+> and sends it to Alice; Alice and Bob
/// each apply one of two randomly chosen operations -- MH (measure in Z,
/// re-prepare, Hadamard, forward) or HM (Hadamard, measure in Z, re-prepare,
/// forward) -- and the server finally measures in the X basis and announces
/// the outcome. Sifting classifies each round into one of nine cases / four
/// situations by the operation pair, checks the server's honesty on three of
/// the situations and extracts the raw key from the fourth.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "msqkd/attack.hpp"
#include "msqkd/qubit.hpp"
#include "msqkd/rng.hpp"

namespace msqkd {

enum class ParticipantOp { MH, HM };

struct ProtocolConfig {
  std::uint64_t rounds = 0;
  double p_alice_mh = 0.5;   // probability Alice picks MH
  double p_bob_mh = 0.5;     // probability Bob picks MH
  double check_fraction = 0.5;  // fraction of key rounds disclosed
  double error_threshold = 0.0;
  std::uint64_t master_seed = 0;

  /// Throws ConfigError unless rounds >= 1, both operation probabilities
  /// lie in (0,1) and check_fraction in [0,1].
  void validate() const;
};

struct RoundTranscript {
  std::uint64_t round_index = 0;
  ParticipantOp alice_op = ParticipantOp::MH;
  ParticipantOp bob_op = ParticipantOp::MH;
  int alice_bit = 0;
  int bob_bit = 0;          // 0 canonically when the round aborted
  int tp_announced_bit = 0; // 0 canonically when the round aborted
  bool alice_aborted = false;  // Alice chose HM and measured 1
  AdversaryRecord adversary;
};

/// Table row of a classified round. case_id runs 1..9; kUndefinedCase marks
/// aborted rounds and op/bit combinations that only an attack can produce.
struct SituationClass {
  int situation = 0;  // 1..4, from the operation pair
  int case_id = 0;
};
inline constexpr int kUndefinedCase = 0;

enum class AbortReason { None, ThresholdExceeded, AliceMeasuredOneInHm };

struct SiftOutcome {
  std::array<double, 4> situation_error_rate{};     // [situation - 1]
  std::array<std::uint64_t, 4> situation_counts{};
  std::array<std::uint64_t, 4> situation_errors{};
  std::array<std::uint64_t, 10> case_counts{};      // [0] = undefined
  std::array<std::uint64_t, 2> situation4_announcements{};
  std::vector<std::uint8_t> raw_key_alice;
  std::vector<std::uint8_t> raw_key_bob;
  std::vector<std::uint64_t> disclosed_positions;   // round indices, sorted
  std::vector<std::uint64_t> flagged_rounds;        // rounds failing a check
  bool aborted = false;
  AbortReason abort_reason = AbortReason::None;
};

// ---------------------------------------------------------------------------
// Single steps
// ---------------------------------------------------------------------------

/// The server's honest preparation, |+>.
PureState1Q tp_prepare();

struct PartyStep {
  int bit;
  PureState1Q outgoing;
};

/// One classical participant's action on an unentangled qubit.
/// MH: measure in Z, re-prepare, apply Hadamard, forward H|bit>.
/// HM: apply Hadamard, measure in Z, forward the fresh |bit>.
PartyStep classical_party_step(ParticipantOp op, const PureState1Q& incoming,
                               RngStream& rng);

/// The server's honest X measurement; |+> announces 0, |-> announces 1.
int tp_measure_announce(const PureState1Q& incoming, RngStream& rng);

// ---------------------------------------------------------------------------
// Rounds
// ---------------------------------------------------------------------------

/// Executes one full round under the given strategy. Deterministic in
/// (cfg.master_seed, round_index); rounds use disjoint RNG streams so they
/// may run in any order. Draw order inside a stream: Alice's operation,
/// Bob's operation, Alice's measurement, Bob's measurement, the server's
/// measurement.
RoundTranscript run_round(const ProtocolConfig& cfg, const AttackStrategy& s,
                          std::uint64_t round_index);

/// Runs all rounds; with threads > 1 the index range is split into
/// contiguous chunks. The result is identical for any thread count.
std::vector<RoundTranscript> run_protocol(const ProtocolConfig& cfg,
                                          const AttackStrategy& s,
                                          unsigned threads = 1);

SituationClass classify_round(const RoundTranscript& t);

/// Public discussion: per-situation honesty checks, disclosure of
/// ceil(check_fraction * count) key rounds, raw-key extraction and the
/// abort decision. Error events per situation:
///   1: announcement != Bob's bit
///   2: disclosed round with Alice's bit != Bob's bit
///   3: any of the three bits nonzero
///   4: Alice's bit nonzero
/// An aborted round always counts as its situation's error. Throws
/// EmptyRunError on an empty transcript list.
SiftOutcome sift(const std::vector<RoundTranscript>& transcripts,
                 const ProtocolConfig& cfg, RngStream& rng);

/// Raw-key bits divided by the number of server-prepared qubits.
double qubit_efficiency(const SiftOutcome& outcome, const ProtocolConfig& cfg);

// ---------------------------------------------------------------------------
// Transcript log
// ---------------------------------------------------------------------------

/// One round per line: index, ops, bits, announcement, abort flag.
/// Adversary records are not part of the log.
std::string transcript_line(const RoundTranscript& t);
RoundTranscript parse_transcript_line(const std::string& line);
void write_transcript_log(std::ostream& os,
                          const std::vector<RoundTranscript>& transcripts);
std::vector<RoundTranscript> read_transcript_log(std::istream& is);

const char* to_string(ParticipantOp op);
const char* to_string(AbortReason r);

}  // namespace msqkd
