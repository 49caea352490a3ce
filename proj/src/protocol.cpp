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

#include "msqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "msqkd/errors.hpp"

namespace msqkd {

void ProtocolConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (!(p_alice_mh > 0.0 && p_alice_mh < 1.0)) {
    throw ConfigError("p_alice_mh must lie in (0, 1)");
  }
  if (!(p_bob_mh > 0.0 && p_bob_mh < 1.0)) {
    throw ConfigError("p_bob_mh must lie in (0, 1)");
  }
  if (!(check_fraction >= 0.0 && check_fraction <= 1.0)) {
    throw ConfigError("check_fraction must lie in [0, 1]");
  }
  if (!(error_threshold >= 0.0 && error_threshold <= 1.0)) {
    throw ConfigError("error_threshold must lie in [0, 1]");
  }
}

PureState1Q tp_prepare() { return PureState1Q::plus(); }

PartyStep classical_party_step(ParticipantOp op, const PureState1Q& incoming,
                               RngStream& rng) {
  const Basis1Q z = Basis1Q::z();
  if (op == ParticipantOp::MH) {
    const int bit = measure_1q(incoming, z, rng).outcome;
    return {bit, hadamard(PureState1Q::from_bit(bit))};
  }
  const int bit = measure_1q(hadamard(incoming), z, rng).outcome;
  return {bit, PureState1Q::from_bit(bit)};
}

int tp_measure_announce(const PureState1Q& incoming, RngStream& rng) {
  return measure_1q(incoming, Basis1Q::x(), rng).outcome;  // |+> -> 0
}

namespace {

PureState1Q party_emit(ParticipantOp op, int bit) {
  return op == ParticipantOp::MH ? hadamard(PureState1Q::from_bit(bit))
                                 : PureState1Q::from_bit(bit);
}

// Measures the channel qubit in Z (after a Hadamard for HM) and hands back
// the bit together with the collapsed ancilla residual.
struct JointPartyStep {
  int bit;
  Eigen::VectorXcd ancilla;
};

JointPartyStep party_step_joint(ParticipantOp op, const JointState& incoming,
                                RngStream& rng) {
  const JointState pre =
      op == ParticipantOp::HM ? hadamard_on_qubit(incoming) : incoming;
  const auto m = measure_qubit_of_joint(pre, Basis1Q::z(), rng);
  // Post state is |bit> (x) ancilla, so the residual sits in the bit block.
  Eigen::VectorXcd ancilla = m.post.qubit_block(m.outcome);
  return {m.outcome, std::move(ancilla)};
}

}  // namespace

RoundTranscript run_round(const ProtocolConfig& cfg, const AttackStrategy& s,
                          std::uint64_t round_index) {
  RngStream rng(cfg.master_seed, round_index);

  RoundTranscript t;
  t.round_index = round_index;
  t.alice_op = rng.next_double() < cfg.p_alice_mh ? ParticipantOp::MH
                                                  : ParticipantOp::HM;
  t.bob_op = rng.next_double() < cfg.p_bob_mh ? ParticipantOp::MH
                                              : ParticipantOp::HM;

  const JointState initial = prepare_round_system(s);
  const auto alice = party_step_joint(t.alice_op, initial, rng);
  t.alice_bit = alice.bit;
  if (t.alice_op == ParticipantOp::HM && t.alice_bit == 1) {
    t.alice_aborted = true;
    return t;
  }

  const auto ch2 =
      intercept_channel(s, 2, party_emit(t.alice_op, t.alice_bit),
                        alice.ancilla);
  const auto bob = party_step_joint(t.bob_op, ch2.system, rng);
  t.bob_bit = bob.bit;

  const auto ch3 = intercept_channel(s, 3, party_emit(t.bob_op, t.bob_bit),
                                     bob.ancilla);
  const auto tp = tp_final_measure(s, ch3.system, rng);
  t.tp_announced_bit = tp.announced;
  t.adversary.tp_outcome = tp.outcome;
  if (s.kind == AttackKind::CollectiveFresh) {
    t.adversary.ancillas = {*ch2.recorded, *ch3.recorded, tp.ancilla_post};
  } else if (s.kind == AttackKind::CollectiveShared) {
    t.adversary.ancillas = {tp.ancilla_post};
  }
  return t;
}

std::vector<RoundTranscript> run_protocol(const ProtocolConfig& cfg,
                                          const AttackStrategy& s,
                                          unsigned threads) {
  cfg.validate();
  std::vector<RoundTranscript> out(cfg.rounds);
  const std::uint64_t n = cfg.rounds;
  const unsigned workers = std::max(
      1u, std::min<unsigned>(threads, static_cast<unsigned>(
                                          std::min<std::uint64_t>(n, 256))));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = run_round(cfg, s, i);
    return out;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) out[i] = run_round(cfg, s, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

SituationClass classify_round(const RoundTranscript& t) {
  SituationClass c;
  const bool a_mh = t.alice_op == ParticipantOp::MH;
  const bool b_mh = t.bob_op == ParticipantOp::MH;
  c.situation = a_mh ? (b_mh ? 1 : 2) : (b_mh ? 3 : 4);
  if (t.alice_aborted) {
    c.case_id = kUndefinedCase;
    return c;
  }
  const int a = t.alice_bit, b = t.bob_bit;
  switch (c.situation) {
    case 1:
      c.case_id = a == 0 ? (b == 0 ? 1 : 2) : (b == 0 ? 4 : 5);
      break;
    case 2:
      c.case_id = (a == 0 && b == 0) ? 3 : (a == 1 && b == 1) ? 6
                                                              : kUndefinedCase;
      break;
    case 3:
      c.case_id = (a == 0 && b == 0) ? 7 : kUndefinedCase;
      break;
    default:
      c.case_id = a == 0 ? (b == 0 ? 8 : 9) : kUndefinedCase;
      break;
  }
  return c;
}

SiftOutcome sift(const std::vector<RoundTranscript>& transcripts,
                 const ProtocolConfig& cfg, RngStream& rng) {
  if (transcripts.empty()) throw EmptyRunError("sift: no transcripts");

  SiftOutcome out;
  std::vector<std::size_t> key_rounds;  // positions of situation-2 rounds
  std::vector<SituationClass> classes(transcripts.size());
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    classes[i] = classify_round(transcripts[i]);
    out.situation_counts[classes[i].situation - 1]++;
    out.case_counts[classes[i].case_id]++;
    if (classes[i].situation == 2) key_rounds.push_back(i);
  }

  // Disclose ceil(check_fraction * count) key rounds, chosen uniformly.
  const std::uint64_t n2 = key_rounds.size();
  std::uint64_t disclose =
      static_cast<std::uint64_t>(std::ceil(cfg.check_fraction * double(n2)));
  disclose = std::min(disclose, n2);
  for (std::uint64_t i = 0; i < disclose; ++i) {
    const std::uint64_t j = i + rng.next_u64() % (n2 - i);
    std::swap(key_rounds[i], key_rounds[j]);
  }
  std::vector<std::uint8_t> is_disclosed(transcripts.size(), 0);
  for (std::uint64_t i = 0; i < disclose; ++i) {
    is_disclosed[key_rounds[i]] = 1;
    out.disclosed_positions.push_back(transcripts[key_rounds[i]].round_index);
  }
  std::sort(out.disclosed_positions.begin(), out.disclosed_positions.end());

  bool any_abort_flag = false;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const RoundTranscript& t = transcripts[i];
    const int sit = classes[i].situation;
    bool error = false;
    any_abort_flag |= t.alice_aborted;
    switch (sit) {
      case 1:
        error = t.tp_announced_bit != t.bob_bit;
        break;
      case 2:
        if (is_disclosed[i]) {
          error = t.alice_bit != t.bob_bit;
        } else {
          out.raw_key_alice.push_back(static_cast<std::uint8_t>(t.alice_bit));
          out.raw_key_bob.push_back(static_cast<std::uint8_t>(t.bob_bit));
        }
        break;
      case 3:
        error = t.alice_aborted || t.alice_bit != 0 || t.bob_bit != 0 ||
                t.tp_announced_bit != 0;
        break;
      default:
        error = t.alice_aborted || t.alice_bit != 0;
        if (!t.alice_aborted) {
          out.situation4_announcements[t.tp_announced_bit]++;
        }
        break;
    }
    if (error) {
      out.situation_errors[sit - 1]++;
      out.flagged_rounds.push_back(t.round_index);
    }
  }

  for (int sit = 0; sit < 4; ++sit) {
    const std::uint64_t denom =
        sit == 1 ? disclose : out.situation_counts[sit];
    out.situation_error_rate[sit] =
        denom == 0 ? 0.0
                   : static_cast<double>(out.situation_errors[sit]) /
                         static_cast<double>(denom);
  }

  for (int sit = 0; sit < 4; ++sit) {
    if (out.situation_error_rate[sit] > cfg.error_threshold) {
      out.aborted = true;
    }
  }
  if (out.aborted) {
    out.abort_reason = any_abort_flag ? AbortReason::AliceMeasuredOneInHm
                                      : AbortReason::ThresholdExceeded;
  }
  return out;
}

double qubit_efficiency(const SiftOutcome& outcome,
                        const ProtocolConfig& cfg) {
  if (cfg.rounds == 0) return 0.0;
  return static_cast<double>(outcome.raw_key_alice.size()) /
         static_cast<double>(cfg.rounds);
}

// ---------------------------------------------------------------------------
// Transcript log
// ---------------------------------------------------------------------------

const char* to_string(ParticipantOp op) {
  return op == ParticipantOp::MH ? "MH" : "HM";
}

const char* to_string(AbortReason r) {
  switch (r) {
    case AbortReason::ThresholdExceeded: return "threshold-exceeded";
    case AbortReason::AliceMeasuredOneInHm: return "alice-HM-measured-one";
    default: return "none";
  }
}

std::string transcript_line(const RoundTranscript& t) {
  std::ostringstream os;
  os << t.round_index << ' ' << to_string(t.alice_op) << ' '
     << to_string(t.bob_op) << ' ' << t.alice_bit << ' ' << t.bob_bit << ' '
     << t.tp_announced_bit << ' ' << (t.alice_aborted ? 'A' : '-');
  return os.str();
}

namespace {

ParticipantOp op_from_token(const std::string& token) {
  if (token == "MH") return ParticipantOp::MH;
  if (token == "HM") return ParticipantOp::HM;
  throw ConfigError("transcript log: bad operation token '" + token + "'");
}

}  // namespace

RoundTranscript parse_transcript_line(const std::string& line) {
  std::istringstream is(line);
  RoundTranscript t;
  std::string a_op, b_op, flag;
  if (!(is >> t.round_index >> a_op >> b_op >> t.alice_bit >> t.bob_bit >>
        t.tp_announced_bit >> flag)) {
    throw ConfigError("transcript log: malformed line '" + line + "'");
  }
  t.alice_op = op_from_token(a_op);
  t.bob_op = op_from_token(b_op);
  t.alice_aborted = flag == "A";
  return t;
}

void write_transcript_log(std::ostream& os,
                          const std::vector<RoundTranscript>& transcripts) {
  for (const auto& t : transcripts) os << transcript_line(t) << '\n';
}

std::vector<RoundTranscript> read_transcript_log(std::istream& is) {
  std::vector<RoundTranscript> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(parse_transcript_line(line));
  }
  return out;
}

}  // namespace msqkd
