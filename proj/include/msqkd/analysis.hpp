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

/// Exact analysis of the protocol under a strategy: exhaustive branch
/// enumeration with Born weights, per-round detection probabilities,
/// N-round detection curves, key-conditioned adversary distinguishability,
/// efficiency, and the statistical tests that cross-check Monte Carlo runs
/// against the exact values.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msqkd/attack.hpp"
#include "msqkd/protocol.hpp"

namespace msqkd {

// ---------------------------------------------------------------------------
// Exact branch enumeration
// ---------------------------------------------------------------------------

/// One leaf of the round's decision tree with its exact joint weight.
/// Situation-2 leaves are split by the disclosure decision so that summing
/// flagged weights gives the per-round detection probability directly.
struct Branch {
  ParticipantOp alice_op = ParticipantOp::MH;
  ParticipantOp bob_op = ParticipantOp::MH;
  int alice_bit = 0;
  int bob_bit = 0;
  bool aborted = false;
  int tp_outcome = -1;
  int announced_bit = -1;
  bool disclosed = false;
  long double weight = 0;
  bool flagged = false;
  int situation = 0;
  int case_id = 0;
  Eigen::VectorXcd adversary_state;  // tensor of collapsed ancillas
};

/// Detection weight split by the disturbance that causes it.
struct DetectionBreakdown {
  long double abort = 0;          // Alice measured 1 under HM (channel 1)
  long double key_mismatch = 0;   // disclosed key round disagreed (channel 2)
  long double bob_nonzero = 0;    // Bob's verify bit nonzero (channel 2)
  long double announcement = 0;   // wrong announcement (channel 3)
  long double channels_1_2() const { return abort + key_mismatch + bob_nonzero; }
  long double total() const { return channels_1_2() + announcement; }
};

struct BranchEnumeration {
  std::vector<Branch> branches;

  long double total_weight() const;
  long double detection_weight() const;
  std::array<long double, 10> case_weights() const;  // [0] = undefined
  std::array<long double, 4> situation_weights() const;
  DetectionBreakdown detection_breakdown() const;
};

/// Walks the full round pipeline symbolically: both operation choices per
/// participant, every measurement branch, every final-measurement outcome
/// and the disclosure decision on key rounds, with exact joint weights.
BranchEnumeration enumerate_branches(const AttackStrategy& s,
                                     const ProtocolConfig& cfg);

/// Probability that a single round raises an error event, i.e. the flagged
/// branch weight.
double per_round_detection(const AttackStrategy& s, const ProtocolConfig& cfg);

/// 1 - (1 - p)^N for each N.
std::vector<double> detection_curve(double p,
                                    const std::vector<std::uint64_t>& n_values);

/// Expected raw-key bits per server qubit:
/// P(situation 2) * (1 - check_fraction).
double efficiency_expected(const ProtocolConfig& cfg);

// ---------------------------------------------------------------------------
// Adversary information
// ---------------------------------------------------------------------------

/// Trace distance between the adversary's ancilla states conditioned on the
/// key bit, computed exactly from the enumeration. Restricted to key
/// (situation-2) rounds and conditioned on Bob's bit. Throws
/// InsufficientDataError when either conditional set is empty or the
/// strategy keeps no ancillas.
double oracle_distinguishability(const BranchEnumeration& e);

/// The same quantity estimated from simulated rounds' adversary records.
/// Carries O(1/sqrt(n)) sampling error in the mixing weights.
double adversary_distinguishability(
    const std::vector<RoundTranscript>& transcripts);

// ---------------------------------------------------------------------------
// Statistical tests
// ---------------------------------------------------------------------------

struct ChiSquareResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t dof = 0;
  bool pass = true;
};

/// Pearson goodness of fit of observed counts against expected proportions.
/// Bins with zero expected probability must have zero observed count.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probs,
                               double alpha);

/// Nine-case histogram against expected case proportions (8 dof). Throws
/// InsufficientDataError below 1000 total counts.
ChiSquareResult chi_square_case_test(
    const std::array<std::uint64_t, 10>& case_counts,
    std::span<const double> expected_probs, double alpha);

/// 1-dof balance test of the server's situation-4 announcements against
/// (1/2, 1/2).
ChiSquareResult chi_square_balance_test(std::uint64_t zeros,
                                        std::uint64_t ones, double alpha);

/// Upper regularized incomplete gamma Q(a, x); the chi-square survival
/// function is Q(dof / 2, statistic / 2).
double regularized_gamma_q(double a, double x);

/// The honest nine-case distribution (cases 1..9).
std::span<const double> honest_case_probabilities();

// ---------------------------------------------------------------------------
// Oracle vs Monte Carlo
// ---------------------------------------------------------------------------

struct CurvePoint {
  std::uint64_t n = 0;
  double analytic = 0;
  double empirical = 0;
  std::uint64_t groups = 0;
};

struct DetectionReport {
  double oracle = 0;
  double empirical = 0;
  double standard_error = 0;  // binomial, from the oracle value
  std::uint64_t rounds = 0;
  bool consistent = true;     // |empirical - oracle| <= 3 sigma
  std::vector<CurvePoint> curve;
  std::optional<double> distinguishability;            // exact, collective only
  std::optional<double> distinguishability_empirical;  // from records
};

/// Runs the protocol under the strategy, sifts, and compares the empirical
/// per-round detection rate (and the grouped N-round detection fractions)
/// against the exact values.
DetectionReport detection_report(const AttackStrategy& s,
                                 const ProtocolConfig& cfg,
                                 const std::vector<std::uint64_t>& n_values,
                                 unsigned threads = 1);

// ---------------------------------------------------------------------------
// Collective constraint verification
// ---------------------------------------------------------------------------

/// Residuals of the stealth conditions a collective attack must satisfy to
/// evade each check, together with the exact consequences of the resulting
/// strategy. For the fresh variant with orthonormal record bases the key
/// stealth conditions are unsatisfiable: the residual norms equal the
/// coefficient norms, which normalisation pins to 1.
struct CollectiveConstraintReport {
  AttackKind variant = AttackKind::CollectiveShared;
  Basis1Q::Tag tp_basis = Basis1Q::Tag::X;

  double residual_hm_abort = 0;        // |a0 f0 - a1 f1|
  double residual_bob_flip = 0;        // |b1 g1 + c1 h1|
  double residual_key_anti_plus = 0;   // |b0 g0 - b1 g1|
  double residual_key_anti_minus = 0;  // |c0 h0 + c1 h1|
  double residual_announce_plus = 0;   // X: |d0 i0 - d1 i1|, Z: |d1|
  double residual_announce_minus = 0;  // X: |e0 j0 + e1 j1|, Z: |e0|
  double max_residual = 0;

  double detection = 0;                // exact per-round detection
  double detection_channels_1_2 = 0;   // abort + key disturbance share
  double distinguishability = 0;       // exact, key conditioned

  bool record_bases_orthonormal = false;  // {g}, {h} pairs orthonormal
  bool stealth_unsatisfiable = false;     // orthonormal bases force residual 1
  bool no_go_consistent = false;  // residuals ~ 0 implies distinguishability ~ 0
};

CollectiveConstraintReport collective_constraint_report(
    const CollectiveCoefficients& p, AttackKind variant,
    Basis1Q::Tag tp_basis);

}  // namespace msqkd
