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

/// Adversary strategies for the untrusted server: substituted preparations,
/// substituted final-measurement bases, announcement policies, and
/// collective-attack unitaries with ancilla bookkeeping. A strategy is an
/// immutable description; the protocol engine drives it through three hooks
/// (initial preparation, channel interception, final measurement).

#pragma once

#include <optional>
#include <vector>

#include "msqkd/qubit.hpp"
#include "msqkd/rng.hpp"

namespace msqkd {

enum class AttackKind {
  Honest,
  TpMeasureBasis,   // wrong final-measurement basis
  FakedSingle,      // Z-basis preparation instead of |+>
  FakedBell,        // half of an entangled pair, other half retained
  CollectiveFresh,  // per-channel unitary onto a fresh ancilla
  CollectiveShared  // all three unitaries act on one persistent ancilla
};

/// Maps a raw measurement outcome index to the announced bit.
using AnnouncementPolicy = std::vector<int>;

/// Immutable attack description. Build through the factory functions, which
/// validate unitarity and dimensions.
struct AttackStrategy {
  AttackKind kind = AttackKind::Honest;
  Basis1Q tp_basis = Basis1Q::x();         // single-qubit final measurement
  Basis2Q tp_basis_2q = Basis2Q::bell();   // FakedBell final measurement
  int faked_prep_bit = 0;                  // FakedSingle preparation
  Eigen::Index ancilla_dim = 1;
  Eigen::MatrixXcd u1, u2, u3;             // collective channel unitaries
  std::optional<AnnouncementPolicy> policy_override;

  bool collective() const {
    return kind == AttackKind::CollectiveFresh ||
           kind == AttackKind::CollectiveShared;
  }
  /// Number of raw outcomes of the final measurement (4 for FakedBell).
  int outcome_count() const { return kind == AttackKind::FakedBell ? 4 : 2; }
  /// Effective policy: the override if set, else the convention for the
  /// measurement basis (first listed outcome announces 0 for the X, Z and
  /// Breidbart bases; {phi+, psi+} -> 0 in the Bell basis; {00, 01} -> 0 in
  /// the two-qubit computational basis).
  AnnouncementPolicy policy() const;
};

AttackStrategy honest_strategy();
AttackStrategy tp_measure_attack(const Basis1Q& basis);
AttackStrategy faked_single_attack(int prep_bit, const Basis1Q& tp_basis);
AttackStrategy faked_bell_attack(const Basis2Q& tp_basis);
AttackStrategy collective_attack(AttackKind kind, Eigen::MatrixXcd u1,
                                 Eigen::MatrixXcd u2, Eigen::MatrixXcd u3,
                                 Eigen::Index ancilla_dim,
                                 const Basis1Q& tp_basis);

/// What the adversary keeps from one round: the raw final-measurement
/// outcome plus, for collective attacks, the collapsed ancilla state of each
/// channel (fresh) or the single surviving ancilla (shared).
struct AdversaryRecord {
  int tp_outcome = -1;  // -1 when the round aborted before the measurement
  std::vector<Eigen::VectorXcd> ancillas;
  bool empty() const { return tp_outcome < 0 && ancillas.empty(); }
};

// ---------------------------------------------------------------------------
// Round hooks
// ---------------------------------------------------------------------------

/// The quantum system a round starts from: the channel qubit joined to the
/// adversary's side information (trivial ancilla when there is none).
/// Honest and measurement attacks emit |+>; FakedSingle emits the chosen
/// Z-basis state; FakedBell emits half of phi+ with the other half as the
/// ancilla; collective attacks apply U1 to |+> (x) |e>.
JointState prepare_round_system(const AttackStrategy& s);

/// Interception of channel 2 or 3. `qubit` is the participant's freshly
/// prepared qubit, `carried` the ancilla residual left by the previous
/// measurement. For CollectiveFresh the carried ancilla is retired into
/// `recorded` and a fresh one is attached before the channel unitary.
struct ChannelSystem {
  JointState system;
  std::optional<Eigen::VectorXcd> recorded;
};
ChannelSystem intercept_channel(const AttackStrategy& s, int channel,
                                const PureState1Q& qubit,
                                const Eigen::VectorXcd& carried);

/// Final measurement and announcement. Measures in the strategy's basis
/// (single qubit, two-qubit with the retained half, or qubit-of-joint for
/// collective attacks) and announces policy(outcome).
struct TpFinal {
  int outcome;
  int announced;
  Eigen::VectorXcd ancilla_post;  // surviving ancilla (collective only)
};
TpFinal tp_final_measure(const AttackStrategy& s, const JointState& system,
                         RngStream& rng);

// ---------------------------------------------------------------------------
// Collective attacks from coefficient form
// ---------------------------------------------------------------------------

/// Coefficient parameterisation of the three channel unitaries. Each
/// unitary is pinned on the protocol's input columns:
///   U1: |+>(x)|e>  ->  a0 |0>|f0> + a1 |1>|f1>
///   U2: |+>(x)|r2> ->  b0 |0>|g0> + b1 |1>|g1>
///       |->(x)|r2> ->  c0 |0>|h0> + c1 |1>|h1>
///   U3: |+>(x)|r3> ->  d0 |0>|i0> + d1 |1>|i1>
///       |->(x)|r3> ->  e0 |0>|j0> + e1 |1>|j1>
/// where the reference ancilla inputs r2, r3 are fresh |e> kets for the
/// fresh variant and the carried states f0, g0 for the shared variant.
/// Coefficient pairs must be normalised; kets must be unit vectors of one
/// common dimension. Remaining columns are completed to a deterministic
/// unitary extension.
struct CollectiveCoefficients {
  Eigen::Vector2cd a, b, c, d, e;
  Eigen::VectorXcd f0, f1, g0, g1, h0, h1, i0, i1, j0, j1;

  Eigen::Index ancilla_dim() const { return f0.size(); }
};

AttackStrategy collective_attack_from_coefficients(
    const CollectiveCoefficients& p, AttackKind variant,
    const Basis1Q& tp_basis);

/// Shared-ancilla parameter set with zero detection probability and a key
/// independent ancilla: U1 and U2 act as the identity on the qubit while
/// U3 maps |+> -> |0>|i0> and |-> -> |1>|j1>, announced in the Z basis.
CollectiveCoefficients zero_detection_coefficients(Eigen::Index ancilla_dim = 2);
AttackStrategy zero_detection_collective();

/// Fresh-ancilla attack applying a controlled flip (qubit controls ancilla)
/// on every channel; copies Z information and disturbs every check.
AttackStrategy cnot_collective();

/// Completes a partial isometry (columns `inputs` -> `outputs`) to a full
/// unitary by a deterministic orthonormal extension. Throws
/// InconsistentParamsError when the inputs or the images are not
/// orthonormal within kUnitaryTol.
Eigen::MatrixXcd complete_unitary(const Eigen::MatrixXcd& inputs,
                                  const Eigen::MatrixXcd& outputs);

}  // namespace msqkd
