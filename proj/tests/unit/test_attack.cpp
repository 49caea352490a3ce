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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "msqkd/analysis.hpp"
#include "msqkd/attack.hpp"
#include "msqkd/protocol.hpp"
#include "support.hpp"

using namespace msqkd;
using Complex = std::complex<double>;

namespace {

ProtocolConfig config(std::uint64_t rounds, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.rounds = rounds;
  cfg.master_seed = seed;
  return cfg;
}

Eigen::MatrixXcd cnot_matrix() {
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(4, 4);
  u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

}  // namespace

TEST_CASE("initial preparations per strategy") {
  SUBCASE("honest and measurement attacks emit |+>") {
    for (const auto& s :
         {honest_strategy(), tp_measure_attack(Basis1Q::z())}) {
      const JointState sys = prepare_round_system(s);
      CHECK(sys.ancilla_dim() == 1);
      const auto p = born_probabilities(as_single_qubit(sys), Basis1Q::x());
      CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("faked single emits the chosen Z state") {
    const JointState sys =
        prepare_round_system(faked_single_attack(0, Basis1Q::z()));
    CHECK(std::abs(sys.amps()(0) - Complex(1.0)) < 1e-12);
    const JointState sys1 =
        prepare_round_system(faked_single_attack(1, Basis1Q::x()));
    CHECK(std::abs(sys1.amps()(1) - Complex(1.0)) < 1e-12);
  }

  SUBCASE("faked Bell emits half of phi+ and retains the other half") {
    const JointState sys =
        prepare_round_system(faked_bell_attack(Basis2Q::bell()));
    CHECK(sys.ancilla_dim() == 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(sys.amp(0, 0) - Complex(inv_sqrt2)) < 1e-12);
    CHECK(std::abs(sys.amp(1, 1) - Complex(inv_sqrt2)) < 1e-12);
    CHECK(std::abs(sys.amp(0, 1)) < 1e-12);
    CHECK(std::abs(sys.amp(1, 0)) < 1e-12);
  }

  SUBCASE("collective strategies apply the first channel unitary") {
    const auto s = collective_attack(
        AttackKind::CollectiveFresh, cnot_matrix(),
        Eigen::MatrixXcd::Identity(4, 4), Eigen::MatrixXcd::Identity(4, 4), 2,
        Basis1Q::x());
    const JointState sys = prepare_round_system(s);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(sys.amp(0, 0) - Complex(inv_sqrt2)) < 1e-12);
    CHECK(std::abs(sys.amp(1, 1) - Complex(inv_sqrt2)) < 1e-12);
  }
}

TEST_CASE("announcement policies") {
  CHECK(honest_strategy().policy() == AnnouncementPolicy{0, 1});
  CHECK(faked_bell_attack(Basis2Q::bell()).policy() ==
        AnnouncementPolicy{0, 1, 0, 1});
  CHECK(faked_bell_attack(Basis2Q::computational()).policy() ==
        AnnouncementPolicy{0, 0, 1, 1});

  AttackStrategy s = tp_measure_attack(Basis1Q::breidbart());
  CHECK(s.policy() == AnnouncementPolicy{0, 1});
  s.policy_override = AnnouncementPolicy{1, 0};
  CHECK(s.policy() == AnnouncementPolicy{1, 0});
  s.policy_override = AnnouncementPolicy{1};
  CHECK_THROWS_AS(s.policy(), ConfigError);
}

TEST_CASE("final measurement under attack bases") {
  RngStream rng(88, 0);

  SUBCASE("Z measurement of |+> announces each bit half the time") {
    const auto s = tp_measure_attack(Basis1Q::z());
    const JointState sys = as_joint(PureState1Q::plus());
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ones += tp_final_measure(s, sys, rng).announced;
    CHECK(std::abs(ones / double(n) - 0.5) < 0.02);
  }

  SUBCASE("intermediate-basis measurement of |-> announces 0 at the overlap rate") {
    const auto s = tp_measure_attack(Basis1Q::breidbart());
    const JointState sys = as_joint(PureState1Q::minus());
    const double c = std::cos(std::numbers::pi / 8);
    const double sn = std::sin(std::numbers::pi / 8);
    const double wrong = 0.5 * (c - sn) * (c - sn);
    int zeros = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      zeros += tp_final_measure(s, sys, rng).announced == 0;
    }
    CHECK(std::abs(zeros / double(n) - wrong) < 0.01);
  }

  SUBCASE("Bell measurement of |00> yields phi+ or phi- evenly") {
    const auto s = faked_bell_attack(Basis2Q::bell());
    Eigen::VectorXcd amps(4);
    amps << 1.0, 0.0, 0.0, 0.0;
    const JointState sys(2, amps);
    std::array<int, 4> counts{};
    const int n = 20000;
    for (int i = 0; i < n; ++i) counts[tp_final_measure(s, sys, rng).outcome]++;
    CHECK(std::abs(counts[0] / double(n) - 0.5) < 0.02);
    CHECK(std::abs(counts[1] / double(n) - 0.5) < 0.02);
    CHECK(counts[2] == 0);
    CHECK(counts[3] == 0);
  }

  SUBCASE("dimension checks") {
    const auto bell = faked_bell_attack(Basis2Q::bell());
    CHECK_THROWS_AS(
        tp_final_measure(bell, as_joint(PureState1Q::plus()), rng),
        DimensionMismatchError);
  }
}

TEST_CASE("faked-Bell bookkeeping of the retained particle") {
  // Force each branch of the pipeline and check the two-particle state the
  // server measures at the end.
  const auto s = faked_bell_attack(Basis2Q::bell());
  const auto z = Basis1Q::z();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  const JointState initial = prepare_round_system(s);

  SUBCASE("key branch: both measured 0 ends in |00>") {
    const auto after_alice = collapse_qubit_of_joint(initial, z, 0);
    const Eigen::VectorXcd retained = after_alice.qubit_block(0);
    CHECK((retained - ancilla_ket<double>(2, 0)).norm() < 1e-12);
    // Alice forwards |+>, Bob applies H and measures 0, forwards |0>.
    const auto ch2 = intercept_channel(s, 2, PureState1Q::plus(), retained);
    const auto pre_bob = hadamard_on_qubit(ch2.system);
    const auto after_bob = collapse_qubit_of_joint(pre_bob, z, 0);
    const auto ch3 = intercept_channel(s, 3, PureState1Q::zero(),
                                       after_bob.qubit_block(0));
    CHECK(std::abs(ch3.system.amps()(0) - std::complex<double>(1.0)) < 1e-12);
  }

  SUBCASE("verify branch: Alice HM leaves the retained particle in |+>") {
    const auto pre_alice = hadamard_on_qubit(initial);
    const auto after_alice = collapse_qubit_of_joint(pre_alice, z, 0);
    const Eigen::VectorXcd retained = after_alice.qubit_block(0);
    Eigen::VectorXcd plus(2);
    plus << inv_sqrt2, inv_sqrt2;
    CHECK((retained - plus).norm() < 1e-12);
    // Bob MH measures 0 with certainty and forwards |+>: the server holds
    // |+>|+>, which never announces 1 in the Bell convention.
    const auto ch2 = intercept_channel(s, 2, PureState1Q::zero(), retained);
    RngStream rng(7, 0);
    const auto bob = measure_qubit_of_joint(ch2.system, z, rng);
    CHECK(bob.outcome == 0);
    const auto ch3 = intercept_channel(s, 3, PureState1Q::plus(),
                                       bob.post.qubit_block(0));
    const auto p = born_probabilities(as_two_qubit(ch3.system), Basis2Q::bell());
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));  // phi+
    CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-12));  // psi+
    CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p[3] == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("abort branch: Alice HM measuring 1 leaves |->") {
    const auto pre_alice = hadamard_on_qubit(initial);
    const auto after_alice = collapse_qubit_of_joint(pre_alice, z, 1);
    Eigen::VectorXcd minus(2);
    minus << inv_sqrt2, -inv_sqrt2;
    CHECK((after_alice.qubit_block(1) - minus).norm() < 1e-12);
  }
}

TEST_CASE("strategy construction validates unitarity") {
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(4, 4);
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(
      collective_attack(AttackKind::CollectiveFresh, bad, cnot_matrix(),
                        cnot_matrix(), 2, Basis1Q::x()),
      NonUnitaryError);

  // A malformed strategy smuggled past the factory still fails inside the
  // round pipeline.
  AttackStrategy s = cnot_collective();
  s.u2 = bad;
  const ProtocolConfig cfg = config(4, 1);
  CHECK_THROWS_AS(run_protocol(cfg, s), NonUnitaryError);
}

TEST_CASE("complete_unitary extends partial isometries") {
  std::mt19937_64 gen(55);

  SUBCASE("pinned columns are mapped exactly and the result is unitary") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXcd u = test::random_unitary(6, gen);
      const Eigen::MatrixXcd inputs = test::random_unitary(6, gen).leftCols(2);
      const Eigen::MatrixXcd outputs = u * inputs;
      const Eigen::MatrixXcd v = complete_unitary(inputs, outputs);
      CHECK(is_unitary(v));
      CHECK((v * inputs - outputs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("non-orthonormal inputs or images are rejected") {
    Eigen::MatrixXcd in(2, 2);
    in << 1.0, 1.0, 0.0, 0.0;  // identical columns
    CHECK_THROWS_AS(complete_unitary(in, Eigen::MatrixXcd::Identity(2, 2)),
                    InconsistentParamsError);
    Eigen::MatrixXcd out(2, 1);
    out << 0.5, 0.0;  // not a unit vector
    CHECK_THROWS_AS(
        complete_unitary(Eigen::MatrixXcd::Identity(2, 2).leftCols(1), out),
        InconsistentParamsError);
  }
}

TEST_CASE("collective strategies from coefficient form") {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  SUBCASE("an entangling first channel pins the specified column") {
    CollectiveCoefficients p = zero_detection_coefficients();
    p.a << inv_sqrt2, inv_sqrt2;
    p.f0 = ancilla_ket<double>(2, 0);
    p.f1 = ancilla_ket<double>(2, 1);  // orthogonal record states
    const auto s = collective_attack_from_coefficients(
        p, AttackKind::CollectiveFresh, Basis1Q::x());
    const JointState sys = prepare_round_system(s);
    CHECK(std::abs(sys.amp(0, 0) - Complex(inv_sqrt2)) < 1e-10);
    CHECK(std::abs(sys.amp(1, 1) - Complex(inv_sqrt2)) < 1e-10);
    CHECK(std::abs(sys.amp(0, 1)) < 1e-10);
  }

  SUBCASE("degenerate coefficient pairs are accepted when normalised") {
    CollectiveCoefficients p = zero_detection_coefficients();
    p.a << 1.0, 0.0;
    p.f0 = ancilla_ket<double>(2, 0);
    p.f1 = ancilla_ket<double>(2, 1);
    CHECK_NOTHROW(collective_attack_from_coefficients(
        p, AttackKind::CollectiveFresh, Basis1Q::x()));
  }

  SUBCASE("unnormalised coefficients are rejected") {
    CollectiveCoefficients p = zero_detection_coefficients();
    p.a << 1.0, 1.0;
    CHECK_THROWS_AS(collective_attack_from_coefficients(
                        p, AttackKind::CollectiveFresh, Basis1Q::x()),
                    InconsistentParamsError);
  }

  SUBCASE("images that cannot extend to a unitary are rejected") {
    CollectiveCoefficients p = zero_detection_coefficients();
    // Make the two second-channel images parallel.
    p.b << 1.0, 0.0;
    p.c << 1.0, 0.0;
    p.g0 = p.h0 = ancilla_ket<double>(2, 0);
    CHECK_THROWS_AS(collective_attack_from_coefficients(
                        p, AttackKind::CollectiveShared, Basis1Q::x()),
                    InconsistentParamsError);
  }

  SUBCASE("the stealth parameter set acts as the identity on channels 1 and 2") {
    const CollectiveCoefficients p = zero_detection_coefficients();
    const auto s = collective_attack_from_coefficients(
        p, AttackKind::CollectiveShared, Basis1Q::z());
    const Eigen::VectorXcd k0 = ancilla_ket<double>(2, 0);
    const JointState plus_in = attach_ancilla(PureState1Q::plus(), k0);
    const JointState minus_in = attach_ancilla(PureState1Q::minus(), k0);
    CHECK((apply_joint_unitary(plus_in, s.u1).amps() - plus_in.amps()).norm() <
          1e-10);
    CHECK((apply_joint_unitary(plus_in, s.u2).amps() - plus_in.amps()).norm() <
          1e-10);
    CHECK(
        (apply_joint_unitary(minus_in, s.u2).amps() - minus_in.amps()).norm() <
        1e-10);
    // The third channel maps |+> -> |0>|i0> and |-> -> |1>|j1>.
    const JointState out_plus = apply_joint_unitary(plus_in, s.u3);
    CHECK(std::abs(out_plus.amp(0, 0) - Complex(1.0)) < 1e-10);
    const JointState out_minus = apply_joint_unitary(minus_in, s.u3);
    CHECK(std::abs(out_minus.amp(1, 1) - Complex(1.0)) < 1e-10);
  }
}

TEST_CASE("detection is invariant to the unitary extension on unused columns") {
  // Complete the stealth parameters two different ways: canonically, and
  // composed with an extra unitary acting only on the orthogonal complement
  // of the pinned input columns.
  const CollectiveCoefficients p = zero_detection_coefficients();
  const AttackStrategy base = collective_attack_from_coefficients(
      p, AttackKind::CollectiveShared, Basis1Q::z());

  std::mt19937_64 gen(66);
  const Eigen::VectorXcd k0 = ancilla_ket<double>(2, 0);
  Eigen::MatrixXcd pinned(4, 2);
  pinned.col(0) = attach_ancilla(PureState1Q::plus(), p.g0).amps();
  pinned.col(1) = attach_ancilla(PureState1Q::minus(), p.g0).amps();

  // Orthonormal basis of the complement of the pinned span.
  Eigen::MatrixXcd full = complete_unitary(
      pinned, pinned);  // identity on the span, canonical elsewhere
  Eigen::MatrixXcd complement(4, 2);
  int found = 0;
  for (int i = 0; i < 4 && found < 2; ++i) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v(i) = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      v -= pinned * (pinned.adjoint() * v);
      if (found > 0) {
        v -= complement.leftCols(found) *
             (complement.leftCols(found).adjoint() * v);
      }
    }
    if (v.norm() > 1e-6) complement.col(found++) = v / v.norm();
  }
  REQUIRE(found == 2);
  const Eigen::MatrixXcd mix = test::random_unitary(2, gen);
  const Eigen::MatrixXcd twist =
      pinned * pinned.adjoint() +
      complement * mix * complement.adjoint();
  REQUIRE(is_unitary(twist));

  AttackStrategy twisted = base;
  twisted.u3 = base.u3 * twist.adjoint();
  REQUIRE(is_unitary(twisted.u3));

  const ProtocolConfig cfg = config(1, 0);
  const double d_base = per_round_detection(base, cfg);
  const double d_twisted = per_round_detection(twisted, cfg);
  CHECK(std::abs(d_base - d_twisted) < 1e-12);
  CHECK(std::abs(oracle_distinguishability(enumerate_branches(base, cfg)) -
                 oracle_distinguishability(enumerate_branches(twisted, cfg))) <
        1e-10);
}

TEST_CASE("adversary distinguishability") {
  const ProtocolConfig cfg = config(30000, 404);

  SUBCASE("identity couplings record nothing about the key") {
    const auto s = collective_attack(
        AttackKind::CollectiveFresh, Eigen::MatrixXcd::Identity(4, 4),
        Eigen::MatrixXcd::Identity(4, 4), Eigen::MatrixXcd::Identity(4, 4), 2,
        Basis1Q::x());
    CHECK(oracle_distinguishability(enumerate_branches(s, cfg)) < 1e-12);
    const auto transcripts = run_protocol(cfg, s);
    CHECK(adversary_distinguishability(transcripts) < 1e-9);
  }

  SUBCASE("strategies without ancillas have no record to measure") {
    const auto transcripts = run_protocol(config(100, 1), honest_strategy());
    CHECK_THROWS_AS(adversary_distinguishability(transcripts),
                    InsufficientDataError);
    CHECK_THROWS_AS(
        oracle_distinguishability(
            enumerate_branches(honest_strategy(), config(100, 1))),
        InsufficientDataError);
  }

  SUBCASE("controlled flips on every channel copy the key bit") {
    const auto s = cnot_collective();
    const auto en = enumerate_branches(s, cfg);
    CHECK(oracle_distinguishability(en) > 0.9);
    const auto breakdown = en.detection_breakdown();
    const auto situations = [&en] {
      std::array<long double, 4> flagged{};
      for (const auto& b : en.branches) {
        if (b.flagged) flagged[b.situation - 1] += b.weight;
      }
      return flagged;
    }();
    CHECK(static_cast<double>(situations[2]) > 0.0);  // situation 3
    CHECK(static_cast<double>(situations[3]) > 0.0);  // situation 4
    CHECK(static_cast<double>(breakdown.total()) > 0.0);

    const auto transcripts = run_protocol(cfg, s);
    CHECK(adversary_distinguishability(transcripts) > 0.9);
  }
}

TEST_CASE("constraint report for the fresh variant") {
  SUBCASE("orthonormal record bases make the stealth conditions unsatisfiable") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 10; ++trial) {
      CollectiveCoefficients p = zero_detection_coefficients();
      // Random coefficients orthogonal as pairs (so the images extend to a
      // unitary) with canonical orthonormal record bases.
      const Eigen::MatrixXcd bc = test::random_unitary(2, gen);
      p.b << bc(0, 0), bc(1, 0);
      p.c << bc(0, 1), bc(1, 1);
      p.g0 = p.h0 = ancilla_ket<double>(2, 0);
      p.g1 = p.h1 = ancilla_ket<double>(2, 1);

      const auto report = collective_constraint_report(
          p, AttackKind::CollectiveFresh, Basis1Q::Tag::X);
      CHECK(report.record_bases_orthonormal);
      CHECK(report.stealth_unsatisfiable);
      // The key anti-correlation residual collapses to the coefficient norm.
      CHECK(report.residual_key_anti_plus == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(report.no_go_consistent);
    }
  }
}

TEST_CASE("constraint report for the shared stealth parameters") {
  const auto p = zero_detection_coefficients();

  SUBCASE("all residuals vanish and so does every consequence") {
    const auto report = collective_constraint_report(
        p, AttackKind::CollectiveShared, Basis1Q::Tag::Z);
    CHECK(report.max_residual < 1e-12);
    CHECK(report.detection < 1e-12);
    CHECK(report.detection_channels_1_2 < 1e-12);
    CHECK(report.distinguishability < 1e-10);
    CHECK(report.no_go_consistent);
    CHECK_FALSE(report.record_bases_orthonormal);
    CHECK_FALSE(report.stealth_unsatisfiable);
  }

  SUBCASE("the same parameters announced in the X basis are detected") {
    const auto report = collective_constraint_report(
        p, AttackKind::CollectiveShared, Basis1Q::Tag::X);
    // The third-channel images are Z states, so X announcements misfire.
    CHECK(report.max_residual > 0.1);
    CHECK(report.detection > 0.0);
    CHECK(report.no_go_consistent);
  }
}
