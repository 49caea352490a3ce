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
#include "msqkd/serialize.hpp"
#include "support.hpp"

using namespace msqkd;

namespace {

ProtocolConfig config(std::uint64_t rounds, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.rounds = rounds;
  cfg.master_seed = seed;
  return cfg;
}

double breidbart_wrong_rate() {
  const double c = std::cos(std::numbers::pi / 8);
  const double s = std::sin(std::numbers::pi / 8);
  return 0.25 * (c - s) * (c - s);
}

}  // namespace

TEST_CASE("honest enumeration reproduces the nine case weights") {
  const auto en = enumerate_branches(honest_strategy(), config(1, 0));
  CHECK(std::abs(static_cast<double>(en.total_weight()) - 1.0) < 1e-12);
  CHECK(static_cast<double>(en.detection_weight()) == 0.0);

  const auto weights = en.case_weights();
  const auto expected = honest_case_probabilities();
  CHECK(static_cast<double>(weights[kUndefinedCase]) < 1e-15);
  for (int c = 1; c <= 9; ++c) {
    CHECK(std::abs(static_cast<double>(weights[c]) - expected[c - 1]) <
          1e-12);
  }

  const auto situations = en.situation_weights();
  CHECK(std::abs(static_cast<double>(situations[0]) - 0.25) < 1e-12);
  CHECK(std::abs(static_cast<double>(situations[1]) - 0.25) < 1e-12);
  CHECK(std::abs(static_cast<double>(situations[2]) - 0.25) < 1e-12);
  CHECK(std::abs(static_cast<double>(situations[3]) - 0.25) < 1e-12);
}

TEST_CASE("per-round detection of every built-in attack") {
  const ProtocolConfig cfg = config(1, 0);
  const auto detect = [&cfg](const char* name) {
    return per_round_detection(strategy_from_name(name), cfg);
  };

  CHECK(std::abs(detect("honest") - 0.0) < 1e-12);
  CHECK(std::abs(detect("z-measure") - 0.25) < 1e-12);
  CHECK(std::abs(detect("breidbart") - breidbart_wrong_rate()) < 1e-12);
  CHECK(std::abs(detect("faked-zero-z") - 7.0 / 16) < 1e-12);
  CHECK(std::abs(detect("faked-zero-x") - 0.25) < 1e-12);
  CHECK(std::abs(detect("faked-bell-bell") - 3.0 / 8) < 1e-12);
  CHECK(std::abs(detect("faked-bell-computational") - 7.0 / 16) < 1e-12);

  SUBCASE("preparing |1> instead of |0> changes nothing") {
    CHECK(std::abs(detect("faked-one-z") - 7.0 / 16) < 1e-12);
    CHECK(std::abs(detect("faked-one-x") - 0.25) < 1e-12);
  }

  SUBCASE("weights always sum to one") {
    for (const auto& name : builtin_strategy_names()) {
      const auto en = enumerate_branches(strategy_from_name(name), cfg);
      CHECK(std::abs(static_cast<double>(en.total_weight()) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("case weights under a faked |0> preparation") {
  // The faked preparation reshapes the case distribution: Alice's MH always
  // reads 0, her HM aborts a quarter of the time, and the key rounds land
  // entirely on the (0, 0) case.
  const auto en =
      enumerate_branches(strategy_from_name("faked-zero-z"), config(1, 0));
  const auto w = en.case_weights();
  const auto c = [&w](int i) { return static_cast<double>(w[i]); };
  CHECK(std::abs(c(1) - 1.0 / 8) < 1e-12);   // (MH,MH) both 0
  CHECK(std::abs(c(2) - 1.0 / 8) < 1e-12);   // (MH,MH) 0,1
  CHECK(std::abs(c(3) - 1.0 / 4) < 1e-12);   // key rounds, all (0,0)
  CHECK(c(4) == 0.0);
  CHECK(c(5) == 0.0);
  CHECK(c(6) == 0.0);                        // the (1,1) key case vanishes
  CHECK(std::abs(c(7) - 1.0 / 8) < 1e-12);
  CHECK(std::abs(c(8) - 1.0 / 16) < 1e-12);
  CHECK(std::abs(c(9) - 1.0 / 16) < 1e-12);
  CHECK(std::abs(c(kUndefinedCase) - 1.0 / 4) < 1e-12);  // abort weight
}

TEST_CASE("case weights under an entangled-pair preparation") {
  // Alice's HM measurement is no longer certain: the abort branch takes a
  // quarter of the weight and halves every case she opens with HM.
  const auto en = enumerate_branches(strategy_from_name("faked-bell-bell"),
                                     config(1, 0));
  const auto w = en.case_weights();
  const auto c = [&w](int i) { return static_cast<double>(w[i]); };
  for (const int sixteenth : {1, 2, 4, 5, 8, 9}) {
    CHECK(std::abs(c(sixteenth) - 1.0 / 16) < 1e-12);
  }
  for (const int eighth : {3, 6, 7}) {
    CHECK(std::abs(c(eighth) - 1.0 / 8) < 1e-12);
  }
  CHECK(std::abs(c(kUndefinedCase) - 1.0 / 4) < 1e-12);
}

TEST_CASE("per-situation detection structure of the measurement attacks") {
  const ProtocolConfig cfg = config(1, 0);
  const auto by_situation = [&cfg](const char* name) {
    const auto en = enumerate_branches(strategy_from_name(name), cfg);
    std::array<double, 4> flagged{};
    for (const auto& b : en.branches) {
      if (b.flagged) flagged[b.situation - 1] += static_cast<double>(b.weight);
    }
    return flagged;
  };

  // Wrong-basis measurement: only the verification situations 1 and 3 flag,
  // an eighth each.
  const auto z = by_situation("z-measure");
  CHECK(std::abs(z[0] - 1.0 / 8) < 1e-12);
  CHECK(z[1] == 0.0);
  CHECK(std::abs(z[2] - 1.0 / 8) < 1e-12);
  CHECK(z[3] == 0.0);

  // The intermediate basis splits its smaller total the same way.
  const double wrong = 0.5 * std::pow(std::cos(std::numbers::pi / 8) -
                                          std::sin(std::numbers::pi / 8),
                                      2);
  const auto breidbart = by_situation("breidbart");
  CHECK(std::abs(breidbart[0] - wrong / 4) < 1e-12);
  CHECK(breidbart[1] == 0.0);
  CHECK(std::abs(breidbart[2] - wrong / 4) < 1e-12);
  CHECK(breidbart[3] == 0.0);

  // Faked |0> with Z announcements: situation 1 keeps its eighth, the abort
  // weight splits between situations 3 and 4, and the surviving
  // situation-3 rounds add a sixteenth of wrong announcements.
  const auto f = by_situation("faked-zero-z");
  CHECK(std::abs(f[0] - 1.0 / 8) < 1e-12);
  CHECK(f[1] == 0.0);
  CHECK(std::abs(f[2] - 3.0 / 16) < 1e-12);
  CHECK(std::abs(f[3] - 1.0 / 8) < 1e-12);
}

TEST_CASE("detection breakdown separates channels") {
  const ProtocolConfig cfg = config(1, 0);

  SUBCASE("wrong-basis announcements are a channel-3 disturbance") {
    const auto en = enumerate_branches(strategy_from_name("z-measure"), cfg);
    const auto b = en.detection_breakdown();
    CHECK(static_cast<double>(b.channels_1_2()) == 0.0);
    CHECK(std::abs(static_cast<double>(b.announcement) - 0.25) < 1e-12);
  }

  SUBCASE("faked preparations disturb the first two channels as well") {
    const auto en =
        enumerate_branches(strategy_from_name("faked-zero-z"), cfg);
    const auto b = en.detection_breakdown();
    CHECK(std::abs(static_cast<double>(b.abort) - 0.25) < 1e-12);
    CHECK(std::abs(static_cast<double>(b.announcement) - 3.0 / 16) < 1e-12);
    CHECK(static_cast<double>(b.key_mismatch) == 0.0);
  }
}

TEST_CASE("operation probabilities reshape the enumeration") {
  ProtocolConfig cfg = config(1, 0);
  cfg.p_alice_mh = 0.9;
  cfg.p_bob_mh = 0.1;
  const auto en = enumerate_branches(honest_strategy(), cfg);
  CHECK(std::abs(static_cast<double>(en.total_weight()) - 1.0) < 1e-12);
  const auto situations = en.situation_weights();
  CHECK(std::abs(static_cast<double>(situations[1]) - 0.81) < 1e-12);
}

TEST_CASE("detection curve") {
  const std::vector<std::uint64_t> n = {1, 4, 16, 64};
  const auto curve = detection_curve(0.25, n);
  CHECK(std::abs(curve[0] - 0.25) < 1e-15);
  CHECK(std::abs(curve[1] - (1.0 - std::pow(0.75, 4))) < 1e-15);
  CHECK(std::abs(curve[2] - (1.0 - std::pow(0.75, 16))) < 1e-15);
  CHECK(curve[2] == doctest::Approx(0.98997).epsilon(1e-4));

  const auto zero = detection_curve(0.0, n);
  for (const double v : zero) CHECK(v == 0.0);

  const auto monotone = detection_curve(0.1, {1, 2, 4, 8, 1000});
  for (std::size_t i = 1; i < monotone.size(); ++i) {
    CHECK(monotone[i] >= monotone[i - 1]);
  }
}

TEST_CASE("expected efficiency") {
  ProtocolConfig cfg = config(1, 0);
  CHECK(efficiency_expected(cfg) == 0.125);
  cfg.p_alice_mh = 0.9;
  cfg.p_bob_mh = 0.1;
  CHECK(efficiency_expected(cfg) == doctest::Approx(0.405).epsilon(1e-12));
  cfg.check_fraction = 1.0;
  CHECK(efficiency_expected(cfg) == 0.0);
}

TEST_CASE("regularized gamma agrees with closed forms") {
  // Two degrees of freedom: survival is exp(-x/2).
  for (const double x : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(regularized_gamma_q(1.0, x / 2) ==
          doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  }
  // One degree of freedom: survival is erfc(sqrt(x/2)).
  for (const double x : {0.1, 1.0, 4.0, 9.0}) {
    CHECK(regularized_gamma_q(0.5, x / 2) ==
          doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-10));
  }
  CHECK(regularized_gamma_q(4.0, 0.0) == 1.0);
}

TEST_CASE("chi-square case test") {
  const auto expected = honest_case_probabilities();

  SUBCASE("a perfect fit scores zero") {
    std::array<std::uint64_t, 10> counts{};
    for (int c = 1; c <= 9; ++c) {
      counts[c] = static_cast<std::uint64_t>(expected[c - 1] * 160000);
    }
    const auto r = chi_square_case_test(counts, expected, 0.01);
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.dof == 8);
    CHECK(r.pass);
  }

  SUBCASE("a shifted histogram fails decisively") {
    std::array<std::uint64_t, 10> counts{};
    for (int c = 1; c <= 9; ++c) {
      counts[c] = static_cast<std::uint64_t>(expected[c - 1] * 100000);
    }
    const auto shift = static_cast<std::uint64_t>(0.05 * 100000);
    counts[7] -= shift;
    counts[1] += shift;
    const auto r = chi_square_case_test(counts, expected, 0.01);
    CHECK_FALSE(r.pass);
    CHECK(r.statistic > 1000);
  }

  SUBCASE("too little data is rejected") {
    std::array<std::uint64_t, 10> counts{};
    counts[1] = 500;
    CHECK_THROWS_AS(chi_square_case_test(counts, expected, 0.01),
                    InsufficientDataError);
  }

  SUBCASE("honest runs pass the calibration across seeds") {
    int passes = 0;
    const int seeds = 100;
    for (int seed = 1; seed <= seeds; ++seed) {
      const ProtocolConfig cfg = config(20000, static_cast<std::uint64_t>(seed));
      const auto transcripts = run_protocol(cfg, honest_strategy());
      RngStream rng(cfg.master_seed, kSiftStreamId);
      const auto outcome = sift(transcripts, cfg, rng);
      passes += chi_square_case_test(outcome.case_counts, expected, 0.01).pass;
    }
    CHECK(passes >= 99);
  }
}

TEST_CASE("balance test of situation-4 announcements") {
  CHECK(chi_square_balance_test(5000, 5000, 0.01).pass);
  CHECK(chi_square_balance_test(5000, 5000, 0.01).dof == 1);
  CHECK_FALSE(chi_square_balance_test(6000, 4000, 0.01).pass);
}

TEST_CASE("oracle and Monte Carlo agree per strategy") {
  const std::vector<std::uint64_t> n_values = {1, 4, 16};
  for (const auto& name :
       {"honest", "z-measure", "breidbart", "faked-bell-bell"}) {
    const ProtocolConfig cfg = config(40000, 8181);
    const auto report =
        detection_report(strategy_from_name(name), cfg, n_values, 4);
    INFO("strategy ", name);
    CHECK(report.consistent);
    CHECK(report.curve.size() == 3);
  }
}

TEST_CASE("the stealth collective attack is invisible and uninformative") {
  const ProtocolConfig cfg = config(40000, 2718);
  const auto s = strategy_from_name("collective-zero-detection");
  const auto report = detection_report(s, cfg, {1, 16}, 4);
  CHECK(report.oracle == 0.0);
  CHECK(report.empirical == 0.0);
  REQUIRE(report.distinguishability.has_value());
  CHECK(*report.distinguishability < 1e-10);
  // The sampled estimate carries mixing noise but must stay small.
  CHECK(*report.distinguishability_empirical < 0.05);
}

TEST_CASE("random collective couplings cannot learn without disturbing") {
  std::mt19937_64 gen(31415);
  const ProtocolConfig cfg = config(1, 0);
  int informative = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const AttackKind kind = trial % 2 == 0 ? AttackKind::CollectiveFresh
                                           : AttackKind::CollectiveShared;
    const auto s = collective_attack(
        kind, test::random_unitary(4, gen), test::random_unitary(4, gen),
        test::random_unitary(4, gen), 2,
        trial % 4 < 2 ? Basis1Q::x() : Basis1Q::z());
    const auto en = enumerate_branches(s, cfg);
    const double distinguishability = oracle_distinguishability(en);
    const double detection = static_cast<double>(en.detection_weight());
    if (distinguishability > 0.01) {
      ++informative;
      CHECK(detection > 0.0);
    }
  }
  CHECK(informative > 10);  // random couplings almost always leak
}

TEST_CASE("the distinguishability estimator on hand-built records") {
  const auto key_round = [](int bob_bit, const Eigen::VectorXcd& anc,
                            std::uint64_t index) {
    RoundTranscript t;
    t.round_index = index;
    t.alice_op = ParticipantOp::MH;
    t.bob_op = ParticipantOp::HM;
    t.alice_bit = bob_bit;
    t.bob_bit = bob_bit;
    t.adversary.tp_outcome = 0;
    t.adversary.ancillas = {anc};
    return t;
  };
  const Eigen::VectorXcd k0 = ancilla_ket<double>(2, 0);
  const Eigen::VectorXcd k1 = ancilla_ket<double>(2, 1);

  SUBCASE("perfectly correlated records distinguish fully") {
    const std::vector<RoundTranscript> transcripts = {
        key_round(0, k0, 0), key_round(1, k1, 1), key_round(0, k0, 2),
        key_round(1, k1, 3)};
    CHECK(adversary_distinguishability(transcripts) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("constant records distinguish nothing") {
    const std::vector<RoundTranscript> transcripts = {
        key_round(0, k0, 0), key_round(1, k0, 1), key_round(0, k0, 2),
        key_round(1, k0, 3)};
    CHECK(adversary_distinguishability(transcripts) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a one-sided record set is rejected") {
    const std::vector<RoundTranscript> transcripts = {key_round(0, k0, 0),
                                                      key_round(0, k1, 1)};
    CHECK_THROWS_AS(adversary_distinguishability(transcripts),
                    InsufficientDataError);
  }
}

TEST_CASE("empirical distinguishability tracks the oracle") {
  const ProtocolConfig cfg = config(60000, 5555);
  const auto s = strategy_from_name("collective-cnot");
  const auto en = enumerate_branches(s, cfg);
  const double exact = oracle_distinguishability(en);
  const auto transcripts = run_protocol(cfg, s, 4);
  const double estimated = adversary_distinguishability(transcripts);
  CHECK(std::abs(exact - estimated) < 0.05);

  const auto report = detection_report(s, cfg, {1, 4}, 4);
  CHECK(report.consistent);
}
