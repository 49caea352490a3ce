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

#include "msqkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msqkd/errors.hpp"

namespace msqkd {

namespace {

PureState1Q party_emit(ParticipantOp op, int bit) {
  return op == ParticipantOp::MH ? hadamard(PureState1Q::from_bit(bit))
                                 : PureState1Q::from_bit(bit);
}

SituationClass classify_bits(ParticipantOp a_op, ParticipantOp b_op,
                             int a_bit, int b_bit, bool aborted) {
  RoundTranscript t;
  t.alice_op = a_op;
  t.bob_op = b_op;
  t.alice_bit = a_bit;
  t.bob_bit = b_bit;
  t.alice_aborted = aborted;
  return classify_round(t);
}

// Weight and surviving ancilla of final-measurement outcome k.
struct FinalBranch {
  double weight = 0;
  Eigen::VectorXcd ancilla;
};

FinalBranch final_branch(const AttackStrategy& s, const JointState& system,
                         int k) {
  if (s.kind == AttackKind::FakedBell) {
    const auto p = born_probabilities(as_two_qubit(system), s.tp_basis_2q);
    return {p[k], Eigen::VectorXcd()};
  }
  if (s.collective()) {
    auto branch = qubit_branch(system, s.tp_basis, k);
    if (branch.weight < kBranchEps) return {branch.weight, {}};
    branch.residual /= std::sqrt(branch.weight);
    return {branch.weight, std::move(branch.residual)};
  }
  const auto p = born_probabilities(as_single_qubit(system), s.tp_basis);
  return {p[k], Eigen::VectorXcd()};
}

}  // namespace

// ---------------------------------------------------------------------------
// BranchEnumeration accessors
// ---------------------------------------------------------------------------

long double BranchEnumeration::total_weight() const {
  long double w = 0;
  for (const auto& b : branches) w += b.weight;
  return w;
}

long double BranchEnumeration::detection_weight() const {
  long double w = 0;
  for (const auto& b : branches) {
    if (b.flagged) w += b.weight;
  }
  return w;
}

std::array<long double, 10> BranchEnumeration::case_weights() const {
  std::array<long double, 10> w{};
  for (const auto& b : branches) w[b.case_id] += b.weight;
  return w;
}

std::array<long double, 4> BranchEnumeration::situation_weights() const {
  std::array<long double, 4> w{};
  for (const auto& b : branches) w[b.situation - 1] += b.weight;
  return w;
}

DetectionBreakdown BranchEnumeration::detection_breakdown() const {
  DetectionBreakdown d;
  for (const auto& b : branches) {
    if (!b.flagged) continue;
    if (b.aborted) {
      d.abort += b.weight;
    } else if (b.situation == 2) {
      d.key_mismatch += b.weight;
    } else if (b.situation == 3 && b.bob_bit != 0) {
      d.bob_nonzero += b.weight;
    } else {
      d.announcement += b.weight;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

BranchEnumeration enumerate_branches(const AttackStrategy& s,
                                     const ProtocolConfig& cfg) {
  const Basis1Q z = Basis1Q::z();
  const AnnouncementPolicy policy = s.policy();
  const long double cf = cfg.check_fraction;
  const std::array<std::pair<ParticipantOp, long double>, 2> alice_ops = {
      {{ParticipantOp::MH, cfg.p_alice_mh},
       {ParticipantOp::HM, 1.0L - cfg.p_alice_mh}}};
  const std::array<std::pair<ParticipantOp, long double>, 2> bob_ops = {
      {{ParticipantOp::MH, cfg.p_bob_mh},
       {ParticipantOp::HM, 1.0L - cfg.p_bob_mh}}};

  BranchEnumeration en;
  const auto leaf = [&en](Branch b) { en.branches.push_back(std::move(b)); };

  const JointState initial = prepare_round_system(s);
  for (const auto& [a_op, wa] : alice_ops) {
    const JointState pre_alice =
        a_op == ParticipantOp::HM ? hadamard_on_qubit(initial) : initial;
    for (int a_bit = 0; a_bit < 2; ++a_bit) {
      auto a_branch = qubit_branch(pre_alice, z, a_bit);
      if (a_branch.weight < kBranchEps) continue;
      const long double w_alice = wa * a_branch.weight;
      if (a_op == ParticipantOp::HM && a_bit == 1) {
        // Alice aborts; Bob's operation still fixes which situation the
        // error lands in.
        for (const auto& [b_op, wb] : bob_ops) {
          Branch b;
          b.alice_op = a_op;
          b.bob_op = b_op;
          b.alice_bit = 1;
          b.aborted = true;
          b.flagged = true;
          b.weight = w_alice * wb;
          const auto c = classify_bits(a_op, b_op, 1, 0, true);
          b.situation = c.situation;
          b.case_id = c.case_id;
          leaf(std::move(b));
        }
        continue;
      }
      a_branch.residual /= std::sqrt(a_branch.weight);
      const PureState1Q sent_by_alice = party_emit(a_op, a_bit);

      for (const auto& [b_op, wb] : bob_ops) {
        const auto ch2 =
            intercept_channel(s, 2, sent_by_alice, a_branch.residual);
        const JointState pre_bob = b_op == ParticipantOp::HM
                                       ? hadamard_on_qubit(ch2.system)
                                       : ch2.system;
        for (int b_bit = 0; b_bit < 2; ++b_bit) {
          auto b_branch = qubit_branch(pre_bob, z, b_bit);
          if (b_branch.weight < kBranchEps) continue;
          const long double w_bob = w_alice * wb * b_branch.weight;
          b_branch.residual /= std::sqrt(b_branch.weight);
          const auto ch3 = intercept_channel(s, 3, party_emit(b_op, b_bit),
                                             b_branch.residual);

          for (int k = 0; k < s.outcome_count(); ++k) {
            const auto fin = final_branch(s, ch3.system, k);
            if (fin.weight < kBranchEps) continue;
            Branch b;
            b.alice_op = a_op;
            b.bob_op = b_op;
            b.alice_bit = a_bit;
            b.bob_bit = b_bit;
            b.tp_outcome = k;
            b.announced_bit = policy[k];
            b.weight = w_bob * fin.weight;
            const auto c = classify_bits(a_op, b_op, a_bit, b_bit, false);
            b.situation = c.situation;
            b.case_id = c.case_id;
            if (s.kind == AttackKind::CollectiveFresh) {
              b.adversary_state =
                  tensor<double>(tensor<double>(*ch2.recorded, *ch3.recorded),
                                 fin.ancilla);
            } else if (s.kind == AttackKind::CollectiveShared) {
              b.adversary_state = fin.ancilla;
            }
            switch (b.situation) {
              case 1: b.flagged = b.announced_bit != b_bit; break;
              case 3:
                b.flagged =
                    a_bit != 0 || b_bit != 0 || b.announced_bit != 0;
                break;
              case 4: b.flagged = a_bit != 0; break;
              default: break;
            }
            if (b.situation == 2) {
              // Split by the disclosure decision; only disclosed rounds can
              // flag a key mismatch.
              const bool mismatch = a_bit != b_bit;
              if (cf > 0) {
                Branch disclosed = b;
                disclosed.disclosed = true;
                disclosed.flagged = mismatch;
                disclosed.weight = b.weight * cf;
                leaf(std::move(disclosed));
              }
              if (cf < 1) {
                b.disclosed = false;
                b.flagged = false;
                b.weight = b.weight * (1.0L - cf);
                leaf(std::move(b));
              }
            } else {
              leaf(std::move(b));
            }
          }
        }
      }
    }
  }
  return en;
}

double per_round_detection(const AttackStrategy& s,
                           const ProtocolConfig& cfg) {
  return static_cast<double>(enumerate_branches(s, cfg).detection_weight());
}

std::vector<double> detection_curve(
    double p, const std::vector<std::uint64_t>& n_values) {
  std::vector<double> out;
  out.reserve(n_values.size());
  for (const std::uint64_t n : n_values) {
    out.push_back(1.0 - std::pow(1.0 - p, static_cast<double>(n)));
  }
  return out;
}

double efficiency_expected(const ProtocolConfig& cfg) {
  return cfg.p_alice_mh * (1.0 - cfg.p_bob_mh) * (1.0 - cfg.check_fraction);
}

// ---------------------------------------------------------------------------
// Adversary information
// ---------------------------------------------------------------------------

namespace {

double conditional_trace_distance(const Eigen::MatrixXcd& rho0, double w0,
                                  const Eigen::MatrixXcd& rho1, double w1) {
  if (w0 <= 0 || w1 <= 0) {
    throw InsufficientDataError(
        "distinguishability: a key-bit class has no weight");
  }
  return trace_distance(DensityMatrix(rho0 / w0), DensityMatrix(rho1 / w1));
}

}  // namespace

double oracle_distinguishability(const BranchEnumeration& e) {
  Eigen::Index dim = 0;
  for (const auto& b : e.branches) {
    if (b.situation == 2 && !b.aborted && b.adversary_state.size() > 0) {
      dim = b.adversary_state.size();
      break;
    }
  }
  if (dim == 0) {
    throw InsufficientDataError(
        "oracle_distinguishability: strategy keeps no ancillas");
  }
  Eigen::MatrixXcd rho[2] = {Eigen::MatrixXcd::Zero(dim, dim),
                             Eigen::MatrixXcd::Zero(dim, dim)};
  double w[2] = {0, 0};
  for (const auto& b : e.branches) {
    if (b.situation != 2 || b.aborted) continue;
    if (b.adversary_state.size() != dim) {
      throw DimensionMismatchError(
          "oracle_distinguishability: inconsistent ancilla dimensions");
    }
    const double bw = static_cast<double>(b.weight);
    rho[b.bob_bit] += bw * (b.adversary_state * b.adversary_state.adjoint());
    w[b.bob_bit] += bw;
  }
  return conditional_trace_distance(rho[0], w[0], rho[1], w[1]);
}

double adversary_distinguishability(
    const std::vector<RoundTranscript>& transcripts) {
  Eigen::Index dim = 0;
  Eigen::MatrixXcd rho[2];
  double w[2] = {0, 0};
  for (const auto& t : transcripts) {
    if (t.alice_aborted || classify_round(t).situation != 2) continue;
    if (t.adversary.ancillas.empty()) continue;
    Eigen::VectorXcd e = t.adversary.ancillas.front();
    for (std::size_t i = 1; i < t.adversary.ancillas.size(); ++i) {
      e = tensor<double>(e, t.adversary.ancillas[i]);
    }
    if (dim == 0) {
      dim = e.size();
      rho[0] = Eigen::MatrixXcd::Zero(dim, dim);
      rho[1] = Eigen::MatrixXcd::Zero(dim, dim);
    } else if (e.size() != dim) {
      throw DimensionMismatchError(
          "adversary_distinguishability: inconsistent ancilla dimensions");
    }
    rho[t.bob_bit] += e * e.adjoint();
    w[t.bob_bit] += 1.0;
  }
  if (dim == 0) {
    throw InsufficientDataError(
        "adversary_distinguishability: no ancilla records");
  }
  return conditional_trace_distance(rho[0], w[0], rho[1], w[1]);
}

// ---------------------------------------------------------------------------
// Statistical tests
// ---------------------------------------------------------------------------

double regularized_gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) {
    throw Error("regularized_gamma_q: requires a > 0 and x >= 0");
  }
  if (x == 0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series for the lower function P; Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lg);
    return 1.0 - p;
  }
  // Lentz continued fraction for Q.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probs,
                               double alpha) {
  if (observed.size() != expected_probs.size() || observed.empty()) {
    throw DimensionMismatchError("chi_square_gof: bin count mismatch");
  }
  double total = 0;
  for (const std::uint64_t o : observed) total += static_cast<double>(o);

  ChiSquareResult r;
  std::size_t active_bins = 0;
  bool impossible_bin_hit = false;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected_probs[i] <= 0) {
      if (observed[i] > 0) impossible_bin_hit = true;
      continue;
    }
    ++active_bins;
    const double expect = total * expected_probs[i];
    const double diff = static_cast<double>(observed[i]) - expect;
    r.statistic += diff * diff / expect;
  }
  r.dof = active_bins - 1;
  if (impossible_bin_hit) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.p_value = regularized_gamma_q(static_cast<double>(r.dof) / 2.0,
                                    r.statistic / 2.0);
  }
  r.pass = r.p_value >= alpha;
  return r;
}

ChiSquareResult chi_square_case_test(
    const std::array<std::uint64_t, 10>& case_counts,
    std::span<const double> expected_probs, double alpha) {
  if (expected_probs.size() != 9) {
    throw DimensionMismatchError("chi_square_case_test: expected 9 cases");
  }
  std::uint64_t total = 0;
  for (int c = 1; c <= 9; ++c) total += case_counts[c];
  if (total < 1000) {
    throw InsufficientDataError("chi_square_case_test: needs >= 1000 rounds");
  }
  return chi_square_gof(
      std::span<const std::uint64_t>(case_counts.data() + 1, 9),
      expected_probs, alpha);
}

ChiSquareResult chi_square_balance_test(std::uint64_t zeros,
                                        std::uint64_t ones, double alpha) {
  const std::array<std::uint64_t, 2> obs = {zeros, ones};
  const std::array<double, 2> probs = {0.5, 0.5};
  return chi_square_gof(obs, probs, alpha);
}

std::span<const double> honest_case_probabilities() {
  static const std::array<double, 9> probs = {
      1.0 / 16, 1.0 / 16, 1.0 / 8, 1.0 / 16, 1.0 / 16,
      1.0 / 8,  1.0 / 4,  1.0 / 8, 1.0 / 8};
  return probs;
}

// ---------------------------------------------------------------------------
// Oracle vs Monte Carlo
// ---------------------------------------------------------------------------

DetectionReport detection_report(const AttackStrategy& s,
                                 const ProtocolConfig& cfg,
                                 const std::vector<std::uint64_t>& n_values,
                                 unsigned threads) {
  cfg.validate();
  const BranchEnumeration en = enumerate_branches(s, cfg);
  DetectionReport report;
  report.oracle = static_cast<double>(en.detection_weight());
  report.rounds = cfg.rounds;

  const auto transcripts = run_protocol(cfg, s, threads);
  RngStream sift_rng(cfg.master_seed, kSiftStreamId);
  const SiftOutcome outcome = sift(transcripts, cfg, sift_rng);

  std::vector<std::uint8_t> flagged(cfg.rounds, 0);
  for (const std::uint64_t idx : outcome.flagged_rounds) flagged[idx] = 1;

  const double rounds = static_cast<double>(cfg.rounds);
  report.empirical =
      static_cast<double>(outcome.flagged_rounds.size()) / rounds;
  report.standard_error =
      std::sqrt(std::max(report.oracle * (1.0 - report.oracle), 0.0) / rounds);
  report.consistent =
      report.standard_error == 0.0
          ? report.empirical == report.oracle
          : std::abs(report.empirical - report.oracle) <=
                3.0 * report.standard_error;

  for (const std::uint64_t n : n_values) {
    CurvePoint pt;
    pt.n = n;
    pt.analytic = 1.0 - std::pow(1.0 - report.oracle, static_cast<double>(n));
    pt.groups = n == 0 ? 0 : cfg.rounds / n;
    if (pt.groups > 0) {
      std::uint64_t detected = 0;
      for (std::uint64_t g = 0; g < pt.groups; ++g) {
        for (std::uint64_t i = g * n; i < (g + 1) * n; ++i) {
          if (flagged[i]) {
            ++detected;
            break;
          }
        }
      }
      pt.empirical =
          static_cast<double>(detected) / static_cast<double>(pt.groups);
      const double sigma = std::sqrt(
          std::max(pt.analytic * (1.0 - pt.analytic), 0.0) /
          static_cast<double>(pt.groups));
      const bool ok = sigma == 0.0
                          ? pt.empirical == pt.analytic
                          : std::abs(pt.empirical - pt.analytic) <= 3.0 * sigma;
      report.consistent = report.consistent && ok;
    }
    report.curve.push_back(pt);
  }

  if (s.collective()) {
    report.distinguishability = oracle_distinguishability(en);
    report.distinguishability_empirical =
        adversary_distinguishability(transcripts);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Collective constraint verification
// ---------------------------------------------------------------------------

CollectiveConstraintReport collective_constraint_report(
    const CollectiveCoefficients& p, AttackKind variant,
    Basis1Q::Tag tp_basis) {
  if (tp_basis != Basis1Q::Tag::Z && tp_basis != Basis1Q::Tag::X) {
    throw ConfigError(
        "collective_constraint_report: final basis must be Z or X");
  }
  CollectiveConstraintReport r;
  r.variant = variant;
  r.tp_basis = tp_basis;

  const auto residual = [](const Eigen::Vector2cd& coeff,
                           const Eigen::VectorXcd& k0,
                           const Eigen::VectorXcd& k1, double sign) {
    return (coeff(0) * k0 + sign * coeff(1) * k1).norm();
  };
  r.residual_hm_abort = residual(p.a, p.f0, p.f1, -1.0);
  r.residual_bob_flip =
      (p.b(1) * p.g1 + p.c(1) * p.h1).norm();
  r.residual_key_anti_plus = residual(p.b, p.g0, p.g1, -1.0);
  r.residual_key_anti_minus = residual(p.c, p.h0, p.h1, +1.0);
  if (tp_basis == Basis1Q::Tag::X) {
    r.residual_announce_plus = residual(p.d, p.i0, p.i1, -1.0);
    r.residual_announce_minus = residual(p.e, p.j0, p.j1, +1.0);
  } else {
    r.residual_announce_plus = std::abs(p.d(1));
    r.residual_announce_minus = std::abs(p.e(0));
  }
  r.max_residual = std::max({r.residual_hm_abort, r.residual_bob_flip,
                             r.residual_key_anti_plus,
                             r.residual_key_anti_minus,
                             r.residual_announce_plus,
                             r.residual_announce_minus});

  const Basis1Q basis =
      tp_basis == Basis1Q::Tag::Z ? Basis1Q::z() : Basis1Q::x();
  const AttackStrategy s =
      collective_attack_from_coefficients(p, variant, basis);
  ProtocolConfig cfg;
  cfg.rounds = 1;
  const BranchEnumeration en = enumerate_branches(s, cfg);
  r.detection = static_cast<double>(en.detection_weight());
  r.detection_channels_1_2 =
      static_cast<double>(en.detection_breakdown().channels_1_2());
  r.distinguishability = oracle_distinguishability(en);

  const double ortho_tol = 1e-10;
  r.record_bases_orthonormal = std::abs(p.g0.dot(p.g1)) <= ortho_tol &&
                               std::abs(p.h0.dot(p.h1)) <= ortho_tol;
  // With orthonormal record bases the squared key residuals reduce to
  // |b0|^2 + |b1|^2 and |c0|^2 + |c1|^2, which normalisation pins to 1, so
  // the stealth conditions cannot be met by any admissible coefficients.
  r.stealth_unsatisfiable =
      variant == AttackKind::CollectiveFresh && r.record_bases_orthonormal;

  const double tol = 1e-10;
  r.no_go_consistent =
      r.max_residual > tol || r.distinguishability <= tol;
  return r;
}

}  // namespace msqkd
