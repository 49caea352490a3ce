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

#include "msqkd/attack.hpp"

#include <cmath>
#include <utility>

#include "msqkd/errors.hpp"

namespace msqkd {

namespace {

constexpr double kParamTol = 1e-10;

Eigen::VectorXcd trivial_ancilla() {
  Eigen::VectorXcd v(1);
  v(0) = 1.0;
  return v;
}

// b0 |0>|k0> + b1 |1>|k1> as a joint amplitude vector.
Eigen::VectorXcd joint_ket(const Eigen::Vector2cd& coeff,
                           const Eigen::VectorXcd& k0,
                           const Eigen::VectorXcd& k1) {
  const Eigen::Index d = k0.size();
  Eigen::VectorXcd out(2 * d);
  out.segment(0, d) = coeff(0) * k0;
  out.segment(d, d) = coeff(1) * k1;
  return out;
}

Eigen::VectorXcd qubit_times_ancilla(const PureState1Q& q,
                                     const Eigen::VectorXcd& anc) {
  return attach_ancilla(q, anc).amps();
}

void check_unit_ket(const Eigen::VectorXcd& v, Eigen::Index d,
                    const char* name) {
  if (v.size() != d) {
    throw InconsistentParamsError(std::string("ancilla ket ") + name +
                                  " has wrong dimension");
  }
  if (std::abs(v.squaredNorm() - 1.0) > kParamTol) {
    throw InconsistentParamsError(std::string("ancilla ket ") + name +
                                  " is not a unit vector");
  }
}

void check_coeff_pair(const Eigen::Vector2cd& c, const char* name) {
  if (std::abs(c.squaredNorm() - 1.0) > kParamTol) {
    throw InconsistentParamsError(std::string("coefficient pair ") + name +
                                  " is not normalised");
  }
}

}  // namespace

AnnouncementPolicy AttackStrategy::policy() const {
  if (policy_override) {
    if (static_cast<int>(policy_override->size()) != outcome_count()) {
      throw ConfigError("announcement policy does not cover every outcome");
    }
    return *policy_override;
  }
  if (kind == AttackKind::FakedBell) {
    return tp_basis_2q.tag() == Basis2Q::Tag::Bell
               ? AnnouncementPolicy{0, 1, 0, 1}    // {phi+, psi+} -> 0
               : AnnouncementPolicy{0, 0, 1, 1};   // {00, 01} -> 0
  }
  return AnnouncementPolicy{0, 1};
}

AttackStrategy honest_strategy() { return AttackStrategy{}; }

AttackStrategy tp_measure_attack(const Basis1Q& basis) {
  AttackStrategy s;
  s.kind = AttackKind::TpMeasureBasis;
  s.tp_basis = basis;
  return s;
}

AttackStrategy faked_single_attack(int prep_bit, const Basis1Q& tp_basis) {
  AttackStrategy s;
  s.kind = AttackKind::FakedSingle;
  s.faked_prep_bit = prep_bit ? 1 : 0;
  s.tp_basis = tp_basis;
  return s;
}

AttackStrategy faked_bell_attack(const Basis2Q& tp_basis) {
  AttackStrategy s;
  s.kind = AttackKind::FakedBell;
  s.tp_basis_2q = tp_basis;
  s.ancilla_dim = 2;
  return s;
}

AttackStrategy collective_attack(AttackKind kind, Eigen::MatrixXcd u1,
                                 Eigen::MatrixXcd u2, Eigen::MatrixXcd u3,
                                 Eigen::Index ancilla_dim,
                                 const Basis1Q& tp_basis) {
  if (kind != AttackKind::CollectiveFresh &&
      kind != AttackKind::CollectiveShared) {
    throw ConfigError("collective_attack requires a collective kind");
  }
  if (ancilla_dim < 1) {
    throw ConfigError("collective_attack: ancilla dimension must be >= 1");
  }
  const Eigen::Index n = 2 * ancilla_dim;
  for (const auto* u : {&u1, &u2, &u3}) {
    if (u->rows() != n || u->cols() != n) {
      throw DimensionMismatchError(
          "collective_attack: unitary size != 2 * ancilla dimension");
    }
    if (!is_unitary(*u)) {
      throw NonUnitaryError("collective_attack: channel operation not unitary");
    }
  }
  AttackStrategy s;
  s.kind = kind;
  s.tp_basis = tp_basis;
  s.ancilla_dim = ancilla_dim;
  s.u1 = std::move(u1);
  s.u2 = std::move(u2);
  s.u3 = std::move(u3);
  return s;
}

// ---------------------------------------------------------------------------
// Round hooks
// ---------------------------------------------------------------------------

JointState prepare_round_system(const AttackStrategy& s) {
  switch (s.kind) {
    case AttackKind::FakedSingle:
      return attach_ancilla(PureState1Q::from_bit(s.faked_prep_bit),
                            trivial_ancilla());
    case AttackKind::FakedBell: {
      // phi+ with the first particle on the channel, the second retained.
      Eigen::VectorXcd amps(4);
      const double s2 = 1.0 / std::sqrt(2.0);
      amps << s2, 0.0, 0.0, s2;
      return JointState(2, std::move(amps));
    }
    case AttackKind::CollectiveFresh:
    case AttackKind::CollectiveShared:
      return apply_joint_unitary(
          attach_ancilla(PureState1Q::plus(),
                         ancilla_ket<double>(s.ancilla_dim)),
          s.u1);
    default:
      return attach_ancilla(PureState1Q::plus(), trivial_ancilla());
  }
}

ChannelSystem intercept_channel(const AttackStrategy& s, int channel,
                                const PureState1Q& qubit,
                                const Eigen::VectorXcd& carried) {
  if (channel != 2 && channel != 3) {
    throw DimensionMismatchError("intercept_channel: channel must be 2 or 3");
  }
  const Eigen::MatrixXcd& u = channel == 2 ? s.u2 : s.u3;
  switch (s.kind) {
    case AttackKind::FakedBell:
      return {attach_ancilla(qubit, carried), std::nullopt};
    case AttackKind::CollectiveFresh:
      return {apply_joint_unitary(
                  attach_ancilla(qubit, ancilla_ket<double>(s.ancilla_dim)), u),
              carried};
    case AttackKind::CollectiveShared:
      return {apply_joint_unitary(attach_ancilla(qubit, carried), u),
              std::nullopt};
    default:
      return {attach_ancilla(qubit, trivial_ancilla()), std::nullopt};
  }
}

TpFinal tp_final_measure(const AttackStrategy& s, const JointState& system,
                         RngStream& rng) {
  const AnnouncementPolicy policy = s.policy();
  if (s.kind == AttackKind::FakedBell) {
    if (system.ancilla_dim() != 2) {
      throw DimensionMismatchError(
          "tp_final_measure: no retained particle to measure");
    }
    const auto m = measure_2q(as_two_qubit(system), s.tp_basis_2q, rng);
    return {m.outcome, policy[m.outcome], Eigen::VectorXcd()};
  }
  if (s.collective()) {
    const auto p = born_qubit_of_joint(system, s.tp_basis);
    const int k =
        sample_index<double>(std::span<const double>(p.data(), 2), rng);
    if (p[k] < kBranchEps) {
      throw DegenerateBranchError("tp_final_measure: impossible branch");
    }
    auto branch = qubit_branch(system, s.tp_basis, k);
    branch.residual /= std::sqrt(branch.weight);
    return {k, policy[k], std::move(branch.residual)};
  }
  const auto m = measure_1q(as_single_qubit(system), s.tp_basis, rng);
  return {m.outcome, policy[m.outcome], Eigen::VectorXcd()};
}

// ---------------------------------------------------------------------------
// Unitary completion
// ---------------------------------------------------------------------------

Eigen::MatrixXcd complete_unitary(const Eigen::MatrixXcd& inputs,
                                  const Eigen::MatrixXcd& outputs) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index k = inputs.cols();
  if (outputs.rows() != n || outputs.cols() != k || k < 1 || k > n) {
    throw DimensionMismatchError("complete_unitary: shape mismatch");
  }
  for (const auto* m : {&inputs, &outputs}) {
    const Eigen::MatrixXcd g = m->adjoint() * (*m);
    if ((g - Eigen::MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff() >
        kUnitaryTol) {
      throw InconsistentParamsError(
          "complete_unitary: columns are not orthonormal");
    }
  }

  // Deterministic completion: sweep the canonical basis, keeping vectors
  // with a significant residual after two Gram-Schmidt passes.
  const auto complete = [n](const Eigen::MatrixXcd& cols) {
    Eigen::MatrixXcd full(n, n);
    Eigen::Index have = cols.cols();
    full.leftCols(have) = cols;
    for (Eigen::Index i = 0; i < n && have < n; ++i) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
      v(i) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        v -= full.leftCols(have) * (full.leftCols(have).adjoint() * v);
      }
      const double norm = v.norm();
      if (norm > 1e-6) {
        full.col(have++) = v / norm;
      }
    }
    if (have != n) {
      throw InconsistentParamsError("complete_unitary: completion failed");
    }
    return full;
  };

  const Eigen::MatrixXcd u = complete(outputs) * complete(inputs).adjoint();
  if (!is_unitary(u)) {
    throw InconsistentParamsError("complete_unitary: result not unitary");
  }
  return u;
}

// ---------------------------------------------------------------------------
// Coefficient form
// ---------------------------------------------------------------------------

AttackStrategy collective_attack_from_coefficients(
    const CollectiveCoefficients& p, AttackKind variant,
    const Basis1Q& tp_basis) {
  if (variant != AttackKind::CollectiveFresh &&
      variant != AttackKind::CollectiveShared) {
    throw ConfigError("collective coefficients require a collective kind");
  }
  const Eigen::Index d = p.ancilla_dim();
  if (d < 1) throw InconsistentParamsError("ancilla dimension must be >= 1");
  check_coeff_pair(p.a, "a");
  check_coeff_pair(p.b, "b");
  check_coeff_pair(p.c, "c");
  check_coeff_pair(p.d, "d");
  check_coeff_pair(p.e, "e");
  check_unit_ket(p.f0, d, "f0");
  check_unit_ket(p.f1, d, "f1");
  check_unit_ket(p.g0, d, "g0");
  check_unit_ket(p.g1, d, "g1");
  check_unit_ket(p.h0, d, "h0");
  check_unit_ket(p.h1, d, "h1");
  check_unit_ket(p.i0, d, "i0");
  check_unit_ket(p.i1, d, "i1");
  check_unit_ket(p.j0, d, "j0");
  check_unit_ket(p.j1, d, "j1");

  const Eigen::VectorXcd start = ancilla_ket<double>(d);
  const PureState1Q plus = PureState1Q::plus();
  const PureState1Q minus = PureState1Q::minus();
  const bool shared = variant == AttackKind::CollectiveShared;

  // Reference ancilla inputs of channels 2 and 3: fresh kets for the fresh
  // variant, the carried states f0 and g0 for the shared one.
  const Eigen::VectorXcd& r2 = shared ? p.f0 : start;
  const Eigen::VectorXcd& r3 = shared ? p.g0 : start;

  const Eigen::Index n = 2 * d;
  Eigen::MatrixXcd in1(n, 1), out1(n, 1);
  in1.col(0) = qubit_times_ancilla(plus, start);
  out1.col(0) = joint_ket(p.a, p.f0, p.f1);

  Eigen::MatrixXcd in2(n, 2), out2(n, 2);
  in2.col(0) = qubit_times_ancilla(plus, r2);
  in2.col(1) = qubit_times_ancilla(minus, r2);
  out2.col(0) = joint_ket(p.b, p.g0, p.g1);
  out2.col(1) = joint_ket(p.c, p.h0, p.h1);

  Eigen::MatrixXcd in3(n, 2), out3(n, 2);
  in3.col(0) = qubit_times_ancilla(plus, r3);
  in3.col(1) = qubit_times_ancilla(minus, r3);
  out3.col(0) = joint_ket(p.d, p.i0, p.i1);
  out3.col(1) = joint_ket(p.e, p.j0, p.j1);

  return collective_attack(variant, complete_unitary(in1, out1),
                           complete_unitary(in2, out2),
                           complete_unitary(in3, out3), d, tp_basis);
}

CollectiveCoefficients zero_detection_coefficients(Eigen::Index ancilla_dim) {
  if (ancilla_dim < 2) {
    throw InconsistentParamsError(
        "zero_detection_coefficients: ancilla dimension must be >= 2");
  }
  const double s2 = 1.0 / std::sqrt(2.0);
  const Eigen::VectorXcd k0 = ancilla_ket<double>(ancilla_dim, 0);
  const Eigen::VectorXcd k1 = ancilla_ket<double>(ancilla_dim, 1);

  CollectiveCoefficients p;
  p.a << s2, s2;
  p.b << s2, s2;
  p.c << s2, -s2;
  p.d << 1.0, 0.0;
  p.e << 0.0, 1.0;
  p.f0 = p.f1 = k0;
  p.g0 = p.g1 = k0;
  p.h0 = p.h1 = k0;
  p.i0 = k0;
  p.i1 = k1;
  p.j0 = k0;
  p.j1 = k1;
  return p;
}

AttackStrategy zero_detection_collective() {
  return collective_attack_from_coefficients(zero_detection_coefficients(),
                                             AttackKind::CollectiveShared,
                                             Basis1Q::z());
}

AttackStrategy cnot_collective() {
  Eigen::MatrixXcd cnot = Eigen::MatrixXcd::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  return collective_attack(AttackKind::CollectiveFresh, cnot, cnot, cnot, 2,
                           Basis1Q::x());
}

}  // namespace msqkd
