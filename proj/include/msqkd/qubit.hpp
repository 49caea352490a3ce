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

/// Exact small-dimension complex state-vector algebra: state preparation,
/// unitaries, Born-rule measurement, tensor products, partial trace and
/// trace distance. All types are immutable values templated on the real
/// scalar; operations are free functions in the Eigen style.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

#include "msqkd/errors.hpp"
#include "msqkd/rng.hpp"

namespace msqkd {

/// Norm tolerance for stored states.
inline constexpr double kStateNormTol = 1e-12;
/// Tolerance for the U†U = I check.
inline constexpr double kUnitaryTol = 1e-10;
/// Branch weights below this are treated as impossible draws.
inline constexpr double kBranchEps = 1e-15;

template <typename Real>
using Vector2c = Eigen::Matrix<std::complex<Real>, 2, 1>;
template <typename Real>
using Vector4c = Eigen::Matrix<std::complex<Real>, 4, 1>;
template <typename Real>
using VectorXc = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using MatrixXc =
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Real>
Real state_norm_tol() {
  return std::max(Real(kStateNormTol),
                  Real(16) * std::numeric_limits<Real>::epsilon());
}

template <typename Real, typename Derived>
void check_state_vector(const Eigen::MatrixBase<Derived>& amps,
                        const char* what) {
  if (!all_finite(amps)) {
    throw InvalidStateError(std::string(what) + ": non-finite amplitude");
  }
  const Real n2 = amps.squaredNorm();
  if (std::abs(n2 - Real(1)) > state_norm_tol<Real>()) {
    throw InvalidStateError(std::string(what) + ": state not normalised");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// Single-qubit pure state, coefficients of |0> and |1>.
template <typename Real>
class BasicPureState1Q {
 public:
  using Complex = std::complex<Real>;
  using Vector = Vector2c<Real>;

  BasicPureState1Q(Complex a0, Complex a1) : amps_(a0, a1) {
    detail::check_state_vector<Real>(amps_, "PureState1Q");
  }
  explicit BasicPureState1Q(const Vector& amps) : amps_(amps) {
    detail::check_state_vector<Real>(amps_, "PureState1Q");
  }

  static BasicPureState1Q zero() { return BasicPureState1Q(Complex(1), Complex(0)); }
  static BasicPureState1Q one() { return BasicPureState1Q(Complex(0), Complex(1)); }
  static BasicPureState1Q plus() {
    const Real s = Real(1) / std::sqrt(Real(2));
    return BasicPureState1Q(Complex(s), Complex(s));
  }
  static BasicPureState1Q minus() {
    const Real s = Real(1) / std::sqrt(Real(2));
    return BasicPureState1Q(Complex(s), Complex(-s));
  }
  static BasicPureState1Q from_bit(int bit) { return bit == 0 ? zero() : one(); }

  Complex a0() const { return amps_(0); }
  Complex a1() const { return amps_(1); }
  const Vector& amps() const { return amps_; }

 private:
  Vector amps_;
};

/// Two-qubit pure state in the computational basis, index (q1 << 1) | q2.
template <typename Real>
class BasicPureState2Q {
 public:
  using Complex = std::complex<Real>;
  using Vector = Vector4c<Real>;

  explicit BasicPureState2Q(const Vector& amps) : amps_(amps) {
    detail::check_state_vector<Real>(amps_, "PureState2Q");
  }

  static BasicPureState2Q product(const BasicPureState1Q<Real>& first,
                                  const BasicPureState1Q<Real>& second) {
    Vector v;
    v << first.a0() * second.a0(), first.a0() * second.a1(),
        first.a1() * second.a0(), first.a1() * second.a1();
    return BasicPureState2Q(v);
  }

  Complex amp(int q1, int q2) const { return amps_((q1 << 1) | q2); }
  const Vector& amps() const { return amps_; }

 private:
  Vector amps_;
};

/// One qubit joined to an ancilla of dimension d; amplitude of
/// (qubit basis q, ancilla index k) lives at q * d + k.
template <typename Real>
class BasicJointState {
 public:
  using Complex = std::complex<Real>;
  using Vector = VectorXc<Real>;

  BasicJointState(Eigen::Index ancilla_dim, Vector amps)
      : d_(ancilla_dim), amps_(std::move(amps)) {
    if (d_ < 1 || amps_.size() != 2 * d_) {
      throw DimensionMismatchError("JointState: amplitude count != 2 * d");
    }
    detail::check_state_vector<Real>(amps_, "JointState");
  }

  Eigen::Index ancilla_dim() const { return d_; }
  const Vector& amps() const { return amps_; }
  Complex amp(int q, Eigen::Index k) const { return amps_(q * d_ + k); }

  /// Amplitude block paired with qubit basis state q.
  auto qubit_block(int q) const { return amps_.segment(q * d_, d_); }

 private:
  Eigen::Index d_;
  Vector amps_;
};

/// Density matrix; Hermitian, unit trace, PSD within tolerance.
template <typename Real>
class BasicDensityMatrix {
 public:
  using Matrix = MatrixXc<Real>;

  explicit BasicDensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw DimensionMismatchError("DensityMatrix: not square");
    }
    if (!detail::all_finite(m_)) {
      throw InvalidStateError("DensityMatrix: non-finite entry");
    }
  }

  static BasicDensityMatrix from_pure(const VectorXc<Real>& psi) {
    return BasicDensityMatrix(psi * psi.adjoint());
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  /// Hermitian within 1e-10, trace 1 within 1e-10, eigenvalues >= -1e-10.
  bool is_valid() const {
    const Real tol = Real(1e-10);
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(m_.trace() - std::complex<Real>(1)) > tol) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
  }

 private:
  Matrix m_;
};

using PureState1Q = BasicPureState1Q<double>;
using PureState2Q = BasicPureState2Q<double>;
using JointState = BasicJointState<double>;
using DensityMatrix = BasicDensityMatrix<double>;
using Amplitude = std::complex<double>;

// ---------------------------------------------------------------------------
// Measurement bases
// ---------------------------------------------------------------------------

/// Orthonormal single-qubit measurement basis.
template <typename Real>
class BasicBasis1Q {
 public:
  enum class Tag { Z, X, Breidbart, Custom };

  static BasicBasis1Q z() {
    return BasicBasis1Q(Tag::Z, BasicPureState1Q<Real>::zero(),
                        BasicPureState1Q<Real>::one());
  }
  static BasicBasis1Q x() {
    return BasicBasis1Q(Tag::X, BasicPureState1Q<Real>::plus(),
                        BasicPureState1Q<Real>::minus());
  }
  /// Intermediate basis between Z and X; maximises an intercepting
  /// measurer's information gain.
  static BasicBasis1Q breidbart() {
    const Real c = std::cos(std::numbers::pi_v<Real> / Real(8));
    const Real s = std::sin(std::numbers::pi_v<Real> / Real(8));
    using C = std::complex<Real>;
    return BasicBasis1Q(Tag::Breidbart, BasicPureState1Q<Real>(C(c), C(s)),
                        BasicPureState1Q<Real>(C(-s), C(c)));
  }
  static BasicBasis1Q custom(const BasicPureState1Q<Real>& v0,
                             const BasicPureState1Q<Real>& v1) {
    if (std::abs(v0.amps().dot(v1.amps())) > detail::state_norm_tol<Real>()) {
      throw InvalidStateError("Basis1Q: vectors not orthogonal");
    }
    return BasicBasis1Q(Tag::Custom, v0, v1);
  }

  Tag tag() const { return tag_; }
  const BasicPureState1Q<Real>& vec(int k) const { return k == 0 ? v0_ : v1_; }

 private:
  BasicBasis1Q(Tag tag, BasicPureState1Q<Real> v0, BasicPureState1Q<Real> v1)
      : tag_(tag), v0_(std::move(v0)), v1_(std::move(v1)) {}

  Tag tag_;
  BasicPureState1Q<Real> v0_, v1_;
};

/// Two-qubit measurement basis: the four Bell states (phi+, phi-, psi+, psi-)
/// or the computational basis (00, 01, 10, 11).
template <typename Real>
class BasicBasis2Q {
 public:
  enum class Tag { Bell, Computational };

  static BasicBasis2Q bell() { return BasicBasis2Q(Tag::Bell); }
  static BasicBasis2Q computational() {
    return BasicBasis2Q(Tag::Computational);
  }

  Tag tag() const { return tag_; }

  Vector4c<Real> vec(int k) const {
    using C = std::complex<Real>;
    Vector4c<Real> v = Vector4c<Real>::Zero();
    if (tag_ == Tag::Computational) {
      v(k) = C(1);
      return v;
    }
    const Real s = Real(1) / std::sqrt(Real(2));
    switch (k) {
      case 0: v(0) = C(s); v(3) = C(s); break;   // phi+
      case 1: v(0) = C(s); v(3) = C(-s); break;  // phi-
      case 2: v(1) = C(s); v(2) = C(s); break;   // psi+
      default: v(1) = C(s); v(2) = C(-s); break; // psi-
    }
    return v;
  }

 private:
  explicit BasicBasis2Q(Tag tag) : tag_(tag) {}
  Tag tag_;
};

using Basis1Q = BasicBasis1Q<double>;
using Basis2Q = BasicBasis2Q<double>;

// ---------------------------------------------------------------------------
// Single-qubit operations
// ---------------------------------------------------------------------------

template <typename Real>
BasicPureState1Q<Real> hadamard(const BasicPureState1Q<Real>& s) {
  const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
  return BasicPureState1Q<Real>((s.a0() + s.a1()) * inv_sqrt2,
                                (s.a0() - s.a1()) * inv_sqrt2);
}

/// Born-rule probabilities of the two basis outcomes.
template <typename Real>
std::array<Real, 2> born_probabilities(const BasicPureState1Q<Real>& s,
                                       const BasicBasis1Q<Real>& b) {
  return {std::norm(b.vec(0).amps().dot(s.amps())),
          std::norm(b.vec(1).amps().dot(s.amps()))};
}

template <typename Real>
struct Measured1Q {
  int outcome;
  BasicPureState1Q<Real> post;
};

/// Projective measurement; the post state is the drawn basis vector itself
/// (global phase discarded).
template <typename Real>
Measured1Q<Real> measure_1q(const BasicPureState1Q<Real>& s,
                            const BasicBasis1Q<Real>& b, RngStream& rng) {
  const auto p = born_probabilities(s, b);
  const int k = sample_index<Real>(std::span<const Real>(p.data(), 2), rng);
  return {k, b.vec(k)};
}

template <typename Real>
std::array<Real, 4> born_probabilities(const BasicPureState2Q<Real>& s,
                                       const BasicBasis2Q<Real>& b) {
  std::array<Real, 4> p;
  for (int k = 0; k < 4; ++k) p[k] = std::norm(b.vec(k).dot(s.amps()));
  return p;
}

template <typename Real>
struct Measured2Q {
  int outcome;
  BasicPureState2Q<Real> post;
};

template <typename Real>
Measured2Q<Real> measure_2q(const BasicPureState2Q<Real>& s,
                            const BasicBasis2Q<Real>& b, RngStream& rng) {
  const auto p = born_probabilities(s, b);
  const int k = sample_index<Real>(std::span<const Real>(p.data(), 4), rng);
  return {k, BasicPureState2Q<Real>(b.vec(k))};
}

// ---------------------------------------------------------------------------
// Qubit-plus-ancilla operations
// ---------------------------------------------------------------------------

/// Tensor product qubit (x) ancilla. The ancilla must be a unit vector.
template <typename Real>
BasicJointState<Real> attach_ancilla(const BasicPureState1Q<Real>& q,
                                     const VectorXc<Real>& ancilla) {
  const Eigen::Index d = ancilla.size();
  if (d < 1) throw DimensionMismatchError("attach_ancilla: empty ancilla");
  if (std::abs(ancilla.squaredNorm() - Real(1)) > detail::state_norm_tol<Real>()) {
    throw InvalidStateError("attach_ancilla: ancilla not normalised");
  }
  VectorXc<Real> amps(2 * d);
  amps.segment(0, d) = q.a0() * ancilla;
  amps.segment(d, d) = q.a1() * ancilla;
  return BasicJointState<Real>(d, std::move(amps));
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& u,
                double tol = kUnitaryTol) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (u.rows() != u.cols()) return false;
  const MatrixXc<Real> g = u.adjoint() * u;
  return (g - MatrixXc<Real>::Identity(u.rows(), u.cols()))
             .cwiseAbs()
             .maxCoeff() <= Real(tol);
}

template <typename Real, typename Derived>
BasicJointState<Real> apply_joint_unitary(const BasicJointState<Real>& s,
                                          const Eigen::MatrixBase<Derived>& u) {
  if (u.rows() != s.amps().size() || u.cols() != s.amps().size()) {
    throw DimensionMismatchError("apply_joint_unitary: matrix size != 2 * d");
  }
  if (!is_unitary(u)) {
    throw NonUnitaryError("apply_joint_unitary: U'U deviates from identity");
  }
  return BasicJointState<Real>(s.ancilla_dim(), u * s.amps());
}

/// (H (x) I) applied to the qubit half.
template <typename Real>
BasicJointState<Real> hadamard_on_qubit(const BasicJointState<Real>& s) {
  const Eigen::Index d = s.ancilla_dim();
  const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
  VectorXc<Real> amps(2 * d);
  amps.segment(0, d) = (s.qubit_block(0) + s.qubit_block(1)) * inv_sqrt2;
  amps.segment(d, d) = (s.qubit_block(0) - s.qubit_block(1)) * inv_sqrt2;
  return BasicJointState<Real>(d, std::move(amps));
}

/// Weight and (unnormalised) ancilla residual of qubit outcome k:
/// residual = (<b_k| (x) I) s, weight = |residual|^2.
template <typename Real>
struct QubitBranch {
  Real weight;
  VectorXc<Real> residual;
};

template <typename Real>
QubitBranch<Real> qubit_branch(const BasicJointState<Real>& s,
                               const BasicBasis1Q<Real>& b, int outcome) {
  const auto& v = b.vec(outcome);
  VectorXc<Real> residual = std::conj(v.a0()) * s.qubit_block(0) +
                            std::conj(v.a1()) * s.qubit_block(1);
  const Real w = residual.squaredNorm();
  return {w, std::move(residual)};
}

template <typename Real>
std::array<Real, 2> born_qubit_of_joint(const BasicJointState<Real>& s,
                                        const BasicBasis1Q<Real>& b) {
  return {qubit_branch(s, b, 0).weight, qubit_branch(s, b, 1).weight};
}

template <typename Real>
struct MeasuredJoint {
  int outcome;
  BasicJointState<Real> post;
};

/// Projects the qubit half onto basis outcome k and renormalises; the post
/// state is basis vector (x) residual. Throws DegenerateBranchError if the
/// branch has weight below kBranchEps.
template <typename Real>
BasicJointState<Real> collapse_qubit_of_joint(const BasicJointState<Real>& s,
                                              const BasicBasis1Q<Real>& b,
                                              int outcome) {
  auto branch = qubit_branch(s, b, outcome);
  if (branch.weight < Real(kBranchEps)) {
    throw DegenerateBranchError("collapse_qubit_of_joint: impossible branch");
  }
  branch.residual /= std::sqrt(branch.weight);
  return attach_ancilla(b.vec(outcome), branch.residual);
}

/// Measures the qubit half with a Born draw and collapses.
template <typename Real>
MeasuredJoint<Real> measure_qubit_of_joint(const BasicJointState<Real>& s,
                                           const BasicBasis1Q<Real>& b,
                                           RngStream& rng) {
  const auto p = born_qubit_of_joint(s, b);
  const int k = sample_index<Real>(std::span<const Real>(p.data(), 2), rng);
  return {k, collapse_qubit_of_joint(s, b, k)};
}

/// Partial trace over the qubit: rho[k][l] = sum_q amp(q,k) conj(amp(q,l)).
template <typename Real>
BasicDensityMatrix<Real> reduced_ancilla_state(const BasicJointState<Real>& s) {
  const Eigen::Index d = s.ancilla_dim();
  MatrixXc<Real> rho = MatrixXc<Real>::Zero(d, d);
  for (int q = 0; q < 2; ++q) {
    rho += s.qubit_block(q) * s.qubit_block(q).adjoint();
  }
  return BasicDensityMatrix<Real>(std::move(rho));
}

/// (1/2) sum |eigenvalues(r1 - r2)|.
template <typename Real>
Real trace_distance(const BasicDensityMatrix<Real>& r1,
                    const BasicDensityMatrix<Real>& r2) {
  if (r1.dim() != r2.dim()) {
    throw DimensionMismatchError("trace_distance: dimensions differ");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc<Real>> es(r1.matrix() - r2.matrix(),
                                                   Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum() / Real(2);
}

/// Kronecker product of two column vectors.
template <typename Real>
VectorXc<Real> tensor(const VectorXc<Real>& a, const VectorXc<Real>& b) {
  VectorXc<Real> out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

/// Views a d = 2 joint state as a two-qubit state (qubit first, ancilla
/// second).
template <typename Real>
BasicPureState2Q<Real> as_two_qubit(const BasicJointState<Real>& s) {
  if (s.ancilla_dim() != 2) {
    throw DimensionMismatchError("as_two_qubit: ancilla dimension != 2");
  }
  return BasicPureState2Q<Real>(Vector4c<Real>(s.amps()));
}

/// Views a pure single qubit out of a d = 1 joint state.
template <typename Real>
BasicPureState1Q<Real> as_single_qubit(const BasicJointState<Real>& s) {
  if (s.ancilla_dim() != 1) {
    throw DimensionMismatchError("as_single_qubit: ancilla dimension != 1");
  }
  return BasicPureState1Q<Real>(s.amps()(0), s.amps()(1));
}

/// |bit> as a trivial joint state.
template <typename Real>
BasicJointState<Real> as_joint(const BasicPureState1Q<Real>& q) {
  VectorXc<Real> anc(1);
  anc(0) = std::complex<Real>(1);
  return attach_ancilla(q, anc);
}

/// Ancilla basis ket of dimension d.
template <typename Real>
VectorXc<Real> ancilla_ket(Eigen::Index d, Eigen::Index index = 0) {
  VectorXc<Real> v = VectorXc<Real>::Zero(d);
  v(index) = std::complex<Real>(1);
  return v;
}

}  // namespace msqkd
