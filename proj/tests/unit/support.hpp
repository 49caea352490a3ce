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

// Test-side generators, deliberately independent of the library's RngStream:
// random states come from std::mt19937_64 and random unitaries from QR
// orthonormalisation of Gaussian matrices.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "msqkd/qubit.hpp"

namespace msqkd::test {

inline Eigen::VectorXcd random_state_vector(Eigen::Index dim,
                                            std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    v(i) = std::complex<double>(normal(gen), normal(gen));
  }
  return v / v.norm();
}

inline PureState1Q random_state_1q(std::mt19937_64& gen) {
  const Eigen::VectorXcd v = random_state_vector(2, gen);
  return PureState1Q(v(0), v(1));
}

inline Eigen::MatrixXcd random_unitary(Eigen::Index dim,
                                       std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      g(r, c) = std::complex<double>(normal(gen), normal(gen));
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase convention so Q is Haar distributed.
  for (Eigen::Index i = 0; i < dim; ++i) {
    const std::complex<double> diag = r(i, i);
    q.col(i) *= diag / std::abs(diag);
  }
  return q;
}

}  // namespace msqkd::test
