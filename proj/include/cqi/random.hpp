// Copyright 2026 The cqi-sim Authors
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

#pragma once

// Seeded random states and unitaries for property sweeps.

#include <cstdint>
#include <random>

#include "cqi/hilbert.hpp"

namespace cqi::random {

using Engine = std::mt19937_64;

// Independent stream for sweep case `index` under base `seed`.
inline Engine stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Engine(seq);
}

inline Complex normal_complex(Engine& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline Vector gaussian_vector(Engine& rng, std::size_t n) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal_complex(rng);
  return v;
}

// Haar-distributed pure state.
inline hilbert::Ket ket(Engine& rng, const Dims& dims) {
  Vector v = gaussian_vector(rng, hilbert::product(dims));
  return hilbert::Ket(v / v.norm(), dims);
}

inline hilbert::Ket ket(Engine& rng, std::size_t d) { return ket(rng, Dims{d}); }

// Haar-distributed unitary (QR of a Ginibre matrix with the phase of R's diagonal removed).
inline Matrix unitary(Engine& rng, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix z(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = normal_complex(rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0.0) q.col(i) *= r(i, i) / a;
  }
  return q;
}

// Mixed state from tracing out an ancilla of dimension `rank`.
inline hilbert::DensityOp density(Engine& rng, const Dims& dims, std::size_t rank) {
  const std::size_t n = hilbert::product(dims);
  Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
  for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j) = gaussian_vector(rng, n);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return hilbert::DensityOp(rho, dims);
}

}  // namespace cqi::random
