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

// The observer-observed sequence. Factors (Q, A, B); Q starts in alpha|0> + beta|1>
// with both observers ready. Bob measures Q at t1, Alice at t2. Every slice is
// read from the same global state.

#include <array>
#include <cmath>
#include <vector>

#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::realism {

struct SliceReport {
  const char* label;
  hilbert::DensityOp rho_a;
  hilbert::DensityOp rho_b;
  double s_a = 0.0;
  double s_b = 0.0;
  double s_a_given_b = 0.0;
  double purity_a = 0.0;
  double purity_b = 0.0;
};

struct RealismReport {
  std::vector<SliceReport> slices;  // t0, t1, t2
  bool alice_pure_at_t1 = false;
  bool bob_mixed_at_t1 = false;
  bool correlated_at_t2 = false;
};

inline RealismReport realism_scenario(Complex alpha, Complex beta, double tol = 1e-9) {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-10)
    throw ConfigError("alpha", "|alpha|^2 + |beta|^2 must equal 1");
  constexpr std::size_t kQ = 0, kA = 1, kB = 2;
  Vector v = Vector::Zero(8);
  v(0) = alpha;  // |0,0,0>
  v(4) = beta;   // |1,0,0>
  hilbert::Ket psi(v, Dims{2, 2, 2});

  RealismReport r;
  auto record = [&](const char* label) {
    auto rho_a = hilbert::reduced_state(psi, {kA});
    auto rho_b = hilbert::reduced_state(psi, {kB});
    const auto rho_ab = hilbert::reduced_state(psi, {kA, kB});
    SliceReport s{label, rho_a, rho_b};
    s.s_a = hilbert::von_neumann_entropy(rho_a);
    s.s_b = hilbert::von_neumann_entropy(rho_b);
    s.s_a_given_b = hilbert::conditional_entropy(rho_ab, {1});
    s.purity_a = (rho_a.matrix() * rho_a.matrix()).trace().real();
    s.purity_b = (rho_b.matrix() * rho_b.matrix()).trace().real();
    r.slices.push_back(std::move(s));
  };
  record("t0");
  psi = hilbert::controlled_add(psi, kQ, kB);
  record("t1");
  psi = hilbert::controlled_add(psi, kQ, kA);
  record("t2");

  const bool superposed = std::norm(alpha) > tol && std::norm(beta) > tol;
  r.alice_pure_at_t1 = std::abs(r.slices[1].purity_a - 1.0) <= tol;
  r.bob_mixed_at_t1 = superposed ? r.slices[1].purity_b < 1.0 - tol : std::abs(r.slices[1].purity_b - 1.0) <= tol;
  r.correlated_at_t2 = std::abs(r.slices[2].s_a_given_b) <= tol;
  if (!r.alice_pure_at_t1 || !r.bob_mixed_at_t1 || !r.correlated_at_t2)
    throw InvariantError("realism_scenario: slice structure violated");
  return r;
}

}  // namespace cqi::realism
