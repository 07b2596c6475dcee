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

// EPR pair with local measurement interactions. Factor order is (Q1, A, Q2, B):
// Alice holds Q1 and records it in A, Bob holds Q2 and records it in B.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::epr {

inline constexpr std::size_t kQ1 = 0, kAlice = 1, kQ2 = 2, kBob = 3;

struct EprConfig {
  Complex alpha{1.0 / std::numbers::sqrt2, 0.0};
  Complex beta{1.0 / std::numbers::sqrt2, 0.0};
  std::optional<Matrix> alice_unitary;

  void validate(double tol = 1e-10) const {
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > tol)
      throw ConfigError("alpha", "|alpha|^2 + |beta|^2 must equal 1");
    if (alice_unitary) {
      if (alice_unitary->rows() != 2 || alice_unitary->cols() != 2)
        throw ConfigError("alice_unitary", "must be 2x2");
      if (!hilbert::is_unitary(*alice_unitary, tol)) throw ConfigError("alice_unitary", "is not unitary");
    }
  }
};

enum class Order { AliceFirst, BobFirst };

// alpha|0>|A0>|0>|B0> + beta|1>|A1>|1>|B1> from the pair and two ready observers.
inline hilbert::Ket epr_final_state(const EprConfig& cfg, Order order = Order::AliceFirst) {
  cfg.validate();
  Vector v = Vector::Zero(16);
  v(0) = cfg.alpha;  // |Q1 A Q2 B> = |0 0 0 0>
  v(10) = cfg.beta;  // |1 0 1 0>
  hilbert::Ket psi(v, Dims{2, 2, 2, 2});
  if (order == Order::AliceFirst) {
    psi = hilbert::controlled_add(psi, kQ1, kAlice);
    psi = hilbert::controlled_add(psi, kQ2, kBob);
  } else {
    psi = hilbert::controlled_add(psi, kQ2, kBob);
    psi = hilbert::controlled_add(psi, kQ1, kAlice);
  }
  return psi;
}

struct EprReduced {
  hilbert::DensityOp rho_a;
  hilbert::DensityOp rho_b;
  hilbert::DensityOp rho_ab;
  double s_a = 0.0, s_b = 0.0, s_ab = 0.0;
  double s_a_given_b = 0.0, s_b_given_a = 0.0;
  double mutual_information = 0.0;
  double cross_outcome = 0.0;  // largest P(Alice i, Bob j), i != j
};

inline EprReduced epr_reduced(const EprConfig& cfg) {
  const hilbert::Ket psi = epr_final_state(cfg);
  EprReduced r{hilbert::reduced_state(psi, {kAlice}), hilbert::reduced_state(psi, {kBob}),
               hilbert::reduced_state(psi, {kAlice, kBob})};
  r.s_a = hilbert::von_neumann_entropy(r.rho_a);
  r.s_b = hilbert::von_neumann_entropy(r.rho_b);
  r.s_ab = hilbert::von_neumann_entropy(r.rho_ab);
  r.s_a_given_b = r.s_ab - r.s_b;
  r.s_b_given_a = r.s_ab - r.s_a;
  r.mutual_information = r.s_a + r.s_b - r.s_ab;
  const auto pb = hilbert::preferred_basis(r.rho_ab);
  for (std::size_t k = 0; k < pb.outcome.size(); ++k) {
    const std::size_t o = pb.outcome[k];
    if (o == 1 || o == 2) r.cross_outcome = std::max(r.cross_outcome, pb.distribution.probs[k]);
  }
  return r;
}

// Trace distance between Bob's state with and without Alice's local unitary on Q1.
inline double no_communication_check(const EprConfig& cfg) {
  cfg.validate();
  if (!cfg.alice_unitary) throw ConfigError("alice_unitary", "required for the no-communication check");
  const hilbert::Ket psi = epr_final_state(cfg);
  const hilbert::Ket moved = hilbert::apply_on_factor(psi, *cfg.alice_unitary, kQ1);
  return hilbert::trace_distance(hilbert::reduced_state(psi, {kBob}), hilbert::reduced_state(moved, {kBob}));
}

// Largest amplitude difference between the two measurement orders.
inline double order_independence(const EprConfig& cfg) {
  return (epr_final_state(cfg, Order::AliceFirst).amplitudes() - epr_final_state(cfg, Order::BobFirst).amplitudes())
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace cqi::epr
