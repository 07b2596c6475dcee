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

// Sequential measurement chains with quantized observers.
//
// Stage 1 measures Q in its computational basis {a_i}. Stage n >= 2 measures the
// basis {b_j} related to the previous one by U(n)_ij = <b_j|a_i>. Each stage
// rewrites Q's coordinates in the new basis (w = U^T v) and then copies the
// outcome into a fresh d-dimensional observer prepared in |0> with a
// generalized CNOT. Global factor order is (Q, O_1, ..., O_N).

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::chain {

struct ChainSpec {
  Vector initial;                // alpha_i = <a_i|Q>
  std::vector<Matrix> overlaps;  // U(2), ..., U(N)
  double norm_tol = 1e-10;
  double unitary_tol = 1e-10;

  std::size_t dim() const { return static_cast<std::size_t>(initial.size()); }
  std::size_t num_observers() const { return 1 + overlaps.size(); }

  void validate() const {
    if (initial.size() < 2) throw InvalidArgument("ChainSpec: initial state needs at least two outcomes");
    if (std::abs(initial.norm() - 1.0) > norm_tol) throw InvalidArgument("ChainSpec: initial state not normalized");
    for (std::size_t n = 0; n < overlaps.size(); ++n) {
      const Matrix& u = overlaps[n];
      if (u.rows() != initial.size() || u.cols() != initial.size())
        throw InvalidArgument("ChainSpec: overlap " + std::to_string(n + 2) + " has wrong dimension");
      if (!hilbert::is_unitary(u, unitary_tol))
        throw InvalidArgument("ChainSpec: overlap " + std::to_string(n + 2) + " is not unitary");
    }
  }
};

struct ChainResult {
  hilbert::Ket global_state;
  std::vector<hilbert::DensityOp> observer_states;
  std::vector<hilbert::ProbDist> distributions;
  std::vector<double> entropies;
  double q_entropy = 0.0;
  double global_entropy = 0.0;
};

namespace detail {

inline hilbert::ProbDist outcome_dist(const hilbert::DensityOp& rho) {
  hilbert::ProbDist p;
  p.probs = hilbert::outcome_distribution(rho);
  for (std::size_t i = 0; i < p.probs.size(); ++i) p.labels.push_back(std::to_string(i));
  return p;
}

// Runs the pipeline; stages listed in `skip` rotate Q but record nothing.
inline hilbert::Ket build_global(const ChainSpec& spec, const std::vector<bool>& skip) {
  const std::size_t d = spec.dim();
  hilbert::Ket psi(spec.initial, Dims{d});
  for (std::size_t n = 0; n < spec.num_observers(); ++n) {
    if (n > 0) psi = hilbert::apply_on_factor(psi, spec.overlaps[n - 1].transpose(), 0);
    psi = hilbert::tensor(psi, hilbert::Ket::basis(Dims{d}, {0}));
    if (!skip[n]) psi = hilbert::controlled_add(psi, 0, psi.num_factors() - 1);
  }
  return psi;
}

}  // namespace detail

inline ChainResult run_chain(const ChainSpec& spec) {
  spec.validate();
  const std::size_t n_obs = spec.num_observers();
  hilbert::Ket psi = detail::build_global(spec, std::vector<bool>(n_obs, false));
  ChainResult r{psi, {}, {}, {}};
  for (std::size_t n = 0; n < n_obs; ++n) {
    auto rho = hilbert::reduced_state(psi, {n + 1});
    r.distributions.push_back(detail::outcome_dist(rho));
    r.entropies.push_back(hilbert::von_neumann_entropy(rho));
    r.observer_states.push_back(std::move(rho));
  }
  r.q_entropy = hilbert::von_neumann_entropy(hilbert::reduced_state(psi, {0}));
  r.global_entropy = hilbert::von_neumann_entropy(psi);
  return r;
}

// p_N(l) = sum p_1(i) p_2(ij) ... p_N(kl) with transition matrices |U(n)_ij|^2.
inline std::vector<std::vector<double>> chain_rule_distributions(const ChainSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  Eigen::RowVectorXd p = spec.initial.cwiseAbs2().transpose();
  std::vector<std::vector<double>> out;
  out.emplace_back(p.data(), p.data() + d);
  for (const auto& u : spec.overlaps) {
    p = p * u.cwiseAbs2();
    out.emplace_back(p.data(), p.data() + d);
  }
  return out;
}

// Bob's (second observer's) distribution with Alice's stage removed.
inline hilbert::ProbDist unmeasured_comparison(const ChainSpec& spec) {
  spec.validate();
  if (spec.num_observers() < 2) throw InvalidArgument("unmeasured_comparison: chain needs at least two stages");
  std::vector<bool> skip(spec.num_observers(), false);
  skip[0] = true;
  const hilbert::Ket psi = detail::build_global(spec, skip);
  return detail::outcome_dist(hilbert::reduced_state(psi, {2}));
}

struct EntropyArrow {
  std::vector<double> entropies;
  double q_entropy = 0.0;
  bool nondecreasing = true;
  bool q_matches_last = true;
};

inline EntropyArrow entropy_sequence(const ChainResult& result, double tol = 1e-9) {
  EntropyArrow a{result.entropies, result.q_entropy, true, true};
  for (std::size_t n = 1; n < a.entropies.size(); ++n)
    if (a.entropies[n] < a.entropies[n - 1] - tol) a.nondecreasing = false;
  if (!a.entropies.empty()) a.q_matches_last = std::abs(a.q_entropy - a.entropies.back()) <= tol;
  return a;
}

struct InefficientDetector {
  hilbert::DensityOp rho_qa_model;   // observer state for alpha|00> + gamma|10> + delta|11>
  hilbert::DensityOp rho_qda_model;  // observer state for alpha|000> + gamma|100> + delta|111>
};

inline InefficientDetector inefficient_detector(Complex alpha, Complex gamma, Complex delta, double tol = 1e-10) {
  const double n = std::norm(alpha) + std::norm(gamma) + std::norm(delta);
  if (std::abs(n - 1.0) > tol) throw InvalidArgument("inefficient_detector: amplitudes not normalized");
  Vector qa = Vector::Zero(4);
  qa(0) = alpha;  // |Q=0, A=0>
  qa(2) = gamma;  // |1, 0>
  qa(3) = delta;  // |1, 1>
  Vector qda = Vector::Zero(8);
  qda(0) = alpha;  // |0,0,0>
  qda(4) = gamma;  // |1,0,0>
  qda(7) = delta;  // |1,1,1>
  return {hilbert::reduced_state(hilbert::Ket(qa, {2, 2}), {1}),
          hilbert::reduced_state(hilbert::Ket(qda, {2, 2, 2}), {2})};
}

}  // namespace cqi::chain
