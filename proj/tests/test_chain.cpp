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

#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "cqi/chain.hpp"
#include "cqi/random.hpp"
#include "oracles.hpp"

using namespace cqi;
using namespace cqi::chain;
using Catch::Matchers::WithinAbs;

namespace {

Matrix hadamard() {
  Matrix h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

ChainSpec random_chain(random::Engine& rng, std::size_t d, std::size_t n) {
  ChainSpec s;
  s.initial = random::ket(rng, d).amplitudes();
  for (std::size_t k = 1; k < n; ++k) s.overlaps.push_back(random::unitary(rng, d));
  return s;
}

}  // namespace

TEST_CASE("two-observer chain", "[chain]") {
  auto rng = random::stream(101, 0);
  ChainSpec spec;
  spec.initial = random::ket(rng, 3).amplitudes();
  spec.overlaps = {random::unitary(rng, 3)};
  const auto r = run_chain(spec);
  REQUIRE(r.observer_states.size() == 2);
  CHECK(r.global_state.factor_dims() == Dims{3, 3, 3});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK_THAT(r.distributions[0].probs[i], WithinAbs(std::norm(spec.initial(static_cast<Eigen::Index>(i))), 1e-14));
  for (std::size_t j = 0; j < 3; ++j) {
    double p = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      p += std::norm(spec.initial(static_cast<Eigen::Index>(i))) *
           std::norm(spec.overlaps[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    CHECK_THAT(r.distributions[1].probs[j], WithinAbs(p, 1e-14));
  }
  CHECK_THAT(r.global_entropy, WithinAbs(0.0, 1e-9));
}

TEST_CASE("identity overlap repeats the first record", "[chain]") {
  ChainSpec spec;
  spec.initial = Vector(2);
  spec.initial << 0.6, 0.8;
  spec.overlaps = {Matrix::Identity(2, 2)};
  const auto r = run_chain(spec);
  CHECK_THAT(r.distributions[1].probs[0], WithinAbs(0.36, 1e-15));
  CHECK_THAT(r.entropies[1], WithinAbs(r.entropies[0], 1e-12));
  const auto arrow = entropy_sequence(r);
  CHECK(arrow.nondecreasing);
  CHECK(arrow.q_matches_last);
}

TEST_CASE("chain rule equals the partial-trace route", "[chain][property]") {
  auto rng = random::stream(103, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto spec = random_chain(rng, 2 + rep % 3, 2 + (rep / 3) % 3);
    const auto r = run_chain(spec);
    const auto rule = chain_rule_distributions(spec);
    const auto brute = oracle::index_sum(spec);
    for (std::size_t n = 0; n < spec.num_observers(); ++n)
      for (std::size_t l = 0; l < spec.dim(); ++l) CHECK_THAT(r.distributions[n].probs[l], WithinAbs(rule[n][l], 1e-10));
    for (std::size_t l = 0; l < spec.dim(); ++l) CHECK_THAT(r.distributions.back().probs[l], WithinAbs(brute[l], 1e-10));
  }
}

TEST_CASE("three-stage qutrit chain against exhaustive enumeration", "[chain]") {
  auto rng = random::stream(107, 0);
  const auto spec = random_chain(rng, 3, 3);
  const auto r = run_chain(spec);
  const auto brute = oracle::index_sum(spec);
  for (std::size_t l = 0; l < 3; ++l) CHECK_THAT(r.distributions[2].probs[l], WithinAbs(brute[l], 1e-12));
}

TEST_CASE("effective collapse", "[chain][unmeasured]") {
  ChainSpec spec;
  spec.overlaps = {hadamard()};
  SECTION("basis-state input") {
    spec.initial = Vector::Zero(2);
    spec.initial(0) = 1.0;
    const auto with = run_chain(spec).distributions[1];
    const auto without = unmeasured_comparison(spec);
    CHECK_THAT(with.probs[0], WithinAbs(0.5, 1e-14));
    CHECK_THAT(without.probs[0], WithinAbs(0.5, 1e-14));
  }
  SECTION("superposed input loses interference") {
    spec.initial = Vector::Constant(2, 1.0 / std::sqrt(2.0));
    const auto with = run_chain(spec).distributions[1];
    const auto without = unmeasured_comparison(spec);
    CHECK_THAT(with.probs[0], WithinAbs(0.5, 1e-14));
    CHECK_THAT(with.probs[1], WithinAbs(0.5, 1e-14));
    CHECK_THAT(without.probs[0], WithinAbs(1.0, 1e-14));
    CHECK_THAT(without.probs[1], WithinAbs(0.0, 1e-14));
  }
  SECTION("identity overlap") {
    spec.initial = Vector(2);
    spec.initial << 0.6, Complex(0.0, 0.8);
    spec.overlaps = {Matrix::Identity(2, 2)};
    const auto with = run_chain(spec).distributions[1];
    const auto without = unmeasured_comparison(spec);
    CHECK_THAT(with.probs[0], WithinAbs(without.probs[0], 1e-14));
    CHECK_THAT(with.probs[1], WithinAbs(without.probs[1], 1e-14));
  }
  SECTION("generic input matches |sum_i alpha_i U_ij|^2") {
    auto rng = random::stream(109, 0);
    spec.initial = random::ket(rng, 3).amplitudes();
    spec.overlaps = {random::unitary(rng, 3)};
    const auto without = unmeasured_comparison(spec);
    const Vector amp = spec.overlaps[0].transpose() * spec.initial;
    for (int j = 0; j < 3; ++j) CHECK_THAT(without.probs[static_cast<std::size_t>(j)], WithinAbs(std::norm(amp(j)), 1e-13));
  }
}

TEST_CASE("entropy arrow", "[chain][entropy]") {
  SECTION("mutually unbiased stage on a qubit") {
    ChainSpec spec;
    spec.initial = Vector(2);
    spec.initial << 0.6, 0.8;
    spec.overlaps = {hadamard()};
    const auto arrow = entropy_sequence(run_chain(spec));
    CHECK_THAT(arrow.entropies[0], WithinAbs(-0.36 * std::log2(0.36) - 0.64 * std::log2(0.64), 1e-12));
    CHECK_THAT(arrow.entropies[1], WithinAbs(1.0, 1e-12));
    CHECK(arrow.nondecreasing);
    CHECK(arrow.q_matches_last);
  }
  SECTION("randomized chains") {
    int violations = 0;
    for (int rep = 0; rep < 300; ++rep) {
      auto rng = random::stream(113, static_cast<std::uint64_t>(rep));
      const auto spec = random_chain(rng, 2 + rep % 3, 2 + (rep / 3) % 3);
      const auto r = run_chain(spec);
      const auto arrow = entropy_sequence(r);
      if (!arrow.nondecreasing || !arrow.q_matches_last) ++violations;
      CHECK_THAT(r.global_entropy, WithinAbs(0.0, 1e-9));
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("chain validation", "[chain]") {
  ChainSpec spec;
  spec.initial = Vector::Ones(2);
  CHECK_THROWS_AS(run_chain(spec), InvalidArgument);
  spec.initial /= std::sqrt(2.0);
  spec.overlaps = {Matrix::Ones(2, 2)};
  CHECK_THROWS_AS(run_chain(spec), InvalidArgument);
  spec.overlaps = {Matrix::Identity(3, 3)};
  CHECK_THROWS_AS(run_chain(spec), InvalidArgument);
  spec.overlaps.clear();
  CHECK_THROWS_AS(unmeasured_comparison(spec), InvalidArgument);
}

TEST_CASE("inefficient detector", "[chain][detector]") {
  SECTION("perfect detector") {
    const auto r = inefficient_detector(0.6, 0.0, Complex(0.0, 0.8));
    for (const auto* rho : {&r.rho_qa_model, &r.rho_qda_model}) {
      CHECK_THAT(rho->matrix()(0, 0).real(), WithinAbs(0.36, 1e-15));
      CHECK_THAT(rho->matrix()(1, 1).real(), WithinAbs(0.64, 1e-15));
      CHECK(std::abs(rho->matrix()(0, 1)) < 1e-15);
    }
  }
  SECTION("equal amplitudes") {
    const double a = 1.0 / std::sqrt(3.0);
    const auto r = inefficient_detector(a, a, a);
    CHECK_THAT(r.rho_qda_model.matrix()(0, 0).real(), WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(r.rho_qda_model.matrix()(1, 1).real(), WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(std::abs(r.rho_qda_model.matrix()(0, 1)) < 1e-15);
    CHECK_THAT(std::abs(r.rho_qa_model.matrix()(0, 1)), WithinAbs(1.0 / 3.0, 1e-15));
    const auto pb = hilbert::preferred_basis(r.rho_qda_model);
    CHECK_FALSE(pb.degenerate);
    CHECK((pb.basis.cwiseAbs() - Matrix::Identity(2, 2).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("complex amplitudes give gamma delta* off-diagonal") {
    const Complex g(0.3, 0.4), d(0.0, -0.5);
    const Complex alpha = std::sqrt(1.0 - std::norm(g) - std::norm(d));
    const auto r = inefficient_detector(alpha, g, d);
    CHECK(std::abs(r.rho_qa_model.matrix()(0, 1) - g * std::conj(d)) < 1e-15);
  }
  CHECK_THROWS_AS(inefficient_detector(1.0, 1.0, 0.0), InvalidArgument);
}
