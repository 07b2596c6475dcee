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
#include <numbers>

#include "catch_amalgamated.hpp"
#include "cqi/epr.hpp"
#include "cqi/random.hpp"
#include "cqi/realism.hpp"

using namespace cqi;
using namespace cqi::epr;

namespace {

EprConfig random_pair(random::Engine& rng) {
  const Vector v = random::ket(rng, 2).amplitudes();
  EprConfig cfg;
  cfg.alpha = v(0);
  cfg.beta = v(1);
  return cfg;
}

double h2(double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p); }

}  // namespace

TEST_CASE("EPR final state", "[epr]") {
  SECTION("product state for alpha = 1") {
    EprConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta = 0.0;
    const auto psi = epr_final_state(cfg);
    CHECK(std::abs(psi[0] - 1.0) < 1e-15);
    const auto r = epr_reduced(cfg);
    CHECK(r.s_a < 1e-12);
    CHECK(r.s_b < 1e-12);
    CHECK(r.s_ab < 1e-12);
  }
  SECTION("Bell pair Schmidt coefficients") {
    const auto terms = hilbert::schmidt_decompose(epr_final_state(EprConfig{}), {kQ1, kAlice});
    REQUIRE(terms.size() == 2);
    for (const auto& t : terms) CHECK(std::abs(t.coefficient - 1.0 / std::numbers::sqrt2) < 1e-12);
  }
  SECTION("records the pair in both observers") {
    auto rng = random::stream(401, 0);
    for (int i = 0; i < 50; ++i) {
      const auto cfg = random_pair(rng);
      const auto psi = epr_final_state(cfg);
      CHECK(std::abs(psi[0] - cfg.alpha) < 1e-15);
      CHECK(std::abs(psi[15] - cfg.beta) < 1e-15);
      CHECK(std::abs(psi.amplitudes().squaredNorm() - 1.0) < 1e-12);
      CHECK(hilbert::von_neumann_entropy(hilbert::DensityOp::pure(psi)) < 1e-9);
      CHECK(order_independence(cfg) == 0.0);
    }
  }
  SECTION("validation") {
    EprConfig cfg;
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(epr_final_state(cfg), ConfigError);
    cfg = EprConfig{};
    cfg.alice_unitary = Matrix::Identity(2, 2) * 2.0;
    CHECK_THROWS_AS(no_communication_check(cfg), ConfigError);
    CHECK_THROWS_AS(no_communication_check(EprConfig{}), ConfigError);
  }
}

TEST_CASE("EPR reduced states", "[epr]") {
  SECTION("alpha = 0.6, beta = 0.8") {
    EprConfig cfg;
    cfg.alpha = 0.6;
    cfg.beta = 0.8;
    const auto r = epr_reduced(cfg);
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 0.36;
    diag(1, 1) = 0.64;
    CHECK((r.rho_a.matrix() - diag).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.rho_b.matrix() - diag).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.s_a - h2(0.36)) < 1e-9);
  }
  SECTION("Bell pair") {
    const auto r = epr_reduced(EprConfig{});
    CHECK(std::abs(r.s_a - 1.0) < 1e-9);
    CHECK(std::abs(r.s_b - 1.0) < 1e-9);
    CHECK(std::abs(r.s_ab - 1.0) < 1e-9);
    CHECK(std::abs(r.s_a_given_b) < 1e-9);
  }
  SECTION("perfect correlation for random pairs") {
    auto rng = random::stream(402, 0);
    for (int i = 0; i < 200; ++i) {
      const auto cfg = random_pair(rng);
      const auto r = epr_reduced(cfg);
      const double pa = std::norm(cfg.alpha);
      Matrix ab = Matrix::Zero(4, 4);
      ab(0, 0) = pa;
      ab(3, 3) = 1.0 - pa;
      CHECK((r.rho_ab.matrix() - ab).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(r.s_a_given_b) < 1e-9);
      CHECK(std::abs(r.s_b_given_a) < 1e-9);
      CHECK(std::abs(r.mutual_information - r.s_a) < 1e-9);
      CHECK(std::abs(r.s_a - h2(pa)) < 1e-9);
      CHECK(r.cross_outcome < 1e-12);
    }
  }
}

TEST_CASE("no communication", "[epr]") {
  EprConfig cfg;
  cfg.alice_unitary = Matrix::Identity(2, 2);
  CHECK(no_communication_check(cfg) == 0.0);
  Matrix h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  cfg.alice_unitary = h / std::numbers::sqrt2;
  CHECK(no_communication_check(cfg) < 1e-12);
  auto rng = random::stream(403, 0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto c = random_pair(rng);
    c.alice_unitary = random::unitary(rng, 2);
    worst = std::max(worst, no_communication_check(c));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("realism scenario", "[epr][realism]") {
  SECTION("alpha = 0.6, beta = 0.8") {
    const auto r = realism::realism_scenario(0.6, 0.8);
    REQUIRE(r.slices.size() == 3);
    CHECK(r.slices[1].s_a < 1e-9);
    CHECK(std::abs(r.slices[1].s_b - h2(0.36)) < 1e-9);
    CHECK(std::abs(r.slices[2].s_b - h2(0.36)) < 1e-9);
    CHECK(std::abs(r.slices[2].s_a - h2(0.36)) < 1e-9);
    CHECK(std::abs(r.slices[2].s_a_given_b) < 1e-9);
    CHECK(r.slices[0].s_b < 1e-9);
    CHECK(r.alice_pure_at_t1);
    CHECK(r.bob_mixed_at_t1);
    CHECK(r.correlated_at_t2);
  }
  SECTION("alpha = 1 leaves every entropy zero") {
    const auto r = realism::realism_scenario(1.0, 0.0);
    for (const auto& s : r.slices) {
      CHECK(s.s_a < 1e-12);
      CHECK(s.s_b < 1e-12);
    }
  }
  SECTION("random amplitudes") {
    auto rng = random::stream(404, 0);
    for (int i = 0; i < 100; ++i) {
      const Vector v = random::ket(rng, 2).amplitudes();
      const auto r = realism::realism_scenario(v(0), v(1));
      CHECK(std::abs(r.slices[2].s_a_given_b) < 1e-9);
      CHECK(std::abs(r.slices[1].purity_a - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS_AS(realism::realism_scenario(1.0, 1.0), ConfigError);
}
