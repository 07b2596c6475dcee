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

// Zeno slowdown by intermediate entanglement and its time reversal.
//
// Q evolves under H = -hbar*omega*sigma_x, so U(t) = cos(wt) I + i sin(wt) sigma_x
// and U(t)|0> = cos(wt)|0> + i sin(wt)|1>. Ancillas and the observer are qubits
// prepared in |0>; every interaction is a CNOT with Q as control. Only Q evolves.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::zeno {

struct ZenoConfig {
  double omega = 1.0;
  double epsilon = 0.05;
  double theta = 0.1;
  std::size_t n_ancillas = 1;

  static constexpr std::size_t kMaxAncillas = 20;

  void validate() const {
    if (!(omega > 0.0)) throw ConfigError("omega", "must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon", "must be nonnegative");
    if (!std::isfinite(theta)) throw ConfigError("theta", "must be finite");
    if (n_ancillas > kMaxAncillas)
      throw ConfigError("n_ancillas", "at most " + std::to_string(kMaxAncillas) + " for dense simulation");
  }

  // Leading-order statements only hold for omega*epsilon << 1.
  bool outside_leading_order() const { return omega * epsilon > 0.3; }
};

inline Matrix qubit_evolution(double t, double omega) {
  const double c = std::cos(omega * t), s = std::sin(omega * t);
  Matrix u(2, 2);
  u << c, Complex(0.0, s), Complex(0.0, s), c;
  return u;
}

inline hilbert::Ket free_qubit(double t, double omega) {
  Vector v = qubit_evolution(t, omega).col(0);
  return hilbert::Ket(v, Dims{2});
}

namespace detail {

inline hilbert::Ket ready(std::size_t n_qubits) {
  return hilbert::Ket::basis(Dims(n_qubits, 2), std::vector<std::size_t>(n_qubits, 0));
}

inline double excited_probability(const hilbert::Ket& psi, std::size_t factor) {
  return hilbert::reduced_state(psi, {factor}).matrix()(1, 1).real();
}

}  // namespace detail

struct ZenoPair {
  double p_without = 0.0;
  double p_with = 0.0;
  double ratio() const { return p_with / p_without; }
  double entropy_without = 0.0;  // entropy of the global state, must vanish
  double entropy_with = 0.0;
};

// Bob's probability of finding Q in |1> at t = 2*epsilon, without and with an
// intermediate CNOT onto an ancilla at t = epsilon. Factors: (Q, A, B).
inline ZenoPair zeno_pair(const ZenoConfig& cfg) {
  cfg.validate();
  const double w = cfg.omega, e = cfg.epsilon;
  ZenoPair r;

  hilbert::Ket plain = detail::ready(3);
  plain = hilbert::apply_on_factor(plain, qubit_evolution(2.0 * e, w), 0);
  plain = hilbert::controlled_add(plain, 0, 2);
  r.p_without = detail::excited_probability(plain, 2);
  r.entropy_without = hilbert::von_neumann_entropy(hilbert::DensityOp::pure(plain));

  hilbert::Ket zeno = detail::ready(3);
  zeno = hilbert::apply_on_factor(zeno, qubit_evolution(e, w), 0);
  zeno = hilbert::controlled_add(zeno, 0, 1);
  zeno = hilbert::apply_on_factor(zeno, qubit_evolution(e, w), 0);
  zeno = hilbert::controlled_add(zeno, 0, 2);
  r.p_with = detail::excited_probability(zeno, 2);
  r.entropy_with = hilbert::von_neumann_entropy(hilbert::DensityOp::pure(zeno));
  return r;
}

// Transition probability seen by Bob at T_tot = 2*epsilon after n ancilla CNOTs
// at t = k*T_tot/(n+1), k = 1..n. Factors: (Q, A_1, ..., A_n, B).
inline double iterated_zeno(const ZenoConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_ancillas;
  const double tau = 2.0 * cfg.epsilon / static_cast<double>(n + 1);
  const Matrix u = qubit_evolution(tau, cfg.omega);
  hilbert::Ket psi = detail::ready(n + 2);
  for (std::size_t k = 1; k <= n + 1; ++k) {
    psi = hilbert::apply_on_factor(psi, u, 0);
    psi = hilbert::controlled_add(psi, 0, k);
  }
  if (!psi.is_normalized(1e-10)) throw InvariantError("iterated_zeno: global state lost normalization");
  return detail::excited_probability(psi, n + 1);
}

struct TimeReversedZeno {
  std::vector<double> times;
  std::vector<hilbert::Ket> trajectory;  // Q after the disentangling CNOT
  double delta_t = 0.0;
  double consistency = 0.0;  // |delta from the second sample - delta_t|
  double fit_residual = 0.0;  // 1 - |<fitted|state>| over the trajectory
};

namespace detail {

// Phase x with state ~ cos(x)|0> + i sin(x)|1> up to a global phase, x in (-pi/2, pi/2].
inline double evolution_angle(const hilbert::Ket& q) {
  const Complex c0 = q[0], c1 = q[1];
  const Complex z = c1 * std::conj(c0);
  return 0.5 * std::atan2(2.0 * z.imag(), std::norm(c0) - std::norm(c1));
}

inline double wrap_half_period(double x) {
  const double p = std::numbers::pi;
  return x - p * std::round(x / p);
}

}  // namespace detail

// Starts from alpha|0,0> + beta|1,1> with alpha = cos(theta), beta = i sin(theta),
// disentangles with a CNOT at t = 0 and follows Q under free evolution.
inline TimeReversedZeno time_reversed_zeno(const ZenoConfig& cfg, std::size_t samples = 16) {
  cfg.validate();
  const double w = cfg.omega;
  Vector qa = Vector::Zero(4);
  qa(0) = std::cos(cfg.theta);
  qa(3) = Complex(0.0, std::sin(cfg.theta));
  hilbert::Ket psi(qa, Dims{2, 2});
  psi = hilbert::controlled_add(psi, 0, 1);
  const auto q0 = hilbert::reduced_state(psi, {0});
  if (std::abs(q0.matrix().trace().real() - (q0.matrix() * q0.matrix()).trace().real()) > 1e-12)
    throw InvariantError("time_reversed_zeno: Q is still entangled after the CNOT");
  Vector q_amp(2);
  q_amp << psi[0], psi[2];  // (Q, A) = (0, 0) and (1, 0)
  const hilbert::Ket q_start(q_amp, Dims{2});

  TimeReversedZeno r;
  const double quarter = 0.5 * std::numbers::pi / w;
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = quarter * static_cast<double>(s) / static_cast<double>(samples);
    r.times.push_back(t);
    r.trajectory.push_back(hilbert::apply_on_factor(q_start, qubit_evolution(t, w), 0));
  }
  // Two-time sampling with exact inversion of cos(w(t+d)), i sin(w(t+d)).
  r.delta_t = detail::wrap_half_period(detail::evolution_angle(r.trajectory[0]) - w * r.times[0]) / w;
  const std::size_t s1 = samples > 1 ? 1 : 0;
  const double d1 = detail::wrap_half_period(detail::evolution_angle(r.trajectory[s1]) - w * r.times[s1]) / w;
  r.consistency = std::abs(d1 - r.delta_t);
  for (std::size_t s = 0; s < samples; ++s) {
    const hilbert::Ket fit = free_qubit(r.times[s] + r.delta_t, w);
    r.fit_residual = std::max(r.fit_residual, 1.0 - std::abs(fit.amplitudes().dot(r.trajectory[s].amplitudes())));
  }
  return r;
}

// Largest trace distance between Q's reduced state and free evolution after a
// CNOT onto an ancilla at t = epsilon and the inverse CNOT at t = epsilon + delay.
// Q is sampled on [epsilon + delay, epsilon + delay + 2*epsilon].
inline double zeno_cancellation(const ZenoConfig& cfg, double delay = 0.0, std::size_t samples = 8) {
  cfg.validate();
  if (!(delay >= 0.0)) throw InvalidArgument("zeno_cancellation: delay must be nonnegative");
  const double w = cfg.omega, e = cfg.epsilon;
  hilbert::Ket psi = detail::ready(2);
  psi = hilbert::apply_on_factor(psi, qubit_evolution(e, w), 0);
  psi = hilbert::controlled_add(psi, 0, 1);
  psi = hilbert::apply_on_factor(psi, qubit_evolution(delay, w), 0);
  psi = hilbert::controlled_subtract(psi, 0, 1);
  const double t_start = e + delay;
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double dt = 2.0 * e * static_cast<double>(s) / static_cast<double>(std::max<std::size_t>(samples - 1, 1));
    const auto evolved = hilbert::apply_on_factor(psi, qubit_evolution(dt, w), 0);
    const auto rho = hilbert::reduced_state(evolved, {0});
    const auto ref = hilbert::DensityOp::pure(free_qubit(t_start + dt, w));
    worst = std::max(worst, hilbert::trace_distance(rho, ref));
  }
  return worst;
}

}  // namespace cqi::zeno
