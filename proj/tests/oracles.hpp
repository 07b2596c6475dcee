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

// Independent reference computations shared by the unit tests and the
// acceptance suite. None of these reuse the library's evolution paths.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "cqi/chain.hpp"
#include "cqi/contspace.hpp"

namespace cqi::oracle {

using contspace::kI;

// Free Gaussian packet continued to complex time t (Im t <= 0).
inline Complex gaussian_complex_time(double x, Complex t, double x0, double a, const contspace::PropagatorKernel& k) {
  const Complex s = 1.0 + kI * k.hbar * t / (k.mass * a * a);
  const double d = x - x0;
  return std::pow(std::numbers::pi * a * a, -0.25) / std::sqrt(s) * std::exp(-d * d / (2.0 * a * a * s));
}

// Plain O(n^2) discrete Fourier transform.
inline Vector naive_dft(const Vector& in, int sign) {
  const auto n = in.size();
  Vector out = Vector::Zero(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      acc += in(j) * std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>((m * j) % n) / static_cast<double>(n));
    out(m) = acc;
  }
  return out;
}

// Split-step integration of i hbar psi_t = -(hbar^2/2m) psi_xx with `steps`
// kinetic substeps, transforms by naive DFT.
inline Vector split_step(const Vector& psi, const contspace::Grid& g, const contspace::PropagatorKernel& k, double t,
                         int steps) {
  const auto n = psi.size();
  const double h = t / steps;
  Vector phase(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index mm = (m <= (n - 1) / 2) ? m : m - n;
    const double kk = 2.0 * std::numbers::pi * static_cast<double>(mm) / g.length();
    phase(m) = std::exp(-kI * k.hbar * kk * kk * h / (2.0 * k.mass));
  }
  Vector cur = psi;
  for (int s = 0; s < steps; ++s) {
    Vector spec = naive_dft(cur, -1);
    spec = spec.cwiseProduct(phase);
    cur = naive_dft(spec, +1) / static_cast<double>(n);
  }
  return cur;
}

// int dy W(x,t2;y,t1) W(y,t1;x',t0) by the trapezoid rule on [y_min, y_max].
inline Complex composition(const contspace::PropagatorKernel& k, double x, double t2, double xp, double t0, double t1,
                           double y_min, double y_max, std::size_t ny) {
  const double dy = (y_max - y_min) / static_cast<double>(ny - 1);
  Complex acc = 0.0;
  for (std::size_t i = 0; i < ny; ++i) {
    const double y = y_min + static_cast<double>(i) * dy;
    const double w = (i == 0 || i + 1 == ny) ? 0.5 : 1.0;
    acc += w * contspace::propagate_point(k, x, t2, y, t1) * contspace::propagate_point(k, y, t1, xp, t0);
  }
  return acc * dy;
}

// Two Richardson levels for an expansion f(h) = f0 + c1 h + c2 h^2 + ...
// given f(h), f(h/2), f(h/4).
inline Complex richardson(Complex f1, Complex f2, Complex f4) {
  const Complex r1 = 2.0 * f2 - f1;
  const Complex r2 = 2.0 * f4 - f2;
  return (4.0 * r2 - r1) / 3.0;
}

// p_N(l) by enumerating every index tuple (i_1, ..., i_N).
inline std::vector<double> index_sum(const chain::ChainSpec& spec) {
  const std::size_t d = spec.dim();
  const std::size_t n = spec.num_observers();
  std::vector<double> out(d, 0.0);
  std::vector<std::size_t> idx(n, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t level, double weight) {
    if (level == n) {
      out[idx[n - 1]] += weight;
      return;
    }
    for (std::size_t j = 0; j < d; ++j) {
      idx[level] = j;
      const double step = level == 0 ? std::norm(spec.initial(static_cast<Eigen::Index>(j)))
                                     : std::norm(spec.overlaps[level - 1](static_cast<Eigen::Index>(idx[level - 1]),
                                                                          static_cast<Eigen::Index>(j)));
      rec(level + 1, weight * step);
    }
  };
  rec(0, 1.0);
  return out;
}

}  // namespace cqi::oracle
