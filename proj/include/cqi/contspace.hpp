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

// Extended configuration space (x, t) for one free nonrelativistic particle.
//
// Space is a periodic grid x_i = x_min + i*dx, i < nx, dx = (x_max - x_min)/nx.
// Free evolution on the grid is exact in Fourier space. Kinematical states are
// stored as weighted constant-time slices; a state carried by a single slice
// has weight 1 and represents a delta function in t.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::contspace {

inline constexpr Complex kI{0.0, 1.0};

struct Grid {
  double x_min = -20.0;
  double x_max = 20.0;
  std::size_t nx = 512;
  double t_min = 0.0;
  double t_max = 1.0;
  std::size_t nt = 2;

  double length() const { return x_max - x_min; }
  double dx() const { return length() / static_cast<double>(nx); }
  double dt() const { return (t_max - t_min) / static_cast<double>(nt - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  double t(std::size_t j) const { return t_min + static_cast<double>(j) * dt(); }

  void validate() const {
    if (nx < 2) throw ConfigError("grid.nx", "must be at least 2");
    if (nt < 2) throw ConfigError("grid.nt", "must be at least 2");
    if (!(x_max > x_min)) throw ConfigError("grid.x_max", "must exceed grid.x_min");
    if (!(t_max > t_min)) throw ConfigError("grid.t_max", "must exceed grid.t_min");
  }

  // Doubles the spatial resolution `k` times; t sampling is left unchanged.
  Grid refined(unsigned k) const {
    Grid g = *this;
    g.nx <<= k;
    return g;
  }
};

struct PropagatorKernel {
  double mass = 1.0;
  double hbar = 1.0;
  double eta = 0.0;  // imaginary-time regularization, dt -> dt - i*eta

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("mass", "must be positive");
    if (!(hbar > 0.0)) throw ConfigError("hbar", "must be positive");
    if (!(eta >= 0.0)) throw ConfigError("eta", "must be nonnegative");
  }

  double omega(double k) const { return hbar * k * k / (2.0 * mass); }
};

// W(x,t;x',t') = sqrt(m / (2 pi i hbar dt)) exp(i m (x-x')^2 / (2 hbar dt)).
inline Complex propagate_point(const PropagatorKernel& k, double x, double t, double xp, double tp) {
  if (t == tp) throw InvalidArgument("propagate_point: equal times");
  const Complex delta = Complex(t - tp, -k.eta);
  const Complex pref = std::sqrt(k.mass / (2.0 * std::numbers::pi * kI * k.hbar * delta));
  const double d = x - xp;
  return pref * std::exp(kI * k.mass * d * d / (2.0 * k.hbar * delta));
}

// Free Gaussian packet with initial profile (pi a^2)^(-1/4) exp(-(x-x0)^2/(2a^2) + i p0 (x-x0)/hbar).
inline Complex gaussian_packet(double x, double t, double x0, double a, double p0, const PropagatorKernel& k) {
  const Complex s = 1.0 + kI * k.hbar * t / (k.mass * a * a);
  const double xc = x0 + p0 * t / k.mass;
  const double d = x - xc;
  const Complex phase = kI * (p0 * (x - x0) - p0 * p0 * t / (2.0 * k.mass)) / k.hbar;
  return std::pow(std::numbers::pi * a * a, -0.25) / std::sqrt(s) * std::exp(-d * d / (2.0 * a * a * s) + phase);
}

// Squared width 2<(x - <x>)^2> of a sampled wavefunction.
inline double squared_width(const Vector& psi, const Grid& g) {
  double n = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double p = std::norm(psi(static_cast<Eigen::Index>(i)));
    const double x = g.x(i);
    n += p;
    m1 += p * x;
    m2 += p * x * x;
  }
  m1 /= n;
  m2 /= n;
  return 2.0 * (m2 - m1 * m1);
}

inline double l2_norm(const Vector& psi, double dx) { return std::sqrt(dx) * psi.norm(); }

// Exact free evolution on the periodic grid.
class SpectralPropagator {
 public:
  SpectralPropagator(const Grid& grid, const PropagatorKernel& kernel) : grid_(grid), kernel_(kernel) {
    kernel_.validate();
    const auto n = static_cast<Eigen::Index>(grid.nx);
    k_.resize(n);
    const double dk = 2.0 * std::numbers::pi / grid.length();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index m = (i <= (n - 1) / 2) ? i : i - n;
      k_(i) = dk * static_cast<double>(m);
    }
  }

  const Grid& grid() const { return grid_; }
  const PropagatorKernel& kernel() const { return kernel_; }
  const Eigen::VectorXd& wavenumbers() const { return k_; }

  // Fourier coefficients c_k with psi(x_i) = sum_k c_k exp(i k x_i).
  Vector to_modes(const Vector& psi) const {
    check(psi);
    std::vector<Complex> in(psi.data(), psi.data() + psi.size()), out;
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    Vector c(psi.size());
    const double n = static_cast<double>(grid_.nx);
    for (Eigen::Index i = 0; i < c.size(); ++i)
      c(i) = out[static_cast<std::size_t>(i)] / n * std::exp(-kI * k_(i) * grid_.x_min);
    return c;
  }

  Vector from_modes(const Vector& c) const {
    check(c);
    std::vector<Complex> in(static_cast<std::size_t>(c.size())), out;
    const double n = static_cast<double>(grid_.nx);
    for (Eigen::Index i = 0; i < c.size(); ++i)
      in[static_cast<std::size_t>(i)] = c(i) * n * std::exp(kI * k_(i) * grid_.x_min);
    Eigen::FFT<double> fft;
    fft.inv(out, in);
    return Eigen::Map<const Vector>(out.data(), c.size());
  }

  // psi(t + dt) from psi(t); negative dt evolves backward.
  Vector evolve(const Vector& psi, double dt) const {
    if (dt == 0.0) return psi;
    Vector c = to_modes(psi);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-kI * kernel_.omega(k_(i)) * dt);
    return from_modes(c);
  }

 private:
  void check(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != grid_.nx)
      throw InvalidArgument("SpectralPropagator: vector length differs from grid.nx");
  }

  Grid grid_;
  PropagatorKernel kernel_;
  Eigen::VectorXd k_;
};

// Sampled kinematical amplitude on the (x, t) grid; values(i, j) = f(x_i, t_j).
class GridFunction {
 public:
  static constexpr double kSupportEps = 1e-14;

  GridFunction(Grid grid, Matrix values) : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (static_cast<std::size_t>(values_.rows()) != grid_.nx || static_cast<std::size_t>(values_.cols()) != grid_.nt)
      throw InvalidArgument("GridFunction: values shape differs from grid");
    if (!values_.allFinite()) throw InvalidArgument("GridFunction: non-finite values");
  }

  explicit GridFunction(Grid grid)
      : GridFunction(grid, Matrix::Zero(static_cast<Eigen::Index>(grid.nx), static_cast<Eigen::Index>(grid.nt))) {}

  template <class F>
  static GridFunction sample(const Grid& grid, F&& f) {
    Matrix v(static_cast<Eigen::Index>(grid.nx), static_cast<Eigen::Index>(grid.nt));
    for (std::size_t j = 0; j < grid.nt; ++j)
      for (std::size_t i = 0; i < grid.nx; ++i)
        v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(grid.x(i), grid.t(j));
    return GridFunction(grid, std::move(v));
  }

  const Grid& grid() const { return grid_; }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  // Time slices carrying support.
  std::vector<std::size_t> support_slices(double eps = kSupportEps) const {
    std::vector<std::size_t> out;
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (values_.col(j).cwiseAbs().maxCoeff() > eps) out.push_back(static_cast<std::size_t>(j));
    return out;
  }

  bool has_support(double eps = kSupportEps) const { return !support_slices(eps).empty(); }

 private:
  Grid grid_;
  Matrix values_;
};

struct Slice {
  double t;
  double weight;
  Vector values;
};

// Kinematical state as a weighted sum of constant-time slices:
// f(x, t) = sum_s weight_s * values_s(x) * delta(t - t_s) in the quadrature sense.
class KinematicalState {
 public:
  KinematicalState(Grid grid, std::vector<Slice> slices) : grid_(grid), slices_(std::move(slices)) {
    for (const auto& s : slices_)
      if (static_cast<std::size_t>(s.values.size()) != grid_.nx)
        throw InvalidArgument("KinematicalState: slice length differs from grid.nx");
  }

  static KinematicalState on_slice(const Grid& grid, double t, Vector values) {
    return KinematicalState(grid, {Slice{t, 1.0, std::move(values)}});
  }

  // Trapezoid weights in t over the full grid; a function supported on a
  // single slice is read as a delta in t on that slice.
  static KinematicalState from_grid_function(const GridFunction& f) {
    const auto support = f.support_slices();
    if (support.empty()) throw InvalidArgument("KinematicalState: empty support");
    const Grid& g = f.grid();
    std::vector<Slice> slices;
    if (support.size() == 1) {
      slices.push_back({g.t(support[0]), 1.0, f.values().col(static_cast<Eigen::Index>(support[0]))});
    } else {
      for (auto j : support) {
        const double w = (j == 0 || j + 1 == g.nt) ? 0.5 * g.dt() : g.dt();
        slices.push_back({g.t(j), w, f.values().col(static_cast<Eigen::Index>(j))});
      }
    }
    return KinematicalState(g, std::move(slices));
  }

  const Grid& grid() const { return grid_; }
  const std::vector<Slice>& slices() const { return slices_; }
  bool empty() const { return slices_.empty(); }

  double t_first() const {
    double t = slices_.front().t;
    for (const auto& s : slices_) t = std::min(t, s.t);
    return t;
  }
  double t_last() const {
    double t = slices_.front().t;
    for (const auto& s : slices_) t = std::max(t, s.t);
    return t;
  }

  // Kinematical L2 inner product with measure dx dt (slices weighted by w).
  Complex kinematical_inner(const KinematicalState& other) const {
    Complex acc = 0.0;
    for (const auto& a : slices_)
      for (const auto& b : other.slices_)
        if (a.t == b.t) acc += a.weight * a.values.dot(b.values);
    return acc * grid_.dx();
  }

 private:
  Grid grid_;
  std::vector<Slice> slices_;
};

// Physical state on the slice t_out: sum_s w_s U(t_out - t_s) psi_s.
inline Vector project(const KinematicalState& psi, const SpectralPropagator& prop, double t_out) {
  if (psi.empty()) throw InvalidArgument("project: empty support");
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(psi.grid().nx));
  for (const auto& s : psi.slices()) acc += s.weight * prop.evolve(s.values, t_out - s.t);
  return acc;
}

inline Vector project(const GridFunction& psi, const PropagatorKernel& k, double t_out) {
  return project(KinematicalState::from_grid_function(psi), SpectralPropagator(psi.grid(), k), t_out);
}

// <psi|P|phi> = sum_{s,s'} w_s w_s' <psi_s| U(t_s - t_s') |phi_s'>, evaluated by
// projecting both states to a common slice; coincident slices reduce to the
// ordinary L2 product.
inline Complex physical_inner_product(const KinematicalState& psi, const KinematicalState& phi,
                                      const SpectralPropagator& prop) {
  const double t_ref = psi.t_first();
  const Vector a = project(psi, prop, t_ref);
  const Vector b = project(phi, prop, t_ref);
  return a.dot(b) * prop.grid().dx();
}

inline Complex physical_inner_product(const GridFunction& psi, const GridFunction& phi, const PropagatorKernel& k) {
  if (psi.grid().nx != phi.grid().nx || psi.grid().x_min != phi.grid().x_min || psi.grid().x_max != phi.grid().x_max)
    throw InvalidArgument("physical_inner_product: spatial grids differ");
  const SpectralPropagator prop(psi.grid(), k);
  return physical_inner_product(KinematicalState::from_grid_function(psi), KinematicalState::from_grid_function(phi),
                                prop);
}

// Rescales `psi` so that <psi|P|psi> = 1.
inline KinematicalState normalize_physical(const KinematicalState& psi, const SpectralPropagator& prop) {
  const double n2 = physical_inner_product(psi, psi, prop).real();
  if (!(n2 > 0.0)) throw NumericalError("normalize_physical: state has zero physical norm");
  std::vector<Slice> slices = psi.slices();
  for (auto& s : slices) s.values /= std::sqrt(n2);
  return KinematicalState(psi.grid(), std::move(slices));
}

// Direct quadrature of sum_s w_s sum_i dx W(x, t_out; x_i, t_s) psi_s(x_i) with
// the kernel's eta regularization. Intended for cross-checks on small grids.
inline Vector project_direct(const KinematicalState& psi, const PropagatorKernel& k, double t_out,
                             const std::vector<double>& x_out) {
  const Grid& g = psi.grid();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(x_out.size()));
  for (const auto& s : psi.slices()) {
    if (s.t == t_out) throw InvalidArgument("project_direct: output slice coincides with a data slice");
    for (std::size_t o = 0; o < x_out.size(); ++o) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < g.nx; ++i)
        acc += propagate_point(k, x_out[o], t_out, g.x(i), s.t) * s.values(static_cast<Eigen::Index>(i));
      out(static_cast<Eigen::Index>(o)) += s.weight * g.dx() * acc;
    }
  }
  return out;
}

// Localized kinematical Gaussian exp(-(x-x0)^2/a^2 - (t-t0)^2/b^2) / (2 pi a b).
inline GridFunction localized_gaussian(const Grid& grid, double x0, double a, double t0, double b) {
  if (!(a > 0.0)) throw InvalidArgument("localized_gaussian: a must be positive");
  if (!(b > 0.0)) throw InvalidArgument("localized_gaussian: b must be positive");
  return GridFunction::sample(grid, [&](double x, double t) -> Complex {
    const double u = (x - x0) / a, v = (t - t0) / b;
    return std::exp(-u * u - v * v) / (2.0 * std::numbers::pi * a * b);
  });
}

}  // namespace cqi::contspace
