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

// Weakly coupled two-state detector for a free particle and the activation
// probability under the Born, RR (squared region overlap) and CQI rules.
//
// The prepared state is sampled on the periodic grid and expanded in plane
// waves, Psi(x,t) = sum_q c_q exp(i q x - i w_q (t - t0)), w_q = hbar q^2/(2m).
// Integrals of plane waves over the axis-aligned rectangles of R are done in
// closed form, so every quadrature error left is the k-integral of the Born
// double integral (done adaptively) or the finite mode set of the grid.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "cqi/contspace.hpp"
#include "cqi/errors.hpp"
#include "cqi/hilbert.hpp"

namespace cqi::postulates {

using contspace::kI;

struct Rect {
  double x_min = 0.0, x_max = 0.0, t_min = 0.0, t_max = 0.0;

  double width() const { return x_max - x_min; }
  double duration() const { return t_max - t_min; }
  double area() const { return width() * duration(); }
  double x_center() const { return 0.5 * (x_min + x_max); }
  double t_center() const { return 0.5 * (t_min + t_max); }

  // Scaled about its center by `f` in both directions.
  Rect scaled(double f) const {
    const double hw = 0.5 * f * width(), ht = 0.5 * f * duration();
    return {x_center() - hw, x_center() + hw, t_center() - ht, t_center() + ht};
  }

  static Rect square(double x, double t, double side) {
    return {x - 0.5 * side, x + 0.5 * side, t - 0.5 * side, t + 0.5 * side};
  }
};

// Interaction-free readout region. nt == 1 is the constant-time slice t_min;
// otherwise the data is smeared uniformly over nt slices spanning [t_min, t_max]
// with trapezoid weights, so that sum_j w_j g(t_j) = 1.
struct ReadoutRegion {
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t nt = 1;

  static ReadoutRegion slice(double t) { return {t, t, 1}; }

  bool is_slice() const { return nt == 1; }

  void validate() const {
    if (nt == 0) throw ConfigError("readout.nt", "must be at least 1");
    if (nt > 1 && !(t_max > t_min)) throw ConfigError("readout.t_max", "must exceed readout.t_min when smeared");
  }

  // (t_j, quadrature weight w_j, smearing profile g(t_j)).
  struct Node {
    double t, weight, profile;
  };

  std::vector<Node> nodes() const {
    validate();
    if (is_slice()) return {{t_min, 1.0, 1.0}};
    std::vector<Node> out;
    const double h = (t_max - t_min) / static_cast<double>(nt - 1);
    const double g = 1.0 / (t_max - t_min);
    for (std::size_t j = 0; j < nt; ++j) {
      const double w = (j == 0 || j + 1 == nt) ? 0.5 * h : h;
      out.push_back({t_min + static_cast<double>(j) * h, w, g});
    }
    return out;
  }

  bool contains(double t, double tol = 1e-12) const { return t >= t_min - tol && t <= std::max(t_min, t_max) + tol; }
};

struct Tolerances {
  double pert_tol = 0.05;     // bound on alpha |V| duration(R) / (2 hbar)
  double xcheck_tol = 1e-3;   // relative agreement of the two Born routes
  double offdiag_tol = 1e-8;  // residual off-diagonals of rho_A that are zeroed
  double norm_tol = 1e-6;     // physical normalization of the joint readout state
  double tail_tol = 1e-9;     // relative size of the last k-shell in the Born integral
  double w_tol = 1e-3;        // |W(a;b) cross term| / direct terms for two-point regions
};

struct DetectorExperiment {
  contspace::Grid grid;
  contspace::PropagatorKernel kernel;
  Vector psi0;
  double t0 = 0.0;
  std::vector<Rect> region;
  double alpha = 0.1;
  double potential = 1.0;
  ReadoutRegion readout;
  Tolerances tol;

  double region_area() const {
    double a = 0.0;
    for (const auto& r : region) a += r.area();
    return a;
  }
  double region_t_min() const {
    double t = region.front().t_min;
    for (const auto& r : region) t = std::min(t, r.t_min);
    return t;
  }
  double region_t_max() const {
    double t = region.front().t_max;
    for (const auto& r : region) t = std::max(t, r.t_max);
    return t;
  }

  // alpha |V| tau / (2 hbar), the size of the second-order term relative to the first.
  double perturbativity() const {
    return alpha * std::abs(potential) * (region_t_max() - region_t_min()) / (2.0 * kernel.hbar);
  }

  void validate() const {
    kernel.validate();
    if (grid.nx < 2) throw ConfigError("grid.nx", "must be at least 2");
    if (!(grid.x_max > grid.x_min)) throw ConfigError("grid.x_max", "must exceed grid.x_min");
    if (static_cast<std::size_t>(psi0.size()) != grid.nx) throw ConfigError("psi0", "length differs from grid.nx");
    if (!psi0.allFinite()) throw ConfigError("psi0", "non-finite samples");
    if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be nonnegative");
    if (!std::isfinite(potential)) throw ConfigError("potential", "must be finite");
    if (region.empty()) throw ConfigError("region", "must contain at least one rectangle");
    for (std::size_t i = 0; i < region.size(); ++i) {
      const Rect& r = region[i];
      if (!(r.x_max > r.x_min) || !(r.t_max > r.t_min)) throw ConfigError("region", "rectangle has zero measure");
      if (r.x_min < grid.x_min || r.x_max > grid.x_max) throw ConfigError("region", "rectangle leaves the spatial grid");
      if (r.t_min < t0) throw ConfigError("region", "rectangle starts before the preparation time t0");
      for (std::size_t j = 0; j < i; ++j) {
        const Rect& o = region[j];
        if (r.x_min < o.x_max && o.x_min < r.x_max && r.t_min < o.t_max && o.t_min < r.t_max)
          throw ConfigError("region", "rectangles overlap");
      }
    }
    readout.validate();
    if (readout.t_min < region_t_max()) throw ConfigError("readout", "readout region must lie to the future of R");
  }
};

// ---------------------------------------------------------------------------
// Plane-wave representation of the prepared state

class PlaneWaveState {
 public:
  PlaneWaveState(std::vector<double> q, std::vector<Complex> c, double t0, contspace::PropagatorKernel k)
      : q_(std::move(q)), c_(std::move(c)), t0_(t0), kernel_(k) {}

  // Band-limited interpolant of the grid samples; modes below prune * max|c| are dropped.
  static PlaneWaveState from_samples(const contspace::SpectralPropagator& prop, const Vector& psi0, double t0,
                                     double prune = 1e-16) {
    const Vector c = prop.to_modes(psi0);
    const double cmax = c.cwiseAbs().maxCoeff();
    std::vector<double> q;
    std::vector<Complex> cc;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (std::abs(c(i)) > prune * cmax) {
        q.push_back(prop.wavenumbers()(i));
        cc.push_back(c(i));
      }
    }
    return PlaneWaveState(std::move(q), std::move(cc), t0, prop.kernel());
  }

  // Spatially uniform amplitude 1.
  static PlaneWaveState uniform(const contspace::PropagatorKernel& k) { return PlaneWaveState({0.0}, {1.0}, 0.0, k); }

  Complex operator()(double x, double t) const {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i)
      acc += c_[i] * std::exp(kI * (q_[i] * x - kernel_.omega(q_[i]) * (t - t0_)));
    return acc;
  }

  const std::vector<double>& q() const { return q_; }
  const std::vector<Complex>& c() const { return c_; }
  double t0() const { return t0_; }
  const contspace::PropagatorKernel& kernel() const { return kernel_; }
  double q_max() const {
    double m = 0.0;
    for (double v : q_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<double> q_;
  std::vector<Complex> c_;
  double t0_;
  contspace::PropagatorKernel kernel_;
};

namespace detail {

inline double sinc(double z) {
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0);
  }
  return std::sin(z) / z;
}

}  // namespace detail

// F(k) = sum_R int_R dx dt exp(-i k x + i w_k t) Psi(x, t), the overlap of the
// region-restricted state with the plane-wave solution of wavenumber k.
// Stored relative to the phase exp(-i k x_ref + i w_k t_ref) at the center of R.
class RegionTransform {
 public:
  RegionTransform(const PlaneWaveState& psi, std::vector<Rect> rects) : psi_(psi), rects_(std::move(rects)) {
    double x_lo = rects_.front().x_min, x_hi = rects_.front().x_max;
    double t_lo = rects_.front().t_min, t_hi = rects_.front().t_max;
    for (const auto& r : rects_) {
      x_lo = std::min(x_lo, r.x_min);
      x_hi = std::max(x_hi, r.x_max);
      t_lo = std::min(t_lo, r.t_min);
      t_hi = std::max(t_hi, r.t_max);
    }
    x_ref_ = 0.5 * (x_lo + x_hi);
    t_ref_ = 0.5 * (t_lo + t_hi);
    const auto& k = psi_.kernel();
    for (const auto& r : rects_) {
      std::vector<Complex> a(psi_.q().size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double q = psi_.q()[i];
        a[i] = psi_.c()[i] * std::exp(kI * (q * r.x_center() - k.omega(q) * (r.t_center() - psi_.t0()))) * r.area();
      }
      coeff_.push_back(std::move(a));
      spatial_rate_ = std::max(spatial_rate_, std::abs(r.x_center() - x_ref_) + 0.5 * r.width());
      temporal_rate_ = std::max(temporal_rate_, std::abs(r.t_center() - t_ref_) + 0.5 * r.duration());
    }
  }

  // F(k) without the reference phase.
  Complex reduced(double kk) const {
    const auto& k = psi_.kernel();
    const double wk = k.omega(kk);
    Complex total = 0.0;
    for (std::size_t r = 0; r < rects_.size(); ++r) {
      const Rect& R = rects_[r];
      const auto& a = coeff_[r];
      Complex acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double q = psi_.q()[i];
        acc += a[i] * (detail::sinc(0.5 * (q - kk) * R.width()) * detail::sinc(0.5 * (wk - k.omega(q)) * R.duration()));
      }
      total += acc * std::exp(kI * (-kk * (R.x_center() - x_ref_) + wk * (R.t_center() - t_ref_)));
    }
    return total;
  }

  Complex full(double kk) const {
    return reduced(kk) * std::exp(kI * (-kk * x_ref_ + psi_.kernel().omega(kk) * t_ref_));
  }

  // Bound on |d arg F / dk| after removing the reference phase.
  double phase_rate(double kk) const {
    const auto& k = psi_.kernel();
    return spatial_rate_ + std::abs(kk) * k.hbar / k.mass * temporal_rate_;
  }

  const std::vector<Rect>& rects() const { return rects_; }
  const PlaneWaveState& state() const { return psi_; }

  double min_width() const {
    double w = rects_.front().width();
    for (const auto& r : rects_) w = std::min(w, r.width());
    return w;
  }
  double min_duration() const {
    double t = rects_.front().duration();
    for (const auto& r : rects_) t = std::min(t, r.duration());
    return t;
  }

 private:
  PlaneWaveState psi_;
  std::vector<Rect> rects_;
  std::vector<std::vector<Complex>> coeff_;
  double x_ref_ = 0.0, t_ref_ = 0.0;
  double spatial_rate_ = 0.0, temporal_rate_ = 0.0;
};

struct BornIntegral {
  double value = 0.0;  // (1/2pi) int dk |F(k)|^2
  double k_max = 0.0;
  std::size_t panels = 0;
  double last_shell = 0.0;  // relative contribution of the outermost shell
};

// int_R int_R Psi*(x) W(x;x') Psi(x') over the real line, written as
// (1/2pi) int dk |F(k)|^2. Composite 20-point Gauss-Legendre panels sized so the
// phase of F changes by at most `panel_phase` per panel; k-shells double
// outward until the last one contributes below tail_tol.
inline BornIntegral born_integral(const RegionTransform& f, double tail_tol = 1e-9, double panel_phase = 1.5) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const auto& kern = f.state().kernel();
  const double k0 = std::max({10.0, 2.0 * f.state().q_max(), 10.0 / f.min_width(),
                              10.0 * std::sqrt(2.0 * kern.mass / (kern.hbar * f.min_duration()))});
  constexpr double kLimit = 1e7;
  BornIntegral out;
  auto integrate = [&](double a, double b) {
    // a < b, both on the same side of zero
    double acc = 0.0;
    double k = a;
    while (k < b) {
      const double far = std::max(std::abs(k), std::abs(std::min(b, k + 1.0)));
      double h = std::min({1.0, panel_phase / f.phase_rate(far), b - k});
      h = std::min(h, panel_phase / f.phase_rate(std::max(std::abs(k), std::abs(k + h))));
      acc += Gauss::integrate([&](double kk) { return std::norm(f.reduced(kk)); }, k, k + h);
      k += h;
      ++out.panels;
    }
    return acc;
  };
  double total = integrate(-k0, 0.0) + integrate(0.0, k0);
  double lo = k0, hi = 2.0 * k0;
  for (;;) {
    const double shell = integrate(-hi, -lo) + integrate(lo, hi);
    total += shell;
    out.last_shell = total > 0.0 ? shell / total : 0.0;
    out.k_max = hi;
    if (total == 0.0 || shell <= tail_tol * total) break;
    if (hi > kLimit) throw NumericalError("born_integral: k-integral did not converge");
    lo = hi;
    hi *= 2.0;
  }
  out.value = total / (2.0 * std::numbers::pi);
  return out;
}

// ---------------------------------------------------------------------------
// Single-branch quantities

inline void check_perturbative(const DetectorExperiment& e) {
  const double p = e.perturbativity();
  if (p > e.tol.pert_tol)
    throw NumericalError("perturbativity check failed: alpha*|V|*tau/(2*hbar) = " + std::to_string(p) +
                         " exceeds pert_tol = " + std::to_string(e.tol.pert_tol));
}

inline Complex evolved_wavefunction(const DetectorExperiment& e, double x, double t) {
  if (t < e.t0) throw InvalidArgument("evolved_wavefunction: t precedes the preparation time");
  const contspace::SpectralPropagator prop(e.grid, e.kernel);
  return PlaneWaveState::from_samples(prop, e.psi0, e.t0)(x, t);
}

// Fourier coefficients of the first-order |1>-branch on the grid, phi(x, t) =
// sum_k d_k exp(i k x - i w_k t), valid for every t after R.
class FirstOrderSolution {
 public:
  explicit FirstOrderSolution(const DetectorExperiment& e)
      : prop_(e.grid, e.kernel),
        transform_(PlaneWaveState::from_samples(prop_, e.psi0, e.t0), e.region),
        t_after_(e.region_t_max()) {
    const Complex pref = e.alpha * e.potential / (kI * e.kernel.hbar) / e.grid.length();
    const auto& k = prop_.wavenumbers();
    d_.resize(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) d_(i) = pref * transform_.full(k(i));
  }

  // phi on the grid at time t >= end of R.
  Vector on_slice(double t) const {
    if (t < t_after_) throw InvalidArgument("first_order_amplitude: readout time lies inside R");
    Vector c = d_;
    const auto& k = prop_.wavenumbers();
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-kI * prop_.kernel().omega(k(i)) * t);
    return prop_.from_modes(c);
  }

  Complex at(double x, double t) const {
    if (t < t_after_) throw InvalidArgument("first_order_amplitude: readout time lies inside R");
    const auto& k = prop_.wavenumbers();
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < d_.size(); ++i) acc += d_(i) * std::exp(kI * (k(i) * x - prop_.kernel().omega(k(i)) * t));
    return acc;
  }

  // ||phi||^2 = L sum |d_k|^2.
  double norm2_from_modes() const { return prop_.grid().length() * d_.squaredNorm(); }

  const contspace::SpectralPropagator& propagator() const { return prop_; }
  const RegionTransform& transform() const { return transform_; }

 private:
  contspace::SpectralPropagator prop_;
  RegionTransform transform_;
  double t_after_;
  Vector d_;
};

inline Complex first_order_amplitude(const DetectorExperiment& e, double x, double t) {
  e.validate();
  return FirstOrderSolution(e).at(x, t);
}

struct BornResult {
  double p_born = 0.0;       // double-R integral route
  double p_late_slice = 0.0;  // int dx |phi(x, T)|^2 on the grid
  double rel_diff = 0.0;
  double perturbativity = 0.0;
  BornIntegral integral;
};

inline double born_prefactor(const DetectorExperiment& e) {
  const double g = e.alpha * e.potential / e.kernel.hbar;
  return g * g;
}

inline BornResult born_probability(const DetectorExperiment& e) {
  e.validate();
  check_perturbative(e);
  const FirstOrderSolution sol(e);
  BornResult r;
  r.perturbativity = e.perturbativity();
  r.integral = born_integral(sol.transform(), e.tol.tail_tol);
  r.p_born = born_prefactor(e) * r.integral.value;
  const Vector phi = sol.on_slice(e.readout.t_min);
  r.p_late_slice = e.grid.dx() * phi.squaredNorm();
  r.rel_diff = r.p_born > 0.0 ? r.p_late_slice / r.p_born - 1.0 : r.p_late_slice;
  if (std::abs(r.rel_diff) > e.tol.xcheck_tol)
    throw NumericalError("born_probability: late-slice and double-integral routes differ by " +
                         std::to_string(r.rel_diff) + " (xcheck_tol " + std::to_string(e.tol.xcheck_tol) + ")");
  return r;
}

// |int dx dt R*(x,t) Psi(x,t)|^2 with R = 1/sqrt(|R|) on the region.
inline double rr_probability(const DetectorExperiment& e) {
  e.validate();
  const double area = e.region_area();
  if (!(area > 0.0)) throw InvalidArgument("rr_probability: zero-measure region");
  const contspace::SpectralPropagator prop(e.grid, e.kernel);
  const RegionTransform f(PlaneWaveState::from_samples(prop, e.psi0, e.t0), e.region);
  return std::norm(f.full(0.0)) / area;
}

// Born double integral of the uniform amplitude over `rects` (no coupling factor).
inline double apparatus_gain(const std::vector<Rect>& rects, const contspace::PropagatorKernel& k,
                             double tail_tol = 1e-9) {
  return born_integral(RegionTransform(PlaneWaveState::uniform(k), rects), tail_tol).value;
}

// ---------------------------------------------------------------------------
// Covariant partial trace

// Kinematical state on M_Q times finite factors, sampled on constant-time slices.
// values[s][m] is the x-profile for finite basis index m (row-major over finite_dims).
struct JointKinematicalState {
  contspace::Grid grid;
  Dims finite_dims;
  std::vector<double> times;
  std::vector<double> weights;
  std::vector<std::vector<Vector>> values;

  std::size_t finite_dim() const { return hilbert::product(finite_dims); }

  // Physical joint state given at t_phys, laid out on the region S: each slice
  // carries the evolved profile times the smearing profile of S.
  static JointKinematicalState from_physical(const contspace::SpectralPropagator& prop, const Dims& finite_dims,
                                             const std::vector<Vector>& components, double t_phys,
                                             const ReadoutRegion& S) {
    JointKinematicalState j{prop.grid(), finite_dims, {}, {}, {}};
    if (components.size() != j.finite_dim())
      throw InvalidArgument("JointKinematicalState: component count differs from finite dimension");
    for (const auto& node : S.nodes()) {
      j.times.push_back(node.t);
      j.weights.push_back(node.weight);
      std::vector<Vector> slice;
      for (const auto& c : components) slice.push_back(node.profile * prop.evolve(c, node.t - t_phys));
      j.values.push_back(std::move(slice));
    }
    return j;
  }
};

struct CovariantReducedState {
  hilbert::DensityOp rho_A{Matrix::Identity(1, 1)};
  ReadoutRegion region_S;
  std::size_t schmidt_rank = 0;
  std::vector<double> schmidt_coefficients;
  double trace_error = 0.0;
  double max_offdiag_zeroed = 0.0;
};

// rho_A = sum_ij l_i l_j <phi_j|P|phi_i> |a_i><a_j| from the Schmidt decomposition
// of the kinematical state across (Q, traced finite factors) | (kept factors).
// P acts as the physical projector on Q and as the identity on the traced
// finite factors (the joint propagator factorizes on S).
inline CovariantReducedState covariant_partial_trace(const JointKinematicalState& phi,
                                                     const contspace::SpectralPropagator& prop,
                                                     const ReadoutRegion& S, const std::vector<std::size_t>& keep,
                                                     double norm_tol = 1e-6) {
  const std::size_t nf = phi.finite_dim();
  hilbert::detail::check_factor_set(keep, phi.finite_dims.size(), "covariant_partial_trace");
  if (phi.times.empty()) throw InvalidArgument("covariant_partial_trace: empty state");
  if (phi.weights.size() != phi.times.size() || phi.values.size() != phi.times.size())
    throw InvalidArgument("covariant_partial_trace: inconsistent slice data");
  for (std::size_t s = 0; s < phi.times.size(); ++s) {
    if (phi.values[s].size() != nf) throw InvalidArgument("covariant_partial_trace: slice has wrong component count");
    double mag = 0.0;
    for (const auto& v : phi.values[s]) mag = std::max(mag, v.cwiseAbs().maxCoeff());
    if (mag > contspace::GridFunction::kSupportEps && !S.contains(phi.times[s]))
      throw InvalidArgument("covariant_partial_trace: support leaks outside S");
  }
  const auto split = hilbert::detail::split_factors(phi.finite_dims, keep);
  const std::size_t n_keep = hilbert::product(split.keep_dims);
  const std::size_t n_rest = hilbert::product(split.rest_dims);
  const std::size_t nx = phi.grid.nx;
  const std::size_t n_slices = phi.times.size();
  const double dx = phi.grid.dx();

  // Rows (slice, rest, x) scaled by the square root of the kinematical measure.
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n_slices * n_rest * nx), static_cast<Eigen::Index>(n_keep));
  for (std::size_t s = 0; s < n_slices; ++s) {
    const double root = std::sqrt(phi.weights[s] * dx);
    for (std::size_t f = 0; f < nf; ++f) {
      const auto row0 = static_cast<Eigen::Index>((s * n_rest + split.rest_index[f]) * nx);
      m.col(static_cast<Eigen::Index>(split.keep_index[f])).segment(row0, static_cast<Eigen::Index>(nx)) =
          root * phi.values[s][f];
    }
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& lambda = svd.singularValues();
  CovariantReducedState out;
  out.region_S = S;
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(lambda.size()) && lambda(static_cast<Eigen::Index>(rank)) > 1e-13 * lambda(0))
    ++rank;
  if (rank == 0) throw NumericalError("covariant_partial_trace: state vanishes on S");
  out.schmidt_rank = rank;
  for (std::size_t i = 0; i < rank; ++i) out.schmidt_coefficients.push_back(lambda(static_cast<Eigen::Index>(i)));

  // Q-side Schmidt functions as kinematical states, one per traced finite index.
  std::vector<std::vector<contspace::KinematicalState>> left(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    for (std::size_t r = 0; r < n_rest; ++r) {
      std::vector<contspace::Slice> slices;
      for (std::size_t s = 0; s < n_slices; ++s) {
        const auto row0 = static_cast<Eigen::Index>((s * n_rest + r) * nx);
        Vector v = svd.matrixU().col(static_cast<Eigen::Index>(i)).segment(row0, static_cast<Eigen::Index>(nx)) /
                   std::sqrt(phi.weights[s] * dx);
        slices.push_back({phi.times[s], phi.weights[s], std::move(v)});
      }
      left[i].emplace_back(phi.grid, std::move(slices));
    }
  }
  Matrix gram(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(rank));
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < rank; ++j) {
      Complex g = 0.0;
      for (std::size_t r = 0; r < n_rest; ++r) g += contspace::physical_inner_product(left[j][r], left[i][r], prop);
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = g;
    }
  Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(n_keep), static_cast<Eigen::Index>(n_keep));
  for (std::size_t i = 0; i < rank; ++i) {
    const Vector a_i = svd.matrixV().col(static_cast<Eigen::Index>(i)).conjugate();
    for (std::size_t j = 0; j < rank; ++j) {
      const Vector a_j = svd.matrixV().col(static_cast<Eigen::Index>(j)).conjugate();
      rho += lambda(static_cast<Eigen::Index>(i)) * lambda(static_cast<Eigen::Index>(j)) *
             gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * a_i * a_j.adjoint();
    }
  }
  out.trace_error = std::abs(rho.trace() - Complex(1.0));
  if (out.trace_error > norm_tol)
    throw NumericalError("covariant_partial_trace: joint state is not normalized under the physical inner product");
  out.rho_A = hilbert::DensityOp(0.5 * (rho + rho.adjoint()), split.keep_dims);
  return out;
}

// ---------------------------------------------------------------------------
// CQI probability

struct CqiResult {
  double p_cqi = 0.0;          // from rho_A of the covariant partial trace
  double p_norm_route = 0.0;   // physical norm of the |1>-branch, computed from its modes
  double p_born = 0.0;         // double-R integral route
  double p_late_slice = 0.0;
  double trace_deficit = 0.0;  // tr(rho_A) - 1 with the unscaled no-click branch
  double max_offdiag = 0.0;
  CovariantReducedState reduced;
  BornResult born;
};

// The joint state on S lives on Q x D x A (detector D and observer A both two-
// level, reliably correlated): sqrt(1 - P) psi |0,0> + phi |1,1>, where the
// no-click branch carries the norm removed by the second-order term.
inline CqiResult cqi_probability(const DetectorExperiment& e) {
  e.validate();
  check_perturbative(e);
  CqiResult r;
  r.born = born_probability(e);
  r.p_born = r.born.p_born;
  r.p_late_slice = r.born.p_late_slice;

  const FirstOrderSolution sol(e);
  const auto& prop = sol.propagator();
  const double t_ref = e.readout.t_min;
  const Vector phi = sol.on_slice(t_ref);
  const Vector psi = prop.evolve(e.psi0, t_ref - e.t0);
  r.p_norm_route = sol.norm2_from_modes();

  const double dx = e.grid.dx();
  const double p_phi = dx * phi.squaredNorm();
  const double psi_norm2 = dx * psi.squaredNorm();
  r.trace_deficit = psi_norm2 + p_phi - 1.0;
  if (!(p_phi < 1.0)) throw NumericalError("cqi_probability: first-order branch norm exceeds 1");
  const Vector psi_scaled = psi * std::sqrt((1.0 - p_phi) / psi_norm2);

  // finite factors (D, A), row-major: index 0 = |0,0>, 3 = |1,1>
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(e.grid.nx));
  const auto joint =
      JointKinematicalState::from_physical(prop, Dims{2, 2}, {psi_scaled, zero, zero, phi}, t_ref, e.readout);
  r.reduced = covariant_partial_trace(joint, prop, e.readout, {1}, e.tol.norm_tol);
  Matrix rho = r.reduced.rho_A.matrix();
  r.max_offdiag = std::abs(rho(0, 1));
  if (r.max_offdiag > e.tol.offdiag_tol)
    throw InvariantError("cqi_probability: observer state has off-diagonal terms above offdiag_tol");
  rho(0, 1) = rho(1, 0) = 0.0;
  r.reduced.max_offdiag_zeroed = r.max_offdiag;
  r.reduced.rho_A = hilbert::DensityOp(rho, Dims{2});
  r.p_cqi = hilbert::outcome_distribution(r.reduced.rho_A)[1];
  return r;
}

// ---------------------------------------------------------------------------
// Region comparisons

struct TwoPointResult {
  double p_rr = 0.0;
  double p_born = 0.0;
  double p_born_calibrated = 0.0;  // apparatus constant fixed on the single-point regions
  double calibration = 0.0;
  double cross_measured = 0.0;    // p_rr - p_born_calibrated
  double cross_predicted = 0.0;   // 2 Re[A_a* A_b] / |R|, A the cell-integrated amplitude
  double cross_point_values = 0.0;  // 2 Re[Psi*(a) Psi(b)] |c|^2 / |R| from the cell centers
  double cross_rel_error = 0.0;
  double w_residual = 0.0;  // Born cross term over the direct terms
  double ratio() const { return p_rr / p_born_calibrated; }
};

// R = two disjoint cells a, b. The Born cross term between the cells must be
// negligible (W(a;b) ~ 0) before the comparison is made.
inline TwoPointResult two_point_comparison(const DetectorExperiment& e) {
  e.validate();
  if (e.region.size() != 2) throw ConfigError("region", "two-point comparison needs exactly two cells");
  check_perturbative(e);
  const contspace::SpectralPropagator prop(e.grid, e.kernel);
  const PlaneWaveState psi = PlaneWaveState::from_samples(prop, e.psi0, e.t0);
  const RegionTransform fa(psi, {e.region[0]}), fb(psi, {e.region[1]}), fab(psi, e.region);
  const double g = born_prefactor(e);
  const double pa = g * born_integral(fa, e.tol.tail_tol).value;
  const double pb = g * born_integral(fb, e.tol.tail_tol).value;
  TwoPointResult r;
  r.p_born = g * born_integral(fab, e.tol.tail_tol).value;
  r.w_residual = (r.p_born - pa - pb) / (pa + pb);
  if (std::abs(r.w_residual) > e.tol.w_tol)
    throw NumericalError("two_point_comparison: W(a;b) cross term " + std::to_string(r.w_residual) +
                         " exceeds w_tol; move the points apart");
  const Complex amp_a = fa.full(0.0), amp_b = fb.full(0.0);
  const double area = e.region_area();
  r.p_rr = std::norm(amp_a + amp_b) / area;
  r.calibration = (std::norm(amp_a) + std::norm(amp_b)) / area / (pa + pb);
  r.p_born_calibrated = r.calibration * r.p_born;
  r.cross_measured = r.p_rr - r.p_born_calibrated;
  r.cross_predicted = 2.0 * (std::conj(amp_a) * amp_b).real() / area;
  const Rect& ca = e.region[0];
  const Rect& cb = e.region[1];
  r.cross_point_values = 2.0 *
                         (std::conj(psi(ca.x_center(), ca.t_center())) * psi(cb.x_center(), cb.t_center())).real() *
                         ca.area() * cb.area() / area;
  r.cross_rel_error = r.cross_measured / r.cross_predicted - 1.0;
  return r;
}

struct ShrinkStep {
  double scale = 0.0;
  Rect region;
  double p_rr = 0.0;
  double p_born = 0.0;
  double gain = 0.0;   // apparatus gain of the region
  double ratio = 0.0;  // p_rr over the gain-normalized Born probability
};

// Shrinks the single-rectangle region about its center by `factor` per step.
// The Born probability is normalized by the apparatus gain G(R) of the region,
// P_norm = P_Born hbar^2 |R| / (alpha^2 V^2 G(R)), so the ratio tends to 1.
inline std::vector<ShrinkStep> shrinking_sequence(const DetectorExperiment& e, std::size_t steps = 5,
                                                  double factor = 0.5) {
  e.validate();
  if (e.region.size() != 1) throw ConfigError("region", "shrinking sequence needs a single rectangle");
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("shrink_factor", "must lie in (0, 1)");
  const contspace::SpectralPropagator prop(e.grid, e.kernel);
  const PlaneWaveState psi = PlaneWaveState::from_samples(prop, e.psi0, e.t0);
  std::vector<ShrinkStep> out;
  double scale = 1.0;
  for (std::size_t s = 0; s < steps; ++s, scale *= factor) {
    ShrinkStep st;
    st.scale = scale;
    st.region = e.region[0].scaled(scale);
    const RegionTransform f(psi, {st.region});
    const double area = st.region.area();
    const double integral = born_integral(f, e.tol.tail_tol).value;
    st.p_born = born_prefactor(e) * integral;
    st.p_rr = std::norm(f.full(0.0)) / area;
    st.gain = apparatus_gain({st.region}, e.kernel, e.tol.tail_tol);
    st.ratio = st.p_rr * st.gain / (integral * area);
    out.push_back(st);
  }
  return out;
}

}  // namespace cqi::postulates
