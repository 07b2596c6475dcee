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

// Finite-dimensional Hilbert-space algebra: kets and density operators with
// tensor-factor structure, partial traces, Schmidt decomposition, entropies
// and extraction of an observer's preferred (diagonal) basis.
//
// Tensor ordering is row-major: for factors (d0, d1, ..., dn) the flat index
// of (i0, i1, ..., in) is ((i0 * d1 + i1) * d2 + i2) ... so factor 0 is the
// most significant digit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqi/errors.hpp"

namespace cqi {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using Dims = std::vector<std::size_t>;

namespace hilbert {

struct Tolerances {
  double norm_tol = 1e-12;
  double herm_tol = 1e-10;
  double trace_tol = 1e-10;
  double psd_tol = 1e-10;
  double degeneracy_tol = 1e-9;
  double recon_tol = 1e-10;
};

inline std::size_t product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace detail {

inline void check_dims(const Dims& dims, std::size_t size, const char* what) {
  if (dims.empty()) throw InvalidArgument(std::string(what) + ": no tensor factors");
  for (auto d : dims)
    if (d == 0) throw InvalidArgument(std::string(what) + ": zero-dimensional factor");
  if (product(dims) != size)
    throw InvalidArgument(std::string(what) + ": factor dimensions do not match size " +
                          std::to_string(size));
}

// Digits of a flat index in the mixed radix given by `dims`.
inline std::vector<std::size_t> unflatten(std::size_t index, const Dims& dims) {
  std::vector<std::size_t> digits(dims.size());
  for (std::size_t f = dims.size(); f-- > 0;) {
    digits[f] = index % dims[f];
    index /= dims[f];
  }
  return digits;
}

inline std::size_t flatten(std::span<const std::size_t> digits, const Dims& dims) {
  std::size_t index = 0;
  for (std::size_t f = 0; f < dims.size(); ++f) index = index * dims[f] + digits[f];
  return index;
}

inline void check_factor_set(const std::vector<std::size_t>& factors, std::size_t n,
                             const char* what) {
  if (factors.empty()) throw InvalidArgument(std::string(what) + ": empty factor set");
  std::vector<bool> seen(n, false);
  for (auto f : factors) {
    if (f >= n)
      throw InvalidArgument(std::string(what) + ": invalid factor index " + std::to_string(f));
    if (seen[f])
      throw InvalidArgument(std::string(what) + ": repeated factor index " + std::to_string(f));
    seen[f] = true;
  }
}

// Splits every flat index into (index over `keep` factors, index over the rest),
// both in ascending factor order.
struct Split {
  Dims keep_dims;
  Dims rest_dims;
  std::vector<std::size_t> keep_index;
  std::vector<std::size_t> rest_index;
};

inline Split split_factors(const Dims& dims, std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  Split s;
  std::vector<bool> is_kept(dims.size(), false);
  for (auto f : keep) is_kept[f] = true;
  for (std::size_t f = 0; f < dims.size(); ++f)
    (is_kept[f] ? s.keep_dims : s.rest_dims).push_back(dims[f]);
  const std::size_t total = product(dims);
  s.keep_index.resize(total);
  s.rest_index.resize(total);
  std::vector<std::size_t> digits(dims.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t k = 0, r = 0;
    for (std::size_t f = 0; f < dims.size(); ++f) {
      if (is_kept[f])
        k = k * dims[f] + digits[f];
      else
        r = r * dims[f] + digits[f];
    }
    s.keep_index[n] = k;
    s.rest_index[n] = r;
    for (std::size_t f = dims.size(); f-- > 0;) {
      if (++digits[f] < dims[f]) break;
      digits[f] = 0;
    }
  }
  if (s.rest_dims.empty()) s.rest_dims.push_back(1);
  return s;
}

}  // namespace detail

// Pure state with tensor-factor structure.
class Ket {
 public:
  Ket(Vector amplitudes, Dims factor_dims)
      : amplitudes_(std::move(amplitudes)), dims_(std::move(factor_dims)) {
    detail::check_dims(dims_, static_cast<std::size_t>(amplitudes_.size()), "Ket");
  }

  explicit Ket(Vector amplitudes)
      : Ket(amplitudes, Dims{static_cast<std::size_t>(amplitudes.size())}) {}

  // Computational basis state |i0, i1, ...>.
  static Ket basis(const Dims& dims, std::span<const std::size_t> digits) {
    if (digits.size() != dims.size()) throw InvalidArgument("Ket::basis: digit count mismatch");
    for (std::size_t f = 0; f < dims.size(); ++f)
      if (digits[f] >= dims[f]) throw InvalidArgument("Ket::basis: digit out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(product(dims)));
    v(static_cast<Eigen::Index>(detail::flatten(digits, dims))) = 1.0;
    return Ket(std::move(v), dims);
  }

  static Ket basis(const Dims& dims, std::initializer_list<std::size_t> digits) {
    std::vector<std::size_t> d(digits);
    return basis(dims, std::span<const std::size_t>(d));
  }

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  const Dims& factor_dims() const noexcept { return dims_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  std::size_t num_factors() const noexcept { return dims_.size(); }
  Complex operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amplitudes_.norm(); }
  bool is_normalized(double tol = Tolerances{}.norm_tol) const {
    return std::abs(norm() - 1.0) <= tol;
  }
  Ket normalized() const {
    const double n = norm();
    if (n == 0.0) throw InvalidArgument("Ket::normalized: zero vector");
    return Ket(amplitudes_ / n, dims_);
  }

 private:
  Vector amplitudes_;
  Dims dims_;
};

// Density operator with tensor-factor structure. Validity (Hermitian, unit
// trace, positive semidefinite) is checked by `validate`, not on construction,
// so unnormalized intermediate operators can be represented.
class DensityOp {
 public:
  DensityOp(Matrix matrix, Dims factor_dims)
      : matrix_(std::move(matrix)), dims_(std::move(factor_dims)) {
    if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("DensityOp: matrix not square");
    detail::check_dims(dims_, static_cast<std::size_t>(matrix_.rows()), "DensityOp");
  }

  explicit DensityOp(Matrix matrix)
      : DensityOp(matrix, Dims{static_cast<std::size_t>(matrix.rows())}) {}

  static DensityOp pure(const Ket& psi) {
    return DensityOp(psi.amplitudes() * psi.amplitudes().adjoint(), psi.factor_dims());
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const Dims& factor_dims() const noexcept { return dims_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t num_factors() const noexcept { return dims_.size(); }

  Complex trace() const { return matrix_.trace(); }
  double hermiticity_error() const { return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff(); }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  bool is_valid(const Tolerances& tol = {}) const {
    if (hermiticity_error() > tol.herm_tol) return false;
    if (std::abs(trace() - Complex(1.0)) > tol.trace_tol) return false;
    return eigenvalues().minCoeff() >= -tol.psd_tol;
  }

  void validate(const Tolerances& tol = {}) const {
    if (hermiticity_error() > tol.herm_tol) throw InvalidArgument("DensityOp: not Hermitian");
    if (std::abs(trace() - Complex(1.0)) > tol.trace_tol)
      throw InvalidArgument("DensityOp: trace differs from 1");
    if (eigenvalues().minCoeff() < -tol.psd_tol)
      throw InvalidArgument("DensityOp: negative eigenvalue");
  }

  Matrix hermitian_part() const { return 0.5 * (matrix_ + matrix_.adjoint()); }

 private:
  Matrix matrix_;
  Dims dims_;
};

struct ProbDist {
  std::vector<double> probs;
  std::vector<std::string> labels;

  double total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

  bool is_valid(double tol = 1e-10) const {
    if (probs.size() != labels.size()) return false;
    for (double p : probs)
      if (p < -tol || p > 1.0 + tol) return false;
    return std::abs(total() - 1.0) <= tol;
  }

  // Probability of the outcome carrying `label`; zero when absent.
  double at(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return probs[i];
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Tensor structure

inline Ket tensor(const Ket& a, const Ket& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  Vector v(na * nb);
  for (Eigen::Index i = 0; i < na; ++i) v.segment(i * nb, nb) = a.amplitudes()(i) * b.amplitudes();
  Dims dims = a.factor_dims();
  dims.insert(dims.end(), b.factor_dims().begin(), b.factor_dims().end());
  return Ket(std::move(v), std::move(dims));
}

inline DensityOp tensor(const DensityOp& a, const DensityOp& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  Matrix m(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) m.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
  Dims dims = a.factor_dims();
  dims.insert(dims.end(), b.factor_dims().begin(), b.factor_dims().end());
  return DensityOp(std::move(m), std::move(dims));
}

// Applies `op` (d x d) to tensor factor `factor` of `psi`.
inline Ket apply_on_factor(const Ket& psi, const Matrix& op, std::size_t factor) {
  const Dims& dims = psi.factor_dims();
  if (factor >= dims.size()) throw InvalidArgument("apply_on_factor: invalid factor index");
  const auto d = static_cast<Eigen::Index>(dims[factor]);
  if (op.rows() != d || op.cols() != d)
    throw InvalidArgument("apply_on_factor: operator dimension mismatch");
  std::size_t inner = 1;
  for (std::size_t f = factor + 1; f < dims.size(); ++f) inner *= dims[f];
  const std::size_t outer = psi.dim() / (inner * dims[factor]);
  Vector out(psi.amplitudes().size());
  const Vector& in = psi.amplitudes();
  Vector slice(d);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * dims[factor] * inner + i;
      for (Eigen::Index k = 0; k < d; ++k) slice(k) = in(static_cast<Eigen::Index>(base + k * inner));
      const Vector r = op * slice;
      for (Eigen::Index k = 0; k < d; ++k) out(static_cast<Eigen::Index>(base + k * inner)) = r(k);
    }
  }
  return Ket(std::move(out), dims);
}

// Generalized CNOT: |c>|t> -> |c>|t + c mod d_t>. Requires d_control <= d_target.
// With a fresh target in |0> this copies the control's computational value.
inline Ket controlled_add(const Ket& psi, std::size_t control, std::size_t target) {
  const Dims& dims = psi.factor_dims();
  if (control >= dims.size() || target >= dims.size() || control == target)
    throw InvalidArgument("controlled_add: invalid factor indices");
  Vector out(psi.amplitudes().size());
  std::vector<std::size_t> digits;
  for (std::size_t n = 0; n < psi.dim(); ++n) {
    digits = detail::unflatten(n, dims);
    digits[target] = (digits[target] + digits[control]) % dims[target];
    out(static_cast<Eigen::Index>(detail::flatten(digits, dims))) =
        psi.amplitudes()(static_cast<Eigen::Index>(n));
  }
  return Ket(std::move(out), dims);
}

// Inverse of controlled_add: |c>|t> -> |c>|t - c mod d_t>.
inline Ket controlled_subtract(const Ket& psi, std::size_t control, std::size_t target) {
  const Dims& dims = psi.factor_dims();
  if (control >= dims.size() || target >= dims.size() || control == target)
    throw InvalidArgument("controlled_subtract: invalid factor indices");
  Vector out(psi.amplitudes().size());
  std::vector<std::size_t> digits;
  for (std::size_t n = 0; n < psi.dim(); ++n) {
    digits = detail::unflatten(n, dims);
    const std::size_t dt = dims[target];
    digits[target] = (digits[target] + dt - digits[control] % dt) % dt;
    out(static_cast<Eigen::Index>(detail::flatten(digits, dims))) =
        psi.amplitudes()(static_cast<Eigen::Index>(n));
  }
  return Ket(std::move(out), dims);
}

// ---------------------------------------------------------------------------
// Partial trace

inline DensityOp partial_trace(const DensityOp& rho, const std::vector<std::size_t>& keep) {
  detail::check_factor_set(keep, rho.num_factors(), "partial_trace");
  const auto split = detail::split_factors(rho.factor_dims(), keep);
  const std::size_t nk = product(split.keep_dims);
  const std::size_t nr = product(split.rest_dims);
  // members[r] lists the full indices sharing traced index r, ordered by kept index.
  std::vector<std::vector<std::size_t>> members(nr, std::vector<std::size_t>(nk));
  for (std::size_t n = 0; n < rho.dim(); ++n) members[split.rest_index[n]][split.keep_index[n]] = n;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
  const Matrix& m = rho.matrix();
  for (const auto& group : members)
    for (std::size_t a = 0; a < nk; ++a)
      for (std::size_t b = 0; b < nk; ++b)
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            m(static_cast<Eigen::Index>(group[a]), static_cast<Eigen::Index>(group[b]));
  return DensityOp(std::move(out), split.keep_dims);
}

namespace detail {

// Amplitudes of `psi` as a (kept x rest) matrix.
inline Matrix bipartite_matrix(const Ket& psi, const std::vector<std::size_t>& keep, Split& split) {
  split = split_factors(psi.factor_dims(), keep);
  Matrix m(static_cast<Eigen::Index>(product(split.keep_dims)),
           static_cast<Eigen::Index>(product(split.rest_dims)));
  for (std::size_t n = 0; n < psi.dim(); ++n)
    m(static_cast<Eigen::Index>(split.keep_index[n]), static_cast<Eigen::Index>(split.rest_index[n])) =
        psi.amplitudes()(static_cast<Eigen::Index>(n));
  return m;
}

}  // namespace detail

// Reduced state of a pure state without forming the full density matrix.
inline DensityOp reduced_state(const Ket& psi, const std::vector<std::size_t>& keep) {
  detail::check_factor_set(keep, psi.num_factors(), "reduced_state");
  detail::Split split;
  const Matrix m = detail::bipartite_matrix(psi, keep, split);
  return DensityOp(m * m.adjoint(), split.keep_dims);
}

// ---------------------------------------------------------------------------
// Schmidt decomposition

struct SchmidtTerm {
  double coefficient;
  Ket left;
  Ket right;
};

// psi = sum_i coefficient_i |left_i>|right_i>, where `left` spans the factors in
// `cut` (ascending order) and `right` the remaining factors. Terms with
// coefficient below rank_tol * largest are dropped.
inline std::vector<SchmidtTerm> schmidt_decompose(const Ket& psi, const std::vector<std::size_t>& cut,
                                                  const Tolerances& tol = {},
                                                  double rank_tol = 1e-13) {
  detail::check_factor_set(cut, psi.num_factors(), "schmidt_decompose");
  if (cut.size() == psi.num_factors())
    throw InvalidArgument("schmidt_decompose: bipartition leaves the right side empty");
  if (!psi.is_normalized(1e-9)) throw InvalidArgument("schmidt_decompose: state not normalized");
  detail::Split split;
  const Matrix m = detail::bipartite_matrix(psi, cut, split);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  std::vector<SchmidtTerm> terms;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= rank_tol * s(0)) break;
    terms.push_back({s(i), Ket(svd.matrixU().col(i), split.keep_dims),
                     Ket(svd.matrixV().col(i).conjugate(), split.rest_dims)});
  }
  Matrix recon = Matrix::Zero(m.rows(), m.cols());
  for (const auto& t : terms)
    recon += t.coefficient * t.left.amplitudes() * t.right.amplitudes().transpose();
  if ((recon - m).cwiseAbs().maxCoeff() > tol.recon_tol)
    throw InvariantError("schmidt_decompose: reconstruction error exceeds tolerance");
  return terms;
}

// ---------------------------------------------------------------------------
// Entropies

namespace detail {

inline double shannon_bits(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s -= p(i) * std::log2(p(i));
  return s;
}

}  // namespace detail

// -sum lambda log2 lambda over the spectrum, with 0 log 0 := 0.
inline double von_neumann_entropy(const DensityOp& rho) {
  return detail::shannon_bits(rho.eigenvalues());
}

// Entropy of |psi><psi| from its only nonzero eigenvalue <psi|psi>, without
// forming the dense operator.
inline double von_neumann_entropy(const Ket& psi) {
  return detail::shannon_bits(Eigen::VectorXd::Constant(1, psi.amplitudes().squaredNorm()));
}

inline double shannon_entropy(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs)
    if (p > 0.0) s -= p * std::log2(p);
  return s;
}

// S(A|B) = S(AB) - S(B), with B the factors listed in `conditioning`.
inline double conditional_entropy(const DensityOp& rho_ab, const std::vector<std::size_t>& conditioning) {
  return von_neumann_entropy(rho_ab) - von_neumann_entropy(partial_trace(rho_ab, conditioning));
}

inline double mutual_information(const DensityOp& rho_ab, const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b) {
  return von_neumann_entropy(partial_trace(rho_ab, a)) + von_neumann_entropy(partial_trace(rho_ab, b)) -
         von_neumann_entropy(rho_ab);
}

// (1/2) || rho - sigma ||_1
inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
  const Matrix diff = rho - sigma;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DensityOp& rho, const DensityOp& sigma) {
  if (rho.dim() != sigma.dim()) throw InvalidArgument("trace_distance: dimension mismatch");
  return trace_distance(rho.matrix(), sigma.matrix());
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// Preferred basis

struct PreferredBasis {
  ProbDist distribution;           // eigenvalues, descending
  Matrix basis;                    // column k is the eigenvector of distribution.probs[k]
  std::vector<std::size_t> outcome;  // dominant computational index of each column
  bool degenerate = false;
};

namespace detail {

// First component with modulus above `eps` made real and positive.
inline void fix_phase(Eigen::Ref<Vector> v, double eps = 1e-12) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > eps) {
      v *= std::conj(v(i)) / std::abs(v(i));
      return;
    }
  }
}

// Deterministic orthonormal basis of span(cols): Gram-Schmidt over the projected
// computational basis vectors, taken in index order.
inline Matrix canonical_subspace_basis(const Matrix& cols) {
  const Matrix proj = cols * cols.adjoint();
  const Eigen::Index n = cols.rows();
  const Eigen::Index k = cols.cols();
  Matrix out(n, k);
  Eigen::Index found = 0;
  for (Eigen::Index e = 0; e < n && found < k; ++e) {
    Vector v = proj.col(e);
    for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
    for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
    const double nv = v.norm();
    if (nv > 1e-6) out.col(found++) = v / nv;
  }
  if (found < k) throw InvariantError("canonical_subspace_basis: rank deficiency");
  return out;
}

}  // namespace detail

// Eigendecomposition of rho with eigenvalues sorted descending. Exact or
// near-exact degeneracies are flagged and resolved deterministically.
inline PreferredBasis preferred_basis(const DensityOp& rho, const Tolerances& tol = {}) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.hermitian_part());
  const Eigen::Index n = es.eigenvalues().size();
  Eigen::VectorXd vals(n);
  Matrix vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    vals(i) = es.eigenvalues()(n - 1 - i);
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  PreferredBasis out;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && vals(end - 1) - vals(end) < tol.degeneracy_tol) ++end;
    if (end - start > 1) {
      out.degenerate = true;
      vecs.middleCols(start, end - start) =
          detail::canonical_subspace_basis(vecs.middleCols(start, end - start));
    }
    start = end;
  }
  for (Eigen::Index i = 0; i < n; ++i) detail::fix_phase(vecs.col(i));
  out.basis = vecs;
  out.distribution.probs.resize(static_cast<std::size_t>(n));
  out.distribution.labels.resize(static_cast<std::size_t>(n));
  out.outcome.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    vecs.col(i).cwiseAbs().maxCoeff(&arg);
    out.outcome[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg);
    out.distribution.probs[static_cast<std::size_t>(i)] = std::max(vals(i), 0.0);
    out.distribution.labels[static_cast<std::size_t>(i)] = std::to_string(arg);
  }
  return out;
}

// Sum_k p_k |e_k><e_k|
inline Matrix reconstruct(const PreferredBasis& pb) {
  const auto n = pb.basis.rows();
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < pb.basis.cols(); ++k)
    m += pb.distribution.probs[static_cast<std::size_t>(k)] * pb.basis.col(k) * pb.basis.col(k).adjoint();
  return m;
}

// Outcome distribution indexed by computational label 0..d-1, read from the
// preferred basis. Requires each preferred vector to be dominated by a distinct
// computational state (true whenever the observer state is diagonal in its
// record basis).
inline std::vector<double> outcome_distribution(const DensityOp& rho, const Tolerances& tol = {}) {
  const auto pb = preferred_basis(rho, tol);
  std::vector<double> p(rho.dim(), 0.0);
  std::vector<bool> used(rho.dim(), false);
  for (std::size_t k = 0; k < pb.outcome.size(); ++k) {
    if (used[pb.outcome[k]])
      throw InvariantError("outcome_distribution: preferred basis is not a relabelled record basis");
    used[pb.outcome[k]] = true;
    p[pb.outcome[k]] = pb.distribution.probs[k];
  }
  return p;
}

}  // namespace hilbert
}  // namespace cqi
