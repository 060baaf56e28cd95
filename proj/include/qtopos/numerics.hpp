#pragma once

// Dense complex linear algebra for small Hilbert spaces: operators, vectors,
// Hermitian eigensystems and the projector lattice. All equality tests are
// Frobenius-norm tests scaled by dimension against one Tolerance.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtopos/error.hpp"

namespace qtopos {

using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using ColumnVector = Eigen::VectorXcd;

inline constexpr std::size_t kMaxDimension = 16;

class Tolerance {
 public:
  static constexpr double kDefault = 1e-9;

  constexpr Tolerance() = default;
  explicit Tolerance(double eps) : eps_(eps) {
    if (!(eps > 0.0) || !(eps < 1e-3))
      fail(ErrorKind::InvalidArgument, "tolerance must satisfy 0 < eps < 1e-3, got " + std::to_string(eps));
  }

  constexpr double eps() const noexcept { return eps_; }
  /// Threshold for Frobenius tests on dim x dim operators.
  constexpr double scaled(std::size_t dim) const noexcept { return eps_ * static_cast<double>(dim); }

 private:
  double eps_ = kDefault;
};

namespace detail {

inline void check_dimension(std::size_t dim) {
  if (dim < 1 || dim > kMaxDimension)
    fail(ErrorKind::InvalidArgument,
         "dimension must lie in [1, " + std::to_string(kMaxDimension) + "], got " + std::to_string(dim));
}

inline void check_finite(const Scalar& z, const char* where) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    fail(ErrorKind::InvalidArgument, std::string("non-finite entry in ") + where);
}

}  // namespace detail

/// A dim x dim complex matrix. Immutable through its public interface.
class Operator {
 public:
  Operator() : Operator(Matrix::Zero(1, 1)) {}

  explicit Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      fail(ErrorKind::DimensionMismatch, "operator entries must form a square grid");
    detail::check_dimension(static_cast<std::size_t>(m_.rows()));
    for (Eigen::Index i = 0; i < m_.size(); ++i) detail::check_finite(m_.data()[i], "operator");
  }

  Operator(std::initializer_list<std::initializer_list<Scalar>> rows) : Operator(from_rows(rows)) {}

  static Operator identity(std::size_t dim) {
    detail::check_dimension(dim);
    return Operator(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
  }
  static Operator zero(std::size_t dim) {
    detail::check_dimension(dim);
    return Operator(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
  }
  static Operator diagonal(std::initializer_list<double> values) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) {
      m(i, i) = v;
      ++i;
    }
    return Operator(std::move(m));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  Scalar operator()(std::size_t r, std::size_t c) const {
    return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  const Matrix& matrix() const noexcept { return m_; }

  Operator adjoint() const { return Operator(m_.adjoint()); }
  Scalar trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }

  friend Operator operator+(const Operator& a, const Operator& b) { return Operator(a.checked(b).m_ + b.m_); }
  friend Operator operator-(const Operator& a, const Operator& b) { return Operator(a.checked(b).m_ - b.m_); }
  friend Operator operator*(const Operator& a, const Operator& b) { return Operator(a.checked(b).m_ * b.m_); }
  friend Operator operator*(Scalar s, const Operator& a) { return Operator(s * a.m_); }
  friend Operator operator*(double s, const Operator& a) { return Operator(Scalar(s) * a.m_); }

  /// Frobenius distance.
  friend double distance(const Operator& a, const Operator& b) { return (a.checked(b).m_ - b.m_).norm(); }

  bool approx_equal(const Operator& other, const Tolerance& tol) const {
    return dim() == other.dim() && distance(*this, other) <= tol.scaled(dim());
  }

 private:
  static Matrix from_rows(std::initializer_list<std::initializer_list<Scalar>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != n)
        fail(ErrorKind::DimensionMismatch, "operator entries must form a square grid");
      Eigen::Index c = 0;
      for (const auto& z : row) m(r, c++) = z;
      ++r;
    }
    return m;
  }

  const Operator& checked(const Operator& other) const {
    if (dim() != other.dim())
      fail(ErrorKind::DimensionMismatch,
           "operator dimensions differ: " + std::to_string(dim()) + " vs " + std::to_string(other.dim()));
    return *this;
  }

  Matrix m_;
};

inline Operator kron(const Operator& a, const Operator& b) {
  const auto na = a.matrix().rows(), nb = b.matrix().rows();
  Matrix m(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) m.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
  return Operator(std::move(m));
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

/// State vector with an optional unit-norm guarantee.
class Vector {
 public:
  explicit Vector(ColumnVector v) : v_(std::move(v)) {
    detail::check_dimension(static_cast<std::size_t>(v_.size()));
    for (Eigen::Index i = 0; i < v_.size(); ++i) detail::check_finite(v_(i), "vector");
  }
  Vector(std::initializer_list<Scalar> entries) : Vector(from_list(entries)) {}

  /// Checks |norm - 1| <= eps and sets the unit flag.
  static Vector unit(ColumnVector v, const Tolerance& tol) {
    Vector out(std::move(v));
    const double n = out.v_.norm();
    if (std::abs(n - 1.0) > tol.eps())
      fail(ErrorKind::NotUnitNorm, "vector norm is " + std::to_string(n));
    out.unit_ = true;
    return out;
  }
  static Vector normalized(ColumnVector v, const Tolerance& tol) {
    const double n = v.norm();
    if (!(n > tol.eps())) fail(ErrorKind::NotUnitNorm, "cannot normalize a null vector");
    return unit(v / n, tol);
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(v_.size()); }
  bool is_unit() const noexcept { return unit_; }
  const ColumnVector& entries() const noexcept { return v_; }
  Scalar operator[](std::size_t i) const { return v_(static_cast<Eigen::Index>(i)); }

  /// <v|A|v>, real part.
  double expectation(const Operator& a) const {
    if (a.dim() != dim()) fail(ErrorKind::DimensionMismatch, "vector and operator dimensions differ");
    return (v_.adjoint() * a.matrix() * v_)(0, 0).real();
  }

 private:
  static ColumnVector from_list(std::initializer_list<Scalar> entries) {
    ColumnVector v(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (const auto& z : entries) v(i++) = z;
    return v;
  }

  ColumnVector v_;
  bool unit_ = false;
};

inline Operator projector_onto(const Vector& v) {
  return Operator(v.entries() * v.entries().adjoint() / v.entries().squaredNorm());
}

inline bool is_hermitian(const Operator& a, const Tolerance& tol) {
  return (a.matrix() - a.matrix().adjoint()).norm() <= tol.scaled(a.dim());
}

inline bool is_projector(const Operator& p, const Tolerance& tol) {
  return is_hermitian(p, tol) && (p.matrix() * p.matrix() - p.matrix()).norm() <= tol.scaled(p.dim());
}

inline void require_hermitian(const Operator& a, const Tolerance& tol, const std::string& what = "operator") {
  const double defect = (a.matrix() - a.matrix().adjoint()).norm();
  if (defect > tol.scaled(a.dim()))
    fail(ErrorKind::NotHermitian, what + " is not Hermitian (||A - A^dagger||_F = " + std::to_string(defect) + ")");
}

inline void require_projector(const Operator& p, const Tolerance& tol, const std::string& what = "operator") {
  if (!is_projector(p, tol)) fail(ErrorKind::NotProjector, what + " is not an orthogonal projector");
}

/// Rank of a projector, read from its trace.
inline std::size_t projector_rank(const Operator& p) {
  return static_cast<std::size_t>(std::lround(p.trace().real()));
}

struct SpectralPair {
  double eigenvalue;
  Operator projector;
};

/// Spectral decomposition with eigenvalues strictly increasing. Eigenvalues
/// closer than eps * max(1, ||A||_F) share one eigenprojector.
inline std::vector<SpectralPair> eigensystem(const Operator& a, const Tolerance& tol) {
  require_hermitian(a, tol);
  const Matrix herm = (a.matrix() + a.matrix().adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  const double gap = tol.eps() * std::max(1.0, a.norm());

  std::vector<SpectralPair> out;
  const Eigen::Index n = values.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && values(end) - values(end - 1) <= gap) ++end;
    Matrix p = Matrix::Zero(n, n);
    double sum = 0.0;
    for (Eigen::Index k = start; k < end; ++k) {
      p += vectors.col(k) * vectors.col(k).adjoint();
      sum += values(k);
    }
    out.push_back({sum / static_cast<double>(end - start), Operator(std::move(p))});
    start = end;
  }
  return out;
}

/// h(A) where h is sampled on spec(A): values[i] = h(a_i) for the i-th pair of eigensystem(A).
inline Operator apply_function(const Operator& a, std::span<const double> values, const Tolerance& tol) {
  const auto spectrum = eigensystem(a, tol);
  if (values.size() != spectrum.size())
    fail(ErrorKind::InvalidArgument, "value map has " + std::to_string(values.size()) + " entries, spectrum has " +
                                         std::to_string(spectrum.size()));
  Matrix out = Matrix::Zero(a.matrix().rows(), a.matrix().cols());
  for (std::size_t i = 0; i < spectrum.size(); ++i) out += values[i] * spectrum[i].projector.matrix();
  return Operator(std::move(out));
}

inline Operator apply_function(const Operator& a, const std::function<double(double)>& h, const Tolerance& tol) {
  std::vector<double> values;
  for (const auto& pair : eigensystem(a, tol)) values.push_back(h(pair.eigenvalue));
  return apply_function(a, values, tol);
}

/// p <= q in the projector order, i.e. range(p) within range(q).
inline bool proj_leq(const Operator& p, const Operator& q, const Tolerance& tol) {
  require_projector(p, tol, "left projector");
  require_projector(q, tol, "right projector");
  return distance(q * p, p) <= tol.scaled(p.dim());
}

// Projector lattice P(H). Joins are spans, meets intersections; P(H) is not
// distributive once dim >= 2.

inline Operator range_projector(const Operator& positive, const Tolerance& tol) {
  Matrix out = Matrix::Zero(positive.matrix().rows(), positive.matrix().cols());
  for (const auto& pair : eigensystem(positive, tol))
    if (pair.eigenvalue > tol.scaled(positive.dim())) out += pair.projector.matrix();
  return Operator(std::move(out));
}

inline Operator proj_complement(const Operator& p, const Tolerance& tol) {
  require_projector(p, tol);
  return Operator::identity(p.dim()) - p;
}

inline Operator proj_join(const Operator& p, const Operator& q, const Tolerance& tol) {
  require_projector(p, tol);
  require_projector(q, tol);
  return range_projector(p + q, tol);
}

inline Operator proj_meet(const Operator& p, const Operator& q, const Tolerance& tol) {
  return proj_complement(proj_join(proj_complement(p, tol), proj_complement(q, tol), tol), tol);
}

namespace pauli {

inline Operator identity() { return Operator::identity(2); }
inline Operator x() { return Operator{{0.0, 1.0}, {1.0, 0.0}}; }
inline Operator y() { return Operator{{0.0, Scalar(0, -1)}, {Scalar(0, 1), 0.0}}; }
inline Operator z() { return Operator{{1.0, 0.0}, {0.0, -1.0}}; }

}  // namespace pauli

}  // namespace qtopos
