#pragma once

// Random generators and brute-force oracles shared by the unit and acceptance
// suites. Everything here is independent of the code paths under test.

#include <Eigen/QR>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "qtopos/qtopos.hpp"

namespace qtopos::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
  bool coin() { return index(2) == 1; }

  Matrix gaussian(std::size_t rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(normal(), normal());
    return m;
  }

  Matrix unitary(std::size_t dim) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(dim, dim));
    return qr.householderQ();
  }

  Operator hermitian(std::size_t dim) {
    const Matrix g = gaussian(dim, dim);
    return Operator((g + g.adjoint()) / 2.0);
  }

  /// Hermitian with the given eigenvalues in a random basis.
  Operator hermitian_with_spectrum(const std::vector<double>& values) {
    const std::size_t dim = values.size();
    const Matrix u = unitary(dim);
    Matrix d = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i];
    return Operator(u * d * u.adjoint());
  }

  /// Projector onto the span of `rank` random vectors.
  Operator projector(std::size_t dim, std::size_t rank) {
    if (rank == 0) return Operator::zero(dim);
    const Matrix u = unitary(dim);
    const Matrix cols = u.leftCols(static_cast<Eigen::Index>(rank));
    return Operator(cols * cols.adjoint());
  }

  Vector unit_vector(std::size_t dim) {
    return Vector::normalized(gaussian(dim, 1).col(0), Tolerance{});
  }

  /// Unit vector supported on the columns of `basis` selected by `mask`.
  Vector unit_vector_in(const Matrix& basis, std::uint64_t mask) {
    ColumnVector v = ColumnVector::Zero(basis.rows());
    for (Eigen::Index k = 0; k < basis.cols(); ++k)
      if (mask >> k & 1U) v += Scalar(normal(), normal()) * basis.col(k);
    return Vector::normalized(v, Tolerance{});
  }

  /// Rank-1 projectors onto the columns of a unitary, grouped by a random
  /// assignment of columns to `parts` groups (every group nonempty).
  Context context_from_basis(const Matrix& basis, std::size_t parts) {
    const std::size_t dim = static_cast<std::size_t>(basis.cols());
    std::vector<std::size_t> group(dim);
    for (std::size_t i = 0; i < dim; ++i) group[i] = i < parts ? i : index(parts);
    std::shuffle(group.begin(), group.end(), gen_);
    std::vector<Operator> blocks(parts, Operator::zero(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      const auto col = basis.col(static_cast<Eigen::Index>(i));
      blocks[group[i]] = blocks[group[i]] + Operator(col * col.adjoint());
    }
    return Context::from_blocks(std::move(blocks), Tolerance{});
  }

  Context random_context(std::size_t dim) { return context_from_basis(unitary(dim), 2 + index(dim - 1)); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Every block-sum projector of V, as masks 0 .. 2^k - 1.
inline std::vector<std::uint64_t> all_masks(const Context& v) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m <= v.full_mask(); ++m) out.push_back(m);
  return out;
}

/// Brute-force outer daseinisation: the unique minimum over all block sums
/// dominating P, or nullopt if the minimum is not unique.
inline std::optional<std::uint64_t> brute_outer(const Operator& p, const Context& v, const Tolerance& tol) {
  std::vector<std::uint64_t> dominating;
  for (auto m : all_masks(v))
    if (proj_leq(p, v.block_sum(m), tol)) dominating.push_back(m);
  for (auto m : dominating) {
    bool least = true;
    for (auto other : dominating)
      if ((m & other) != m) least = false;
    if (least) return m;
  }
  return std::nullopt;
}

inline std::optional<std::uint64_t> brute_inner(const Operator& p, const Context& v, const Tolerance& tol) {
  std::vector<std::uint64_t> dominated;
  for (auto m : all_masks(v))
    if (proj_leq(v.block_sum(m), p, tol)) dominated.push_back(m);
  for (auto m : dominated) {
    bool greatest = true;
    for (auto other : dominated)
      if ((m | other) != m) greatest = false;
    if (greatest) return m;
  }
  return std::nullopt;
}

/// Posets with at most three elements, one of each shape up to isomorphism.
inline std::vector<FinPoset> small_posets() {
  return {
      FinPoset::chain(1),
      FinPoset::chain(2),
      FinPoset::antichain(2),
      FinPoset::chain(3),
      FinPoset::antichain(3),
      FinPoset::from_pairs(3, {{0, 2}, {1, 2}}),  // two below one
      FinPoset::from_pairs(3, {{0, 1}, {0, 2}}),  // one below two
      FinPoset::from_pairs(3, {{0, 1}}),          // chain plus a point
  };
}

}  // namespace qtopos::testing
