#pragma once

// Commutative subalgebras ("contexts") represented by their partition of
// unity, the inclusion order between them, and finite closures of generated
// context families.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qtopos/error.hpp"
#include "qtopos/numerics.hpp"

namespace qtopos {

class Context {
 public:
  /// Validates the partition of unity and sorts blocks canonically.
  static Context from_blocks(std::vector<Operator> blocks, const Tolerance& tol, std::string label = {}) {
    if (blocks.empty()) fail(ErrorKind::InvalidArgument, "context needs at least one block");
    const std::size_t dim = blocks.front().dim();
    Operator sum = Operator::zero(dim);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].dim() != dim) fail(ErrorKind::DimensionMismatch, "context blocks differ in dimension");
      require_projector(blocks[i], tol, "context block " + std::to_string(i));
      for (std::size_t j = 0; j < i; ++j)
        if ((blocks[i] * blocks[j]).norm() > tol.scaled(dim))
          fail(ErrorKind::InvalidArgument, "context blocks " + std::to_string(j) + " and " + std::to_string(i) +
                                               " are not orthogonal");
      sum = sum + blocks[i];
    }
    if (!sum.approx_equal(Operator::identity(dim), tol))
      fail(ErrorKind::InvalidArgument, "context blocks do not sum to the identity");
    if (blocks.size() < 2)
      fail(ErrorKind::TrivialAlgebra, "partition has a single block; the trivial algebra C*1 is excluded");
    std::stable_sort(blocks.begin(), blocks.end(), block_order);
    Context ctx;
    ctx.blocks_ = std::move(blocks);
    ctx.label_ = std::move(label);
    return ctx;
  }

  const std::string& id() const noexcept { return id_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t dim() const noexcept { return blocks_.front().dim(); }
  std::size_t size() const noexcept { return blocks_.size(); }
  const std::vector<Operator>& blocks() const noexcept { return blocks_; }
  const Operator& block(std::size_t i) const { return blocks_.at(i); }

  std::vector<std::size_t> ranks() const {
    std::vector<std::size_t> out;
    for (const auto& b : blocks_) out.push_back(projector_rank(b));
    return out;
  }

  /// Sum of the blocks selected by mask (bit i selects block i).
  Operator block_sum(std::uint64_t mask) const {
    Operator out = Operator::zero(dim());
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (mask >> i & 1U) out = out + blocks_[i];
    return out;
  }
  std::uint64_t full_mask() const noexcept { return (std::uint64_t{1} << blocks_.size()) - 1; }

  Context with_id(std::string id) const {
    Context c = *this;
    c.id_ = std::move(id);
    return c;
  }
  Context with_label(std::string label) const {
    Context c = *this;
    c.label_ = std::move(label);
    return c;
  }

  /// Equal iff the block lists match as sets within tol (greedy matching).
  bool same_algebra(const Context& other, const Tolerance& tol) const {
    if (dim() != other.dim() || size() != other.size()) return false;
    std::vector<bool> used(other.size(), false);
    for (const auto& b : blocks_) {
      std::size_t best = other.size();
      double best_dist = 0.0;
      for (std::size_t j = 0; j < other.size(); ++j) {
        if (used[j]) continue;
        const double d = distance(b, other.blocks_[j]);
        if (best == other.size() || d < best_dist) {
          best = j;
          best_dist = d;
        }
      }
      if (best == other.size() || best_dist > tol.scaled(dim())) return false;
      used[best] = true;
    }
    return true;
  }

 private:
  Context() = default;

  static long long rounded(double x) { return std::llround(x * 1e6); }

  // Descending trace, then lexicographic on entries rounded to 6 decimals.
  static bool block_order(const Operator& a, const Operator& b) {
    const long long ta = rounded(a.trace().real()), tb = rounded(b.trace().real());
    if (ta != tb) return ta > tb;
    for (std::size_t r = 0; r < a.dim(); ++r)
      for (std::size_t c = 0; c < a.dim(); ++c) {
        const auto ka = std::make_pair(rounded(a(r, c).real()), rounded(a(r, c).imag()));
        const auto kb = std::make_pair(rounded(b(r, c).real()), rounded(b(r, c).imag()));
        if (ka != kb) return ka < kb;
      }
    return false;
  }

  std::string id_;
  std::string label_;
  std::vector<Operator> blocks_;
};

/// Minimal joint eigenprojectors of a commuting family of Hermitian operators.
inline Context context_from_commuting_set(const std::vector<Operator>& ops, const Tolerance& tol,
                                          const std::vector<std::string>& names = {}, std::string label = {}) {
  if (ops.empty()) fail(ErrorKind::InvalidArgument, "context needs at least one generating operator");
  const std::size_t dim = ops.front().dim();
  auto name = [&](std::size_t i) { return i < names.size() ? names[i] : "#" + std::to_string(i); };
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].dim() != dim) fail(ErrorKind::DimensionMismatch, "generators differ in dimension");
    require_hermitian(ops[i], tol, "operator " + name(i));
  }
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      const double c = commutator(ops[i], ops[j]).norm();
      if (c > tol.scaled(dim))
        fail(ErrorKind::NonCommuting, "operators " + name(i) + " and " + name(j) +
                                          " do not commute (||[A,B]||_F = " + std::to_string(c) + ")");
    }
  std::vector<Operator> blocks{Operator::identity(dim)};
  for (const auto& op : ops) {
    std::vector<Operator> refined;
    for (const auto& pair : eigensystem(op, tol))
      for (const auto& b : blocks) {
        const Operator prod = b * pair.projector;
        if (prod.norm() <= tol.scaled(dim)) continue;
        // Symmetrize to remove rounding asymmetry between commuting factors.
        refined.push_back(0.5 * (prod + prod.adjoint()));
      }
    blocks = std::move(refined);
  }
  return Context::from_blocks(std::move(blocks), tol, std::move(label));
}

inline void require_same_dim(const Context& a, const Context& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::DimensionMismatch,
         "contexts have dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
}

/// Vp is a subalgebra of V: every block of Vp is the sum of the blocks of V under it.
inline bool context_leq(const Context& vp, const Context& v, const Tolerance& tol) {
  require_same_dim(vp, v);
  for (const auto& p : vp.blocks()) {
    Operator sum = Operator::zero(v.dim());
    for (const auto& q : v.blocks())
      if (proj_leq(q, p, tol)) sum = sum + q;
    if (!sum.approx_equal(p, tol)) return false;
  }
  return true;
}

/// Largest common subalgebra, or nullopt when it is the trivial algebra.
inline std::optional<Context> context_intersection(const Context& v, const Context& w, const Tolerance& tol) {
  require_same_dim(v, w);
  const std::size_t n = v.size(), m = w.size();
  // Union-find over V-blocks [0, n) and W-blocks [n, n + m).
  std::vector<std::size_t> parent(n + m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if ((v.block(i) * w.block(j)).norm() > tol.scaled(v.dim())) parent[find(i)] = find(n + j);

  std::vector<std::size_t> roots;
  std::vector<Operator> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    const auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      blocks.push_back(v.block(i));
    } else {
      auto& b = blocks[static_cast<std::size_t>(it - roots.begin())];
      b = b + v.block(i);
    }
  }
  if (blocks.size() < 2) return std::nullopt;
  return Context::from_blocks(std::move(blocks), tol);
}

/// Every partition of the blocks into at least two groups, the finest included.
inline std::vector<Context> coarsenings(const Context& v, const Tolerance& tol) {
  const std::size_t k = v.size();
  std::vector<Context> out;
  std::vector<std::size_t> rgs(k, 0);  // restricted growth string
  while (true) {
    const std::size_t parts = *std::max_element(rgs.begin(), rgs.end()) + 1;
    if (parts >= 2) {
      std::vector<Operator> blocks(parts, Operator::zero(v.dim()));
      std::string shape;
      for (std::size_t i = 0; i < k; ++i) blocks[rgs[i]] = blocks[rgs[i]] + v.block(i);
      for (std::size_t p = 0; p < parts; ++p) {
        if (p) shape += '|';
        for (std::size_t i = 0; i < k; ++i)
          if (rgs[i] == p) shape += std::to_string(i);
      }
      out.push_back(Context::from_blocks(std::move(blocks), tol, v.label() + "{" + shape + "}"));
    }
    // Next restricted growth string.
    std::size_t i = k;
    while (i-- > 1) {
      const std::size_t prefix_max = *std::max_element(rgs.begin(), rgs.begin() + static_cast<std::ptrdiff_t>(i));
      if (rgs[i] <= prefix_max) {
        ++rgs[i];
        std::fill(rgs.begin() + static_cast<std::ptrdiff_t>(i) + 1, rgs.end(), 0);
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

enum class ClosurePolicy { Intersections, Coarsenings };

inline constexpr std::size_t kMaxPosetSize = 4096;

class ContextPoset {
 public:
  ContextPoset() = default;
  ContextPoset(std::vector<Context> contexts, std::vector<std::vector<bool>> leq)
      : contexts_(std::move(contexts)), leq_(std::move(leq)) {}

  std::size_t size() const noexcept { return contexts_.size(); }
  bool empty() const noexcept { return contexts_.empty(); }
  const std::vector<Context>& contexts() const noexcept { return contexts_; }
  const Context& context(std::size_t i) const { return contexts_.at(i); }
  /// contexts[a] is a subalgebra of contexts[b].
  bool leq(std::size_t a, std::size_t b) const { return leq_.at(a).at(b); }
  const std::vector<std::vector<bool>>& relation() const noexcept { return leq_; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < contexts_.size(); ++i)
      if (contexts_[i].id() == id) return i;
    return std::nullopt;
  }

  /// Strict pairs (a, b) with a < b.
  std::vector<std::pair<std::size_t, std::size_t>> strict_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = 0; b < size(); ++b)
        if (a != b && leq_[a][b]) out.emplace_back(a, b);
    return out;
  }

 private:
  std::vector<Context> contexts_;
  std::vector<std::vector<bool>> leq_;
};

namespace detail {

inline bool add_unique(std::vector<Context>& set, Context c, const Tolerance& tol) {
  for (const auto& existing : set)
    if (existing.same_algebra(c, tol)) return false;
  if (set.size() >= kMaxPosetSize)
    fail(ErrorKind::SizeLimit, "context closure exceeds " + std::to_string(kMaxPosetSize) + " contexts");
  set.push_back(std::move(c));
  return true;
}

}  // namespace detail

/// Closes a family of contexts and computes the inclusion order. Ids are
/// assigned V0, V1, ... in discovery order.
inline ContextPoset build_poset(const std::vector<Context>& maximal, ClosurePolicy closure, const Tolerance& tol) {
  std::vector<Context> set;
  for (const auto& c : maximal) {
    if (!set.empty()) require_same_dim(set.front(), c);
    detail::add_unique(set, c, tol);
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      auto meet = context_intersection(set[j], set[i], tol);
      if (!meet) continue;
      const std::string a = set[j].label(), b = set[i].label();
      detail::add_unique(set, meet->with_label("(" + a + " & " + b + ")"), tol);
    }
  }
  if (closure == ClosurePolicy::Coarsenings) {
    const std::size_t closed = set.size();
    for (std::size_t i = 0; i < closed; ++i)
      for (auto& c : coarsenings(set[i], tol)) detail::add_unique(set, std::move(c), tol);
  }
  for (std::size_t i = 0; i < set.size(); ++i) set[i] = set[i].with_id("V" + std::to_string(i));

  std::vector<std::vector<bool>> leq(set.size(), std::vector<bool>(set.size(), false));
  for (std::size_t a = 0; a < set.size(); ++a)
    for (std::size_t b = 0; b < set.size(); ++b) leq[a][b] = a == b || context_leq(set[a], set[b], tol);
  return ContextPoset(std::move(set), std::move(leq));
}

struct NamedOperator {
  std::string name;
  Operator op;
};

struct BuiltinScenario {
  std::size_t dim = 0;
  std::vector<NamedOperator> operators;
  std::vector<std::vector<std::string>> groups;
  std::vector<Context> maximal;
};

inline BuiltinScenario builtin_scenario(const std::string& name, const Tolerance& tol = Tolerance{}) {
  BuiltinScenario s;
  if (name == "pauli2") {
    s.dim = 2;
    s.operators = {{"X", pauli::x()}, {"Y", pauli::y()}, {"Z", pauli::z()}};
    s.groups = {{"X"}, {"Y"}, {"Z"}};
  } else if (name == "mermin-square") {
    using namespace pauli;
    const Operator one = identity();
    s.dim = 4;
    s.operators = {{"XI", kron(x(), one)}, {"IX", kron(one, x())}, {"XX", kron(x(), x())},
                   {"IY", kron(one, y())}, {"YI", kron(y(), one)}, {"YY", kron(y(), y())},
                   {"XY", kron(x(), y())}, {"YX", kron(y(), x())}, {"ZZ", kron(z(), z())}};
    s.groups = {{"XI", "IX", "XX"}, {"IY", "YI", "YY"}, {"XY", "YX", "ZZ"},
                {"XI", "IY", "XY"}, {"IX", "YI", "YX"}, {"XX", "YY", "ZZ"}};
  } else {
    fail(ErrorKind::UnknownBuiltin, "unknown builtin scenario '" + name + "'");
  }
  for (const auto& group : s.groups) {
    std::vector<Operator> ops;
    std::string label;
    for (const auto& member : group) {
      for (const auto& named : s.operators)
        if (named.name == member) ops.push_back(named.op);
      label += (label.empty() ? "" : ",") + member;
    }
    s.maximal.push_back(context_from_commuting_set(ops, tol, group, label));
  }
  return s;
}

}  // namespace qtopos
