#pragma once

// The quantum instantiation of the presheaf kernel over a context poset: the
// spectral presheaf, daseinisation, pseudo-states, truth objects, truth
// values and the search for global sections of the spectral presheaf.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtopos/contexts.hpp"
#include "qtopos/error.hpp"
#include "qtopos/kernel.hpp"
#include "qtopos/numerics.hpp"

namespace qtopos {

inline FinPoset base_poset(const ContextPoset& poset) {
  std::vector<std::string> ids;
  for (const auto& c : poset.contexts()) ids.push_back(c.id());
  return FinPoset(std::move(ids), poset.relation());
}

/// Sigma: at V the blocks of V; restriction sends a block to the unique block
/// of the smaller context above it.
class SpectralPresheaf {
 public:
  SpectralPresheaf(ContextPoset poset, const Tolerance& tol) : poset_(std::move(poset)), tol_(tol) {
    std::vector<std::size_t> sizes;
    for (const auto& c : poset_.contexts()) sizes.push_back(c.size());
    presheaf_ = share(Presheaf(base_poset(poset_), std::move(sizes), [&](std::size_t v, std::size_t vp, std::size_t q) {
      return parent_block(poset_.context(v).block(q), poset_.context(vp), tol_);
    }));
  }

  /// The unique block of `coarse` dominating `fine`.
  static std::size_t parent_block(const Operator& fine, const Context& coarse, const Tolerance& tol) {
    std::optional<std::size_t> found;
    for (std::size_t p = 0; p < coarse.size(); ++p) {
      if (!proj_leq(fine, coarse.block(p), tol)) continue;
      if (found) fail(ErrorKind::Ambiguity, "block lies under two blocks of context " + coarse.id());
      found = p;
    }
    if (!found) fail(ErrorKind::Ambiguity, "block lies under no block of context " + coarse.id());
    return *found;
  }

  const ContextPoset& poset() const noexcept { return poset_; }
  const Context& context(std::size_t v) const { return poset_.context(v); }
  const Presheaf& presheaf() const noexcept { return *presheaf_; }
  const PresheafPtr& presheaf_ptr() const noexcept { return presheaf_; }
  const FinPoset& base() const noexcept { return presheaf_->base(); }
  const Tolerance& tolerance() const noexcept { return tol_; }
  std::size_t size() const noexcept { return poset_.size(); }

 private:
  ContextPoset poset_;
  Tolerance tol_;
  PresheafPtr presheaf_;
};

inline SpectralPresheaf spectral_presheaf(const ContextPoset& poset, const Tolerance& tol) {
  return SpectralPresheaf(poset, tol);
}

/// A point of Sigma_V: one minimal projector of the context.
struct SpectralElement {
  std::size_t context;
  std::size_t block;
};

/// Coefficients of A on the blocks of V, or nullopt when A is not a real
/// combination of them.
inline std::optional<std::vector<double>> coefficients_in(const Operator& a, const Context& v, const Tolerance& tol) {
  if (a.dim() != v.dim()) fail(ErrorKind::DimensionMismatch, "operator and context dimensions differ");
  std::vector<double> coeffs;
  Operator rebuilt = Operator::zero(v.dim());
  const double thr = tol.scaled(v.dim()) * std::max(1.0, a.norm());
  for (const auto& p : v.blocks()) {
    const Scalar c = (p * a).trace() / p.trace();
    if (std::abs(c.imag()) > thr) return std::nullopt;
    coeffs.push_back(c.real());
    rebuilt = rebuilt + c.real() * p;
  }
  if (distance(rebuilt, a) > thr) return std::nullopt;
  return coeffs;
}

inline bool in_context(const Operator& a, const Context& v, const Tolerance& tol) {
  return coefficients_in(a, v, tol).has_value();
}

/// lambda(A) for the local valuation selecting `block` of V.
inline double evaluate(const Context& v, std::size_t block, const Operator& a, const Tolerance& tol) {
  const auto coeffs = coefficients_in(a, v, tol);
  if (!coeffs) fail(ErrorKind::NotInContext, "operator does not belong to context " + v.id());
  return coeffs->at(block);
}

inline double evaluate(const SpectralPresheaf& s, const SpectralElement& lambda, const Operator& a) {
  return evaluate(s.context(lambda.context), lambda.block, a, s.tolerance());
}

/// Blocks of V overlapping P.
inline std::uint64_t outer_mask(const Operator& p, const Context& v, const Tolerance& tol) {
  require_projector(p, tol, "proposition");
  if (p.dim() != v.dim()) fail(ErrorKind::DimensionMismatch, "projector and context dimensions differ");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if ((v.block(i) * p).norm() > tol.scaled(v.dim())) mask |= std::uint64_t{1} << i;
  return mask;
}

/// Outer daseinisation: the smallest projector of V dominating P.
inline Operator daseinise_projector(const Operator& p, const Context& v, const Tolerance& tol) {
  return v.block_sum(outer_mask(p, v, tol));
}

/// Inner daseinisation: the largest projector of V dominated by P.
inline Operator daseinise_projector_inner(const Operator& p, const Context& v, const Tolerance& tol) {
  require_projector(p, tol, "proposition");
  const Operator one = Operator::identity(p.dim());
  return one - daseinise_projector(one - p, v, tol);
}

inline std::uint64_t inner_mask(const Operator& p, const Context& v, const Tolerance& tol) {
  require_projector(p, tol, "proposition");
  return v.full_mask() & ~outer_mask(Operator::identity(p.dim()) - p, v, tol);
}

/// delta(P): at V, the blocks under the outer daseinisation of P.
inline Subobject delta_subobject(const Operator& p, const SpectralPresheaf& s) {
  const Tolerance& tol = s.tolerance();
  Subobject::Parts parts;
  for (const auto& v : s.poset().contexts()) {
    const Operator approx = daseinise_projector(p, v, tol);
    std::vector<bool> part;
    for (const auto& block : v.blocks()) part.push_back(proj_leq(block, approx, tol));
    parts.push_back(std::move(part));
  }
  return Subobject(s.presheaf_ptr(), std::move(parts));
}

inline void require_unit(const Vector& psi) {
  if (!psi.is_unit()) fail(ErrorKind::NotUnitNorm, "state vector is not flagged unit-norm");
}

struct PseudoState {
  Subobject subobject;
  Vector psi;
};

/// omega^psi = delta(|psi><psi|).
inline PseudoState pseudo_state(const Vector& psi, const SpectralPresheaf& s) {
  require_unit(psi);
  Subobject sub = delta_subobject(projector_onto(psi), s);
  for (const auto& part : sub.parts())
    if (std::none_of(part.begin(), part.end(), [](bool b) { return b; }))
      fail(ErrorKind::InvalidArgument, "pseudo-state has an empty component");
  return {std::move(sub), psi};
}

/// Per context, the block-sum projectors Q with <psi|Q|psi> >= 1 - eps,
/// each stored as its block mask.
struct TruthObject {
  Vector psi;
  std::vector<std::vector<std::uint64_t>> members;

  bool contains(std::size_t v, std::uint64_t mask) const {
    return std::binary_search(members.at(v).begin(), members.at(v).end(), mask);
  }
};

inline TruthObject truth_object(const Vector& psi, const ContextPoset& poset, const Tolerance& tol) {
  require_unit(psi);
  TruthObject t{psi, {}};
  for (const auto& v : poset.contexts()) {
    if (v.dim() != psi.dim()) fail(ErrorKind::DimensionMismatch, "state and context dimensions differ");
    std::vector<double> weights;
    for (const auto& b : v.blocks()) weights.push_back(psi.expectation(b));
    std::vector<std::uint64_t> members;
    for (std::uint64_t mask = 1; mask <= v.full_mask(); ++mask) {
      double total = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (mask >> i & 1U) total += weights[i];
      if (total >= 1.0 - tol.eps()) members.push_back(mask);
    }
    t.members.push_back(std::move(members));
  }
  return t;
}

/// nu(Q; omega) = [[omega^psi subset delta(Q)]], pointwise per context.
inline LowerSet truth_value_pseudo(const Operator& q, const Vector& psi, const SpectralPresheaf& s) {
  require_projector(q, s.tolerance(), "proposition");
  const PseudoState w = pseudo_state(psi, s);
  const Subobject d = delta_subobject(q, s);
  ElementSet members(s.size());
  for (std::size_t v = 0; v < s.size(); ++v) {
    bool included = true;
    for (std::size_t b = 0; b < s.context(v).size(); ++b)
      if (w.subobject.contains(v, b) && !d.contains(v, b)) included = false;
    members[v] = included;
  }
  return LowerSet(s.base(), std::move(members));
}

/// nu(Q; T) = [[delta(Q) in T^psi]].
inline LowerSet truth_value_truthobject(const Operator& q, const Vector& psi, const ContextPoset& poset,
                                        const Tolerance& tol) {
  require_projector(q, tol, "proposition");
  const TruthObject t = truth_object(psi, poset, tol);
  ElementSet members(poset.size());
  for (std::size_t v = 0; v < poset.size(); ++v) members[v] = t.contains(v, outer_mask(q, poset.context(v), tol));
  return LowerSet(base_poset(poset), std::move(members));
}

/// A partial choice of one block per context.
struct TruthAssignment {
  std::vector<std::optional<std::size_t>> blocks;

  bool total() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.has_value(); });
  }
  friend bool operator<(const TruthAssignment& a, const TruthAssignment& b) { return a.blocks < b.blocks; }
  friend bool operator==(const TruthAssignment& a, const TruthAssignment& b) { return a.blocks == b.blocks; }
};

/// Checks the matching condition on every comparable assigned pair directly
/// from the operators: the block chosen at V lies under the block chosen at V'.
inline bool satisfies_matching(const TruthAssignment& a, const ContextPoset& poset, const Tolerance& tol) {
  if (a.blocks.size() != poset.size()) return false;
  for (std::size_t v = 0; v < poset.size(); ++v)
    for (std::size_t vp = 0; vp < poset.size(); ++vp) {
      if (v == vp || !poset.leq(vp, v) || !a.blocks[v] || !a.blocks[vp]) continue;
      if (!proj_leq(poset.context(v).block(*a.blocks[v]), poset.context(vp).block(*a.blocks[vp]), tol)) return false;
    }
  return true;
}

enum class KsStatus { SectionsExist, NoSection };

struct KsResult {
  KsStatus status = KsStatus::NoSection;
  std::vector<TruthAssignment> sections;
  std::size_t nodes_explored = 0;
  /// True when the whole space was searched (always the case for NoSection).
  bool exhausted = false;
};

/// Backtracking search for global sections of Sigma. Contexts are visited
/// fewest-blocks first, values in ascending block order. Stops after
/// max(max_solutions, 1) sections.
inline KsResult ks_search(const SpectralPresheaf& s, std::size_t max_solutions) {
  const std::size_t n = s.size();
  if (n == 0) fail(ErrorKind::InvalidArgument, "global-section search needs a nonempty poset");
  const Presheaf& sigma = s.presheaf();
  const FinPoset& base = sigma.base();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma.size(a) < sigma.size(b); });

  const std::size_t wanted = std::max<std::size_t>(max_solutions, 1);
  KsResult result;
  TruthAssignment current{std::vector<std::optional<std::size_t>>(n)};
  bool stop = false;

  std::function<void(std::size_t)> search = [&](std::size_t depth) {
    if (depth == n) {
      result.sections.push_back(current);
      if (result.sections.size() >= wanted) stop = true;
      return;
    }
    const std::size_t v = order[depth];
    for (std::size_t x = 0; x < sigma.size(v) && !stop; ++x) {
      if (++result.nodes_explored > kMaxSearchStates)
        fail(ErrorKind::SizeLimit, "section search exceeds " + std::to_string(kMaxSearchStates) + " nodes");
      bool ok = true;
      for (std::size_t u = 0; u < n && ok; ++u) {
        if (u == v || !current.blocks[u]) continue;
        if (base.leq(u, v)) ok = sigma.restrict(v, u, x) == *current.blocks[u];
        else if (base.leq(v, u)) ok = sigma.restrict(u, v, *current.blocks[u]) == x;
      }
      if (!ok) continue;
      current.blocks[v] = x;
      search(depth + 1);
      current.blocks[v].reset();
    }
  };
  search(0);
  result.exhausted = !stop;
  for (const auto& section : result.sections)
    if (!section.total() || !satisfies_matching(section, s.poset(), s.tolerance()))
      fail(ErrorKind::InvalidArgument, "section search produced an invalid section");
  std::sort(result.sections.begin(), result.sections.end());
  if (result.sections.size() > max_solutions) result.sections.resize(max_solutions);
  result.status = result.sections.empty() && result.exhausted ? KsStatus::NoSection : KsStatus::SectionsExist;
  return result;
}

struct ObservableApproximation {
  Operator inner;
  Operator outer;
};

/// Inner and outer daseinisation of a self-adjoint operator through its
/// cumulative spectral family E_k: the outer uses the inner approximations of
/// E_k, the inner the outer approximations.
inline ObservableApproximation daseinise_observable(const Operator& a, const Context& v, const Tolerance& tol) {
  const auto spectrum = eigensystem(a, tol);
  const std::size_t dim = a.dim();
  Operator cumulative = Operator::zero(dim);
  Operator prev_inner = Operator::zero(dim), prev_outer = Operator::zero(dim);
  Operator inner = Operator::zero(dim), outer = Operator::zero(dim);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    // The last cumulative projector is the identity; set it exactly.
    cumulative = k + 1 == spectrum.size() ? Operator::identity(dim) : cumulative + spectrum[k].projector;
    const Operator f = daseinise_projector_inner(cumulative, v, tol);
    const Operator g = daseinise_projector(cumulative, v, tol);
    outer = outer + spectrum[k].eigenvalue * (f - prev_inner);
    inner = inner + spectrum[k].eigenvalue * (g - prev_outer);
    prev_inner = f;
    prev_outer = g;
  }
  return {inner, outer};
}

struct ValueInterval {
  double lo;
  double hi;
};

inline ValueInterval value_interval(const Context& v, std::size_t block, const Operator& a, const Tolerance& tol) {
  const auto approx = daseinise_observable(a, v, tol);
  return {evaluate(v, block, approx.inner, tol), evaluate(v, block, approx.outer, tol)};
}

inline ValueInterval value_interval(const SpectralPresheaf& s, const SpectralElement& lambda, const Operator& a) {
  return value_interval(s.context(lambda.context), lambda.block, a, s.tolerance());
}

}  // namespace qtopos
