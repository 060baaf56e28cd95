#pragma once

// Presheaves of finite sets over a finite poset and the topos structure on
// them: terminal object, products, exponentials, the subobject classifier of
// sieves, power objects, the Heyting algebra of subobjects, and generalised
// truth values as lower sets.
//
// Points of a component are the indices 0 .. size(v)-1. For V' <= V the
// restriction maps the points at V to the points at V'.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtopos/error.hpp"

namespace qtopos {

inline constexpr std::size_t kMaxComponentSize = 1'000'000;
inline constexpr std::size_t kMaxSearchStates = 10'000'000;

/// Membership over the elements of a poset.
using ElementSet = std::vector<bool>;

class FinPoset {
 public:
  FinPoset() = default;
  FinPoset(std::vector<std::string> ids, std::vector<std::vector<bool>> leq)
      : ids_(std::move(ids)), leq_(std::move(leq)) {
    const std::size_t n = ids_.size();
    if (leq_.size() != n) fail(ErrorKind::InvalidArgument, "order relation has the wrong number of rows");
    for (const auto& row : leq_)
      if (row.size() != n) fail(ErrorKind::InvalidArgument, "order relation has the wrong number of columns");
    for (std::size_t a = 0; a < n; ++a) {
      if (!leq_[a][a]) fail(ErrorKind::InvalidArgument, "order relation is not reflexive at " + ids_[a]);
      for (std::size_t b = 0; b < n; ++b) {
        if (a != b && leq_[a][b] && leq_[b][a])
          fail(ErrorKind::InvalidArgument, "order relation is not antisymmetric on " + ids_[a] + ", " + ids_[b]);
        for (std::size_t c = 0; c < n; ++c)
          if (leq_[a][b] && leq_[b][c] && !leq_[a][c])
            fail(ErrorKind::InvalidArgument, "order relation is not transitive through " + ids_[b]);
      }
    }
    // Linear extension: every element after all elements below it.
    std::vector<bool> placed(n, false);
    while (bottom_up_.size() < n) {
      for (std::size_t v = 0; v < n; ++v) {
        if (placed[v]) continue;
        bool ready = true;
        for (std::size_t u = 0; u < n && ready; ++u) ready = u == v || !leq_[u][v] || placed[u];
        if (ready) {
          placed[v] = true;
          bottom_up_.push_back(v);
        }
      }
    }
  }

  /// 0 < 1 < ... < n-1.
  static FinPoset chain(std::size_t n) {
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) leq[a][b] = true;
    return FinPoset(default_ids(n), std::move(leq));
  }
  static FinPoset antichain(std::size_t n) {
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) leq[a][a] = true;
    return FinPoset(default_ids(n), std::move(leq));
  }
  /// Reflexive-transitive closure of the given strict pairs (a, b) meaning a < b.
  static FinPoset from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& below) {
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) leq[a][a] = true;
    for (auto [a, b] : below) leq.at(a).at(b) = true;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          if (leq[a][k] && leq[k][b]) leq[a][b] = true;
    return FinPoset(default_ids(n), std::move(leq));
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::size_t v) const { return ids_.at(v); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  bool leq(std::size_t a, std::size_t b) const { return leq_.at(a).at(b); }

  /// Principal lower set of v.
  ElementSet down(std::size_t v) const {
    ElementSet out(size(), false);
    for (std::size_t u = 0; u < size(); ++u) out[u] = leq_[u][v];
    return out;
  }
  bool is_lower(const ElementSet& s) const {
    if (s.size() != size()) return false;
    for (std::size_t v = 0; v < size(); ++v) {
      if (!s[v]) continue;
      for (std::size_t u = 0; u < size(); ++u)
        if (leq_[u][v] && !s[u]) return false;
    }
    return true;
  }

  const std::vector<std::size_t>& bottom_up() const noexcept { return bottom_up_; }
  std::vector<std::size_t> top_down() const { return {bottom_up_.rbegin(), bottom_up_.rend()}; }

  friend bool operator==(const FinPoset& a, const FinPoset& b) { return a.ids_ == b.ids_ && a.leq_ == b.leq_; }

 private:
  static std::vector<std::string> default_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("e" + std::to_string(i));
    return ids;
  }

  std::vector<std::string> ids_;
  std::vector<std::vector<bool>> leq_;
  std::vector<std::size_t> bottom_up_;
};

/// A contravariant functor from a finite poset to finite sets.
class Presheaf {
 public:
  /// restrictions[v][vp][x] = image of point x at v in the component at vp, for vp <= v.
  using Table = std::vector<std::vector<std::vector<std::size_t>>>;
  using RestrictionFn = std::function<std::size_t(std::size_t v, std::size_t vp, std::size_t x)>;

  Presheaf() = default;

  Presheaf(FinPoset base, std::vector<std::size_t> sizes, Table restrictions)
      : base_(std::move(base)), sizes_(std::move(sizes)), restr_(std::move(restrictions)) {
    validate();
  }

  Presheaf(FinPoset base, std::vector<std::size_t> sizes, const RestrictionFn& restrict)
      : base_(std::move(base)), sizes_(std::move(sizes)) {
    const std::size_t n = base_.size();
    if (sizes_.size() != n) fail(ErrorKind::InvalidArgument, "one component size per poset element required");
    restr_.assign(n, std::vector<std::vector<std::size_t>>(n));
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t vp = 0; vp < n; ++vp) {
        if (!base_.leq(vp, v)) continue;
        auto& map = restr_[v][vp];
        for (std::size_t x = 0; x < sizes_[v]; ++x) map.push_back(v == vp ? x : restrict(v, vp, x));
      }
    validate();
  }

  /// Same set at every element, identity restrictions.
  static Presheaf constant(const FinPoset& base, std::size_t points) {
    return Presheaf(base, std::vector<std::size_t>(base.size(), points),
                    [](std::size_t, std::size_t, std::size_t x) { return x; });
  }

  const FinPoset& base() const noexcept { return base_; }
  std::size_t size(std::size_t v) const { return sizes_.at(v); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t restrict(std::size_t v, std::size_t vp, std::size_t x) const {
    if (!base_.leq(vp, v)) fail(ErrorKind::InvalidArgument, "restriction requested along a non-inclusion");
    return restr_[v][vp].at(x);
  }
  const Table& table() const noexcept { return restr_; }

  friend bool operator==(const Presheaf& a, const Presheaf& b) {
    return a.sizes_ == b.sizes_ && a.restr_ == b.restr_ && a.base_ == b.base_;
  }

 private:
  void validate() const {
    const std::size_t n = base_.size();
    if (sizes_.size() != n || restr_.size() != n)
      fail(ErrorKind::InvalidArgument, "presheaf components do not match the base poset");
    for (std::size_t v = 0; v < n; ++v) {
      if (restr_[v].size() != n) fail(ErrorKind::InvalidArgument, "restriction table has the wrong shape");
      for (std::size_t vp = 0; vp < n; ++vp) {
        if (!base_.leq(vp, v)) continue;
        const auto& map = restr_[v][vp];
        if (map.size() != sizes_[v]) fail(ErrorKind::InvalidArgument, "restriction map has the wrong domain");
        for (std::size_t x = 0; x < map.size(); ++x) {
          if (map[x] >= sizes_[vp]) fail(ErrorKind::InvalidArgument, "restriction map leaves its codomain");
          if (v == vp && map[x] != x) fail(ErrorKind::InvalidArgument, "restriction along V <= V is not the identity");
        }
      }
    }
    for (std::size_t w = 0; w < n; ++w)
      for (std::size_t v = 0; v < n; ++v) {
        if (!base_.leq(v, w)) continue;
        for (std::size_t u = 0; u < n; ++u) {
          if (!base_.leq(u, v)) continue;
          for (std::size_t x = 0; x < sizes_[w]; ++x)
            if (restr_[v][u][restr_[w][v][x]] != restr_[w][u][x])
              fail(ErrorKind::InvalidArgument, "restrictions do not compose through " + base_.id(v));
        }
      }
  }

  FinPoset base_;
  std::vector<std::size_t> sizes_;
  Table restr_;
};

using PresheafPtr = std::shared_ptr<const Presheaf>;

inline PresheafPtr share(Presheaf p) { return std::make_shared<const Presheaf>(std::move(p)); }

inline bool same_presheaf(const PresheafPtr& a, const PresheafPtr& b) { return a == b || (a && b && *a == *b); }

/// Count of composable triples U <= V <= W and points x at W with r_VU(r_WV(x)) != r_WU(x).
inline std::size_t functoriality_violations(const Presheaf::Table& restr, const FinPoset& base,
                                            const std::vector<std::size_t>& sizes) {
  std::size_t bad = 0;
  const std::size_t n = base.size();
  for (std::size_t w = 0; w < n; ++w)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t u = 0; u < n; ++u) {
        if (!base.leq(v, w) || !base.leq(u, v)) continue;
        for (std::size_t x = 0; x < sizes[w]; ++x)
          if (restr[v][u][restr[w][v][x]] != restr[w][u][x]) ++bad;
      }
  return bad;
}

inline Presheaf terminal(const FinPoset& base) { return Presheaf::constant(base, 1); }
inline Presheaf initial(const FinPoset& base) { return Presheaf::constant(base, 0); }

namespace detail {

inline void require_same_base(const FinPoset& a, const FinPoset& b) {
  if (!(a == b)) fail(ErrorKind::BaseMismatch, "presheaves live over different posets");
}

inline void count_state(std::size_t& states) {
  if (++states > kMaxSearchStates)
    fail(ErrorKind::SizeLimit, "search exceeds " + std::to_string(kMaxSearchStates) + " states");
}

inline std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && out > kMaxComponentSize / base)
      fail(ErrorKind::SizeLimit, "component would exceed " + std::to_string(kMaxComponentSize) + " points");
    out *= base;
  }
  return out;
}

}  // namespace detail

/// Componentwise cartesian product; the pair (a, b) is point a * |B(v)| + b.
inline Presheaf product(const Presheaf& a, const Presheaf& b) {
  detail::require_same_base(a.base(), b.base());
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < a.base().size(); ++v) {
    if (a.size(v) != 0 && b.size(v) > kMaxComponentSize / a.size(v))
      fail(ErrorKind::SizeLimit, "product component too large");
    sizes.push_back(a.size(v) * b.size(v));
  }
  return Presheaf(a.base(), sizes, [&](std::size_t v, std::size_t vp, std::size_t x) {
    const std::size_t nb = b.size(v);
    return a.restrict(v, vp, x / nb) * b.size(vp) + b.restrict(v, vp, x % nb);
  });
}

/// A compatible choice of one point per element.
using GlobalElement = std::vector<std::size_t>;

/// Every global element, in lexicographic order of points along the element order.
inline std::vector<GlobalElement> global_elements(const Presheaf& x) {
  const FinPoset& base = x.base();
  const auto order = base.top_down();
  std::vector<GlobalElement> out;
  GlobalElement point(base.size(), 0);
  std::vector<bool> assigned(base.size(), false);
  std::size_t states = 0;

  std::function<void(std::size_t)> search = [&](std::size_t depth) {
    if (depth == order.size()) {
      out.push_back(point);
      return;
    }
    const std::size_t v = order[depth];
    // All elements above v are assigned; they pin the point at v.
    std::optional<std::size_t> forced;
    for (std::size_t w = 0; w < base.size(); ++w) {
      if (w == v || !assigned[w] || !base.leq(v, w)) continue;
      const std::size_t image = x.restrict(w, v, point[w]);
      if (forced && *forced != image) return;
      forced = image;
    }
    const std::size_t lo = forced ? *forced : 0, hi = forced ? *forced + 1 : x.size(v);
    for (std::size_t p = lo; p < hi && p < x.size(v); ++p) {
      detail::count_state(states);
      point[v] = p;
      assigned[v] = true;
      search(depth + 1);
      assigned[v] = false;
    }
  };
  search(0);
  std::sort(out.begin(), out.end());
  return out;
}

inline bool is_global_element(const Presheaf& x, const GlobalElement& point) {
  const FinPoset& base = x.base();
  if (point.size() != base.size()) return false;
  for (std::size_t v = 0; v < base.size(); ++v)
    if (point[v] >= x.size(v)) return false;
  for (std::size_t w = 0; w < base.size(); ++w)
    for (std::size_t v = 0; v < base.size(); ++v)
      if (base.leq(v, w) && x.restrict(w, v, point[w]) != point[v]) return false;
  return true;
}

/// An arrow of presheaves: components[v][x] is the image of point x at v.
class NatTransform {
 public:
  using Components = std::vector<std::vector<std::size_t>>;

  NatTransform(PresheafPtr source, PresheafPtr target, Components components)
      : source_(std::move(source)), target_(std::move(target)), components_(std::move(components)) {
    detail::require_same_base(source_->base(), target_->base());
    const FinPoset& base = source_->base();
    if (components_.size() != base.size()) fail(ErrorKind::NotNatural, "one component per element required");
    for (std::size_t v = 0; v < base.size(); ++v) {
      if (components_[v].size() != source_->size(v)) fail(ErrorKind::NotNatural, "component has the wrong domain");
      for (std::size_t y : components_[v])
        if (y >= target_->size(v)) fail(ErrorKind::NotNatural, "component leaves its codomain");
    }
    for (std::size_t v = 0; v < base.size(); ++v)
      for (std::size_t vp = 0; vp < base.size(); ++vp) {
        if (!base.leq(vp, v)) continue;
        for (std::size_t x = 0; x < source_->size(v); ++x)
          if (components_[vp][source_->restrict(v, vp, x)] != target_->restrict(v, vp, components_[v][x]))
            fail(ErrorKind::NotNatural, "naturality square fails for " + base.id(vp) + " <= " + base.id(v));
      }
  }

  const Presheaf& source() const noexcept { return *source_; }
  const Presheaf& target() const noexcept { return *target_; }
  const PresheafPtr& source_ptr() const noexcept { return source_; }
  const PresheafPtr& target_ptr() const noexcept { return target_; }
  std::size_t operator()(std::size_t v, std::size_t x) const { return components_.at(v).at(x); }
  const Components& components() const noexcept { return components_; }

 private:
  PresheafPtr source_;
  PresheafPtr target_;
  Components components_;
};

/// The global element `point` of X as an arrow 1 -> X.
inline NatTransform as_transform(const GlobalElement& point, const PresheafPtr& x) {
  NatTransform::Components comps;
  for (std::size_t p : point) comps.push_back({p});
  return NatTransform(share(terminal(x->base())), x, std::move(comps));
}

namespace detail {

/// Enumerates natural families A|S -> B|S over a downward-closed element set S.
/// Components outside S are left empty.
inline std::vector<NatTransform::Components> natural_families(const Presheaf& a, const Presheaf& b,
                                                              const ElementSet& within) {
  require_same_base(a.base(), b.base());
  const FinPoset& base = a.base();
  std::vector<std::size_t> order;
  for (std::size_t v : base.top_down())
    if (within[v]) order.push_back(v);
  for (std::size_t v : order) checked_power(b.size(v), a.size(v));

  std::vector<NatTransform::Components> out;
  NatTransform::Components comps(base.size());
  std::size_t states = 0;

  std::function<void(std::size_t)> search = [&](std::size_t depth) {
    if (depth == order.size()) {
      out.push_back(comps);
      return;
    }
    const std::size_t v = order[depth];
    const std::size_t na = a.size(v), nb = b.size(v);
    // Points hit by a restriction from above are pinned by naturality.
    std::vector<std::optional<std::size_t>> pinned(na);
    for (std::size_t w = 0; w < base.size(); ++w) {
      if (w == v || !within[w] || !base.leq(v, w)) continue;
      for (std::size_t x = 0; x < a.size(w); ++x) {
        const std::size_t src = a.restrict(w, v, x);
        const std::size_t dst = b.restrict(w, v, comps[w][x]);
        if (pinned[src] && *pinned[src] != dst) return;
        pinned[src] = dst;
      }
    }
    std::vector<std::size_t> free;
    auto& f = comps[v];
    f.assign(na, 0);
    for (std::size_t x = 0; x < na; ++x) {
      if (pinned[x]) f[x] = *pinned[x];
      else free.push_back(x);
    }
    if (nb == 0 && !free.empty()) {
      f.clear();
      return;
    }
    // Odometer over the free points.
    while (true) {
      count_state(states);
      search(depth + 1);
      std::size_t i = 0;
      while (i < free.size() && ++f[free[i]] == nb) f[free[i++]] = 0;
      if (i == free.size()) break;
    }
    f.clear();
  };
  search(0);
  return out;
}

}  // namespace detail

/// Hom(X, Y) by exhaustive enumeration.
inline std::vector<NatTransform::Components> morphisms(const Presheaf& x, const Presheaf& y) {
  return detail::natural_families(x, y, ElementSet(x.base().size(), true));
}

inline std::size_t count_morphisms(const Presheaf& x, const Presheaf& y) { return morphisms(x, y).size(); }

/// A subset of points at every element, closed under restriction.
class Subobject {
 public:
  using Parts = std::vector<std::vector<bool>>;

  Subobject(PresheafPtr parent, Parts parts) : parent_(std::move(parent)), parts_(std::move(parts)) {
    const Presheaf& x = *parent_;
    const FinPoset& base = x.base();
    if (parts_.size() != base.size()) fail(ErrorKind::InvalidArgument, "one part per element required");
    for (std::size_t v = 0; v < base.size(); ++v)
      if (parts_[v].size() != x.size(v)) fail(ErrorKind::InvalidArgument, "part does not match its component");
    for (std::size_t v = 0; v < base.size(); ++v)
      for (std::size_t vp = 0; vp < base.size(); ++vp) {
        if (!base.leq(vp, v)) continue;
        for (std::size_t p = 0; p < x.size(v); ++p)
          if (parts_[v][p] && !parts_[vp][x.restrict(v, vp, p)])
            fail(ErrorKind::InvalidArgument,
                 "parts are not closed under restriction from " + base.id(v) + " to " + base.id(vp));
      }
  }

  static Subobject whole(const PresheafPtr& parent) { return filled(parent, true); }
  static Subobject empty(const PresheafPtr& parent) { return filled(parent, false); }

  const Presheaf& parent() const noexcept { return *parent_; }
  const PresheafPtr& parent_ptr() const noexcept { return parent_; }
  const Parts& parts() const noexcept { return parts_; }
  bool contains(std::size_t v, std::size_t x) const { return parts_.at(v).at(x); }

  bool leq(const Subobject& other) const {
    require_same_parent(other);
    for (std::size_t v = 0; v < parts_.size(); ++v)
      for (std::size_t x = 0; x < parts_[v].size(); ++x)
        if (parts_[v][x] && !other.parts_[v][x]) return false;
    return true;
  }

  void require_same_parent(const Subobject& other) const {
    if (!same_presheaf(parent_, other.parent_)) fail(ErrorKind::ParentMismatch, "subobjects of different presheaves");
  }

  friend bool operator==(const Subobject& a, const Subobject& b) {
    return same_presheaf(a.parent_, b.parent_) && a.parts_ == b.parts_;
  }

 private:
  static Subobject filled(const PresheafPtr& parent, bool value) {
    Parts parts;
    for (std::size_t v = 0; v < parent->base().size(); ++v) parts.emplace_back(parent->size(v), value);
    return Subobject(parent, std::move(parts));
  }

  PresheafPtr parent_;
  Parts parts_;
};

namespace detail {

/// All restriction-closed families of parts supported on the lower set `within`
/// (parts outside it are all-false), in canonical order.
inline std::vector<Subobject::Parts> closed_parts(const Presheaf& x, const ElementSet& within) {
  const FinPoset& base = x.base();
  std::vector<std::size_t> order;
  for (std::size_t v : base.bottom_up())
    if (within[v]) {
      if (x.size(v) > 20) fail(ErrorKind::SizeLimit, "component too large to enumerate its subsets");
      order.push_back(v);
    }
  Subobject::Parts parts;
  for (std::size_t v = 0; v < base.size(); ++v) parts.emplace_back(x.size(v), false);
  std::vector<Subobject::Parts> out;
  std::size_t states = 0;

  std::function<void(std::size_t)> search = [&](std::size_t depth) {
    if (depth == order.size()) {
      out.push_back(parts);
      return;
    }
    const std::size_t v = order[depth];
    std::vector<std::size_t> allowed;
    for (std::size_t p = 0; p < x.size(v); ++p) {
      bool ok = true;
      for (std::size_t u = 0; u < base.size() && ok; ++u)
        if (u != v && within[u] && base.leq(u, v)) ok = parts[u][x.restrict(v, u, p)];
      if (ok) allowed.push_back(p);
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << allowed.size()); ++mask) {
      count_state(states);
      for (std::size_t i = 0; i < allowed.size(); ++i) parts[v][allowed[i]] = (mask >> i & 1U) != 0;
      search(depth + 1);
    }
    std::fill(parts[v].begin(), parts[v].end(), false);
  };
  search(0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Sub(X), exhaustively.
inline std::vector<Subobject> all_subobjects(const PresheafPtr& x) {
  std::vector<Subobject> out;
  for (auto& parts : detail::closed_parts(*x, ElementSet(x->base().size(), true)))
    out.emplace_back(x, std::move(parts));
  return out;
}

inline Subobject heyting_meet(const Subobject& j, const Subobject& k) {
  j.require_same_parent(k);
  Subobject::Parts parts = j.parts();
  for (std::size_t v = 0; v < parts.size(); ++v)
    for (std::size_t x = 0; x < parts[v].size(); ++x) parts[v][x] = parts[v][x] && k.contains(v, x);
  return Subobject(j.parent_ptr(), std::move(parts));
}

inline Subobject heyting_join(const Subobject& j, const Subobject& k) {
  j.require_same_parent(k);
  Subobject::Parts parts = j.parts();
  for (std::size_t v = 0; v < parts.size(); ++v)
    for (std::size_t x = 0; x < parts[v].size(); ++x) parts[v][x] = parts[v][x] || k.contains(v, x);
  return Subobject(j.parent_ptr(), std::move(parts));
}

/// Relative pseudo-complement: x is in (J => K)(V) when every restriction of x
/// that lands in J also lands in K.
inline Subobject heyting_implies(const Subobject& j, const Subobject& k) {
  j.require_same_parent(k);
  const Presheaf& x = j.parent();
  const FinPoset& base = x.base();
  Subobject::Parts parts;
  for (std::size_t v = 0; v < base.size(); ++v) {
    std::vector<bool> part(x.size(v), true);
    for (std::size_t p = 0; p < x.size(v); ++p)
      for (std::size_t vp = 0; vp < base.size() && part[p]; ++vp) {
        if (!base.leq(vp, v)) continue;
        const std::size_t r = x.restrict(v, vp, p);
        if (j.contains(vp, r) && !k.contains(vp, r)) part[p] = false;
      }
    parts.push_back(std::move(part));
  }
  return Subobject(j.parent_ptr(), std::move(parts));
}

inline Subobject heyting_not(const Subobject& j) { return heyting_implies(j, Subobject::empty(j.parent_ptr())); }

/// A downward-closed set of elements: the canonical form of a global element of Omega.
class LowerSet {
 public:
  LowerSet(FinPoset base, ElementSet members) : base_(std::move(base)), members_(std::move(members)) {
    if (!base_.is_lower(members_))
      fail(ErrorKind::DownwardClosureViolation, "element set is not downward closed");
  }

  static LowerSet full(const FinPoset& base) { return LowerSet(base, ElementSet(base.size(), true)); }
  static LowerSet empty(const FinPoset& base) { return LowerSet(base, ElementSet(base.size(), false)); }

  const FinPoset& base() const noexcept { return base_; }
  const ElementSet& members() const noexcept { return members_; }
  bool contains(std::size_t v) const { return members_.at(v); }
  bool is_full() const { return std::all_of(members_.begin(), members_.end(), [](bool b) { return b; }); }
  bool is_empty() const { return std::none_of(members_.begin(), members_.end(), [](bool b) { return b; }); }
  std::vector<std::string> member_ids() const {
    std::vector<std::string> out;
    for (std::size_t v = 0; v < members_.size(); ++v)
      if (members_[v]) out.push_back(base_.id(v));
    return out;
  }

  friend bool operator==(const LowerSet& a, const LowerSet& b) {
    return a.members_ == b.members_ && a.base_ == b.base_;
  }

 private:
  FinPoset base_;
  ElementSet members_;
};

enum class HeytingOp { Meet, Join, Implies, Not };

inline LowerSet lowerset_heyting(const LowerSet& a, const LowerSet& b, HeytingOp op) {
  if (!(a.base() == b.base())) fail(ErrorKind::BaseMismatch, "lower sets over different posets");
  const FinPoset& base = a.base();
  ElementSet out(base.size(), false);
  auto implies = [&](const LowerSet& lhs, const LowerSet& rhs) {
    for (std::size_t v = 0; v < base.size(); ++v) {
      bool ok = true;
      for (std::size_t vp = 0; vp < base.size() && ok; ++vp)
        if (base.leq(vp, v) && lhs.contains(vp) && !rhs.contains(vp)) ok = false;
      out[v] = ok;
    }
  };
  switch (op) {
    case HeytingOp::Meet:
      for (std::size_t v = 0; v < base.size(); ++v) out[v] = a.contains(v) && b.contains(v);
      break;
    case HeytingOp::Join:
      for (std::size_t v = 0; v < base.size(); ++v) out[v] = a.contains(v) || b.contains(v);
      break;
    case HeytingOp::Implies:
      implies(a, b);
      break;
    case HeytingOp::Not:
      implies(a, LowerSet::empty(base));
      break;
  }
  return LowerSet(base, std::move(out));
}

inline LowerSet lowerset_not(const LowerSet& a) { return lowerset_heyting(a, a, HeytingOp::Not); }

/// Every lower set of the poset, in canonical order.
inline std::vector<LowerSet> all_lower_sets(const FinPoset& base) {
  std::vector<LowerSet> out;
  for (auto& parts : detail::closed_parts(terminal(base), ElementSet(base.size(), true))) {
    ElementSet members(base.size());
    for (std::size_t v = 0; v < base.size(); ++v) members[v] = parts[v][0];
    out.emplace_back(base, std::move(members));
  }
  return out;
}

/// The subobject classifier: Omega(V) is the set of sieves on V, i.e. lower
/// subsets of the principal lower set of V.
class Omega {
 public:
  explicit Omega(const FinPoset& base) {
    const std::size_t n = base.size();
    sieves_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      for (auto& parts : detail::closed_parts(terminal(base), base.down(v))) {
        ElementSet sieve(n);
        for (std::size_t u = 0; u < n; ++u) sieve[u] = parts[u][0];
        sieves_[v].push_back(std::move(sieve));
      }
      std::sort(sieves_[v].begin(), sieves_[v].end());
    }
    std::vector<std::size_t> sizes;
    for (const auto& s : sieves_) sizes.push_back(s.size());
    presheaf_ = share(Presheaf(base, sizes, [&](std::size_t v, std::size_t vp, std::size_t k) {
      ElementSet cut = sieves_[v][k];
      const ElementSet down = base.down(vp);
      for (std::size_t u = 0; u < n; ++u) cut[u] = cut[u] && down[u];
      return index_of(vp, cut);
    }));
  }

  const Presheaf& presheaf() const noexcept { return *presheaf_; }
  const PresheafPtr& presheaf_ptr() const noexcept { return presheaf_; }
  const ElementSet& sieve(std::size_t v, std::size_t k) const { return sieves_.at(v).at(k); }

  std::size_t index_of(std::size_t v, const ElementSet& sieve) const {
    const auto& list = sieves_.at(v);
    const auto it = std::lower_bound(list.begin(), list.end(), sieve);
    if (it == list.end() || *it != sieve) fail(ErrorKind::InvalidArgument, "not a sieve on " + std::to_string(v));
    return static_cast<std::size_t>(it - list.begin());
  }
  /// The maximal sieve (the principal lower set) on v.
  std::size_t top(std::size_t v) const { return index_of(v, presheaf_->base().down(v)); }

  /// Global elements of Omega correspond to lower sets: L = { V : V in S_V }.
  LowerSet as_lower_set(const GlobalElement& point) const {
    const FinPoset& base = presheaf_->base();
    if (!is_global_element(*presheaf_, point)) fail(ErrorKind::NotGlobalElement, "not a global element of Omega");
    ElementSet members(base.size());
    for (std::size_t v = 0; v < base.size(); ++v) members[v] = sieves_[v][point[v]][v];
    return LowerSet(base, std::move(members));
  }
  GlobalElement from_lower_set(const LowerSet& l) const {
    const FinPoset& base = presheaf_->base();
    GlobalElement point;
    for (std::size_t v = 0; v < base.size(); ++v) {
      ElementSet sieve = l.members();
      const ElementSet down = base.down(v);
      for (std::size_t u = 0; u < base.size(); ++u) sieve[u] = sieve[u] && down[u];
      point.push_back(index_of(v, sieve));
    }
    return point;
  }

 private:
  std::vector<std::vector<ElementSet>> sieves_;
  PresheafPtr presheaf_;
};

inline Omega omega(const FinPoset& base) { return Omega(base); }

/// chi_K(V)(x) = { V' <= V : x restricted to V' lies in K(V') }.
inline NatTransform characteristic(const Subobject& k, const Omega& omega) {
  const Presheaf& x = k.parent();
  const FinPoset& base = x.base();
  detail::require_same_base(base, omega.presheaf().base());
  NatTransform::Components comps(base.size());
  for (std::size_t v = 0; v < base.size(); ++v)
    for (std::size_t p = 0; p < x.size(v); ++p) {
      ElementSet sieve(base.size(), false);
      for (std::size_t vp = 0; vp < base.size(); ++vp)
        sieve[vp] = base.leq(vp, v) && k.contains(vp, x.restrict(v, vp, p));
      comps[v].push_back(omega.index_of(v, sieve));
    }
  return NatTransform(k.parent_ptr(), omega.presheaf_ptr(), std::move(comps));
}

inline NatTransform characteristic(const Subobject& k) { return characteristic(k, Omega(k.parent().base())); }

/// Pullback of the maximal-sieve point along chi.
inline Subobject subobject_from_characteristic(const NatTransform& chi, const Omega& omega) {
  if (!same_presheaf(chi.target_ptr(), omega.presheaf_ptr()))
    fail(ErrorKind::NotNatural, "arrow does not land in the subobject classifier");
  const Presheaf& x = chi.source();
  Subobject::Parts parts;
  for (std::size_t v = 0; v < x.base().size(); ++v) {
    std::vector<bool> part(x.size(v));
    const std::size_t top = omega.top(v);
    for (std::size_t p = 0; p < x.size(v); ++p) part[p] = chi(v, p) == top;
    parts.push_back(std::move(part));
  }
  return Subobject(chi.source_ptr(), std::move(parts));
}

/// B^A: at V, the natural families A|down(V) -> B|down(V); restriction truncates.
class Exponential {
 public:
  Exponential(const Presheaf& a, const Presheaf& b) {
    detail::require_same_base(a.base(), b.base());
    const FinPoset& base = a.base();
    families_.resize(base.size());
    for (std::size_t v = 0; v < base.size(); ++v) {
      families_[v] = detail::natural_families(a, b, base.down(v));
      std::sort(families_[v].begin(), families_[v].end());
      if (families_[v].size() > kMaxComponentSize) fail(ErrorKind::SizeLimit, "exponential component too large");
    }
    std::vector<std::size_t> sizes;
    for (const auto& f : families_) sizes.push_back(f.size());
    presheaf_ = share(Presheaf(base, sizes, [&](std::size_t v, std::size_t vp, std::size_t k) {
      auto cut = families_[v][k];
      const ElementSet down = base.down(vp);
      for (std::size_t u = 0; u < base.size(); ++u)
        if (!down[u]) cut[u].clear();
      return index_of(vp, cut);
    }));
  }

  const Presheaf& presheaf() const noexcept { return *presheaf_; }
  const PresheafPtr& presheaf_ptr() const noexcept { return presheaf_; }
  const NatTransform::Components& family(std::size_t v, std::size_t k) const { return families_.at(v).at(k); }

  std::size_t index_of(std::size_t v, const NatTransform::Components& family) const {
    const auto& list = families_.at(v);
    const auto it = std::lower_bound(list.begin(), list.end(), family);
    if (it == list.end() || *it != family) fail(ErrorKind::InvalidArgument, "not a natural family");
    return static_cast<std::size_t>(it - list.begin());
  }

 private:
  std::vector<std::vector<NatTransform::Components>> families_;
  PresheafPtr presheaf_;
};

inline Exponential exponential(const Presheaf& a, const Presheaf& b) { return Exponential(a, b); }

/// PX = Omega^X: at V, the subobjects of X restricted to down(V).
class PowerObject {
 public:
  explicit PowerObject(PresheafPtr x) : x_(std::move(x)) {
    const FinPoset& base = x_->base();
    members_.resize(base.size());
    for (std::size_t v = 0; v < base.size(); ++v) {
      members_[v] = detail::closed_parts(*x_, base.down(v));
      if (members_[v].size() > kMaxComponentSize) fail(ErrorKind::SizeLimit, "power object component too large");
    }
    std::vector<std::size_t> sizes;
    for (const auto& m : members_) sizes.push_back(m.size());
    presheaf_ = share(Presheaf(base, sizes, [&](std::size_t v, std::size_t vp, std::size_t k) {
      return index_of(vp, truncate(members_[v][k], vp));
    }));
  }

  const Presheaf& presheaf() const noexcept { return *presheaf_; }
  const PresheafPtr& presheaf_ptr() const noexcept { return presheaf_; }
  const PresheafPtr& of() const noexcept { return x_; }
  const Subobject::Parts& member(std::size_t v, std::size_t k) const { return members_.at(v).at(k); }

  /// Parts of a subobject cut down to down(v).
  Subobject::Parts truncate(Subobject::Parts parts, std::size_t v) const {
    const ElementSet down = x_->base().down(v);
    for (std::size_t u = 0; u < parts.size(); ++u)
      if (!down[u]) std::fill(parts[u].begin(), parts[u].end(), false);
    return parts;
  }

  std::size_t index_of(std::size_t v, const Subobject::Parts& parts) const {
    const auto& list = members_.at(v);
    const auto it = std::lower_bound(list.begin(), list.end(), parts);
    if (it == list.end() || *it != parts) fail(ErrorKind::InvalidArgument, "not a local subobject");
    return static_cast<std::size_t>(it - list.begin());
  }

 private:
  PresheafPtr x_;
  std::vector<std::vector<Subobject::Parts>> members_;
  PresheafPtr presheaf_;
};

inline PowerObject power_object(const PresheafPtr& x) { return PowerObject(x); }

/// The name of K: the global element V -> K restricted to down(V) of PX.
inline GlobalElement name_of(const Subobject& k, const PowerObject& px) {
  if (!same_presheaf(k.parent_ptr(), px.of())) fail(ErrorKind::ParentMismatch, "subobject of a different presheaf");
  GlobalElement point;
  for (std::size_t v = 0; v < k.parent().base().size(); ++v) point.push_back(px.index_of(v, px.truncate(k.parts(), v)));
  return point;
}

/// [[x in K]] = { V : x_V in K(V) }.
inline LowerSet truth_value_membership(const GlobalElement& x, const Subobject& k) {
  const Presheaf& parent = k.parent();
  if (!is_global_element(parent, x)) fail(ErrorKind::NotGlobalElement, "point is not a global element of the parent");
  ElementSet members(parent.base().size());
  for (std::size_t v = 0; v < members.size(); ++v) members[v] = k.contains(v, x[v]);
  return LowerSet(parent.base(), std::move(members));
}

/// [[J subset K]] = { V : J(V') within K(V') for all V' <= V }.
inline LowerSet truth_value_inclusion(const Subobject& j, const Subobject& k) {
  j.require_same_parent(k);
  const Presheaf& x = j.parent();
  const FinPoset& base = x.base();
  std::vector<bool> pointwise(base.size(), true);
  for (std::size_t v = 0; v < base.size(); ++v)
    for (std::size_t p = 0; p < x.size(v); ++p)
      if (j.contains(v, p) && !k.contains(v, p)) pointwise[v] = false;
  ElementSet members(base.size());
  for (std::size_t v = 0; v < base.size(); ++v) {
    bool ok = true;
    for (std::size_t vp = 0; vp < base.size() && ok; ++vp)
      if (base.leq(vp, v) && !pointwise[vp]) ok = false;
    members[v] = ok;
  }
  return LowerSet(base, std::move(members));
}

/// [[K in T]] = chi_T composed with the name of K, read as a lower set.
inline LowerSet truth_value_element_of(const PowerObject& px, const Subobject& t, const Subobject& k) {
  if (!same_presheaf(t.parent_ptr(), px.presheaf_ptr()))
    fail(ErrorKind::ParentMismatch, "truth object is not a subobject of the power object");
  const GlobalElement name = name_of(k, px);
  ElementSet members(name.size());
  for (std::size_t v = 0; v < name.size(); ++v) members[v] = t.contains(v, name[v]);
  return LowerSet(k.parent().base(), std::move(members));
}

/// Every presheaf over `base` with at most `max_points` points per component:
/// all component sizes and all functorial restriction tables.
inline std::vector<Presheaf> all_presheaves(const FinPoset& base, std::size_t max_points) {
  const std::size_t n = base.size();
  // Covering pairs (v, m): m < v with nothing strictly between.
  std::vector<std::pair<std::size_t, std::size_t>> covers;
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t m = 0; m < n; ++m) {
      if (v == m || !base.leq(m, v)) continue;
      bool cover = true;
      for (std::size_t k = 0; k < n && cover; ++k)
        if (k != v && k != m && base.leq(m, k) && base.leq(k, v)) cover = false;
      if (cover) covers.emplace_back(v, m);
    }
  std::vector<Presheaf> out;
  std::vector<std::size_t> sizes(n, 0);
  std::vector<std::vector<std::size_t>> maps(covers.size());
  std::size_t states = 0;

  // Every restriction is a composite of cover maps; functoriality then
  // rejects tables where two paths disagree.
  auto emit = [&] {
    detail::count_state(states);
    Presheaf::Table table(n, std::vector<std::vector<std::size_t>>(n));
    for (std::size_t v : base.bottom_up()) {
      table[v][v].resize(sizes[v]);
      for (std::size_t x = 0; x < sizes[v]; ++x) table[v][v][x] = x;
      for (std::size_t vp = 0; vp < n; ++vp) {
        if (vp == v || !base.leq(vp, v)) continue;
        for (std::size_t c = 0; c < covers.size(); ++c) {
          const auto [top, mid] = covers[c];
          if (top != v || !base.leq(vp, mid)) continue;
          auto& slot = table[v][vp];
          slot.resize(sizes[v]);
          for (std::size_t x = 0; x < sizes[v]; ++x) slot[x] = table[mid][vp][maps[c][x]];
          break;
        }
      }
    }
    if (functoriality_violations(table, base, sizes) == 0) out.emplace_back(base, sizes, std::move(table));
  };

  std::function<void(std::size_t)> over_maps = [&](std::size_t c) {
    if (c == covers.size()) {
      emit();
      return;
    }
    const auto [v, m] = covers[c];
    if (sizes[m] == 0 && sizes[v] > 0) return;
    maps[c].assign(sizes[v], 0);
    while (true) {
      over_maps(c + 1);
      std::size_t x = 0;
      while (x < sizes[v] && ++maps[c][x] == sizes[m]) maps[c][x++] = 0;
      if (x == sizes[v]) break;
    }
  };
  std::function<void(std::size_t)> over_sizes = [&](std::size_t i) {
    if (i == n) {
      over_maps(0);
      return;
    }
    for (std::size_t s = 0; s <= max_points; ++s) {
      sizes[i] = s;
      over_sizes(i + 1);
    }
  };
  over_sizes(0);
  return out;
}

}  // namespace qtopos
