#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace qtopos {
namespace {

const Tolerance kTol{};
const double kSqrtHalf = std::sqrt(0.5);

ContextPoset pauli_poset() {
  return build_poset(builtin_scenario("pauli2").maximal, ClosurePolicy::Intersections, kTol);
}

ContextPoset mermin_poset() {
  return build_poset(builtin_scenario("mermin-square").maximal, ClosurePolicy::Intersections, kTol);
}

Context ctx(const std::vector<Operator>& ops) { return context_from_commuting_set(ops, kTol); }

Vector zplus() { return Vector::unit(Vector{1.0, 0.0}.entries(), kTol); }

Operator pz_plus() { return Operator::diagonal({1, 0}); }
Operator px_plus() { return 0.5 * Operator{{1.0, 1.0}, {1.0, 1.0}}; }
Operator px_minus() { return 0.5 * Operator{{1.0, -1.0}, {-1.0, 1.0}}; }

std::size_t block_of(const Context& v, const Operator& p) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.block(i).approx_equal(p, kTol)) return i;
  ADD_FAILURE() << "no such block";
  return 0;
}

// Contexts of the pauli2 poset by generating observable.
struct PauliIndex {
  std::size_t x, y, z;
};
PauliIndex pauli_index(const ContextPoset& p) {
  PauliIndex out{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.context(i).same_algebra(ctx({pauli::x()}), kTol)) out.x = i;
    if (p.context(i).same_algebra(ctx({pauli::y()}), kTol)) out.y = i;
    if (p.context(i).same_algebra(ctx({pauli::z()}), kTol)) out.z = i;
  }
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::InvalidArgument;
}

TEST(SpectralPresheaf, PauliAntichain) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  EXPECT_EQ(s.presheaf().sizes(), (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_TRUE(s.poset().strict_pairs().empty());
}

TEST(SpectralPresheaf, CoarseningMergesTwoToOne) {
  const Context fine = ctx({Operator::diagonal({0, 1, 2, 3})});
  const Context coarse = ctx({Operator::diagonal({0, 0, 1, 1})});
  const SpectralPresheaf s(build_poset({fine, coarse}, ClosurePolicy::Intersections, kTol), kTol);
  ASSERT_EQ(s.size(), 2u);
  const std::size_t vf = s.context(0).size() == 4 ? 0 : 1, vc = 1 - vf;
  std::vector<std::size_t> hits(2, 0);
  for (std::size_t q = 0; q < 4; ++q) ++hits[s.presheaf().restrict(vf, vc, q)];
  EXPECT_EQ(hits, (std::vector<std::size_t>{2, 2}));
}

TEST(SpectralPresheaf, MerminRestrictionsLandUnderParents) {
  const SpectralPresheaf s(mermin_poset(), kTol);
  const auto pairs = s.poset().strict_pairs();
  // Each of the nine two-block contexts lies under one row and one column.
  EXPECT_EQ(pairs.size(), 18u);
  for (auto [small, big] : pairs) {
    std::vector<bool> hit(s.context(small).size(), false);
    for (std::size_t q = 0; q < s.context(big).size(); ++q) {
      const std::size_t p = s.presheaf().restrict(big, small, q);
      EXPECT_TRUE(proj_leq(s.context(big).block(q), s.context(small).block(p), kTol));
      hit[p] = true;
    }
    EXPECT_EQ(std::count(hit.begin(), hit.end(), true), 2);
  }
}

TEST(SpectralPresheaf, ParentBlockAmbiguity) {
  const Context z = ctx({pauli::z()});
  EXPECT_EQ(kind_of([&] { SpectralPresheaf::parent_block(px_plus(), z, kTol); }), ErrorKind::Ambiguity);
}

TEST(Evaluate, Examples) {
  const Context z = ctx({pauli::z()});
  const std::size_t up = block_of(z, pz_plus()), down = 1 - up;
  EXPECT_NEAR(evaluate(z, up, pauli::z(), kTol), 1.0, 1e-12);
  EXPECT_NEAR(evaluate(z, down, Operator::identity(2), kTol), 1.0, 1e-12);
  const Operator sq = pauli::z() * pauli::z();
  const double lz = evaluate(z, down, pauli::z(), kTol);
  EXPECT_NEAR(lz, -1.0, 1e-12);
  EXPECT_NEAR(evaluate(z, down, sq, kTol), lz * lz, 1e-12);
  EXPECT_EQ(kind_of([&] { evaluate(z, up, pauli::x(), kTol); }), ErrorKind::NotInContext);
}

TEST(Daseinise, OuterExamples) {
  const Context x = ctx({pauli::x()}), z = ctx({pauli::z()});
  EXPECT_TRUE(daseinise_projector(pz_plus(), z, kTol).approx_equal(pz_plus(), kTol));
  EXPECT_TRUE(daseinise_projector(pz_plus(), x, kTol).approx_equal(Operator::identity(2), kTol));
  EXPECT_TRUE(daseinise_projector(Operator::zero(2), x, kTol).approx_equal(Operator::zero(2), kTol));
  EXPECT_TRUE(daseinise_projector(Operator::identity(2), x, kTol).approx_equal(Operator::identity(2), kTol));
  EXPECT_EQ(kind_of([&] { daseinise_projector(pauli::x(), z, kTol); }), ErrorKind::NotProjector);
}

TEST(Daseinise, InnerExamples) {
  const Context x = ctx({pauli::x()}), z = ctx({pauli::z()});
  EXPECT_TRUE(daseinise_projector_inner(pz_plus(), z, kTol).approx_equal(pz_plus(), kTol));
  EXPECT_TRUE(daseinise_projector_inner(pz_plus(), x, kTol).approx_equal(Operator::zero(2), kTol));
  EXPECT_TRUE(daseinise_projector_inner(Operator::identity(2), x, kTol).approx_equal(Operator::identity(2), kTol));
  EXPECT_EQ(inner_mask(pz_plus(), x, kTol), 0u);
}

TEST(DeltaSubobject, Examples) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  EXPECT_EQ(delta_subobject(Operator::identity(2), s), Subobject::whole(s.presheaf_ptr()));
  EXPECT_EQ(delta_subobject(Operator::zero(2), s), Subobject::empty(s.presheaf_ptr()));
  const auto idx = pauli_index(s.poset());
  const Subobject d = delta_subobject(pz_plus(), s);
  const std::size_t up = block_of(s.context(idx.z), pz_plus());
  EXPECT_TRUE(d.contains(idx.z, up));
  EXPECT_FALSE(d.contains(idx.z, 1 - up));
  for (std::size_t v : {idx.x, idx.y}) EXPECT_TRUE(d.contains(v, 0) && d.contains(v, 1));
}

TEST(PseudoState, Examples) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  const PseudoState w = pseudo_state(zplus(), s);
  EXPECT_EQ(w.subobject, delta_subobject(pz_plus(), s));

  const Operator one = pauli::identity();
  const Context zz = ctx({kron(pauli::z(), one), kron(one, pauli::z())});
  const SpectralPresheaf s4(build_poset({zz}, ClosurePolicy::Intersections, kTol), kTol);
  const Vector ket00 = Vector::unit(Vector{1.0, 0.0, 0.0, 0.0}.entries(), kTol);
  const PseudoState w4 = pseudo_state(ket00, s4);
  const std::size_t b00 = block_of(zz, Operator::diagonal({1, 0, 0, 0}));
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(w4.subobject.contains(0, b), b == b00);

  EXPECT_EQ(kind_of([&] { pseudo_state(Vector{1.0, 0.0}, s); }), ErrorKind::NotUnitNorm);
}

TEST(TruthObject, Examples) {
  const ContextPoset p = pauli_poset();
  const auto idx = pauli_index(p);
  const TruthObject t = truth_object(zplus(), p, kTol);
  const std::uint64_t up = std::uint64_t{1} << block_of(p.context(idx.z), pz_plus());
  EXPECT_EQ(t.members[idx.z], (std::vector<std::uint64_t>{up, 0b11}));
  EXPECT_EQ(t.members[idx.x], (std::vector<std::uint64_t>{0b11}));
  for (std::size_t v = 0; v < p.size(); ++v) EXPECT_TRUE(t.contains(v, p.context(v).full_mask()));
}

TEST(TruthValue, PseudoStateExamples) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  const auto idx = pauli_index(s.poset());
  EXPECT_TRUE(truth_value_pseudo(Operator::identity(2), zplus(), s).is_full());
  EXPECT_TRUE(truth_value_pseudo(pz_plus(), zplus(), s).is_full());
  const LowerSet nu = truth_value_pseudo(px_plus(), zplus(), s);
  EXPECT_FALSE(nu.contains(idx.x));
  EXPECT_TRUE(nu.contains(idx.y));
  EXPECT_TRUE(nu.contains(idx.z));
}

TEST(TruthValue, TruthObjectExamples) {
  const ContextPoset p = pauli_poset();
  EXPECT_TRUE(truth_value_truthobject(Operator::identity(2), zplus(), p, kTol).is_full());
  EXPECT_TRUE(truth_value_truthobject(Operator::zero(2), zplus(), p, kTol).is_empty());
  EXPECT_EQ(truth_value_truthobject(px_plus(), zplus(), p, kTol), truth_value_pseudo(px_plus(), zplus(), {p, kTol}));
}

TEST(KsSearch, PauliHasEightSections) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  const KsResult r = ks_search(s, 16);
  EXPECT_EQ(r.status, KsStatus::SectionsExist);
  EXPECT_TRUE(r.exhausted);
  ASSERT_EQ(r.sections.size(), 8u);
  EXPECT_TRUE(std::is_sorted(r.sections.begin(), r.sections.end()));
  EXPECT_EQ(global_elements(s.presheaf()).size(), 8u);
  const KsResult capped = ks_search(s, 3);
  EXPECT_EQ(capped.sections.size(), 3u);
  EXPECT_FALSE(capped.exhausted);
}

TEST(KsSearch, MerminSquareHasNoSection) {
  const SpectralPresheaf s(mermin_poset(), kTol);
  ASSERT_EQ(s.size(), 15u);
  const KsResult r = ks_search(s, 16);
  EXPECT_EQ(r.status, KsStatus::NoSection);
  EXPECT_TRUE(r.exhausted);
  EXPECT_TRUE(r.sections.empty());
  EXPECT_GT(r.nodes_explored, 0u);
  EXPECT_TRUE(global_elements(s.presheaf()).empty());
}

TEST(KsSearch, SingleContextHasOneSectionPerBlock) {
  for (std::size_t k = 2; k <= 5; ++k) {
    std::vector<double> diag(k);
    for (std::size_t i = 0; i < k; ++i) diag[i] = static_cast<double>(i);
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
    const SpectralPresheaf s(build_poset({ctx({Operator(m)})}, ClosurePolicy::Intersections, kTol), kTol);
    EXPECT_EQ(ks_search(s, 100).sections.size(), k);
  }
}

TEST(KsSearch, AgreesWithKernelGlobalElementsOnCoarsenings) {
  const Context c = ctx({Operator::diagonal({0, 1, 2, 3})});
  const SpectralPresheaf s(build_poset({c}, ClosurePolicy::Coarsenings, kTol), kTol);
  const KsResult r = ks_search(s, 1000);
  const auto points = global_elements(s.presheaf());
  ASSERT_EQ(r.sections.size(), points.size());
  EXPECT_EQ(points.size(), 4u);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t v = 0; v < s.size(); ++v) EXPECT_EQ(*r.sections[i].blocks[v], points[i][v]);
    EXPECT_TRUE(satisfies_matching(r.sections[i], s.poset(), kTol));
  }
}

TEST(DaseiniseObservable, Examples) {
  const Context x = ctx({pauli::x()}), z = ctx({pauli::z()});
  const auto inside = daseinise_observable(pauli::z(), z, kTol);
  EXPECT_TRUE(inside.inner.approx_equal(pauli::z(), kTol));
  EXPECT_TRUE(inside.outer.approx_equal(pauli::z(), kTol));
  const auto across = daseinise_observable(pauli::z(), x, kTol);
  EXPECT_TRUE(across.inner.approx_equal(-1.0 * Operator::identity(2), kTol));
  EXPECT_TRUE(across.outer.approx_equal(Operator::identity(2), kTol));
  const auto scalar = daseinise_observable(2.5 * Operator::identity(2), x, kTol);
  EXPECT_TRUE(scalar.inner.approx_equal(2.5 * Operator::identity(2), kTol));
  EXPECT_TRUE(scalar.outer.approx_equal(2.5 * Operator::identity(2), kTol));
  EXPECT_EQ(kind_of([&] { daseinise_observable(Operator{{0.0, 1.0}, {0.0, 0.0}}, x, kTol); }), ErrorKind::NotHermitian);
}

TEST(ValueInterval, Examples) {
  const Context x = ctx({pauli::x()}), z = ctx({pauli::z()});
  const std::size_t up = block_of(z, pz_plus());
  const ValueInterval in = value_interval(z, up, pauli::z(), kTol);
  EXPECT_NEAR(in.lo, 1.0, 1e-12);
  EXPECT_NEAR(in.hi, 1.0, 1e-12);
  for (std::size_t b = 0; b < 2; ++b) {
    const ValueInterval across = value_interval(x, b, pauli::z(), kTol);
    EXPECT_NEAR(across.lo, -1.0, 1e-12);
    EXPECT_NEAR(across.hi, 1.0, 1e-12);
    const ValueInterval one = value_interval(x, b, Operator::identity(2), kTol);
    EXPECT_NEAR(one.lo, 1.0, 1e-12);
    EXPECT_NEAR(one.hi, 1.0, 1e-12);
  }
}

// Properties.

TEST(QuantumProperties, FuncAndAlgebraicRules) {
  testing::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 2 + rng.index(3);
    const Context v = rng.random_context(dim);
    std::vector<double> a(v.size()), b(v.size());
    Operator opa = Operator::zero(dim), opb = Operator::zero(dim);
    for (std::size_t i = 0; i < v.size(); ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
      opa = opa + a[i] * v.block(i);
      opb = opb + b[i] * v.block(i);
    }
    const double c0 = rng.uniform(-1, 1), c1 = rng.uniform(-1, 1), c2 = rng.uniform(-1, 1), c3 = rng.uniform(-1, 1);
    const auto h = [&](double t) { return c0 + t * (c1 + t * (c2 + t * c3)); };
    const Operator ha = apply_function(opa, h, kTol);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double la = evaluate(v, i, opa, kTol), lb = evaluate(v, i, opb, kTol);
      EXPECT_NEAR(la, a[i], 1e-6);
      EXPECT_NEAR(evaluate(v, i, ha, kTol), h(la), 1e-6);
      EXPECT_NEAR(evaluate(v, i, opa + opb, kTol), la + lb, 1e-6);
      EXPECT_NEAR(evaluate(v, i, opa * opb, kTol), la * lb, 1e-6);
    }
  }
}

TEST(QuantumProperties, DaseinisationLaws) {
  testing::Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t dim = 2 + rng.index(3);
    const Matrix u = rng.unitary(dim);
    const Context fine = rng.context_from_basis(u, dim);
    const ContextPoset poset = build_poset({fine}, ClosurePolicy::Coarsenings, kTol);
    // Half of the propositions are spanned by basis columns so that the
    // approximations are not all trivial.
    Operator p = Operator::zero(dim), r = Operator::zero(dim);
    if (rng.coin()) {
      for (std::size_t k = 0; k < dim; ++k) {
        const auto col = u.col(static_cast<Eigen::Index>(k));
        const int choice = static_cast<int>(rng.index(3));
        if (choice == 0) p = p + Operator(col * col.adjoint());
        if (choice == 1) r = r + Operator(col * col.adjoint());
      }
    } else {
      p = rng.projector(dim, rng.index(dim));
      r = rng.projector(dim, rng.index(dim));
    }
    const Operator q = proj_join(p, r, kTol);
    for (std::size_t a = 0; a < poset.size(); ++a) {
      const Context& v = poset.context(a);
      const Operator dp = daseinise_projector(p, v, kTol), dq = daseinise_projector(q, v, kTol);
      EXPECT_TRUE(proj_leq(p, dp, kTol));
      EXPECT_TRUE(proj_leq(daseinise_projector_inner(p, v, kTol), p, kTol));
      EXPECT_TRUE(proj_leq(dp, dq, kTol));
      EXPECT_TRUE(daseinise_projector(dp, v, kTol).approx_equal(dp, kTol));
      for (std::size_t b = 0; b < poset.size(); ++b)
        if (poset.leq(b, a)) {
          EXPECT_TRUE(proj_leq(dp, daseinise_projector(p, poset.context(b), kTol), kTol));
        }
    }
    const SpectralPresheaf s(poset, kTol);
    EXPECT_NO_THROW(delta_subobject(p, s));
  }
}

TEST(QuantumProperties, PseudoTruthValueIsHereditaryInclusion) {
  testing::Rng rng(4);
  const SpectralPresheaf mermin(mermin_poset(), kTol);
  const Matrix bell_basis = [] {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = m(3, 0) = kSqrtHalf;
    m(0, 1) = kSqrtHalf;
    m(3, 1) = -kSqrtHalf;
    m(1, 2) = m(2, 2) = kSqrtHalf;
    m(1, 3) = kSqrtHalf;
    m(2, 3) = -kSqrtHalf;
    return m;
  }();
  for (int trial = 0; trial < 50; ++trial) {
    const Vector psi = rng.coin() ? rng.unit_vector(4) : rng.unit_vector_in(bell_basis, 1 + rng.index(15));
    const std::size_t v = rng.index(mermin.size());
    const Operator q = mermin.context(v).block_sum(rng.index(mermin.context(v).full_mask() + 1));
    const LowerSet nu = truth_value_pseudo(q, psi, mermin);
    EXPECT_EQ(nu, truth_value_inclusion(pseudo_state(psi, mermin).subobject, delta_subobject(q, mermin)));
    EXPECT_EQ(nu, truth_value_truthobject(q, psi, mermin.poset(), kTol));
  }
}

TEST(QuantumProperties, OptionEquivalenceOnRandomPosets) {
  testing::Rng rng(6);
  for (std::size_t dim = 2; dim <= 4; ++dim)
    for (int trial = 0; trial < 40; ++trial) {
      const Matrix u = rng.unitary(dim);
      const ContextPoset poset = build_poset(
          {rng.context_from_basis(u, dim), rng.context_from_basis(u, 2), rng.random_context(dim)},
          ClosurePolicy::Intersections, kTol);
      const SpectralPresheaf s(poset, kTol);
      const std::uint64_t cols = (std::uint64_t{1} << dim) - 1;
      Operator q = Operator::zero(dim);
      const std::uint64_t qmask = rng.index(cols + 1);
      for (std::size_t k = 0; k < dim; ++k)
        if (qmask >> k & 1U) {
          const auto col = u.col(static_cast<Eigen::Index>(k));
          q = q + Operator(col * col.adjoint());
        }
      const Vector psi = rng.unit_vector_in(u, 1 + rng.index(cols));
      EXPECT_EQ(truth_value_pseudo(q, psi, s), truth_value_truthobject(q, psi, poset, kTol));
    }
}

TEST(QuantumProperties, PauliSubobjectsFormDistributiveHeytingAlgebra) {
  const SpectralPresheaf s(pauli_poset(), kTol);
  const auto subs = all_subobjects(s.presheaf_ptr());
  ASSERT_EQ(subs.size(), 64u);
  for (const auto& j : subs)
    for (const auto& k : subs)
      for (const auto& l : subs) {
        ASSERT_EQ(heyting_meet(j, heyting_join(k, l)), heyting_join(heyting_meet(j, k), heyting_meet(j, l)));
        ASSERT_EQ(heyting_meet(j, k).leq(l), j.leq(heyting_implies(k, l)));
      }
  // The projector lattice of the qubit is not distributive.
  const Operator lhs = proj_meet(pz_plus(), proj_join(px_plus(), px_minus(), kTol), kTol);
  const Operator rhs =
      proj_join(proj_meet(pz_plus(), px_plus(), kTol), proj_meet(pz_plus(), px_minus(), kTol), kTol);
  EXPECT_TRUE(lhs.approx_equal(pz_plus(), kTol));
  EXPECT_TRUE(rhs.approx_equal(Operator::zero(2), kTol));
}

TEST(QuantumProperties, ValueIntervalsNestUnderRestriction) {
  testing::Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 2 + rng.index(3);
    const Matrix u = rng.unitary(dim);
    const SpectralPresheaf s(build_poset({rng.context_from_basis(u, dim)}, ClosurePolicy::Coarsenings, kTol), kTol);
    const Operator a = rng.hermitian(dim);
    const auto spectrum = eigensystem(a, kTol);
    const double lo = spectrum.front().eigenvalue, hi = spectrum.back().eigenvalue;
    for (std::size_t v = 0; v < s.size(); ++v)
      for (std::size_t b = 0; b < s.context(v).size(); ++b) {
        const ValueInterval at_v = value_interval(s, {v, b}, a);
        EXPECT_LE(lo - 1e-9, at_v.lo);
        EXPECT_LE(at_v.lo, at_v.hi + 1e-9);
        EXPECT_LE(at_v.hi, hi + 1e-9);
        for (std::size_t vp = 0; vp < s.size(); ++vp) {
          if (vp == v || !s.poset().leq(vp, v)) continue;
          const ValueInterval at_vp = value_interval(s, {vp, s.presheaf().restrict(v, vp, b)}, a);
          EXPECT_LE(at_vp.lo, at_v.lo + 1e-9);
          EXPECT_GE(at_vp.hi, at_v.hi - 1e-9);
        }
      }
  }
}

}  // namespace
}  // namespace qtopos
