"""One-parameter deformations: raising recipes, m1 breaking, search."""

import pytest

from latmodel.chains import PRChain, enumerate_chains, group_generators
from latmodel.deform import (
    FamilyChain,
    hodge_raise,
    invert_m1,
    lift_sub,
    linear_collapse,
    linear_raise,
    recipe_7_3_1,
    recipe_7_3_2,
    search_witness,
    sigma_collapse,
    sigma_raise,
    transport_family,
    with_precision_retry,
)
from latmodel.dieudonne import ag_witness, labeled_with_m1
from latmodel.errors import DegenerateF


def _label_or_none(model, chain):
    try:
        return labeled_with_m1(model, chain)
    except DegenerateF:
        return None
from latmodel.errors import InvalidInput, NotDeformable, NotFound
from latmodel.invariants import StratumLabel, dominance_leq, stratum_label
from latmodel.scalars import prime_field, rational_ctx
from latmodel.umod import Subspace, UVec

F2 = prime_field(2)
F3 = prime_field(3)


def _mspan(ctx, e, vecs):
    closed = []
    for v in vecs:
        while not v.is_zero():
            closed.append(v)
            v = v.u_mult()
    return Subspace.span(ctx, e, closed)


def _worked_chain(ctx):
    """e=3 chain <u^2 e2> < <u^2 e1, u^2 e2> < <u^2 e1, u e2>."""
    e = 3
    mono = lambda c, d: UVec.monomial(ctx, e, c, d)
    levels = [
        _mspan(ctx, e, [mono(2, 2)]),
        _mspan(ctx, e, [mono(1, 2), mono(2, 2)]),
        _mspan(ctx, e, [mono(1, 2), mono(2, 1)]),
    ]
    return PRChain(ctx, e, levels)


def _audit(fam, start):
    """Common postconditions for any deformation family of `start`."""
    assert fam.validate() == []
    assert fam.specialize() == start
    assert fam.semicontinuity_audit()


def test_lift_constant_chain_specializes_back():
    kt = rational_ctx(F2)
    for ch in enumerate_chains(2, F2)[:5]:
        fam = FamilyChain(
            "exact_rational", F2, kt, ch.e, [lift_sub(w, kt) for w in ch.levels]
        )
        assert fam.specialize() == ch
        assert fam.generic_label() == stratum_label(ch)


def test_hodge_raise_on_worked_chain():
    ch = _worked_chain(F2)
    assert stratum_label(ch).lam == (2, 1)
    fam = hodge_raise(ch)
    _audit(fam, ch)
    assert fam.generic_label().lam == (3, 0)
    tr = fam.trace
    assert tr is not None
    assert tr.k0 == 2 and (tr.a, tr.b) == (2, 2) and tr.J == [1]
    kt = fam.tctx
    t = kt.t()
    mono = lambda c, d: UVec.monomial(kt, 3, c, d)
    # deformed generators: v2~ = u^2 e1 + t u e2, v3~ = u e2 + t u e1 + t^2 e2
    v2 = mono(1, 2).add(mono(2, 1).scale(t))
    v3 = mono(2, 1).add(mono(1, 1).scale(t)).add(mono(2, 0).scale(kt.mul(t, t)))
    assert tr.vt[2] == v2
    assert tr.vt[3] == v3


def test_hodge_raise_total_on_nonmaximal_chains():
    for ctx in (F2, F3):
        for e in (2, 3):
            for ch in enumerate_chains(e, ctx):
                lab = stratum_label(ch)
                if lab.lam == (e, 0):
                    with pytest.raises(NotDeformable):
                        hodge_raise(ch)
                    continue
                fam = hodge_raise(ch)
                _audit(fam, ch)
                gen = fam.generic_label()
                assert gen.lam == (lab.lam[0] + 1, lab.lam[1] - 1)
                assert dominance_leq(lab.lam, gen.lam)


def test_linear_recipes_on_their_strata():
    found = {"collapse": 0, "raise": 0}
    for ch in enumerate_chains(4, F2):
        lab = stratum_label(ch)
        if lab.lam == (2, 2) and lab.T == frozenset({2, 3, 4}):
            fam = linear_collapse(ch)
            _audit(fam, ch)
            assert fam.generic_label() == StratumLabel((2, 2), {3})
            assert recipe_7_3_1(ch, 1).generic_label() == fam.generic_label()
            found["collapse"] += 1
        if lab.lam == (2, 2) and lab.T == frozenset({3}):
            fam = linear_raise(ch)
            _audit(fam, ch)
            assert fam.generic_label() == StratumLabel((3, 1), {3})
            found["raise"] += 1
    assert found["collapse"] == 3 and found["raise"] == 6


def test_linear_recipes_reject_wrong_stratum():
    ch = next(
        c for c in enumerate_chains(4, F2) if stratum_label(c).lam == (4, 0)
    )
    with pytest.raises(InvalidInput):
        linear_collapse(ch)
    with pytest.raises(InvalidInput):
        linear_raise(ch)


def test_sigma_recipes_break_one_hasse_index():
    model, chain = ag_witness(2, 1, F2)
    fam = sigma_collapse(model, chain)
    assert fam.validate() == []
    assert fam.specialize() == chain
    gen = fam.generic_label()
    assert gen == StratumLabel((2, 2), {3}, "0")
    assert fam.cert.metadata["prec"] >= 2

    # the raising variant starts from a chain on ((2,2),{3}) with m1 = 0
    chain2 = next(
        ch
        for ch in enumerate_chains(4, F2)
        if _label_or_none(model, ch) == StratumLabel((2, 2), {3}, "0")
    )
    fam2 = sigma_raise(model, chain2)
    assert fam2.specialize() == chain2
    assert fam2.generic_label() == StratumLabel((3, 1), {3}, "0")
    # dispatcher and precision retry agree
    assert recipe_7_3_2(model, chain, 1).generic_label() == gen
    assert (
        with_precision_retry(sigma_raise, model, chain2).generic_label()
        == fam2.generic_label()
    )


def test_invert_m1_breaks_sigma_invariant_only():
    model, chain = ag_witness(2, 1, F2)
    assert labeled_with_m1(model, chain).m1 == "0"
    fam = invert_m1(model, chain)
    assert fam.specialize() == chain
    gen = fam.generic_label()
    # linear data unchanged, m1 now nonzero
    assert gen.lam == (2, 2) and gen.T == frozenset({2, 3, 4})
    assert gen.m1 == "1"


def test_search_witness_finds_and_fails_honestly():
    # a first-order-reachable move at e=4: ((3,1),{3,4}) -> ((3,1),{3})
    target = StratumLabel((3, 1), {3})
    ch = next(
        c
        for c in enumerate_chains(4, F2)
        if stratum_label(c) == StratumLabel((3, 1), {3, 4})
    )
    fam = search_witness(ch, target)
    _audit(fam, ch)
    assert fam.generic_label().linear() == target
    # a target not strictly above the label is rejected up front
    with pytest.raises(InvalidInput):
        search_witness(ch, StratumLabel((3, 1), {2, 3, 4}))
    # an exhausted budget is NotFound, never silently treated as emptiness
    with pytest.raises(NotFound):
        search_witness(ch, target, budget=0)


def test_transport_family_preserves_generic_label():
    ch = _worked_chain(F2)
    fam = hodge_raise(ch)
    g = group_generators(F2, 3)[0]
    moved = transport_family(fam, g)
    assert moved.validate() == []
    assert moved.generic_label() == fam.generic_label()
    assert moved.semicontinuity_audit()


def test_family_serialization_has_trace_and_certificate():
    ch = _worked_chain(F2)
    fam = hodge_raise(ch)
    obj = fam.serialize()
    assert obj["mode"] == "exact_rational"
    assert "trace" in obj and "deformed" in obj["trace"]
    model, chain = ag_witness(2, 1, F2)
    obj2 = sigma_collapse(model, chain).serialize()
    assert obj2["mode"] == "truncated"
    assert obj2["certificate"]["label"].startswith("lambda=(2,2)")
