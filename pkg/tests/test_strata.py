"""Census, emptiness tables, degree fits, fibers, and the closure poset."""

import pytest

from latmodel.dieudonne import ag_witness
from latmodel.errors import InvalidInput
from latmodel.invariants import StratumLabel
from latmodel.scalars import prime_field, small_field
from latmodel.strata import (
    EXPECTED_NONEMPTY_E4,
    Census,
    census,
    census_by_point,
    census_csv,
    chain_counts_by_T,
    chain_counts_by_hodge,
    degree_fit,
    emptiness_table,
    fiber_constancy,
    hodge_step_check,
    lattice_counts_by_hodge,
    nonempty_labels,
    product_census,
    product_census_csv,
    build_poset,
)

F2 = prime_field(2)
F3 = prime_field(3)
F4 = small_field(4)


def test_census_total_and_known_counts():
    cen = census(4, F2)
    assert cen.total() == 3**4
    expected = {
        ((2, 2), frozenset({2, 3, 4})): 3,
        ((2, 2), frozenset({2, 4})): 6,
        ((2, 2), frozenset({3})): 6,
        ((3, 1), frozenset({2})): 12,
        ((3, 1), frozenset({2, 3})): 6,
        ((3, 1), frozenset({3})): 6,
        ((3, 1), frozenset({3, 4})): 6,
        ((3, 1), frozenset({4})): 12,
        ((4, 0), frozenset()): 24,
    }
    assert {(l.lam, l.T): n for l, n in cen.counts.items()} == expected


def test_census_by_point_partitions_chains():
    groups = census_by_point(3, F2)
    assert sum(len(g) for g in groups.values()) == 27
    assert {l.linear() for l in groups} == set(nonempty_labels(3, F2))


def test_census_csv_shape():
    text = census_csv([census(2, F2)])
    lines = text.strip().split("\n")
    assert lines[0] == "e,q,lambda,T,m1,count"
    assert all(line.startswith("2,2,") for line in lines[1:])
    # byte-stable across runs
    assert text == census_csv([census(2, F2)])


def test_emptiness_table_matches_frozen_expectation():
    assert emptiness_table(4, F2) == EXPECTED_NONEMPTY_E4
    # in particular ((2,2), {4}) is empty
    assert frozenset({4}) not in emptiness_table(4, F2)[(2, 2)]


def test_hodge_step_check():
    violations, converse = hodge_step_check(4, F2)
    assert violations == []
    assert len(converse) > 0  # the converse of the step lemma fails


def test_degree_fit_exact_polynomials():
    fit = degree_fit({q: (q + 1) ** 3 for q in (2, 3, 4, 5, 7)})
    assert fit.degree == 3 and fit.stable
    assert fit(10) == 11**3
    unstable = degree_fit({2: 1, 3: 100})
    assert not unstable.stable
    with pytest.raises(InvalidInput):
        degree_fit({2: 1})


def test_counts_by_hodge_and_T_are_polynomial_in_q():
    for counter in (chain_counts_by_hodge, lattice_counts_by_hodge):
        samples = {q: counter(3, ctx) for q, ctx in ((2, F2), (3, F3), (4, F4))}
        keys = set(samples[2])
        assert all(set(s) == keys for s in samples.values())
    by_T = chain_counts_by_T(3, F2)
    assert sum(by_T.values()) == 27
    assert by_T[()] == 12  # free chains: q(q+1)^2 at q=2


def test_fiber_constancy_and_counts():
    out = fiber_constancy(4, F2)
    assert out[(4, 0)][0] == 1
    assert out[(3, 1)][0] == 7
    assert out[(2, 2)][0] == 15
    # lattice counts times fiber sizes recover the chain total
    assert sum(cnt * m for cnt, m in out.values()) == 3**4


def test_fiber_degree_in_q():
    fits = {}
    for lam in ((2, 2), (3, 1), (4, 0)):
        samples = {}
        for q, ctx in ((2, F2), (3, F3), (4, F4)):
            samples[q] = fiber_constancy(4, ctx)[lam][0]
        fits[lam] = degree_fit(samples)
    assert fits[(4, 0)].degree == 0
    assert fits[(3, 1)].degree == 1
    assert fits[(2, 2)].degree == 2


def test_build_poset_small_fully_certified():
    rep = build_poset(3, F2)
    assert rep.ok
    labels = {n["label"] for n in rep.nodes}
    assert labels == {
        StratumLabel(l.lam, l.T).serialize() for l in nonempty_labels(3, F2)
    }
    assert rep.edges  # at least one covering edge was certified
    for e in rep.edges:
        assert e["method"]
        assert e["points"] >= 1
    # json and dot renderings are byte-stable
    assert rep.to_json() == build_poset(3, F2).to_json()
    assert rep.to_dot() == build_poset(3, F2).to_dot()


def test_build_poset_m1_layer_present_with_model():
    model, _ = ag_witness(2, 1, F2)
    rep = build_poset(4, F2, model=model)
    assert rep.ok
    methods = {e["method"] for e in rep.m1_edges}
    assert "invert-m1" in methods
    assert any(m.startswith("732") for m in methods)


def test_product_census_multiplies():
    pc = product_census([census(2, F2), census(3, F2)])
    assert pc.total() == 9 * 27
    assert all(isinstance(k, tuple) and len(k) == 2 for k in pc.counts)
    with pytest.raises(InvalidInput):
        product_census([census(2, F2), census(2, F3)])
    text = product_census_csv(pc)
    assert text.startswith("q,label1,label2,count")
    assert text == product_census_csv(pc)
