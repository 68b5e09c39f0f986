"""Chain construction, validation, and row generation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdperiod.chain import ChainSpec, build_chain, build_tail
from bdperiod.errors import (
    AllZeroSelf,
    BadFamilyParams,
    InvalidDocument,
    NonPositiveRate,
    RowSumError,
)

from conftest import D2_DOC


def test_paper_shape_valid():
    chain = build_chain(D2_DOC)
    assert chain.row(0) == (0.0, 0.5, 0.5)
    assert chain.row(7) == (0.3, 0.0, 0.7)


def test_constant_empty_prefix_folds_row0():
    chain = build_chain({"tail": {"family": "constant", "p": 0.5, "q": 0.4, "r": 0.1}})
    assert chain.row(0) == (0.0, 0.5, 0.5)
    assert chain.row(3) == (0.4, 0.1, 0.5)
    assert chain.row0_adjusted


def test_product_positive_rows():
    chain = build_chain({"tail": {"family": "product_positive", "c": 0.25, "rho": 0.5}})
    assert chain.row(0) == (0.0, 0.25, 0.75)
    q, r, p = chain.row(3)
    assert q == r == 0.25 * 0.5**3 / 2
    assert p == 1.0 - 2.0 ** -5.0


def test_row_sum_error():
    with pytest.raises(RowSumError):
        build_chain({"prefix": [[0.0, 0.5, 0.4]],
                     "tail": {"family": "constant", "p": 0.7, "q": 0.3, "r": 0.0}})
    with pytest.raises(RowSumError):
        build_chain({"tail": {"family": "constant", "p": 0.7, "q": 0.301, "r": 0.0}})


def test_non_positive_rates():
    with pytest.raises(NonPositiveRate):
        build_chain({"tail": {"family": "constant", "p": 0.0, "q": 0.9, "r": 0.1}})
    with pytest.raises(NonPositiveRate):
        build_chain({"tail": {"family": "constant", "p": 0.9, "q": 0.0, "r": 0.1}})
    with pytest.raises(NonPositiveRate):
        # prefix row 1 needs q > 0
        build_chain({"prefix": [[0.0, 0.5, 0.5], [0.0, 0.4, 0.6]],
                     "tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}})
    with pytest.raises(NonPositiveRate):
        build_chain({"prefix": [[0.1, -0.1, 1.0]],
                     "tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}})


def test_all_zero_self_rejected():
    with pytest.raises(AllZeroSelf):
        build_chain({"prefix": [[0.0, 0.0, 1.0]],
                     "tail": {"family": "zero_self_tail", "p": 0.7, "q": 0.3}})
    # but a zero-self tail with one self transition in the prefix is fine
    build_chain({"prefix": [[0.0, 0.5, 0.5]],
                 "tail": {"family": "zero_self_tail", "p": 0.7, "q": 0.3}})
    # and an empty prefix folds tail q_0 into r_0, which makes r_0 > 0
    chain = build_chain({"tail": {"family": "zero_self_tail", "p": 0.7, "q": 0.3}})
    assert chain.row(0) == (0.0, 0.3, 0.7)


def test_bad_family_params():
    bad = [
        {"family": "nonsense", "p": 0.5},
        {"family": "geometric_self", "p": 0.6, "q": 0.3, "c": 0.5, "rho": 1.5},
        {"family": "geometric_self", "p": 0.6, "q": 0.3, "c": 2.0, "rho": 0.5},
        {"family": "power_self", "p": 0.6, "q": 0.3, "c": 0.5, "alpha": 0.0},
        {"family": "product_positive", "c": 1.5, "rho": 0.5},
        {"family": "product_positive", "c": 0.0, "rho": 0.5},
        {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1, "extra": 1.0},
        {"family": "constant", "p": 0.6, "q": 0.3},
    ]
    for tail in bad:
        with pytest.raises(BadFamilyParams):
            build_chain({"tail": tail})


def test_geometric_large_c_valid_with_prefix():
    # c * rho**n0 < 1 is checked at the prefix boundary, not at i = 0
    tail = {"family": "geometric_self", "p": 0.6, "q": 0.3, "c": 2.0, "rho": 0.5}
    chain = build_chain({"prefix": [[0.0, 0.5, 0.5], [0.3, 0.2, 0.5]], "tail": tail})
    q, r, p = chain.row(2)
    assert r == 2.0 * 0.25
    with pytest.raises(BadFamilyParams):
        build_tail(tail, 0)


def test_document_structure_errors():
    with pytest.raises(InvalidDocument):
        build_chain({"tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}, "junk": 1})
    with pytest.raises(InvalidDocument):
        build_chain({"prefix": [[0.0, 0.5]], "tail": {"family": "zero_self_tail", "p": 0.7, "q": 0.3}})
    with pytest.raises(InvalidDocument):
        build_chain({"prefix": [], "n0": 3,
                     "tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}})
    with pytest.raises(InvalidDocument):
        build_chain({"prefix": [[0.0, float("nan"), 1.0]],
                     "tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}})


def test_n0_accepted_when_consistent():
    doc = dict(D2_DOC)
    doc["n0"] = 1
    chain = build_chain(doc)
    assert chain.n0 == 1


def test_rows_range_matches_row(fleet):
    for chain, _, _ in fleet.values():
        q, r, p = chain.rows_range(0, 40)
        for i in (0, 1, 5, 17, 39):
            assert chain.row(i) == (q[i], r[i], p[i])


def test_row_sums_exact_and_nonnegative(fleet):
    for name, (chain, _, _) in fleet.items():
        q, r, p = chain.rows_range(0, 2000)
        total = (q + r) + p
        assert (total == 1.0).all(), name
        assert (q >= 0).all() and (r >= 0).all() and (p > 0).all(), name
        assert q[0] == 0.0, name
        # strict positivity of q_i (i >= 1) holds in the linear domain until
        # the value drops below the smallest subnormal; past that the finite
        # log value carries the invariant
        lq = chain.log_rows_range(0, 2000)[0]
        assert np.isfinite(lq[1:]).all(), name
        underflow = np.log(5e-324)
        assert ((q[1:] > 0) | (lq[1:] < underflow)).all(), name


def test_row_purity(d2_chain):
    assert d2_chain.row(5) == d2_chain.row(5)
    a = d2_chain.rows_range(0, 10)
    b = d2_chain.rows_range(0, 10)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_document_round_trip(fleet):
    for name, (chain, _, _) in fleet.items():
        rebuilt = build_chain(chain.document())
        assert rebuilt.document() == chain.document(), name
        for arrays in zip(rebuilt.rows_range(0, 500), chain.rows_range(0, 500)):
            assert np.array_equal(*arrays), name


def test_log_rows_match_linear(fleet):
    for name, (chain, _, _) in fleet.items():
        q, r, p = chain.rows_range(0, 300)
        lq, lr, lp = chain.log_rows_range(0, 300)
        with np.errstate(divide="ignore"):
            assert np.allclose(lq[1:], np.log(q[1:]), rtol=1e-12, atol=1e-14), name
            assert np.allclose(lp, np.log(p), rtol=1e-12, atol=1e-14), name
            mask = r > 0
            assert np.allclose(lr[mask], np.log(r[mask]), rtol=1e-12, atol=1e-14), name
            assert np.isneginf(lr[~mask]).all(), name
        assert lq[0] == -np.inf, name


def test_log_rows_survive_underflow():
    chain = build_chain({"tail": {"family": "product_positive", "c": 0.25, "rho": 0.5}})
    q, r, p = chain.rows_range(2000, 2005)
    assert (q == 0.0).all() and (p == 1.0).all()  # linear underflow
    lq, lr, lp = chain.log_rows_range(2000, 2005)
    assert np.isfinite(lq).all() and np.isfinite(lr).all()
    assert lq[0] == pytest.approx(np.log(0.125) + 2000 * np.log(0.5))


def _tail_strategy():
    prob = st.floats(0.05, 0.9)

    def unit_constant(p, q, r):
        s = p + q + r
        return {"family": "constant", "p": p / s, "q": q / s, "r": r / s}

    def unit_zst(p, q):
        s = p + q
        return {"family": "zero_self_tail", "p": p / s, "q": q / s}

    constant = st.builds(unit_constant, prob, prob, st.floats(0.0, 0.6))
    geo = st.builds(
        lambda p, q, c, rho: {"family": "geometric_self", "p": p, "q": q, "c": c, "rho": rho},
        prob, prob, st.floats(0.0, 0.8), st.floats(0.05, 0.95),
    )
    power = st.builds(
        lambda p, q, c, a: {"family": "power_self", "p": p, "q": q, "c": c, "alpha": a},
        prob, prob, st.floats(0.0, 0.8), st.floats(0.1, 3.0),
    )
    prod = st.builds(
        lambda c, rho: {"family": "product_positive", "c": c, "rho": rho},
        st.floats(0.01, 0.9), st.floats(0.05, 0.9),
    )
    return st.one_of(constant, geo, power, prod, st.builds(unit_zst, prob, prob))


def chain_docs():
    def normalize(tail, rows):
        prefix = []
        for q, r in rows:
            prefix.append([q, r, 1.0 - (q + r)])
        if prefix:
            prefix[0][0] = 0.0
            prefix[0][2] = 1.0 - (prefix[0][0] + prefix[0][1])
        if tail["family"] == "zero_self_tail":
            # guarantee a self transition somewhere
            if not prefix:
                return {"prefix": [], "tail": tail}
            prefix[0] = [0.0, max(prefix[0][1], 0.1), 0.0]
            prefix[0][2] = 1.0 - (prefix[0][0] + prefix[0][1])
        return {"prefix": prefix, "tail": tail}

    row = st.tuples(st.floats(0.05, 0.5), st.floats(0.0, 0.4))
    return st.builds(normalize, _tail_strategy(), st.lists(row, min_size=0, max_size=3))


def build_valid(doc):
    """Build, skipping parameter draws the validators legitimately reject."""
    from hypothesis import assume

    try:
        return build_chain(doc)
    except (BadFamilyParams, NonPositiveRate, AllZeroSelf, RowSumError):
        assume(False)


@given(chain_docs(), st.integers(0, 200))
@settings(max_examples=120, deadline=None)
def test_random_chains_have_valid_rows(doc, i):
    chain = build_valid(doc)
    q, r, p = chain.row(i)
    assert (q + r) + p == 1.0
    assert q >= 0.0 and r >= 0.0 and p > 0.0
    if i == 0:
        assert q == 0.0
    else:
        assert q > 0.0


@given(chain_docs())
@settings(max_examples=60, deadline=None)
def test_random_chains_round_trip(doc):
    chain = build_valid(doc)
    rebuilt = build_chain(chain.document())
    a = chain.rows_range(0, 64)
    b = rebuilt.rows_range(0, 64)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
