import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsparse import convert, counters
from hybridsparse.convert import coo_to_csc, csc_to_coo, csc_to_rbt, rbt_to_csc
from hybridsparse.storage import (
    CooStorage,
    CscStorage,
    RbtStorage,
    coo_build_from_triplets,
    csc_audit,
    csc_get,
    rbt_arrays,
    rbt_audit,
    rbt_insert,
    rbt_lookup,
)
from hybridsparse.storage.csc import INDEX

from oracles import (
    EXAMPLE_COL_OFFSETS,
    EXAMPLE_COLUMNS,
    EXAMPLE_INDICES,
    EXAMPLE_ROWS,
    EXAMPLE_TRIPLETS,
    EXAMPLE_VALUES,
    random_dense,
    scipy_csc_arrays,
)


def fig_csc():
    return CscStorage.from_arrays(5, 4, EXAMPLE_VALUES, EXAMPLE_ROWS, EXAMPLE_COL_OFFSETS)


def csc_from_dense(dense):
    v, r, c = scipy_csc_arrays(dense)
    return CscStorage.from_arrays(dense.shape[0], dense.shape[1], v, r, c)


def same_arrays(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a.data(), b.data()))


def test_coo_to_csc_example():
    coo = CooStorage(
        5,
        4,
        np.array(EXAMPLE_VALUES, float),
        np.array(EXAMPLE_ROWS, INDEX),
        np.array(EXAMPLE_COLUMNS, INDEX),
        6,
    )
    csc = coo_to_csc(coo)
    v, r, c = csc.data()
    assert c.tolist() == EXAMPLE_COL_OFFSETS
    assert v.tolist() == EXAMPLE_VALUES and r.tolist() == EXAMPLE_ROWS
    assert counters.last_conversion_writes == 6


def test_coo_to_csc_empty():
    csc = coo_to_csc(CooStorage.empty(5, 4))
    assert csc.col_offsets.tolist() == [0, 0, 0, 0, 0] and csc.n_nonzero == 0


def test_coo_to_csc_random_matches_scipy(rng):
    dense = random_dense(rng, 50, 50, 0.1)
    cols, rows = np.nonzero(dense.T)
    coo = coo_build_from_triplets(50, 50, zip(rows, cols, dense[rows, cols]))
    expected = scipy_csc_arrays(dense)
    got = coo_to_csc(coo).data()
    assert all(np.array_equal(x, y) for x, y in zip(got, expected))


def test_csc_to_coo_example():
    coo = csc_to_coo(fig_csc())
    v, r, c = coo.data()
    assert c.tolist() == EXAMPLE_COLUMNS
    assert v.tolist() == EXAMPLE_VALUES and r.tolist() == EXAMPLE_ROWS
    assert counters.last_conversion_writes == 6


def test_csc_to_coo_empty():
    coo = csc_to_coo(CscStorage.empty(3, 7))
    assert coo.n_nonzero == 0 and len(coo.data()[2]) == 0


def test_csc_to_rbt_example():
    rbt = csc_to_rbt(fig_csc())
    keys, vals = rbt_arrays(rbt)
    assert keys.tolist() == EXAMPLE_INDICES and vals.tolist() == EXAMPLE_VALUES
    assert rbt.fast_path_inserts == 6


def test_csc_to_rbt_empty():
    rbt = csc_to_rbt(CscStorage.empty(5, 4))
    assert rbt.n_nonzero == 0 and rbt.root == -1


def test_csc_to_rbt_lookup_sweep(rng):
    dense = random_dense(rng, 50, 50, 0.1)
    csc = csc_from_dense(dense)
    rbt = csc_to_rbt(csc)
    assert rbt.fast_path_inserts == csc.n_nonzero
    for c in range(50):
        for r in range(50):
            assert rbt_lookup(rbt, r + c * 50) == csc_get(csc, r, c)


def test_rbt_to_csc_example_any_insertion_order(rng):
    for _ in range(5):
        rbt = RbtStorage(5, 4)
        for i in rng.permutation(6):
            rbt_insert(rbt, EXAMPLE_INDICES[i], EXAMPLE_VALUES[i])
        csc = rbt_to_csc(rbt)
        v, r, c = csc.data()
        assert v.tolist() == EXAMPLE_VALUES
        assert r.tolist() == EXAMPLE_ROWS
        assert c.tolist() == EXAMPLE_COL_OFFSETS
        assert counters.last_traversal_visits == 6


def test_rbt_to_csc_shrinks_to_fit():
    rbt = RbtStorage(5, 4, capacity=500)
    for i, v in zip(EXAMPLE_INDICES, EXAMPLE_VALUES):
        rbt_insert(rbt, i, v)
    csc = rbt_to_csc(rbt)
    assert csc.capacity == 6


def test_rbt_to_csc_empty():
    csc = rbt_to_csc(RbtStorage(5, 4))
    assert csc.col_offsets.tolist() == [0] * 5 and csc.n_nonzero == 0


def test_conversions_are_pure():
    csc = fig_csc()
    snapshot = [a.copy() for a in csc.data()]
    rbt = csc_to_rbt(csc)
    csc_to_coo(csc)
    assert all(np.array_equal(x, y) for x, y in zip(csc.data(), snapshot))
    keys = rbt_arrays(rbt)[0].copy()
    rbt_to_csc(rbt)
    rbt_audit(rbt)
    assert np.array_equal(rbt_arrays(rbt)[0], keys)


def test_rectangular_and_tall_decode(rng):
    # columns with many empty neighbours exercise the incremental column decode
    for shape in [(1, 40), (40, 1), (3, 200), (200, 3)]:
        dense = random_dense(rng, *shape, 0.1)
        csc = csc_from_dense(dense)
        assert same_arrays(rbt_to_csc(csc_to_rbt(csc)), csc)
        assert same_arrays(coo_to_csc(csc_to_coo(csc)), csc)


@settings(max_examples=120, deadline=None)
@given(
    st.integers(1, 30),
    st.integers(1, 30),
    st.sampled_from([0.0, 0.001, 0.01, 0.1, 0.3, 1.0]),
    st.integers(0, 2**32 - 1),
)
def test_round_trips_exact(n_rows, n_cols, density, seed):
    dense = random_dense(np.random.default_rng(seed), n_rows, n_cols, density)
    csc = csc_from_dense(dense)
    back_coo = coo_to_csc(csc_to_coo(csc))
    back_rbt = rbt_to_csc(csc_to_rbt(csc))
    assert same_arrays(back_coo, csc)
    assert same_arrays(back_rbt, csc)
    csc_audit(back_rbt)


def test_debug_flag_default_from_env(monkeypatch):
    import importlib

    monkeypatch.setenv("HYBRIDSPARSE_DEBUG", "1")
    reloaded = importlib.reload(convert)
    try:
        assert reloaded.DEBUG is True
    finally:
        monkeypatch.delenv("HYBRIDSPARSE_DEBUG")
        importlib.reload(convert)
        convert.DEBUG = True
