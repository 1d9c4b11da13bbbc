import io
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsparse import BoundsError, Format, SpMat, speye, sprandu
from hybridsparse.hybrid import introspect
from hybridsparse.storage import rbt_arrays

from oracles import (
    EXAMPLE_COL_OFFSETS,
    EXAMPLE_COLUMNS,
    EXAMPLE_DENSE,
    EXAMPLE_INDICES,
    EXAMPLE_ROWS,
    EXAMPLE_TRIPLETS,
    EXAMPLE_VALUES,
    random_dense,
)


def sweep(m):
    return [m.get(r, c) for c in range(m.n_cols) for r in range(m.n_rows)]


def test_from_triplets_lands_in_csc(example):
    assert example.state is Format.CSC
    assert example.n_nonzero == 6
    assert np.array_equal(example.to_dense(), EXAMPLE_DENSE)


def test_ensure_rbt_gives_example_tree(example):
    example.ensure_rbt()
    assert example.state is Format.RBT
    keys, vals = rbt_arrays(example._rbt)
    assert keys.tolist() == EXAMPLE_INDICES and vals.tolist() == EXAMPLE_VALUES


def test_ensure_csc_from_rbt_gives_example_arrays(example):
    example.ensure_rbt().ensure_csc()
    v, r, c = example.csc().data()
    assert (v.tolist(), r.tolist(), c.tolist()) == (EXAMPLE_VALUES, EXAMPLE_ROWS, EXAMPLE_COL_OFFSETS)


def test_ensure_is_idempotent(example):
    example.ensure_csc()
    assert introspect(example)["conversions"] == 0
    example.ensure_coo()
    n = introspect(example)["conversions"]
    example.ensure_coo()
    assert introspect(example)["conversions"] == n


def test_rbt_to_coo_routes_through_csc(example):
    example.ensure_rbt()
    before = introspect(example)["conversions"]
    example.ensure_coo()
    assert introspect(example)["conversions"] == before + 2
    assert example._coo.data()[2].tolist() == EXAMPLE_COLUMNS
    assert list(example.triplets()) == EXAMPLE_TRIPLETS


def test_stale_representations_are_discarded(example):
    example.ensure_rbt()
    assert example._csc is None and example._coo is None
    example.ensure_coo()
    assert example._csc is None and example._rbt is None


@pytest.mark.parametrize("state", ["ensure_csc", "ensure_rbt", "ensure_coo"])
def test_empty_any_state(state):
    m = SpMat(5, 4)
    getattr(m, state)()
    assert m.ensure_csc().csc().col_offsets.tolist() == [0] * 5


def test_get_reads_without_sync(example):
    expected = EXAMPLE_DENSE.T.ravel().tolist()
    for state in ("ensure_csc", "ensure_rbt", "ensure_coo"):
        getattr(example, state)()
        s = example.state
        n = introspect(example)["conversions"]
        assert example.get(3, 1) == 7
        assert example.get(0, 3) == 0
        assert sweep(example) == expected
        assert example.state is s and introspect(example)["conversions"] == n
        assert example.n_nonzero == 6


def test_get_bounds(example):
    with pytest.raises(BoundsError):
        example.get(5, 0)
    with pytest.raises(BoundsError):
        example[0, -1]


def test_set_routes_to_rbt(example):
    example.set(0, 0, 1.0)
    assert introspect(example)["state"] is Format.RBT
    assert example[0, 0] == 1.0


def test_manual_vs_automatic_panel():
    X = SpMat(1000, 1000)
    X[1, 1] = 1.23
    X.set_add(3, 4, 4.56)
    assert X.n_nonzero == 2
    assert X.get(3, 4) == 4.56
    X.set_add(3, 4, -4.56)
    assert X.n_nonzero == 1


def test_set_zero_deletes(example):
    example.set(2, 2, 5.0)
    example.set(4, 0, 5.0)
    example.set(4, 0, 0.0)
    assert example.n_nonzero == 6 and example.get(4, 0) == 0
    example[2, 2] = 0
    assert example.n_nonzero == 5


def test_random_sets_match_dense_mirror(rng):
    m = SpMat(100, 100)
    mirror = np.zeros((100, 100))
    for _ in range(1000):
        r, c = rng.integers(0, 100, size=2)
        v = float(rng.choice([0.0, rng.normal()]))
        m[r, c] = v
        mirror[r, c] = v
    m.ensure_csc()
    assert np.array_equal(m.to_dense(), mirror)


def test_speye():
    assert list(speye(3, 3).triplets()) == [(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]
    assert speye(5, 4).n_nonzero == 4
    assert speye(4, 5).n_nonzero == 4
    assert np.array_equal(speye(4, 6).to_dense(), np.eye(4, 6))
    with pytest.raises(ValueError):
        speye(0, 3)


def test_sprandu_counts_and_determinism():
    m = sprandu(1000, 1000, 0.01, seed=5)
    assert m.n_nonzero == 10000 and m.state is Format.CSC
    assert sprandu(10, 10, 0, seed=5).n_nonzero == 0
    assert sprandu(10, 10, 1, seed=5).n_nonzero == 100
    a = sprandu(100, 100, 0.05, seed=9)
    b = sprandu(100, 100, 0.05, seed=9)
    assert list(a.triplets()) == list(b.triplets())
    assert a != sprandu(100, 100, 0.05, seed=10)
    _, _, v = m.triplet_arrays()
    assert v.min() > 0 and v.max() <= 1
    with pytest.raises(ValueError):
        sprandu(10, 10, 1.5, seed=1)


def test_print_lists_triplets(example):
    sink = io.StringIO()
    example.print(sink)
    lines = sink.getvalue().splitlines()
    assert "5x4" in lines[0] and "n_nonzero: 6" in lines[0] and "30.00%" in lines[0]
    assert len(lines) == 7
    assert lines[1].split() == ["(1,", "0)", "9.0000"]


def test_equality_ignores_state(example):
    other = example.copy().ensure_rbt()
    assert example == other
    assert example.equals(other.ensure_coo())
    assert example != SpMat(5, 4)
    assert example != SpMat.from_triplets(4, 5, [])


def test_from_dense_round_trip(rng):
    dense = random_dense(rng, 17, 9, 0.3)
    assert np.array_equal(SpMat.from_dense(dense).to_dense(), dense)


def test_read_only_view_shared_between_threads(example):
    view = example.read_only_view()
    results = []

    def worker():
        results.append([view.get(r, c) for r in range(5) for c in range(4)])

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == EXAMPLE_DENSE.ravel().tolist() for r in results)
    assert list(view.triplets()) == EXAMPLE_TRIPLETS


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["csc", "rbt", "coo"]), max_size=12), st.integers(0, 10**6))
def test_transition_closure(seq, seed):
    dense = random_dense(np.random.default_rng(seed), 9, 7, 0.3)
    m = SpMat.from_dense(dense)
    expected = sorted(m.triplets())
    for name in seq:
        getattr(m, "ensure_" + name)()
        assert sorted(m.triplets()) == expected
        assert m.n_nonzero == len(expected)


def _checksum(m):
    store = m._authority()
    if m.state is Format.RBT:
        return store.pool.tobytes() + store.red.tobytes() + store.meta.tobytes()
    return b"".join(a.tobytes() for a in store.data())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["csc", "rbt", "coo"]))
def test_reads_are_pure(seed, state):
    rng = np.random.default_rng(seed)
    m = SpMat.from_dense(random_dense(rng, 8, 8, 0.3))
    getattr(m, "ensure_" + state)()
    before = (m.state, m.n_nonzero, _checksum(m))
    for _ in range(20):
        m.get(*rng.integers(0, 8, size=2))
    assert (m.state, m.n_nonzero, _checksum(m)) == before


op = st.one_of(
    st.tuples(st.just("set"), st.integers(0, 19), st.integers(0, 14), st.sampled_from([0.0, 1.5, -3.0])),
    st.tuples(st.just("add"), st.integers(0, 19), st.integers(0, 14), st.sampled_from([1.5, -1.5])),
    st.tuples(st.just("get"), st.integers(0, 19), st.integers(0, 14), st.just(0.0)),
    st.tuples(st.sampled_from(["csc", "rbt", "coo"]), st.just(0), st.just(0), st.just(0.0)),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(op, max_size=80))
def test_mixed_workload_matches_dense_mirror(ops):
    m = SpMat(20, 15)
    mirror = np.zeros((20, 15))
    for name, r, c, v in ops:
        if name == "set":
            m[r, c] = v
            mirror[r, c] = v
        elif name == "add":
            m.set_add(r, c, v)
            mirror[r, c] += v
        elif name == "get":
            assert m[r, c] == mirror[r, c]
        else:
            getattr(m, "ensure_" + name)()
        assert m.n_nonzero == np.count_nonzero(mirror)
    assert np.array_equal(m.to_dense(), mirror)
