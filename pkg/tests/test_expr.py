import numpy as np
import pytest

from hybridsparse import DimensionMismatch, SpMat, counters, speye, sprandu
from hybridsparse.expr import (
    Binary,
    Fused,
    Fusion,
    Leaf,
    Op,
    Unary,
    count_fusions,
    diagmat,
    eval_diagmat,
    eval_trace,
    evaluate,
    infer_shape,
    rewrite,
    transpose,
)

from corpus import depth, diagmat_case, trace_case
from oracles import assert_rel_close, random_dense


def dense_eval(e):
    if isinstance(e, Leaf):
        return e.matrix.to_dense()
    if isinstance(e, Fused):
        return dense_eval(e.node)
    if isinstance(e, Unary):
        x = dense_eval(e.child)
        if e.op is Op.TRANSPOSE:
            return x.T
        if e.op is Op.DIAGMAT:
            k = min(x.shape)
            return np.diag(np.diag(x)[:k])
        return e.scalar * x
    left, right = dense_eval(e.left), dense_eval(e.right)
    return left + right if e.op is Op.ADD else left @ right


def test_infer_shape():
    a, b = SpMat(5, 4), SpMat(4, 7)
    assert infer_shape(Unary(Op.TRANSPOSE, Leaf(a))) == (4, 5)
    assert infer_shape(Binary(Op.MUL, Leaf(a), Leaf(b))) == (5, 7)
    assert infer_shape(diagmat(b)) == (4, 4)
    with pytest.raises(DimensionMismatch, match="root"):
        infer_shape(Binary(Op.ADD, Leaf(a), Leaf(SpMat(4, 5))))
    with pytest.raises(DimensionMismatch, match=r"product at root\.right\.child:"):
        infer_shape(a + 2.0 * (a @ a))


def test_operators_build_trees(example):
    e = 0.5 * (example + example) @ example.t()
    assert isinstance(e, Binary) and e.op is Op.MUL
    assert e.shape == (5, 5)
    assert isinstance(example - example, Binary)


def test_leaf_identity():
    a = SpMat(3, 3)
    assert evaluate(Leaf(a)) is a
    assert Leaf(a) == Leaf(a) and Leaf(a) != Leaf(SpMat(3, 3))


def test_example_example_expression(rng):
    a = SpMat.from_dense(random_dense(rng, 40, 40, 0.1))
    b = SpMat.from_dense(random_dense(rng, 40, 40, 0.1))
    c = SpMat.from_dense(random_dense(rng, 40, 40, 0.1))
    got = (0.5 * (a + b) @ c.t()).eval()
    expected = 0.5 * (a.to_dense() + b.to_dense()) @ c.to_dense().T
    assert_rel_close(got.to_dense(), expected, 1e-12)
    got = evaluate(0.5 * (a + b))
    assert_rel_close(got.to_dense(), 0.5 * (a.to_dense() + b.to_dense()), 1e-12)


def test_trace_fused_dispatch(example):
    assert eval_trace(example.t() @ example) == 271
    assert counters.fused_trace == 1
    assert eval_trace(speye(7, 7)) == 7
    assert counters.fused_trace == 1


def test_trace_fallback_without_transpose(rng):
    a = SpMat.from_dense(random_dense(rng, 20, 30, 0.2))
    b = SpMat.from_dense(random_dense(rng, 30, 20, 0.2))
    assert_rel_close(eval_trace(a @ b), np.trace(a.to_dense() @ b.to_dense()), 1e-12)
    assert counters.fused_trace == 0


def test_trace_non_square():
    with pytest.raises(DimensionMismatch):
        eval_trace(SpMat(3, 4))


def test_trace_fused_no_matrix_allocation(rng):
    a = sprandu(60, 60, 0.1, 1)
    b = sprandu(60, 60, 0.1, 2)
    counters.reset()
    eval_trace(a.t() @ b)
    assert counters.matrix_allocs == 0 and counters.fused_trace == 1


def test_diagmat_paths(rng):
    a = SpMat.from_dense(random_dense(rng, 60, 60, 0.1))
    b = SpMat.from_dense(random_dense(rng, 60, 60, 0.1))
    d = eval_diagmat(a + b)
    assert counters.fused_diagmat == 1
    assert np.array_equal(d.to_dense(), np.diag(np.diag(a.to_dense() + b.to_dense())))
    assert eval_diagmat(speye(5, 5)) == speye(5, 5)
    prod = eval_diagmat(a @ b)
    assert counters.fused_diagmat == 1
    assert_rel_close(prod.to_dense(), np.diag(np.diag(a.to_dense() @ b.to_dense())), 1e-12)


def test_rewrite_annotations(example):
    e = example.t() @ example
    assert count_fusions(rewrite(e, "trace")) == 1
    assert count_fusions(rewrite(e)) == 0
    d = diagmat(example + example)
    assert count_fusions(rewrite(d)) == 1
    r = rewrite(d)
    assert isinstance(r.child, Fused) and r.child.kind is Fusion.DIAGMAT_ADD
    plain = example @ example.t()
    assert rewrite(plain) == plain


def test_double_transpose_eliminated(example):
    assert rewrite(transpose(transpose(example))) == Leaf(example)
    e = rewrite(example.t().t().t() @ example, "trace")
    assert isinstance(e, Fused) and e.kind is Fusion.TRACE_ATB


@pytest.mark.parametrize("seed", range(60))
def test_rewrite_idempotent_and_shape_preserving(seed):
    rng = np.random.default_rng(seed)
    for case, ctx in ((trace_case(rng), "trace"), (diagmat_case(rng), None)):
        e = case if ctx else diagmat(case)
        once = rewrite(e, ctx)
        assert rewrite(once, ctx) == once
        assert infer_shape(once) == infer_shape(e)


@pytest.mark.parametrize("seed", range(60))
def test_fused_matches_fallback_and_dense(seed):
    rng = np.random.default_rng(1000 + seed)
    e = trace_case(rng)
    assert depth(e) <= 4
    fused = eval_trace(e)
    assert_rel_close(fused, eval_trace(e, fuse=False), 1e-10)
    assert_rel_close(fused, np.trace(dense_eval(e)), 1e-10)
    d = diagmat_case(rng)
    got = eval_diagmat(d)
    assert_rel_close(got.to_dense(), eval_diagmat(d, fuse=False).to_dense(), 1e-10)
    assert_rel_close(got.to_dense(), dense_eval(diagmat(d)), 1e-10)


def test_evaluation_leaves_operands_intact(rng):
    a = SpMat.from_dense(random_dense(rng, 30, 30, 0.1)).ensure_rbt()
    b = SpMat.from_dense(random_dense(rng, 30, 30, 0.1))
    before = (sorted(a.triplets()), sorted(b.triplets()))
    eval_trace(a.t() @ (b + 2.0 * a))
    eval_diagmat(a + b)
    evaluate((a @ b).t() + b)
    assert (sorted(a.triplets()), sorted(b.triplets())) == before
