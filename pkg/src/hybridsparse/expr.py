"""Delayed evaluation of compound sparse expressions.

Operators on :class:`~hybridsparse.hybrid.SpMat` build small immutable trees
that hold references to their operands.  Before evaluation, :func:`rewrite`
marks the sub-trees that a fused kernel can handle directly:

* ``trace(A.t() @ B)`` becomes a sum of column dot products;
* ``diagmat(A + B)`` becomes ``2 * min(n_rows, n_cols)`` element lookups.

``X.t().t()`` collapses to ``X`` as well.  Anything else is evaluated eagerly
with the kernels, bottom up.

>>> A = sprandu(100, 100, 0.05, seed=1)
>>> B = sprandu(100, 100, 0.05, seed=2)
>>> eval_trace(A.t() @ B)          # no transpose or product is formed
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from numbers import Number
from typing import Optional

from . import kernels
from ._instrument import counters
from .errors import DimensionMismatch
from .hybrid import SpMat


class Op(enum.Enum):
    TRANSPOSE = "t"
    SCALAR_MUL = "scale"
    DIAGMAT = "diagmat"
    ADD = "+"
    MUL = "@"


class Fusion(enum.Enum):
    TRACE_ATB = "trace_atb"
    DIAGMAT_ADD = "diagmat_add"


class Expr:
    """Common operator surface for expression nodes."""

    __slots__ = ()

    def t(self) -> "Expr":
        return Unary(Op.TRANSPOSE, self)

    def __add__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.ADD, self, other)

    def __radd__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.ADD, other, self)

    def __neg__(self):
        return Unary(Op.SCALAR_MUL, self, -1.0)

    def __sub__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.ADD, self, -other)

    def __rsub__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.ADD, other, -self)

    def __mul__(self, k):
        if isinstance(k, Number):
            return Unary(Op.SCALAR_MUL, self, float(k))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.MUL, self, other)

    def __rmatmul__(self, other):
        other = _as_node(other)
        return NotImplemented if other is None else Binary(Op.MUL, other, self)

    @property
    def shape(self) -> tuple[int, int]:
        return infer_shape(self)

    def eval(self, fuse: bool = True) -> SpMat:
        return evaluate(self, fuse)


@dataclass(frozen=True, eq=False)
class Leaf(Expr):
    matrix: SpMat

    # operands compare by identity: two leaves are the same only if they
    # refer to the same matrix object
    def __eq__(self, other):
        return isinstance(other, Leaf) and other.matrix is self.matrix

    def __hash__(self):
        return id(self.matrix)


@dataclass(frozen=True)
class Unary(Expr):
    op: Op
    child: Expr
    scalar: Optional[float] = None


@dataclass(frozen=True)
class Binary(Expr):
    op: Op
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Fused(Expr):
    """Marks ``node`` as evaluable by the fused kernel ``kind``."""

    kind: Fusion
    node: Expr


def _as_node(x) -> Optional[Expr]:
    if isinstance(x, Expr):
        return x
    if isinstance(x, SpMat):
        return Leaf(x)
    return None


def as_expr(x) -> Expr:
    node = _as_node(x)
    if node is None:
        raise TypeError(f"cannot use {type(x).__name__} as a matrix expression")
    return node


def transpose(x) -> Expr:
    return Unary(Op.TRANSPOSE, as_expr(x))


def diagmat(x) -> Expr:
    return Unary(Op.DIAGMAT, as_expr(x))


# -- shapes -------------------------------------------------------------------


def infer_shape(e: Expr, _path: str = "root") -> tuple[int, int]:
    """Result shape of ``e``; mismatches name the offending node's path."""
    if isinstance(e, Leaf):
        return e.matrix.shape
    if isinstance(e, Fused):
        return infer_shape(e.node, _path)
    if isinstance(e, Unary):
        r, c = infer_shape(e.child, _path + ".child")
        if e.op is Op.TRANSPOSE:
            return c, r
        if e.op is Op.DIAGMAT:
            k = min(r, c)
            return k, k
        return r, c
    if isinstance(e, Binary):
        left = infer_shape(e.left, _path + ".left")
        right = infer_shape(e.right, _path + ".right")
        if e.op is Op.ADD:
            if left != right:
                raise DimensionMismatch(
                    f"addition at {_path}: {left[0]}x{left[1]} vs {right[0]}x{right[1]}"
                )
            return left
        if left[1] != right[0]:
            raise DimensionMismatch(
                f"product at {_path}: {left[0]}x{left[1]} times {right[0]}x{right[1]}"
            )
        return left[0], right[1]
    raise TypeError(f"not an expression node: {e!r}")


# -- rewriting ------------------------------------------------------------------


def _rewrite_children(e: Expr) -> Expr:
    if isinstance(e, Unary):
        return Unary(e.op, rewrite(e.child, "diagmat" if e.op is Op.DIAGMAT else None), e.scalar)
    if isinstance(e, Binary):
        return Binary(e.op, rewrite(e.left), rewrite(e.right))
    return e


def rewrite(e: Expr, context: Optional[str] = None) -> Expr:
    """Annotate fusable sub-trees.

    ``context`` says what consumes ``e``: ``"trace"`` enables the
    transpose-product pattern, ``"diagmat"`` the sum pattern.  The pass is
    idempotent and never changes a node's shape.
    """
    if isinstance(e, Leaf):
        return e
    if isinstance(e, Fused):
        return Fused(e.kind, _rewrite_children(e.node))
    e = _rewrite_children(e)
    if isinstance(e, Unary) and e.op is Op.TRANSPOSE:
        inner = e.child
        if isinstance(inner, Unary) and inner.op is Op.TRANSPOSE:
            return rewrite(inner.child, context)
    if isinstance(e, Binary):
        if (
            context == "trace"
            and e.op is Op.MUL
            and isinstance(e.left, Unary)
            and e.left.op is Op.TRANSPOSE
        ):
            return Fused(Fusion.TRACE_ATB, e)
        if context == "diagmat" and e.op is Op.ADD:
            return Fused(Fusion.DIAGMAT_ADD, e)
    return e


def count_fusions(e: Expr) -> int:
    if isinstance(e, Fused):
        return 1 + count_fusions(e.node)
    if isinstance(e, Unary):
        return count_fusions(e.child)
    if isinstance(e, Binary):
        return count_fusions(e.left) + count_fusions(e.right)
    return 0


# -- evaluation -----------------------------------------------------------------


def _eval(e: Expr, fuse: bool) -> SpMat:
    if isinstance(e, Leaf):
        return e.matrix
    if isinstance(e, Fused):
        return _eval(e.node, fuse)
    if isinstance(e, Unary):
        if e.op is Op.DIAGMAT:
            child = e.child
            if fuse and isinstance(child, Fused) and child.kind is Fusion.DIAGMAT_ADD:
                counters.fused_diagmat += 1
                return kernels.diagmat_fused_add(
                    _eval(child.node.left, fuse), _eval(child.node.right, fuse)
                )
            return kernels.diagmat(_eval(child, fuse))
        m = _eval(e.child, fuse)
        if e.op is Op.TRANSPOSE:
            return kernels.transpose_csc(m)
        return kernels.scalar_mul(m, e.scalar)
    if isinstance(e, Binary):
        left = _eval(e.left, fuse)
        right = _eval(e.right, fuse)
        if e.op is Op.ADD:
            return kernels.sp_add(left, right)
        return kernels.sp_mul(left, right)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, fuse: bool = True) -> SpMat:
    """Evaluate an expression tree.

    A bare leaf evaluates to its own matrix (no copy).  With ``fuse=False``
    no rewrite happens and every node runs its eager kernel.
    """
    e = as_expr(e)
    infer_shape(e)
    if fuse:
        e = rewrite(e)
    return _eval(e, fuse)


def eval_trace(e, fuse: bool = True) -> float:
    """``trace(e)``, using the fused kernel when ``e`` is ``A.t() @ B``."""
    e = as_expr(e)
    r, c = infer_shape(e)
    if r != c:
        raise DimensionMismatch(f"trace of a non-square {r}x{c} result")
    if fuse:
        e = rewrite(e, "trace")
        if isinstance(e, Fused) and e.kind is Fusion.TRACE_ATB:
            counters.fused_trace += 1
            product = e.node
            return kernels.trace_fused_atb(
                _eval(product.left.child, fuse), _eval(product.right, fuse)
            )
    return kernels.trace(_eval(e, fuse))


def eval_diagmat(e, fuse: bool = True) -> SpMat:
    """``diagmat(e)``; a sum is handled by lookups, a leaf by its own diagonal."""
    return evaluate(Unary(Op.DIAGMAT, as_expr(e)), fuse)


__all__ = [
    "Binary",
    "Expr",
    "Fused",
    "Fusion",
    "Leaf",
    "Op",
    "Unary",
    "as_expr",
    "count_fusions",
    "diagmat",
    "eval_diagmat",
    "eval_trace",
    "evaluate",
    "infer_shape",
    "rewrite",
    "transpose",
]
