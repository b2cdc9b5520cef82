"""Brute-force soundness of the interval x congruence domain.

Every environment has at most three small cells, so all of its
concretizations can be enumerated; the concrete operators of the oracle
evaluate each one.
"""

from __future__ import annotations

import itertools
import math

from hypothesis import HealthCheck, assume, given, settings, strategies as st

from cellscope.abi import DEFAULT_ABI, ScalarType as T
from cellscope.concrete.semantics import EvalError, apply_binary, apply_cast, apply_unary
from cellscope.concrete.values import round_float
from cellscope.domains import numeric as nm
from cellscope.domains.memory import Cell
from cellscope.domains.numeric import Num, NumericEnv
from cellscope.ir import Binary, Cast, CellRef, Const, Unary

PROPS = settings(max_examples=1000, deadline=None, database=None,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])

CELLS = [Cell("x", 0, T.INT, 4), Cell("y", 0, T.INT, 4), Cell("z", 0, T.INT, 4)]
INT_OPS = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"]
CMP_OPS = ["<", "<=", ">", ">=", "==", "!="]


@st.composite
def small_num(draw, lo=0, hi=20):
    a = draw(st.integers(lo, hi))
    b = draw(st.integers(a, min(hi, a + 8)))
    m = draw(st.sampled_from([1, 1, 1, 2, 3, 4]))
    r = draw(st.integers(0, m - 1))
    v = nm.mk(a, b, m, r)
    assume(v is not None)
    return v


def _members(v: Num):
    return [k for k in range(int(v.lo), int(v.hi) + 1) if v.contains(k)]


def exprs(depth):
    leaf = st.one_of(st.sampled_from(CELLS).map(lambda c: CellRef((c,), T.INT)),
                     st.integers(-3, 20).map(lambda k: Const(k, T.INT)))
    if depth == 0:
        return leaf
    sub = exprs(depth - 1)
    return st.one_of(
        leaf,
        st.builds(lambda op, a, b: Binary(op, a, b, T.INT), st.sampled_from(INT_OPS + CMP_OPS),
                  sub, sub),
        st.builds(lambda op, a: Unary(op, a, T.INT), st.sampled_from(["-", "~", "!"]), sub),
        st.builds(lambda t, a: Cast(T.INT, Cast(t, a)), st.sampled_from([T.UCHAR, T.SCHAR,
                                                                         T.SHORT]), sub),
        st.builds(lambda op, a, b: Cast(T.INT, Binary(op, Cast(T.UINT, a), Cast(T.UINT, b),
                                                      T.UINT)),
                  st.sampled_from(["+", "-", "*", "/", ">>"]), sub, sub),
    )


def concrete(e, val):
    """The value of ``e`` under the valuation, or None after a run-time error."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, CellRef):
        return val[e.cells[0]]
    try:
        if isinstance(e, Cast):
            a = concrete(e.arg, val)
            if a is None:
                return None
            (r,) = apply_cast(e.ty, a, DEFAULT_ABI).finite(2)
            return r
        if isinstance(e, Unary):
            a = concrete(e.arg, val)
            return None if a is None else apply_unary(e.op, e.ty, a, DEFAULT_ABI, e)
        a, b = concrete(e.left, val), concrete(e.right, val)
        if a is None or b is None:
            return None
        return apply_binary(e.op, e.ty, a, b, DEFAULT_ABI, None, e)
    except EvalError:
        return None


def env_of(values):
    kinds = {c: T.INT for c in CELLS}
    return NumericEnv(dict(zip(CELLS, values)), kinds)


def valuations(values):
    for combo in itertools.product(*[_members(v) for v in values]):
        yield dict(zip(CELLS, combo))


@PROPS
@given(st.lists(small_num(), min_size=3, max_size=3), exprs(3), st.sampled_from(CELLS))
def test_assign_is_sound(values, e, target):
    env = env_of(values)
    out, _ = env.assign(target, e, DEFAULT_ABI)
    for val in valuations(values):
        r = concrete(e, val)
        if r is None:
            continue
        got = out.get(target)
        assert got is not None and got.contains(r), (str(e), val, r, got)
        for c in CELLS:
            if c != target:
                assert out.get(c).contains(val[c])


@PROPS
@given(st.lists(small_num(), min_size=3, max_size=3), exprs(3), st.booleans())
def test_guard_is_sound(values, e, truth):
    env = env_of(values)
    out, _ = env.test(e, DEFAULT_ABI, truth=truth)
    for val in valuations(values):
        r = concrete(e, val)
        if r is None or (r != 0) != truth:
            continue
        assert not out.is_bottom, (str(e), val)
        for c in CELLS:
            assert out.get(c).contains(val[c]), (str(e), truth, val, out)


@PROPS
@given(st.lists(small_num(), min_size=3, max_size=3),
       st.sampled_from(CELLS), st.sampled_from(CMP_OPS), st.integers(-2, 22))
def test_comparison_guard_exact_on_intervals(values, c, op, k):
    """For ``c op k`` with a plain interval the refined bounds are the tightest."""
    values = [nm.mk(v.lo, v.hi) for v in values]
    env = env_of(values)
    e = Binary(op, CellRef((c,), T.INT), Const(k, T.INT), T.INT)
    out, _ = env.test(e, DEFAULT_ABI, truth=True)
    idx = CELLS.index(c)
    keep = [v for v in _members(values[idx]) if concrete(e, {c: v}) == 1]
    if not keep:
        assert out.is_bottom or out.get(c) is None
        return
    got = out.get(c)
    assert got.lo == min(keep)
    if op != "!=":
        assert got.hi == max(keep)


@PROPS
@given(small_num(-30, 30), small_num(-30, 30), small_num(-30, 30))
def test_lattice_laws(a, b, c):
    j, m = nm.join(a, b), nm.meet(a, b)
    assert nm.leq(a, j) and nm.leq(b, j)
    for k in range(-31, 32):
        if a.contains(k) or b.contains(k):
            assert j.contains(k)
        if m is not None and m.contains(k):
            assert a.contains(k) and b.contains(k)
        if a.contains(k) and b.contains(k):
            assert m is not None and m.contains(k)
    assert nm.leq(a, a)
    if nm.leq(a, b) and nm.leq(b, c):
        assert nm.leq(a, c)
    if nm.leq(a, b):
        assert all(b.contains(k) for k in _members(a))


@PROPS
@given(st.integers(-40, 40), st.integers(0, 12), st.integers(0, 8), st.integers(-5, 5))
def test_reduction_idempotent(lo, width, m, r):
    v = nm.mk(lo, lo + width, m, r)
    if v is None:
        assert not any((m == 0 and k == r) or (m and (k - r) % m == 0)
                       for k in range(lo, lo + width + 1))
        return
    again = nm.mk(v.lo, v.hi, v.m, v.r)
    assert again == v
    want = [k for k in range(lo, lo + width + 1)
            if (k == r if m == 0 else (k - r) % m == 0)]
    assert _members(v) == want


@PROPS
@given(st.lists(small_num(-300, 300), min_size=1, max_size=20))
def test_widening_chain_stabilizes(chain):
    bound = len(nm.DEFAULT_THRESHOLDS) + 2 + 2
    acc = chain[0]
    changes = 0
    for v in chain[1:]:
        acc2 = nm.widen(acc, nm.join(acc, v), cong_top=False)
        assert nm.leq(acc, acc2) and nm.leq(v, acc2)
        if acc2 != acc:
            changes += 1
        acc = acc2
    assert changes <= 2 * bound


FLOAT_GRID = [-2.5, -1.0, -0.5, 0.0, 0.1, 0.3, 1.0, 1.5, 3.0, 7.25, 1e10, 3.4e38]


@PROPS
@given(st.sampled_from([T.FLOAT, T.DOUBLE]), st.sampled_from(["+", "-", "*", "/"]),
       st.lists(st.sampled_from(FLOAT_GRID), min_size=1, max_size=3),
       st.lists(st.sampled_from(FLOAT_GRID), min_size=1, max_size=3))
def test_float_arithmetic_rounds_outward(ty, op, xs, ys):

    xs = [round_float(ty, x) for x in xs]
    ys = [round_float(ty, y) for y in ys]
    cx, cy = Cell("f", 0, ty, 4), Cell("g", 0, ty, 4)
    env = NumericEnv({cx: nm.rng(min(xs), max(xs)), cy: nm.rng(min(ys), max(ys))},
                     {cx: ty, cy: ty})
    e = Binary(op, CellRef((cx,), ty), CellRef((cy,), ty), ty)
    out, _ = env.assign(cx, e, DEFAULT_ABI)
    got = out.get(cx)
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    grid = sorted({lo_x, hi_x, *xs}), sorted({lo_y, hi_y, *ys})
    for x in grid[0]:
        for y in grid[1]:
            try:
                r = apply_binary(op, ty, x, y, DEFAULT_ABI, None, e)
            except EvalError:
                continue
            if math.isnan(r):
                continue
            assert got is not None and got.lo <= r <= got.hi, (x, op, y, r, got)
