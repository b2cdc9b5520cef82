"""Order laws and trace soundness of the byte-zone equality domain."""

from __future__ import annotations

from hypothesis import HealthCheck, given, settings, strategies as st

from cellscope.domains.equality import (TOP, Binding, EqualityState, eq_delete, eq_leq, eq_lub,
                                        eq_transfer_assign, eq_transfer_copy)

PROPS = settings(max_examples=1000, deadline=None, database=None, suppress_health_check=[HealthCheck.too_slow])

VARS = ["a", "b", "c"]
SIZE = 8


@st.composite
def binding(draw):
    l = draw(st.integers(1, SIZE))
    s = draw(st.integers(0, SIZE - l))
    d = draw(st.integers(0, SIZE - l))
    return Binding(s, draw(st.sampled_from(VARS)), d, l)


states = st.dictionaries(st.sampled_from(VARS), binding(), max_size=3).map(EqualityState)


@st.composite
def weaker(draw, eps):
    """A state above ``eps``: bindings dropped or shrunk to a sub-zone."""
    out = {}
    for v, b in eps.map.items():
        if draw(st.booleans()):
            continue
        lo = draw(st.integers(0, b.l - 1))
        hi = draw(st.integers(lo + 1, b.l))
        out[v] = Binding(b.s + lo, b.dst, b.d + lo, hi - lo)
    return EqualityState(out)


@PROPS
@given(states, states, states)
def test_leq_is_a_partial_order(a, b, c):
    assert eq_leq(a, a)
    assert eq_leq(a, TOP)
    if eq_leq(a, b) and eq_leq(b, c):
        assert eq_leq(a, c)
    if eq_leq(a, b) and eq_leq(b, a):
        assert a == b


@PROPS
@given(states, states, st.data())
def test_lub_is_least_upper_bound(a, b, data):
    j = eq_lub(a, b)
    assert eq_leq(a, j) and eq_leq(b, j)
    assert eq_lub(a, b) == eq_lub(b, a)
    assert eq_lub(a, a) == a
    for src in (a, b):
        c = data.draw(weaker(src))
        if eq_leq(a, c) and eq_leq(b, c):
            assert eq_leq(j, c)


@PROPS
@given(st.lists(states, min_size=1, max_size=6))
def test_ascending_chains_are_short(chain):
    acc = chain[0]
    steps = 0
    for s in chain[1:]:
        nxt = eq_lub(acc, s)
        assert eq_leq(acc, nxt)
        if nxt != acc:
            steps += 1
        acc = nxt
    assert steps <= len(VARS) * (SIZE + 1)


def _holds(eps, mem) -> bool:
    return all(mem[v][b.s:b.s + b.l] == mem[b.dst][b.d:b.d + b.l] for v, b in eps.map.items())


@st.composite
def operation(draw):
    kind = draw(st.sampled_from(["copy", "copy", "copy", "write", "may-write", "delete"]))
    if kind == "copy":
        l = draw(st.integers(1, 4))
        return ("copy", draw(st.sampled_from(VARS)), draw(st.integers(0, SIZE - l)),
                draw(st.sampled_from(VARS)), draw(st.integers(0, SIZE - l)), l)
    if kind == "delete":
        return ("delete", draw(st.sampled_from(VARS)))
    lo = draw(st.integers(0, SIZE - 1))
    hi = draw(st.integers(lo + 1, SIZE))
    return (kind, draw(st.sampled_from(VARS)), lo, hi, draw(st.integers(0, 3)))


@PROPS
@given(st.lists(operation(), max_size=14),
       st.lists(st.integers(0, 3), min_size=SIZE * len(VARS), max_size=SIZE * len(VARS)))
def test_bindings_hold_along_traces(ops, init):
    mem = {v: init[i * SIZE:(i + 1) * SIZE] for i, v in enumerate(VARS)}
    eps = TOP
    for op in ops:
        if op[0] == "copy":
            _, src, s, dst, d, l = op
            chunk = mem[src][s:s + l]
            mem[dst] = mem[dst][:d] + chunk + mem[dst][d + l:]
            eps = eq_transfer_copy(eps, src, s, dst, d, l)
        elif op[0] == "write":
            _, var, lo, hi, val = op
            mem[var] = mem[var][:lo] + [val] * (hi - lo) + mem[var][hi:]
            eps = eq_transfer_assign(eps, var, lo, hi)
        elif op[0] == "may-write":
            _, var, lo, hi, val = op
            if val % 2:
                mem[var] = mem[var][:lo] + [val] * (hi - lo) + mem[var][hi:]
            eps = eq_transfer_assign(eps, var)
        else:
            var = op[1]
            mem[var] = [7] * SIZE      # a new variable in the same slot
            eps = eq_delete(eps, var)
        assert _holds(eps, mem), (op, eps, mem)


@PROPS
@given(st.integers(1, SIZE), st.data())
def test_bytewise_copy_grows_one_binding(n, data):
    s = data.draw(st.integers(0, SIZE - n))
    d = data.draw(st.integers(0, SIZE - n))
    eps = TOP
    for k in range(n):
        eps = eq_transfer_copy(eps, "b", s + k, "a", d + k, 1)
    assert eps.get("b") == Binding(s, "a", d, n)
