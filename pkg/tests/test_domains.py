from __future__ import annotations

from cellscope.abi import DEFAULT_ABI, ScalarType as T
from cellscope.domains import numeric as nm
from cellscope.domains.equality import (TOP, Binding, EqualityState, eq_leq, eq_lub,
                                        eq_transfer_assign, eq_transfer_copy)
from cellscope.domains.memory import Cell, MemoryDomain
from cellscope.domains.numeric import NumericEnv
from cellscope.domains.values import NULL_BASE, BaseSet, ValueEnv
from cellscope.ir import AddrOf, Assign, Binary, Cast, CellRef, Const, Copy, Deref, Guard, Input, Unary

ABI = DEFAULT_ABI


def ref(c):
    return CellRef((c,), c.ty)


def num(lo, hi, m=1, r=0):
    return nm.mk(lo, hi, m, r)


# -- numeric ---------------------------------------------------------------------

X = Cell("x", 0, T.INT, 4)
Y = Cell("y", 0, T.INT, 4)
AH = Cell("regs", 1, T.UCHAR, 1)
AX = Cell("regs", 0, T.USHORT, 2)


def test_assign_constant_sum():
    env = NumericEnv({X: nm.const(0)}, {X: T.INT})
    out, alarms = env.assign(X, Binary("+", Const(1, T.INT), Const(2, T.INT), T.INT), ABI)
    assert out.get(X) == nm.const(3) and out.get(X).m == 0 and not alarms


def test_assign_copy():
    env = NumericEnv({X: nm.const(0), Y: num(1, 2)}, {X: T.INT, Y: T.INT})
    out, _ = env.assign(X, ref(Y), ABI)
    assert out.get(X) == num(1, 2)


def test_widened_offset_keeps_stride():
    o = nm.const(0)
    for _ in range(6):
        nxt = nm.widen(o, nm.join(o, nm.add(o, nm.const(4))), thresholds=(), cong_top=False)
        if nxt == o:
            break
        o = nxt
    assert (o.lo, o.hi, o.m, o.r) == (0, nm.INF, 4, 0)


def test_guard_zero():
    env = NumericEnv({AH: num(0, 255)}, {AH: T.UCHAR})
    out, _ = env.test(Binary("==", ref(AH), Const(0, T.INT), T.INT), ABI, truth=True)
    assert out.get(AH) == nm.const(0)


def test_guard_through_division():
    env = NumericEnv({AX: num(0, 65535), AH: nm.const(0)}, {AX: T.USHORT, AH: T.UCHAR})
    e = Binary("-", Binary("/", ref(AX), Const(256, T.INT), T.INT), ref(AH), T.INT)
    out, _ = env.test(e, ABI, truth=False)
    assert out.get(AX) == num(0, 255)


def test_guard_contradiction_is_bottom():
    env = NumericEnv({X: num(6, 9)}, {X: T.INT})
    out, _ = env.test(Binary("==", ref(X), Const(5, T.INT), T.INT), ABI, truth=True)
    assert out.is_bottom


def test_join_widen_leq():
    assert nm.join(num(0, 1), num(5, 6)) == num(0, 6)
    assert nm.widen(num(0, 1), num(0, 2), thresholds=(255, 65535)) == num(0, 255)
    assert nm.leq(num(1, 2), num(0, 3))
    assert not nm.leq(num(0, 3), num(1, 2))


def test_cell_add_remove_round_trip():
    env = NumericEnv({X: num(0, 3)}, {X: T.INT})
    more = env.add_cell(AH, T.UCHAR, ABI)
    assert more.get(AH) == num(0, 255)
    assert more.remove_cell(AH) == env


def test_division_by_zero_interval_alarms_and_continues():
    env = NumericEnv({X: num(-2, 2), Y: nm.const(0)}, {X: T.INT, Y: T.INT})
    out, alarms = env.assign(Y, Binary("/", Const(10, T.INT), ref(X), T.INT), ABI)
    assert ("div-by-zero" in [k for k, _ in alarms]) and out.get(Y) == num(-10, 10)


# -- pointer values ----------------------------------------------------------------

P = Cell("p", 0, T.PTR, 4)
Q = Cell("q", 0, T.PTR, 4)
I = Cell("i", 0, T.INT, 4)
SIZES = {"U": 16, "V": 16}


def penv(**cells):
    vals, kinds, bases = {}, {}, {}
    for name, spec in cells.items():
        c = {"p": P, "q": Q, "i": I}[name]
        kinds[c] = c.ty
        if c.ty is T.PTR:
            vals[c], bases[c] = spec[1], BaseSet.of(*spec[0])
        else:
            vals[c] = spec
    return ValueEnv(vals, kinds, bases=bases)


def test_pointer_plus_offset():
    env = penv(p=(("U", "V"), num(0, 4)), q=((), nm.const(0)), i=num(0, 8))
    out, _ = env.assign(Q, Binary("+", ref(P), ref(I), T.PTR), ABI, sizes=SIZES)
    assert out.get_bases(Q) == BaseSet.of("U", "V") and out.get(Q) == num(0, 12)


def test_address_and_null():
    env = penv(q=(("U",), num(3, 3)))
    out, _ = env.assign(Q, AddrOf("U"), ABI, sizes=SIZES)
    assert out.get_bases(Q) == BaseSet.of("U") and out.get(Q) == nm.const(0)
    out, _ = env.assign(Q, Cast(T.PTR, Const(0, T.INT)), ABI, sizes=SIZES)
    assert out.get_bases(Q) == BaseSet.of(NULL_BASE)


def test_pointer_null_tests():
    env = penv(p=((NULL_BASE, "U"), nm.const(0)))
    out, _ = env.test(Unary("!", ref(P), T.INT), ABI, truth=True, sizes=SIZES)
    assert out.get_bases(P) == BaseSet.of(NULL_BASE)
    env = penv(p=((NULL_BASE,), nm.const(0)))
    out, _ = env.test(Unary("!", ref(P), T.INT), ABI, truth=False, sizes=SIZES)
    assert out.is_bottom


def test_pointer_comparison_refines_offsets():
    env = penv(p=(("U",), num(0, 8)), q=(("U",), num(2, 4)))
    out, _ = env.test(Binary("<", ref(P), ref(Q), T.INT), ABI, truth=True, sizes=SIZES)
    assert out.get(P) == num(0, 3)


def test_pointer_lattice():
    a, b = penv(p=(("U",), num(1, 2))), penv(p=(("V",), num(1, 2)))
    assert a.join(b).get_bases(P) == BaseSet.of("U", "V")
    assert a.leq(penv(p=(("U", "V"), num(0, 3))))
    assert not penv(p=(("U", "V"), num(0, 3))).leq(a)


# -- memory ----------------------------------------------------------------------


def regs_domain():
    return MemoryDomain(ABI, {"regs": 4, "X": 4}, ["regs"])


def test_realize_byte_of_word():
    dom = MemoryDomain(ABI, {"regs": 4}, ["regs"])
    s = dom.initial({"regs"})
    s, _, _ = dom.transfer(s, Assign(T.USHORT, AddrOf("regs"), Cast(T.USHORT, Input(T.INT, "X"))))
    s2 = dom.realize(s, AH)
    assert AH in s2.cells and s2.value(AH) == num(0, 255)
    assert dom.realize(s2, AH) == s2


def test_realize_unwritten_static_byte_is_zero():
    dom = regs_domain()
    s = dom.initial({"regs", "X"})
    s, _, _ = dom.transfer(s, Assign(T.USHORT, AddrOf("regs"), Const(7, T.USHORT)))
    bh = dom.cell("regs", 3, T.UCHAR)
    assert dom.realize(s, bh).value(bh) == nm.const(0)


def test_realize_word_from_bytes():
    dom = MemoryDomain(ABI, {"V": 4}, ["V"])
    s = dom.initial({"V"})
    for off, b in enumerate([0x34, 0x12, 0, 0]):
        s, _, _ = dom.transfer(s, Assign(T.UCHAR, Binary("+", AddrOf("V"), Const(off, T.INT), T.PTR),
                                         Const(b, T.UCHAR)))
    w = dom.cell("V", 0, T.UINT)
    assert dom.realize(s, w).value(w) == nm.const(0x1234)


def _with_pointer(bases, off):
    dom = MemoryDomain(ABI, {"p": 4, "U": 12}, ["p", "U"])
    s = dom.realize(dom.initial({"p", "U"}), P).copy()
    s.env.set(P, off, BaseSet.of(*bases))
    return dom, s


def _deref_targets(dom, s, size=4):
    alarms: list = []
    addr = dom.resolve(s, Deref(T.PTR, AddrOf("p")), alarms)
    return dom.targets(s, addr, size, size, alarms), alarms


def test_deref_enumerates_aligned_offsets():
    dom, s = _with_pointer(["U"], num(0, 8, 4, 0))
    assert _deref_targets(dom, s) == ([("U", 0), ("U", 4), ("U", 8)], [])


def test_deref_past_end():
    dom, s = _with_pointer(["U"], nm.const(12))
    assert _deref_targets(dom, s) == ([], ["out-of-bound"])
    out, alarms, _ = dom.transfer(s, Assign(T.INT, Deref(T.PTR, AddrOf("p")), Const(1, T.INT)))
    assert out.bottom and "out-of-bound" in alarms


def test_deref_prunes_null():
    dom, s = _with_pointer([NULL_BASE, "U"], nm.const(0))
    assert _deref_targets(dom, s) == ([("U", 0)], ["null-deref"])


def test_byte_store_removes_overlapping_word():
    dom = regs_domain()
    s = dom.initial({"regs", "X"})
    s, _, _ = dom.transfer(s, Assign(T.USHORT, AddrOf("regs"), Cast(T.USHORT, Input(T.INT, "X"))))
    al = dom.cell("regs", 0, T.UCHAR)
    s = dom.realize(s, al)
    s, _, _ = dom.transfer(s, Assign(T.UCHAR, AddrOf("regs"), Cast(T.UCHAR, Input(T.INT, "X"))))
    assert al in s.cells and AX not in s.cells
    assert all(not (c.off < al.end and al.off < c.end) or c == al for c in s.cells)


def test_weak_write_joins_old_and_new():
    dom = MemoryDomain(ABI, {"a": 8, "p": 4}, ["a", "p"])
    s = dom.initial({"a", "p"})
    c0, c4 = dom.cell("a", 0, T.INT), dom.cell("a", 4, T.INT)
    s = dom.realize(dom.realize(dom.realize(s, c0), c4), P).copy()
    s.env.set(P, num(0, 4, 4, 0), BaseSet.of("a"))
    s, alarms, _ = dom.transfer(s, Assign(T.INT, Deref(T.PTR, AddrOf("p")), Const(5, T.INT)))
    # old [0,0] joined with new [5,5]; the congruence keeps exactly {0, 5}
    assert s.value(c0) == s.value(c4) == num(0, 5, 5, 0) and not alarms


def test_copy_moves_pointer_cell():
    dom = MemoryDomain(ABI, {"p": 4, "q": 4, "V": 16}, ["p", "q", "V"])
    s = dom.initial({"p", "q", "V"})
    s, _, _ = dom.transfer(s, Assign(T.PTR, AddrOf("p"),
                                     Binary("+", AddrOf("V"), Const(8, T.INT), T.PTR)))
    s, _, _ = dom.transfer(s, Copy(4, 4, AddrOf("q"), AddrOf("p")))
    assert s.bases(Q) == BaseSet.of("V") and s.value(Q) == nm.const(8)
    same, _, _ = dom.transfer(s, Copy(4, 4, AddrOf("q"), AddrOf("q")))
    assert dom.leq(s, same) and dom.leq(same, s)


def test_guards_on_constants():
    dom = regs_domain()
    s = dom.initial({"regs", "X"})
    out, _, _ = dom.transfer(s, Guard(Const(1, T.INT)))
    assert out.bottom
    out, _, _ = dom.transfer(s, Guard(Const(0, T.INT)))
    assert out == s


def test_join_basics():
    dom = regs_domain()
    s = dom.initial({"regs", "X"})
    s, _, _ = dom.transfer(s, Assign(T.USHORT, AddrOf("regs"), Cast(T.USHORT, Input(T.INT, "X"))))
    j = dom.join(s, s)
    assert dom.leq(j, s) and dom.leq(s, j)
    assert dom.leq(dom.bottom(s.live), s)


# -- equality ----------------------------------------------------------------------


def test_bytewise_copy_extends_binding():
    eps = EqualityState({"b": Binding(0, "a", 0, 1)})
    eps = eq_transfer_copy(eps, "b", 1, "a", 1, 1)
    assert eps.get("b") == Binding(0, "a", 0, 2)
    for k in (2, 3):
        eps = eq_transfer_copy(eps, "b", k, "a", k, 1)
    assert eps.get("b") == Binding(0, "a", 0, 4)


def test_fresh_and_replaced_bindings():
    eps = eq_transfer_copy(TOP, "V", 0, "W", 0, 4)
    assert eps.get("V") == Binding(0, "W", 0, 4)
    eps = eq_transfer_copy(eps, "V", 8, "W", 0, 4)
    assert eps.get("V") == Binding(8, "W", 0, 4)


def test_writes_clear_bindings():
    eps = EqualityState({"b": Binding(0, "a", 0, 4)})
    assert eq_transfer_assign(eps, "a", 2, 3) == TOP
    assert eq_transfer_assign(eps, "c", 0, 4) == eps
    assert eq_transfer_assign(eps, "a") == TOP


def test_equality_order_and_lub():
    long_ = EqualityState({"b": Binding(0, "a", 0, 4)})
    short = EqualityState({"b": Binding(0, "a", 0, 2)})
    # the longer zone is the stronger fact
    assert eq_leq(long_, short) and not eq_leq(short, long_)
    other = EqualityState({"b": Binding(2, "a", 2, 4)})
    j = eq_lub(long_, other)
    assert j.get("b") == Binding(2, "a", 2, 2)
    assert eq_leq(long_, j) and eq_leq(other, j)
    assert eq_lub(long_, EqualityState({"b": Binding(0, "c", 0, 4)})) == TOP

