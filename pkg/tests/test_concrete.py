from __future__ import annotations

from cellscope.abi import DEFAULT_ABI, ScalarType as T
from cellscope.concrete.executor import EXIT_CLEAN, EXIT_ERROR, EXIT_LIMIT, Limits, run
from cellscope.concrete.gamma import gamma_member
from cellscope.concrete.semantics import (ConcreteMemory, Sizes, create_variable, delete_variable,
                                          eval_expr, exec_inst)
from cellscope.concrete.values import (NULL, OMEGA, UNINIT, ByteValue, Full, Ptr, phi,
                                       store_bytes)
from cellscope.domains import numeric as nm
from cellscope.domains.memory import Cell, MemoryState
from cellscope.domains.values import ValueEnv
from cellscope.frontend import build_cfg
from cellscope.ir import AddrOf, Assign, Binary, Const, Copy, Deref, Guard

from conftest import CORPUS

ABI = DEFAULT_ABI


def mem(**sizes) -> ConcreteMemory:
    m = ConcreteMemory()
    for name, n in sizes.items():
        m = create_variable(m, name, n, True)
    return m


def at(name, off):
    return Binary("+", AddrOf(name), Const(off, T.INT), T.PTR) if off else AddrOf(name)


# -- recomposition ---------------------------------------------------------------


def test_phi_exact_match():
    assert phi(T.USHORT, store_bytes(T.USHORT, 0x1234, ABI), ABI).finite() == {0x1234}


def test_phi_byte_of_integer():
    b = store_bytes(T.USHORT, 0x1234, ABI)
    assert phi(T.UCHAR, b[1:2], ABI).finite() == {0x12}
    assert phi(T.UCHAR, b[0:1], ABI).finite() == {0x34}


def test_phi_pointer_bytes_as_float_is_top():
    b = store_bytes(T.PTR, Ptr("V", 8), ABI)
    assert phi(T.FLOAT, b, ABI) == Full(T.FLOAT)


def test_phi_zero_bytes_as_pointer_is_null():
    m = mem(x=4)
    assert phi(T.PTR, m.read("x", 0, 4), ABI).finite() == {NULL}


def test_phi_signed_reinterpretation():
    b = store_bytes(T.USHORT, 0xFFFE, ABI)
    assert phi(T.SHORT, b, ABI).finite() == {-2}


def test_phi_null_fragment_byte():
    b = store_bytes(T.PTR, NULL, ABI)
    assert phi(T.UCHAR, b[2:3], ABI).finite() == {0}


# -- expressions -----------------------------------------------------------------


def test_pointer_arithmetic_in_bounds():
    vs, ev = eval_expr(at("U", 12), mem(U=16), ABI, Sizes({"U": 16}))
    assert vs.finite() == {Ptr("U", 12)} and not ev


def test_pointer_arithmetic_out_of_bounds():
    vs, ev = eval_expr(at("U", 20), mem(U=16), ABI, Sizes({"U": 16}))
    assert vs.finite() == frozenset() and ev == {"out-of-bound"}


def test_one_past_the_end_is_valid():
    vs, ev = eval_expr(at("U", 16), mem(U=16), ABI, Sizes({"U": 16}))
    assert vs.finite() == {Ptr("U", 16)} and not ev


def test_overlay_byte_read():
    sizes = Sizes({"regs": 4})
    (m,), _ = exec_inst(Assign(T.USHORT, AddrOf("regs"), Const(0x1234, T.USHORT)),
                        mem(regs=4), ABI, sizes)
    vs, ev = eval_expr(Deref(T.UCHAR, at("regs", 1)), m, ABI, sizes)
    assert vs.finite() == {0x12} and not ev


def test_misaligned_and_past_end_reads_are_errors():
    sizes = Sizes({"U": 8})
    _, ev = eval_expr(Deref(T.INT, at("U", 2)), mem(U=8), ABI, sizes)
    assert ev == {"misaligned"}
    _, ev = eval_expr(Deref(T.INT, at("U", 8)), mem(U=8), ABI, sizes)
    assert ev == {"out-of-bound"}


def test_cross_base_difference_is_an_error():
    sizes = Sizes({"a": 4, "b": 4})
    vs, ev = eval_expr(Binary("-", AddrOf("a"), AddrOf("b"), T.LONG), mem(a=4, b=4), ABI, sizes)
    assert vs.finite() == frozenset() and ev


# -- instructions ----------------------------------------------------------------


def test_guard_filters():
    sizes = Sizes({"x": 4})
    (m,), _ = exec_inst(Assign(T.INT, AddrOf("x"), Const(5, T.INT)), mem(x=4), ABI, sizes)
    g = Guard(Binary("==", Deref(T.INT, AddrOf("x")), Const(0, T.INT), T.INT))
    # the guard passes when its test evaluates to 0, i.e. when x != 0
    assert exec_inst(g, m, ABI, sizes)[0] == [m]
    g = Guard(Deref(T.INT, AddrOf("x")))
    assert exec_inst(g, m, ABI, sizes)[0] == []


def test_scalar_store_bytes():
    (m,), _ = exec_inst(Assign(T.USHORT, AddrOf("regs"), Const(0x1234, T.USHORT)),
                        mem(regs=4), ABI, Sizes({"regs": 4}))
    assert m.read("regs", 0, 2) == (ByteValue(T.USHORT, 0, 0x1234), ByteValue(T.USHORT, 1, 0x1234))


def test_copy_keeps_pointer_bytes():
    sizes = Sizes({"p": 4, "q": 4, "V": 8})
    (m,), _ = exec_inst(Assign(T.PTR, AddrOf("p"), at("V", 4)), mem(p=4, q=4, V=8), ABI, sizes)
    (m,), ev = exec_inst(Copy(4, 4, AddrOf("q"), AddrOf("p")), m, ABI, sizes)
    assert not ev
    vs, _ = eval_expr(Deref(T.PTR, AddrOf("q")), m, ABI, sizes)
    assert vs.finite() == {Ptr("V", 4)}


def test_store_without_target_gives_no_memory():
    out, ev = exec_inst(Assign(T.INT, at("x", 4), Const(1, T.INT)), mem(x=4), ABI, Sizes({"x": 4}))
    assert out == [] and ev == {"out-of-bound"}


# -- variables -------------------------------------------------------------------


def test_create_static_and_local():
    m = create_variable(ConcreteMemory(), "x", 4, True)
    assert phi(T.INT, m.read("x", 0, 4), ABI).finite() == {0}
    m = create_variable(m, "y", 2, False)
    assert m.read("y", 0, 2) == (UNINIT, UNINIT)


def test_delete_invalidates_pointers():
    sizes = Sizes({"V": 4, "W": 4, "Z": 4})
    (m,), _ = exec_inst(Assign(T.PTR, AddrOf("W"), AddrOf("V")), mem(V=4, W=4, Z=4), ABI, sizes)
    after = delete_variable(m, "V")
    assert "V" not in after
    assert after.read("W", 0, 4) == tuple(ByteValue(T.PTR, k, OMEGA) for k in range(4))
    assert after.vars["Z"] is m.vars["Z"]


def test_delete_without_references():
    m = mem(V=4, W=4)
    assert delete_variable(m, "V").vars == {"W": m.vars["W"]}


# -- executor --------------------------------------------------------------------


def test_emulator_run_with_seven():
    cfg = build_cfg((CORPUS / "emuex.c").read_text(), ABI, "emuex.c")
    t = run(cfg, 1, Limits(inputs={"X": (7, 7)}))
    assert t.status == EXIT_CLEAN
    assert cfg.label("p3") in [s.point for s in t.steps]
    regs = t.steps[-1].memory.read("regs", 0, 4)
    got = [phi(T.UCHAR, regs[i:i + 1], ABI).finite() for i in range(4)]
    assert got == [{7}, {0}, {7}, {0}]


def test_division_by_zero_input():
    cfg = build_cfg("volatile int X; int r; int main(void){ r = 10 / X; return 0; }", ABI)
    t = run(cfg, 0, Limits(inputs={"X": (0, 0)}))
    assert t.status == EXIT_ERROR and t.error.kind == "div-by-zero"


def test_step_limit():
    cfg = build_cfg("int main(void){ while (1); return 0; }", ABI)
    t = run(cfg, 0, Limits(max_steps=1000))
    assert t.status == EXIT_LIMIT and t.lines()[-1] == "step limit exceeded"


def test_trace_lines_format():
    cfg = build_cfg("int x; int main(void){ x = 1; return 0; }", ABI)
    lines = run(cfg, 0).lines()
    assert lines[0].startswith("point=") and lines[-1] == "exit"
    assert any(l.startswith("  x[0]=(int,0,0x1)") for l in lines)


# -- concretization ----------------------------------------------------------------


def _state(cells: dict) -> MemoryState:
    env = ValueEnv({c: v for c, v in cells.items()}, {c: c.ty for c in cells})
    # bytes covered by no cell are free once recorded as written
    return MemoryState(env, frozenset(["regs"]), written={"regs": ((0, 4),)})


AX = Cell("regs", 0, T.USHORT, 2)
AH = Cell("regs", 1, T.UCHAR, 1)


def _regs(v):
    return mem(regs=4).write("regs", 0, store_bytes(T.USHORT, v, ABI))


def test_gamma_no_cells():
    assert gamma_member(_state({}), _regs(0x1234), ABI, {"regs"}, {"regs": 4})


def test_gamma_out_of_interval():
    s = _state({AX: nm.rng(0, 255)})
    assert not gamma_member(s, _regs(0x1234), ABI, {"regs"}, {"regs": 4})


def test_gamma_every_cell_must_agree():
    s = _state({AX: nm.rng(0, 65535), AH: nm.const(0)})
    assert not gamma_member(s, _regs(0x0104), ABI, {"regs"}, {"regs": 4})
    assert gamma_member(s, _regs(0x0004), ABI, {"regs"}, {"regs": 4})
