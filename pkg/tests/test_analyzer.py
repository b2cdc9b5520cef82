from __future__ import annotations

import pytest

from cellscope.abi import DEFAULT_ABI, ScalarType as T
from cellscope.analyzer import AnalysisConfig, AState, analyze, check_postfixpoint
from cellscope.diff import diff
from cellscope.domains import numeric as nm
from cellscope.frontend import build_cfg

from conftest import CORPUS, analyze_corpus


def run_text(text, **kw):
    cfg = build_cfg(text, DEFAULT_ABI, "t.c")
    return analyze(cfg, DEFAULT_ABI, AnalysisConfig(**kw))


def value(r, label, var, off, ty):
    st = r.state_at(r.cfg.label(label))
    return r.domain.read(st.mem, var, off, ty)[0]


def test_straight_line_never_widens():
    r = run_text("int a, b; void main(void){ a = 1; b = a + 2; a = b * 3; }")
    assert r.stats["widenings"] == 0
    assert r.stats["iterations"] == len(r.graph.nodes)     # one visit per node


def test_array_zeroing_loop():
    r = run_text("int a[10]; int i;\n"
                 "void main(void){ for (i = 0; i < 10; i++) a[i] = 0; done: ; }")
    assert value(r, "done", "i", 0, T.INT) == nm.const(10)
    assert not r.alarms


def test_corpus_results_are_postfixpoints():
    for name in ("emuex.c", "msgex.c", "record20.c", "nested.c"):
        ok, bad = check_postfixpoint(analyze_corpus(name))
        assert ok, (name, bad)


def test_shrunk_state_is_caught():
    r = analyze_corpus("emuex.c")
    p2 = next(n for n in r.graph.copies[r.cfg.label("p2")])
    st = r.states[p2]
    mem = st.mem.copy()
    ax = r.domain.cell("regs", 0, T.USHORT)
    mem.env.set(ax, nm.const(0))
    r.states[p2] = AState(mem, st.eq)
    ok, bad = check_postfixpoint(r)
    assert not ok and bad[-1] == p2


def test_unreachable_code_is_fine():
    r = run_text("int a; void main(void){ if (0) { a = 1; dead: a = 2; } }")
    assert r.state_at(r.cfg.label("dead")) is None
    assert check_postfixpoint(r)[0]


@pytest.mark.parametrize("name, kinds", [
    ("emuex.c", []),
    ("oob.c", ["out-of-bound"]),
    ("divzero.c", ["div-by-zero"]),
])
def test_alarm_counts(name, kinds):
    assert [a.kind for a in analyze_corpus(name).alarms] == kinds


def test_restart_from_result_is_stable():
    r = analyze_corpus("sensorloop.c")
    again = analyze(r.cfg, r.abi, r.config, seed=r.states)
    for n in r.graph.nodes:
        a, b = r.states[n], again.states[n]
        assert r.domain.leq(a.mem, b.mem) and r.domain.leq(b.mem, a.mem), n


def test_determinism():
    a, b = analyze_corpus("msgex.c"), analyze_corpus("msgex.c")
    assert [str(x) for x in a.alarms] == [str(x) for x in b.alarms]
    for n in a.graph.nodes:
        assert a.states[n].dump() == b.states[n].dump()


def test_iteration_cap_marks_incomplete():
    r = analyze_corpus("sensorloop.c", max_iterations=3)
    assert not r.complete


def test_diff_clean_and_negative_control():
    r = analyze_corpus("emuex.c")
    assert diff(r, range(20)).ok
    broken = analyze_corpus("emuex.c", overlap_removal=False)
    rep = diff(broken, range(20))
    assert rep.gamma_failures()
    assert {f.point for f in rep.gamma_failures()} == {broken.cfg.label("p7")}


def test_volatile_default_is_full_range():
    r = run_text("volatile unsigned char v; int x; void main(void){ x = v; end: ; }")
    assert value(r, "end", "x", 0, T.INT) == nm.mk(0, 255)


def test_corpus_programs_have_diffs_clean():
    for c in sorted(CORPUS.glob("*.c")):
        r = analyze_corpus(c.name)
        rep = diff(r, range(10))
        assert rep.ok, (c.name, [str(f) for f in rep.failures[:3]])
