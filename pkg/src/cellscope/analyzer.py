"""Worklist fixpoint engine over the lowered CFG."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

from .abi import Abi, DEFAULT_ABI
from .domains.equality import (TOP as EQ_TOP, EqualityState, eq_delete, eq_leq, eq_lub,
                               eq_reduce, eq_transfer_assign, eq_transfer_copy)
from .domains.memory import DomainConfig, MemoryDomain, MemoryState
from .domains.numeric import DEFAULT_THRESHOLDS, EvalConfig
from .ir import AddrOf, Assign, Binary, Cfg, Const, Copy, Edge, Loc, NOLOC

FANOUT_MESSAGE = "dereference with too many candidate locations"


@dataclass
class AnalysisConfig:
    widen_delay: int = 2
    thresholds: tuple = DEFAULT_THRESHOLDS
    cong_delay: int = 2
    unroll: int = 64
    fanout: int = 64
    volatile: dict = field(default_factory=dict)     # name -> (lo, hi)
    max_iterations: int = 200_000
    signed_overflow: str = "wrap"
    narrowing: bool = True
    relations: bool = True
    overlap_removal: bool = True

    def __post_init__(self):
        for name in ("widen_delay", "cong_delay", "unroll", "fanout", "max_iterations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        self.thresholds = tuple(sorted(self.thresholds))


@dataclass(frozen=True)
class Alarm:
    point: int
    kind: str
    expr: str
    loc: Loc = NOLOC
    message: str = ""

    def key(self):
        return (self.point, self.kind, self.expr)

    def __str__(self):
        return f"{self.loc}: {self.kind}: {self.expr}" + (f" ({self.message})" if self.message else "")


@dataclass
class AState:
    mem: MemoryState
    eq: EqualityState

    @property
    def bottom(self) -> bool:
        return self.mem.bottom

    def dump(self) -> list[str]:
        if self.mem.bottom:
            return ["bottom"]
        return self.mem.dump() + self.eq.dump()


@dataclass
class AnalysisResult:
    cfg: Cfg
    abi: Abi
    config: AnalysisConfig
    domain: MemoryDomain
    graph: "UnrolledGraph"
    states: dict                       # node -> AState
    alarms: list
    stats: dict
    complete: bool = True

    def states_at(self, point: int) -> list:
        """The states of every unrolled copy of ``point`` (unreached copies omitted)."""
        return [self.states[n] for n in self.graph.copies.get(point, ())
                if n in self.states and not self.states[n].bottom]

    def state_at(self, point: int) -> AState | None:
        """The join of the copies of ``point``; None when unreachable."""
        out = None
        for st in self.states_at(point):
            out = st if out is None else AState(self.domain.join(out.mem, st.mem),
                                                eq_lub(out.eq, st.eq))
        return out


# -- unrolling ------------------------------------------------------------------


def _const_addr(e) -> bool:
    if isinstance(e, AddrOf):
        return True
    return (isinstance(e, Binary) and e.op == "+" and isinstance(e.left, AddrOf)
            and isinstance(e.right, Const))


def _needs_unroll(inst, abi: Abi) -> bool:
    if isinstance(inst, Copy):
        return not (_const_addr(inst.dst) and _const_addr(inst.src))
    if isinstance(inst, Assign):
        return abi.sizeof(inst.ty) == 1 and not _const_addr(inst.addr)
    return False


def find_loops(cfg: Cfg) -> dict:
    """Natural loops: header -> set of body points (back edges by depth-first search)."""
    succ = {p.id: [e.dst for e in cfg.succs(p.id)] for p in cfg.points}
    color: dict = {}
    back = []
    stack = [(cfg.entry, iter(succ[cfg.entry]))]
    color[cfg.entry] = 1
    while stack:
        p, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[p] = 2
            stack.pop()
            continue
        c = color.get(nxt, 0)
        if c == 1:
            back.append((p, nxt))
        elif c == 0:
            color[nxt] = 1
            stack.append((nxt, iter(succ[nxt])))
    preds: dict = {}
    for e in cfg.edges:
        preds.setdefault(e.dst, []).append(e.src)
    loops: dict = {}
    for u, h in back:
        body = loops.setdefault(h, {h})
        work = [u]
        while work:
            x = work.pop()
            if x in body:
                continue
            body.add(x)
            work.extend(preds.get(x, ()))
    return loops


class UnrolledGraph:
    """Nodes ``(point, j)``: copy j of the body of an unrolled loop, 0 elsewhere."""

    def __init__(self, cfg: Cfg, abi: Abi, k: int):
        self.cfg = cfg
        loops = find_loops(cfg)
        innermost = {h: b for h, b in loops.items()
                     if not any(h2 != h and h2 in b for h2 in loops)}
        self.unrolled: dict = {}
        if k > 0:
            for h, body in innermost.items():
                if any(_needs_unroll(e.inst, abi) for e in cfg.edges
                       if e.src in body and e.dst in body):
                    self.unrolled[h] = body
        self.loop_of = {p: h for h, b in self.unrolled.items() for p in b}
        self.k = k
        self.entry = (cfg.entry, 0)
        self.out: dict = {}
        self.inc: dict = {}
        work = [self.entry]
        seen = {self.entry}
        while work:
            n = work.pop()
            for e in cfg.succs(n[0]):
                for m in self._targets(n, e):
                    self.out.setdefault(n, []).append((e, m))
                    self.inc.setdefault(m, []).append((e, n))
                    if m not in seen:
                        seen.add(m)
                        work.append(m)
        self.nodes = seen
        self.copies: dict = {}
        for n in sorted(seen):
            self.copies.setdefault(n[0], []).append(n)
        self._order()

    def _targets(self, n, e: Edge):
        p, j = n
        h = self.loop_of.get(p)
        if h is not None and e.dst in self.unrolled[h]:
            if e.dst == h:
                return [(h, min(j + 1, self.k))]
            return [(e.dst, j)]
        return [(e.dst, 0)]

    def _order(self):
        """Reverse post-order and widening points (targets of back edges)."""
        post = []
        color = {self.entry: 1}
        self.widen_points = set()
        stack = [(self.entry, iter(self.out.get(self.entry, ())))]
        while stack:
            n, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[n] = 2
                post.append(n)
                stack.pop()
                continue
            m = nxt[1]
            c = color.get(m, 0)
            if c == 1:
                self.widen_points.add(m)
            elif c == 0:
                color[m] = 1
                stack.append((m, iter(self.out.get(m, ()))))
        post.reverse()
        self.rpo = {n: i for i, n in enumerate(post)}

    def loops(self) -> dict:
        """Natural loops of the graph: head node -> set of body nodes."""
        loops: dict = {}
        for h in self.widen_points:
            body = {h}
            work = [p for _, p in self.preds(h) if self.rpo.get(p, -1) >= self.rpo[h]]
            while work:
                x = work.pop()
                if x in body:
                    continue
                body.add(x)
                work.extend(p for _, p in self.preds(x))
            loops[h] = body
        return loops

    def succs(self, n):
        return self.out.get(n, ())

    def preds(self, n):
        return self.inc.get(n, ())


# -- the engine ------------------------------------------------------------------


class Analyzer:
    def __init__(self, cfg: Cfg, abi: Abi | None = None, config: AnalysisConfig | None = None):
        self.cfg = cfg
        self.abi = abi or DEFAULT_ABI
        self.config = config or AnalysisConfig()
        c = self.config
        dconf = DomainConfig(fanout=c.fanout, thresholds=c.thresholds,
                             eval=EvalConfig(signed_overflow=c.signed_overflow,
                                             inputs=dict(c.volatile)),
                             relations=c.relations, overlap_removal=c.overlap_removal)
        self.dom = MemoryDomain.for_cfg(cfg, self.abi, dconf)
        self.graph = UnrolledGraph(cfg, self.abi, c.unroll)

    def initial(self) -> AState:
        return AState(self.dom.initial(self.cfg.points[self.cfg.entry].vars), EQ_TOP)

    def transfer(self, st: AState, e: Edge):
        """Post-state of an edge plus the alarm kinds raised on the way."""
        if st.bottom:
            return st, []
        src = self.cfg.points[e.src].vars
        dst = self.cfg.points[e.dst].vars
        mem, eq = st.mem, st.eq
        for v in sorted(dst - src):
            mem = self.dom.create(mem, v)
            eq = eq_delete(eq, v)
        mem, alarms, fx = self.dom.transfer(mem, e.inst)
        if fx.window is not None:
            sb, si, db, di, n = fx.window
            eq = eq_transfer_copy(eq, sb, si, db, di, n)
            mem = eq_reduce(eq, mem, self.dom, sb)
        else:
            for v, lo, hi in fx.writes:
                eq = eq_transfer_assign(eq, v, lo, hi)
        for v in sorted(src - dst):
            mem = self.dom.delete(mem, v)
            eq = eq_delete(eq, v)
        if mem.bottom:
            eq = EQ_TOP
        return AState(mem, eq), alarms

    def join(self, a: AState, b: AState) -> AState:
        if a.bottom:
            return b
        if b.bottom:
            return a
        return AState(self.dom.join(a.mem, b.mem), eq_lub(a.eq, b.eq))

    def widen(self, a: AState, b: AState, cong_top: bool) -> AState:
        if a.bottom:
            return b
        if b.bottom:
            return a
        return AState(self.dom.widen(a.mem, b.mem, cong_top), eq_lub(a.eq, b.eq))

    def leq(self, a: AState, b: AState) -> bool:
        if a.bottom:
            return True
        if b.bottom:
            return False
        return self.dom.leq(a.mem, b.mem) and eq_leq(a.eq, b.eq)

    def bottom(self, node) -> AState:
        return AState(self.dom.bottom(self.cfg.points[node[0]].vars), EQ_TOP)

    def run(self, seed: dict | None = None) -> AnalysisResult:
        t0 = time.perf_counter()
        g = self.graph
        states: dict = {}
        init = self.initial()
        states[g.entry] = init
        seeds = [g.entry]
        if seed:
            for n, st in seed.items():
                if n in g.nodes:
                    states[n] = self.join(states[n], st) if n in states else st
                    seeds.append(n)
        self._count = {"iterations": 0, "widenings": 0}
        visits: dict = {}
        complete = self._iterate(states, seeds, visits)
        if complete:
            complete = self._restabilize(states, visits)
        for n in g.nodes:
            if n not in states:
                states[n] = self.bottom(n)
        narrowed = False
        if complete and self.config.narrowing and self._count["widenings"]:
            before = dict(states)
            self._narrow(states, init)
            if self.check(states, init) is None:
                narrowed = True
            else:
                states = before
        alarms = self.collect(states)
        stats = {"iterations": self._count["iterations"], "widenings": self._count["widenings"],
                 "narrowed": narrowed, "nodes": len(g.nodes), "unrolled_loops": len(g.unrolled),
                 "realized_cells": self.dom.diagnostics.get("realized", 0),
                 "time": time.perf_counter() - t0}
        return AnalysisResult(self.cfg, self.abi, self.config, self.dom, g, states, alarms,
                              stats, complete)

    def _iterate(self, states: dict, seeds, visits: dict, region=None) -> bool:
        """Chaotic iteration in reverse post-order from ``seeds``; False at the cap.

        With ``region``, only nodes of the region are updated.
        """
        g = self.graph
        heap = []
        queued = set()
        for n in seeds:
            if n not in queued:
                heap.append((g.rpo[n], n))
                queued.add(n)
        heapq.heapify(heap)
        count = self._count
        while heap:
            if count["iterations"] >= self.config.max_iterations:
                return False
            _, n = heapq.heappop(heap)
            queued.discard(n)
            count["iterations"] += 1
            st = states[n]
            for e, m in g.succs(n):
                if region is not None and m not in region:
                    continue
                post, _ = self.transfer(st, e)
                if post.bottom:
                    continue
                old = states.get(m)
                if old is None or old.bottom:
                    new = post
                else:
                    if self.leq(post, old):
                        continue
                    new = self.join(old, post)
                    if m in g.widen_points:
                        visits[m] = visits.get(m, 0) + 1
                        if visits[m] > self.config.widen_delay:
                            count["widenings"] += 1
                            cong_top = visits[m] > self.config.widen_delay + self.config.cong_delay
                            new = self.widen(old, new, cong_top)
                states[m] = new
                if m not in queued:
                    heapq.heappush(heap, (g.rpo[m], m))
                    queued.add(m)
        return True

    def _restabilize(self, states: dict, visits: dict) -> bool:
        """Recompute nested loops from their now stable entry states.

        Widening an inner loop head also extrapolates what only changes
        between outer iterations; the decreasing pass cannot undo that,
        but iterating the inner loop again from its final entry can.
        """
        g = self.graph
        loops = g.loops()
        depth = {h: sum(1 for h2, b in loops.items() if h2 != h and h in b) for h in loops}
        for h in sorted((h for h in loops if depth[h] > 0), key=lambda h: (depth[h], g.rpo[h])):
            body = loops[h]
            acc = None
            for e, p in g.preds(h):
                if p in body or p not in states:
                    continue
                post, _ = self.transfer(states[p], e)
                if not post.bottom:
                    acc = post if acc is None else self.join(acc, post)
            if acc is None:
                continue
            saved = {n: states.get(n) for n in body}
            for n in body:
                states.pop(n, None)
                visits.pop(n, None)
            states[h] = acc
            if not self._iterate(states, [h], visits, region=body):
                return False
            if not all(n in states and saved[n] is not None and self.leq(states[n], saved[n])
                       for n in body if n in states):
                # keep the old, larger states when the new ones are not below them
                for n, st in saved.items():
                    if st is not None:
                        states[n] = st
                    else:
                        states.pop(n, None)
                continue
            exits = [n for n in body if n in states and any(m not in body for _, m in g.succs(n))]
            if not self._iterate(states, exits, visits):
                return False
        return True

    def _narrow(self, states: dict, init: AState):
        g = self.graph
        for n in sorted(g.nodes, key=g.rpo.__getitem__):
            acc = init if n == g.entry else None
            for e, p in g.preds(n):
                post, _ = self.transfer(states[p], e)
                if post.bottom:
                    continue
                acc = post if acc is None else self.join(acc, post)
            if acc is None:
                acc = self.bottom(n)
            if self.leq(acc, states[n]):
                states[n] = acc

    def check(self, states: dict, init: AState | None = None):
        """The first edge whose transfer escapes the target state, or None."""
        g = self.graph
        init = init or self.initial()
        if not self.leq(init, states[g.entry]):
            return ("entry", g.entry)
        for n in sorted(g.nodes, key=g.rpo.__getitem__):
            for e, m in g.succs(n):
                post, _ = self.transfer(states[n], e)
                if not self.leq(post, states[m]):
                    return (e, n, m)
        return None

    def collect(self, states: dict) -> list:
        found: dict = {}
        for n in sorted(self.graph.nodes, key=self.graph.rpo.__getitem__):
            st = states[n]
            if st.bottom:
                continue
            point = self.cfg.points[n[0]]
            if point.trap:
                loc = next((e.loc for e in self.cfg.preds(n[0]) if e.loc != NOLOC), NOLOC)
                a = Alarm(n[0], point.trap, "call through function pointer", loc,
                          "no matching function")
                found.setdefault(a.key(), a)
            for e, _ in self.graph.succs(n):
                _, kinds = self.transfer(st, e)
                for k in kinds:
                    msg = ""
                    if k == "fanout":
                        k, msg = "out-of-bound", FANOUT_MESSAGE
                    a = Alarm(e.src, k, str(e.inst), e.loc, msg)
                    found.setdefault(a.key(), a)
        return sorted(found.values(), key=lambda a: (a.point, a.kind, a.expr))


def analyze(cfg: Cfg, abi: Abi | None = None, config: AnalysisConfig | None = None,
            seed: dict | None = None) -> AnalysisResult:
    return Analyzer(cfg, abi, config).run(seed)


def check_postfixpoint(result: AnalysisResult):
    """(True, None) when every edge's transfer is included in its target state."""
    an = Analyzer.__new__(Analyzer)
    an.cfg, an.abi, an.config = result.cfg, result.abi, result.config
    an.dom, an.graph = result.domain, result.graph
    bad = an.check(result.states)
    return bad is None, bad


def collect_alarms(result: AnalysisResult) -> list:
    return sorted(result.alarms, key=lambda a: (a.loc.file, a.loc.line, a.kind, a.loc.column,
                                                a.expr))
