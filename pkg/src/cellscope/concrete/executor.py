"""Seeded concrete execution of a lowered CFG."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..abi import Abi
from ..ir import Cfg
from .semantics import (ConcreteMemory, Context, EvalError, Sizes, create_variable,
                        delete_variable, exec_one)
from .values import byte_str

EXIT_CLEAN = "exit"
EXIT_ERROR = "error"
EXIT_LIMIT = "step-limit"
EXIT_BLOCKED = "blocked"


@dataclass
class Limits:
    max_steps: int = 10_000
    inputs: dict = field(default_factory=dict)   # volatile variable -> (lo, hi)


@dataclass
class Step:
    point: int            # control point reached after the step
    edge: object          # the edge taken (None for the initial state)
    memory: ConcreteMemory
    changed: tuple = ()   # ((var, index, byte), ...)
    draws: tuple = ()


@dataclass
class ErrorEvent:
    point: int
    kind: str
    expr: str
    edge: object = None

    def __str__(self):
        return f"error {self.kind} at point {self.point}: {self.expr}"


@dataclass
class Trace:
    seed: int
    steps: list
    status: str
    error: ErrorEvent | None = None

    def lines(self) -> list[str]:
        out = []
        for st in self.steps:
            inst = "<entry>" if st.edge is None else str(st.edge.inst)
            out.append(f"point={st.point} inst={inst}")
            for why, v in st.draws:
                out.append(f"  draw {why} = {v}")
            for var, i, b in st.changed:
                out.append(f"  {var}[{i}]={byte_str(b)}")
        if self.error is not None:
            out.append(str(self.error))
        elif self.status == EXIT_LIMIT:
            out.append("step limit exceeded")
        elif self.status == EXIT_BLOCKED:
            out.append(f"blocked at point {self.steps[-1].point}")
        else:
            out.append("exit")
        return out


def initial_memory(cfg: Cfg) -> ConcreteMemory:
    m = ConcreteMemory()
    for name in sorted(cfg.points[cfg.entry].vars):
        info = cfg.vars[name]
        m = create_variable(m, name, info.size, info.static)
    return m


def _diff(old: ConcreteMemory, new: ConcreteMemory) -> tuple:
    out = []
    for var in sorted(new.vars):
        nb = new.vars[var]
        ob = old.vars.get(var)
        if ob is nb:
            continue
        for i, b in enumerate(nb):
            if ob is None or ob[i] != b:
                out.append((var, i, b))
    return tuple(out)


def transition(cfg: Cfg, edge, m: ConcreteMemory, ctx: Context):
    """Create the variables of the target, run the instruction, delete the leftovers."""
    src, dst = cfg.points[edge.src].vars, cfg.points[edge.dst].vars
    for name in sorted(dst - src):
        info = cfg.vars[name]
        m = create_variable(m, name, info.size, info.static)
    m = exec_one(edge.inst, m, ctx)
    if m is None:
        return None
    for name in sorted(src - dst):
        m = delete_variable(m, name)
    return m


def run(cfg: Cfg, seed: int, limits: Limits | None = None, abi: Abi | None = None) -> Trace:
    """Execute ``cfg`` from its entry; every non-deterministic choice uses ``seed``.

    Stops at the exit point, at the first error event, when no outgoing edge
    is enabled, or after ``limits.max_steps`` transitions.
    """
    from ..abi import DEFAULT_ABI
    limits = limits or Limits()
    abi = abi or DEFAULT_ABI
    rng = random.Random(seed)
    sizes = Sizes.of_cfg(cfg)
    m = initial_memory(cfg)
    p = cfg.entry
    steps = [Step(p, None, m)]
    for _ in range(limits.max_steps):
        point = cfg.points[p]
        if point.trap:
            err = ErrorEvent(p, point.trap, "no matching function")
            return Trace(seed, steps, EXIT_ERROR, err)
        if p == cfg.exit:
            return Trace(seed, steps, EXIT_CLEAN)
        edges = list(cfg.succs(p))
        rng.shuffle(edges)
        nxt = None
        for e in edges:
            draws: list = []
            ctx = Context(abi, sizes, rng, limits.inputs, draws)
            try:
                new = transition(cfg, e, m, ctx)
            except EvalError as exc:
                steps.append(Step(p, e, m, (), tuple(draws)))
                err = ErrorEvent(p, exc.kind, str(exc.expr), e)
                return Trace(seed, steps, EXIT_ERROR, err)
            if new is not None:
                nxt = (e, new, tuple(draws))
                break
        if nxt is None:
            return Trace(seed, steps, EXIT_BLOCKED)
        e, new, draws = nxt
        steps.append(Step(e.dst, e, new, _diff(m, new), draws))
        m, p = new, e.dst
    if p == cfg.exit:
        return Trace(seed, steps, EXIT_CLEAN)
    return Trace(seed, steps, EXIT_LIMIT)
