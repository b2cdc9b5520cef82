"""Differential soundness check: concrete runs against the analysis result."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .analyzer import AnalysisResult
from .concrete.executor import Limits, run
from .concrete.gamma import cells_by_var, eq_violations, var_violations


@dataclass
class Failure:
    seed: int
    step: int
    point: int
    kind: str          # "gamma" or "uncovered"
    detail: str

    def __str__(self):
        return f"seed={self.seed} step={self.step} point={self.point} {self.kind}: {self.detail}"


@dataclass
class DiffReport:
    runs: int = 0
    steps: int = 0
    statuses: Counter = field(default_factory=Counter)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def gamma_failures(self) -> list:
        return [f for f in self.failures if f.kind == "gamma"]

    def uncovered(self) -> list:
        return [f for f in self.failures if f.kind == "uncovered"]

    def summary(self) -> str:
        st = ", ".join(f"{k}={v}" for k, v in sorted(self.statuses.items()))
        return (f"{self.runs} runs, {self.steps} steps ({st}): "
                f"{len(self.gamma_failures())} gamma failures, "
                f"{len(self.uncovered())} uncovered events")


class _PointCheck:
    """The joined state of one control point plus verdicts already computed."""

    def __init__(self, state):
        self.state = state
        self.by_var = cells_by_var(state.mem) if state is not None else {}
        self.seen: dict = {}    # (var, bytes) -> violations


class Differ:
    """Checks concrete traces of one program against one analysis result.

    A memory reached at a point is checked against the join of the
    point's unrolled copies: membership in any copy implies membership
    in the join.
    """

    def __init__(self, result: AnalysisResult):
        self.result = result
        self.cfg = result.cfg
        self.abi = result.abi
        self.statics = self.cfg.globals()
        self.sizes = {n: i.size for n, i in self.cfg.vars.items()}
        self._points: dict = {}
        self._alarm_keys = {(a.point, a.kind) for a in result.alarms}

    def _point(self, point) -> _PointCheck:
        pc = self._points.get(point)
        if pc is None:
            pc = self._points[point] = _PointCheck(self.result.state_at(point))
        return pc

    def check_memory(self, point, m) -> list[str]:
        pc = self._point(point)
        st = pc.state
        if st is None:
            return [f"point {point} reached but analyzed as unreachable"]
        mem = st.mem
        if set(m.vars) != set(mem.live):
            return [f"variable sets differ: {sorted(set(m.vars) ^ set(mem.live))}"]
        out = []
        for var in sorted(m.vars):
            data = m.vars[var]
            key = (var, data)
            hit = pc.seen.get(key)
            if hit is None:
                hit = pc.seen[key] = var_violations(mem, pc.by_var.get(var, ()), var, data,
                                                    self.abi, var in self.statics, self.sizes)
            out += hit
        return out + eq_violations(st.eq, m)

    def check_seed(self, seed: int, max_steps: int, report: DiffReport):
        inputs = dict(self.result.config.volatile)
        trace = run(self.cfg, seed, Limits(max_steps, inputs), self.abi)
        report.runs += 1
        report.steps += len(trace.steps)
        report.statuses[trace.status] += 1
        for i, step in enumerate(trace.steps):
            bad = self.check_memory(step.point, step.memory)
            if bad:
                report.failures.append(Failure(seed, i, step.point, "gamma", bad[0]))
                break
        err = trace.error
        if err is not None and (err.point, err.kind) not in self._alarm_keys:
            report.failures.append(Failure(seed, len(trace.steps) - 1, err.point, "uncovered",
                                           f"{err.kind} in {err.expr} raised no alarm"))


def diff(result: AnalysisResult, seeds, max_steps: int = 10_000) -> DiffReport:
    """Run the program once per seed and check every visited memory and error event."""
    d = Differ(result)
    report = DiffReport()
    for seed in seeds:
        d.check_seed(seed, max_steps, report)
    return report
