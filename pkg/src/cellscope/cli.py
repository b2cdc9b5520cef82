"""Command-line entry points: analyze, run, diff and corpus."""

from __future__ import annotations

import argparse
import difflib
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .abi import DEFAULT_ABI, AbiError, load_abi
from .analyzer import AnalysisConfig, analyze
from .concrete.executor import EXIT_ERROR, EXIT_LIMIT, Limits, run
from .diff import diff
from .frontend.lower import lower
from .frontend.parser import FrontendError, directive_args, parse_program, strip_comments
from .report import build_report, render_human, render_json

EXIT_OK, EXIT_ALARMS, EXIT_FAILURE = 0, 1, 2
EXIT_PROGRAM_ERROR, EXIT_STEP_LIMIT = 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_VOLATILE = re.compile(r"^([A-Za-z_][\w.#]*)=(-?\d+)\.\.(-?\d+)$")


def _volatile(text: str):
    m = _VOLATILE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected VAR=LO..HI, got {text!r}")
    lo, hi = int(m.group(2)), int(m.group(3))
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range in {text!r}")
    return m.group(1), (lo, hi)


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _analysis_options(p: argparse.ArgumentParser):
    p.add_argument("--abi", help="ABI description file (default: $CELLSCOPE_ABI)")
    p.add_argument("--unroll", type=_nonneg, help="loop unroll limit")
    p.add_argument("--widen-delay", type=_nonneg, help="joins before widening at loop heads")
    p.add_argument("--fanout", type=_nonneg, help="largest number of dereference targets")
    p.add_argument("--volatile", type=_volatile, action="append", default=[],
                   metavar="VAR=LO..HI", help="value range of a volatile variable")
    p.add_argument("--signed-overflow", choices=("wrap", "clamp"),
                   help="result of a signed overflow after the alarm")
    # breaks soundness on purpose; used to check that diff catches it
    p.add_argument("--no-overlap-removal", action="store_true", help=argparse.SUPPRESS)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cellscope", description=__doc__)
    p.add_argument("--version", action="version", version=f"cellscope {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="analyze a program and report alarms")
    a.add_argument("file")
    _analysis_options(a)
    a.add_argument("--json", metavar="OUT", help="write the JSON report ('-' for stdout)")
    a.add_argument("--timing", action="store_true", help="record the wall time in the JSON report")
    a.add_argument("--dump-cfg", action="store_true", help="print the lowered CFG")
    a.add_argument("--dump-state", action="append", default=[], metavar="POINT",
                   help="print the state at a point id or label")

    r = sub.add_parser("run", help="execute a program concretely")
    r.add_argument("file")
    _analysis_options(r)
    r.add_argument("--seed", type=_nonneg, default=0)
    r.add_argument("--max-steps", type=_nonneg, default=10_000)

    d = sub.add_parser("diff", help="check concrete runs against the analysis")
    d.add_argument("file")
    _analysis_options(d)
    d.add_argument("--seeds", type=_nonneg, default=100)
    d.add_argument("--max-steps", type=_nonneg, default=10_000)

    c = sub.add_parser("corpus", help="compare analyses with .expect files")
    c.add_argument("dir")
    c.add_argument("--jobs", type=_nonneg, default=1)
    c.add_argument("--update", action="store_true", help="rewrite the .expect files")
    return p


# -- pipeline -------------------------------------------------------------------


@dataclass
class Loaded:
    path: str
    text: str
    cfg: object
    abi: object
    config: AnalysisConfig


def _abi(path):
    path = path or os.environ.get("CELLSCOPE_ABI")
    return load_abi(path) if path else DEFAULT_ABI


def _with_directives(parser, argv: list[str], cmd: str, text: str):
    """Re-parse ``argv`` with the file's ``//!`` flags placed before the user's."""
    extra = directive_args(strip_comments(text)[1])
    if not extra:
        return parser.parse_args(argv)
    i = argv.index(cmd)
    return parser.parse_args(argv[:i + 1] + extra + argv[i + 1:])


def load(path: str, ns, display: str | None = None) -> Loaded:
    text = Path(path).read_text(encoding="utf-8")
    abi = _abi(getattr(ns, "abi", None))
    program = parse_program(text, display or path)
    cfg = lower(program, abi)
    cfg.source_file = display or path
    kw = {}
    for opt in ("unroll", "widen_delay", "fanout", "signed_overflow"):
        v = getattr(ns, opt, None)
        if v is not None:
            kw[opt] = v
    if getattr(ns, "no_overlap_removal", False):
        kw["overlap_removal"] = False
    config = AnalysisConfig(volatile=dict(getattr(ns, "volatile", [])), **kw)
    return Loaded(display or path, text, cfg, abi, config)


def _point_id(cfg, spec: str) -> int:
    if spec.isdigit():
        p = int(spec)
        if not 0 <= p < len(cfg.points):
            raise UsageError(f"no control point {p}")
        return p
    try:
        return cfg.label(spec)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


# -- commands -------------------------------------------------------------------


def analysis_text(ld: Loaded):
    """Analyze and return (result, report dict, human text)."""
    t0 = time.perf_counter()
    result = analyze(ld.cfg, ld.abi, ld.config)
    wall = time.perf_counter() - t0
    report = build_report(result, wall)
    human = render_human(dict(report, wall_time=None), {ld.path: ld.text})
    return result, report, human


def cmd_analyze(ns, out) -> int:
    ld = load(ns.file, ns)
    if ns.dump_cfg:
        out.write(ld.cfg.dump() + "\n")
    points = [_point_id(ld.cfg, s) for s in ns.dump_state]
    result, report, human = analysis_text(ld)
    for p in points:
        st = result.state_at(p)
        out.write(f"state at point {p}:\n")
        for line in (st.dump() if st is not None else ["unreachable"]):
            out.write(f"  {line}\n")
    out.write(human)
    if ns.json:
        if not ns.timing:
            report["wall_time"] = None
        text = render_json(report)
        if ns.json == "-":
            out.write(text)
        else:
            Path(ns.json).write_text(text, encoding="utf-8")
    if not result.complete:
        return EXIT_FAILURE
    return EXIT_ALARMS if report["total"] else EXIT_OK


def cmd_run(ns, out) -> int:
    ld = load(ns.file, ns)
    trace = run(ld.cfg, ns.seed, Limits(ns.max_steps, dict(ns.volatile)), ld.abi)
    for line in trace.lines():
        out.write(line + "\n")
    if trace.status == EXIT_ERROR:
        return EXIT_PROGRAM_ERROR
    if trace.status == EXIT_LIMIT:
        return EXIT_STEP_LIMIT
    return EXIT_OK


def cmd_diff(ns, out) -> int:
    ld = load(ns.file, ns)
    result = analyze(ld.cfg, ld.abi, ld.config)
    if not result.complete:
        out.write("analysis incomplete: iteration cap reached\n")
        return EXIT_FAILURE
    rep = diff(result, range(ns.seeds), ns.max_steps)
    for f in rep.failures:
        out.write(f"FAIL {f}\n")
    out.write(rep.summary() + "\n")
    return EXIT_OK if rep.ok else EXIT_ALARMS


def corpus_pairs(directory) -> list:
    d = Path(directory)
    return [(c, c.with_suffix(".expect")) for c in sorted(d.glob("*.c"))
            if c.with_suffix(".expect").exists()]


def corpus_report(path: str) -> str:
    """The expected-output text of one corpus file (directives applied)."""
    text = Path(path).read_text(encoding="utf-8")
    ns = _with_directives(make_parser(), ["analyze", path], "analyze", text)
    ld = load(path, ns, display=Path(path).name)
    return analysis_text(ld)[2]


def _corpus_one(pair):
    src, expect = pair
    try:
        got = corpus_report(str(src))
    except (FrontendError, AbiError, OSError) as exc:
        got = f"error: {exc}\n"
    return str(src), str(expect), got


def cmd_corpus(ns, out) -> int:
    pairs = corpus_pairs(ns.dir)
    if not pairs:
        out.write(f"no .c/.expect pairs in {ns.dir}\n")
        return EXIT_FAILURE
    if ns.jobs > 1:
        with ProcessPoolExecutor(ns.jobs) as ex:
            results = list(ex.map(_corpus_one, pairs))
    else:
        results = [_corpus_one(p) for p in pairs]
    bad = 0
    for src, expect, got in results:
        want = Path(expect).read_text(encoding="utf-8")
        if ns.update and got != want:
            Path(expect).write_text(got, encoding="utf-8")
            out.write(f"updated {expect}\n")
            continue
        if got == want:
            out.write(f"ok   {src}\n")
            continue
        bad += 1
        out.write(f"FAIL {src}\n")
        out.writelines(difflib.unified_diff(want.splitlines(True), got.splitlines(True),
                                            expect, "actual"))
    out.write(f"{len(results) - bad}/{len(results)} corpus files match\n")
    return EXIT_OK if bad == 0 else EXIT_ALARMS


COMMANDS = {"analyze": cmd_analyze, "run": cmd_run, "diff": cmd_diff, "corpus": cmd_corpus}


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.cmd in ("analyze", "run", "diff"):
            text = Path(ns.file).read_text(encoding="utf-8")
            ns = _with_directives(parser, argv, ns.cmd, text)
        return COMMANDS[ns.cmd](ns, out)
    except UsageError as exc:
        sys.stderr.write(f"cellscope: {exc}\n")
        return EXIT_FAILURE
    except FrontendError as exc:
        sys.stderr.write(f"cellscope: {exc}\n")
        return EXIT_FAILURE
    except (AbiError, OSError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"cellscope: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
