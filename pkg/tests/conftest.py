from __future__ import annotations

import sys
from pathlib import Path

import pytest

from cellscope.abi import DEFAULT_ABI
from cellscope.analyzer import AnalysisConfig, analyze
from cellscope.frontend import build_cfg

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def analyze_text(text: str, volatile=None, file="t.c", **kw):
    cfg = build_cfg(text, DEFAULT_ABI, file)
    return analyze(cfg, DEFAULT_ABI, AnalysisConfig(volatile=dict(volatile or {}), **kw))


def analyze_corpus(name: str, **kw):
    from cellscope.cli import _with_directives, load, make_parser
    path = CORPUS / name
    text = path.read_text()
    ns = _with_directives(make_parser(), ["analyze", str(path)], "analyze", text)
    ld = load(str(path), ns, display=name)
    for k, v in kw.items():
        setattr(ld.config, k, v)
    return analyze(ld.cfg, ld.abi, ld.config)


@pytest.fixture
def abi():
    return DEFAULT_ABI


_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion")


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    n = report.nodeid.split("test_criterion_")[1].split("_")[0]
    if report.when == "call" or report.failed:
        if report.failed or n not in _criteria:
            _criteria[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria, key=int):
        terminalreporter.write_line(f"criterion {n}: {_criteria[n]}")
