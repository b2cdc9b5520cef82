from __future__ import annotations

import json
import shutil
import subprocess
import sys
from io import StringIO
from pathlib import Path

import jsonschema
import pytest

import cellscope
from cellscope.cli import main

from conftest import CORPUS

SCHEMA = json.loads((Path(cellscope.__file__).parent / "report_schema.json").read_text())


def cli(*argv):
    out = StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def json_report(*argv):
    code, text = cli("analyze", *argv, "--json", "-")
    return code, json.loads(text[text.index("\n{") + 1:] if not text.startswith("{") else text)


# -- analyze ----------------------------------------------------------------------


def test_clean_program_exit_zero():
    code, text = cli("analyze", CORPUS / "msgex.c")
    assert code == 0 and "0 alarms" in text


def test_alarm_exit_one():
    code, report = json_report(CORPUS / "oob.c")
    assert code == 1
    assert [a["kind"] for a in report["alarms"]] == ["out-of-bound"]
    assert report["counts"] == {"out-of-bound": 1} and report["total"] == 1


def test_syntax_error_exit_two(tmp_path, capsys):
    f = tmp_path / "bad.c"
    f.write_text("int main(void) { return 0 }\n")
    assert cli("analyze", f)[0] == 2
    assert "bad.c" in capsys.readouterr().err


def test_unknown_flag_and_missing_file(tmp_path):
    assert cli("analyze", CORPUS / "msgex.c", "--frobnicate")[0] == 2
    assert cli("analyze", tmp_path / "nope.c")[0] == 2


def test_bad_abi_file(tmp_path):
    abi = tmp_path / "bad.abi"
    abi.write_text("sizeof.widget = 3\n")
    assert cli("analyze", CORPUS / "msgex.c", "--abi", abi)[0] == 2


@pytest.mark.parametrize("name", ["emuex.c", "oob.c", "divzero.c", "funptr.c", "uninit.c"])
def test_json_matches_schema(name):
    _, report = json_report(CORPUS / name)
    jsonschema.validate(report, SCHEMA)
    assert report["wall_time"] is None
    for a in report["alarms"]:
        assert a["file"] == str(CORPUS / name)


def test_timing_flag_records_wall_time():
    _, report = json_report(CORPUS / "emuex.c", "--timing")
    jsonschema.validate(report, SCHEMA)
    assert isinstance(report["wall_time"], float)


def test_json_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli("analyze", CORPUS / "record20.c", "--json", a)
    cli("analyze", CORPUS / "record20.c", "--json", b)
    assert a.read_bytes() == b.read_bytes()


def test_dump_cfg():
    code, text = cli("analyze", CORPUS / "emuex.c", "--dump-cfg")
    assert code == 0
    assert any(l.endswith("*ushort&regs <- (ushort)(*int&X)") for l in text.splitlines())


def test_dump_state_by_label_and_number():
    code, text = cli("analyze", CORPUS / "emuex.c", "--dump-state", "p2")
    assert "state at point" in text and "(regs,0,ushort) = [0, 255]" in text
    assert cli("analyze", CORPUS / "emuex.c", "--dump-state", "99999")[0] == 2
    assert cli("analyze", CORPUS / "emuex.c", "--dump-state", "nolabel")[0] == 2


def test_command_line_overrides_directive():
    # the file asks for d in 0..10; a user range without 0 removes the alarm
    assert cli("analyze", CORPUS / "divzero.c")[0] == 1
    assert cli("analyze", CORPUS / "divzero.c", "--volatile", "d=1..10")[0] == 0


def test_abi_from_environment(tmp_path, monkeypatch):
    src = tmp_path / "p.c"
    src.write_text("long x; char buf[4]; void main(void){ *(long *)buf = 1; }\n")
    assert cli("analyze", src)[0] == 0
    abi = tmp_path / "wide.abi"
    abi.write_text("sizeof.long = 8\nsizeof.ulong = 8\nsizeof.ptr = 8\n")
    monkeypatch.setenv("CELLSCOPE_ABI", str(abi))
    code, report = json_report(src)
    assert code == 1 and report["abi"]["sizeof"]["long"] == 8


def test_bad_volatile_range():
    assert cli("analyze", CORPUS / "emuex.c", "--volatile", "X=5..1")[0] == 2
    assert cli("analyze", CORPUS / "emuex.c", "--unroll", "-1")[0] == 2


# -- run --------------------------------------------------------------------------


def test_run_exit_codes(tmp_path):
    code, text = cli("run", CORPUS / "emuex.c", "--seed", 3)
    assert code == 0 and text.splitlines()[-1] == "exit"
    code, text = cli("run", CORPUS / "divzero.c", "--volatile", "d=0..0")
    assert code == 3 and "div-by-zero" in text.splitlines()[-1]
    loop = tmp_path / "loop.c"
    loop.write_text("int main(void){ while (1); return 0; }\n")
    code, text = cli("run", loop, "--max-steps", 1000)
    assert code == 4 and text.splitlines()[-1] == "step limit exceeded"


def test_run_is_reproducible():
    assert cli("run", CORPUS / "msgex.c", "--seed", 9) == cli("run", CORPUS / "msgex.c", "--seed", 9)


# -- diff and corpus -----------------------------------------------------------------


def test_diff_clean():
    code, text = cli("diff", CORPUS / "emuex.c", "--seeds", 30)
    assert code == 0 and "0 gamma failures, 0 uncovered events" in text


def test_diff_negative_control_pins_the_failure():
    code, text = cli("diff", CORPUS / "emuex.c", "--seeds", 10, "--no-overlap-removal")
    assert code != 0
    first = next(l for l in text.splitlines() if l.startswith("FAIL"))
    assert "seed=" in first and "bytes no longer hold one ushort value" in first


def test_diff_trivial_program(tmp_path):
    f = tmp_path / "empty.c"
    f.write_text("void main(void){}\n")
    assert cli("diff", f, "--seeds", 5)[0] == 0


def test_corpus_mode(tmp_path):
    for name in ("emuex", "oob"):
        shutil.copy(CORPUS / f"{name}.c", tmp_path)
        shutil.copy(CORPUS / f"{name}.expect", tmp_path)
    code, text = cli("corpus", tmp_path)
    assert code == 0 and "2/2 corpus files match" in text
    (tmp_path / "oob.expect").write_text("something else\n")
    code, text = cli("corpus", tmp_path)
    assert code == 1 and "FAIL" in text
    assert cli("corpus", tmp_path, "--update")[0] == 0
    assert cli("corpus", tmp_path)[0] == 0


def test_console_script():
    exe = shutil.which("cellscope")
    cmd = [exe] if exe else [sys.executable, "-m", "cellscope.cli"]
    proc = subprocess.run(cmd + ["analyze", str(CORPUS / "oob.c")], capture_output=True, text=True)
    assert proc.returncode == 1 and "out-of-bound" in proc.stdout
