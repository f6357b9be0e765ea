import json
import shutil
import sys
from pathlib import Path

import pytest

from satcc.cli import main, wrap_compiler
from satcc.corpus import corpus_path

STUB = """\
import json, os, sys
args = sys.argv[1:]
srcs = [a for a in args if a.endswith(".c")]
with open(os.environ["STUB_LOG"], "w") as f:
    json.dump({"args": args, "sources": {a: open(a).read() for a in srcs}}, f)
sys.exit(int(os.environ.get("STUB_EXIT", "0")))
"""


@pytest.fixture
def stub(tmp_path, monkeypatch):
    path = tmp_path / "stubcc.py"
    path.write_text(STUB)
    log = tmp_path / "log.json"
    monkeypatch.setenv("STUB_LOG", str(log))
    monkeypatch.setenv("SATCC_CACHE_DIR", str(tmp_path / "cache"))
    return [sys.executable, str(path)], log


@pytest.fixture
def kernel(tmp_path):
    dst = tmp_path / "kernel.c"
    shutil.copy(corpus_path("zsolve"), dst)
    return dst


def test_opt_stdout(kernel, capsys):
    assert main([str(kernel)]) == 0
    out = capsys.readouterr().out
    assert "#pragma acc loop vector" in out and "_v" in out


def test_opt_output_file_and_report(kernel, tmp_path):
    out, rep = tmp_path / "o.c", tmp_path / "r.json"
    assert main(["opt", str(kernel), "-o", str(out), "--report-file", str(rep), "--variant", "cse"]) == 0
    doc = json.loads(rep.read_text())
    assert doc["schema"] == "satcc.metrics/1" and doc["variant"] == "cse"
    assert out.read_text().count("#pragma") == 3


def test_report_keys(kernel, capsys):
    assert main(["report", str(kernel)]) == 0
    (k,) = json.loads(capsys.readouterr().out)["kernels"]
    for key in ("ssa_ms", "sat_ms", "extract_ms", "nodes_final", "stop_reason", "objective_before",
                "objective_after", "static_loads_before", "static_loads_after", "static_stores",
                "fma_count", "method"):
        assert key in k


def test_verify(kernel, capsys):
    assert main(["verify", str(kernel), "--trials", "10"]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_config_file(kernel, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"variant": "cse+sat", "max_nodes": 500}))
    assert main(["report", str(kernel), "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["variant"] == "cse+sat"


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.c"
    bad.write_text("void f() {\n  x = (1 + ;\n}\n")
    assert main([str(bad)]) == 1
    assert f"{bad}:2:" in capsys.readouterr().err


def test_jobs(tmp_path, capsys):
    files = [corpus_path(n) for n in ("matmul", "horner", "ep")]
    assert main(["report", "--jobs", "2"] + [str(f) for f in files]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [Path(f["file"]).name for f in doc["files"]] == ["matmul.c", "horner.c", "ep.c"]


def test_wrapper_substitutes_and_propagates(stub, kernel, monkeypatch):
    cmd, log = stub
    monkeypatch.setenv("STUB_EXIT", "3")
    assert main(["--", *cmd, "-O3", str(kernel), "-o", "kernel"]) == 3
    seen = json.loads(log.read_text())
    (src,) = seen["sources"]
    assert src != str(kernel) and Path(src).name == "kernel.c"
    assert "-O3" in seen["args"] and "kernel" in seen["args"]
    assert "_v" in seen["sources"][src]
    assert not Path(src).exists()  # temp copies removed


def test_wrapper_keep(stub, kernel, tmp_path):
    cmd, log = stub
    assert main(["--keep", "--", *cmd, str(kernel)]) == 0
    (src,) = json.loads(log.read_text())["sources"]
    assert Path(src).exists() and str(tmp_path / "cache") in src


def test_wrapper_without_sources(stub):
    cmd, log = stub
    assert wrap_compiler(cmd + ["--version"]) == 0
    assert json.loads(log.read_text())["args"] == ["--version"]


def test_wrapper_fail_open(stub, tmp_path, capsys):
    cmd, log = stub
    bad = tmp_path / "bad.c"
    bad.write_text("x = *p;\n")
    assert main(["--", *cmd, str(bad)]) == 0
    assert json.loads(log.read_text())["sources"] == {str(bad): "x = *p;\n"}
    assert "warning" in capsys.readouterr().err


def test_wrapper_launch_failure(capsys):
    assert wrap_compiler(["/nonexistent/cc", "a.c"]) == 127
