"""Command-line driver.

    satcc [opt] FILE... [-o OUT]         optimize (default subcommand)
    satcc verify FILE                    optimize, then differential-test
    satcc report FILE...                 metrics only
    satcc [OPTIONS] -- CC ARGS...        wrap a compiler invocation
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import subprocess
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .cost import CostModel
from .errors import KernelSyntaxError, UnsupportedConstructError
from .extract import ExtractLimits
from .frontend import parse
from .oracle import diff_test
from .pipeline import VARIANTS, PipelineConfig, VariantConfig, optimize_module
from .rules import SaturationLimits

log = logging.getLogger("satcc")

SOURCE_EXTS = (".c", ".cc", ".cpp", ".cxx", ".C")
SUBCOMMANDS = ("opt", "verify", "report")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--variant", choices=list(VARIANTS), help="ablation variant (default accsat)")
    p.add_argument("--max-nodes", type=int, help="e-node limit for saturation (default 10000)")
    p.add_argument("--sat-time", type=float, help="saturation time limit in seconds (default 10)")
    p.add_argument("--iters", type=int, help="saturation iteration limit (default 10)")
    p.add_argument("--extract-time", type=float, help="extraction time limit in seconds (default 30)")
    p.add_argument("--extract", choices=["ilp", "greedy"], help="extraction method (default ilp)")
    p.add_argument("--no-bulk", action="store_true", help="skip bulk-load reordering")
    p.add_argument("--no-sat", action="store_true", help="skip equality saturation")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--report-file", help="write metrics JSON here")
    p.add_argument("--jobs", type=int, default=1, help="files processed in parallel")
    p.add_argument("--keep", action="store_true", help="wrapper mode: keep optimized temp files")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="satcc", description="Equality-saturation optimizer for "
                                "directive-annotated kernel loops.")
    p.add_argument("--version", action="version", version=f"satcc {__version__}")
    sub = p.add_subparsers(dest="cmd")
    o = sub.add_parser("opt", help="optimize files")
    _common(o)
    o.add_argument("files", nargs="+")
    o.add_argument("-o", "--output", help="output file (one input) or directory")
    v = sub.add_parser("verify", help="optimize and differential-test against the input")
    _common(v)
    v.add_argument("files", nargs="+")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--seed", type=int, default=0)
    r = sub.add_parser("report", help="print per-kernel metrics as JSON")
    _common(r)
    r.add_argument("files", nargs="+")
    w = sub.add_parser("wrap", help=argparse.SUPPRESS)
    _common(w)
    return p


def load_config(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


def make_config(args) -> PipelineConfig:
    conf = load_config(getattr(args, "config", None))

    def pick(flag, key, default):
        v = getattr(args, flag, None)
        return v if v is not None else conf.get(key, default)

    variant = VariantConfig.named(pick("variant", "variant", "accsat"))
    sat = variant.sat and not args.no_sat and conf.get("sat", True)
    bulk = variant.bulk and not args.no_bulk and conf.get("bulk", True)
    limits = SaturationLimits(int(pick("max_nodes", "max_nodes", 10000)), float(pick("sat_time", "sat_time", 10.0)),
                              int(pick("iters", "iters", 10)))
    return PipelineConfig(
        variant=VariantConfig(bool(sat), bool(bulk)),
        limits=limits,
        extract_limits=ExtractLimits(float(pick("extract_time", "extract_time", 30.0))),
        extract_method=pick("extract", "extract", "ilp"),
        cost=CostModel.from_dict(conf.get("cost", {})),
    )


def process_source(path: str, cfg: PipelineConfig):
    """Returns (output text, metrics dict, region results)."""
    with open(path, encoding="utf-8") as f:
        src = f.read()
    m = parse(src, path)
    text, report, results = optimize_module(m, cfg)
    return text, report.to_dict(), (m, results)


def _process_for_pool(args):
    path, cfg = args
    text, metrics, _ = process_source(path, cfg)
    return text, metrics


def _format_error(path, e) -> str:
    if isinstance(e, (KernelSyntaxError, UnsupportedConstructError)):
        return f"{path}:{e}"
    return f"{path}: {e}"


def _write_report(args, reports):
    doc = reports[0] if len(reports) == 1 else {"schema": "satcc.metrics/1", "files": reports}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.report_file:
        Path(args.report_file).write_text(text + "\n", encoding="utf-8")
        return None
    return text


def run_files(args, cfg) -> tuple[int, list, list]:
    outputs, reports, status = [], [], 0
    jobs = max(1, args.jobs or 1)
    if jobs > 1 and len(args.files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(_process_for_pool, (f, cfg)) for f in args.files]
            pairs = []
            for f, fut in zip(args.files, futs):
                try:
                    pairs.append((f, fut.result(), None))
                except Exception as e:  # reported per file below
                    pairs.append((f, None, e))
    else:
        pairs = []
        for f in args.files:
            try:
                text, metrics, _ = process_source(f, cfg)
                pairs.append((f, (text, metrics), None))
            except Exception as e:
                pairs.append((f, None, e))
    for f, ok, err in pairs:
        if err is not None:
            print(f"satcc: error: {_format_error(f, err)}", file=sys.stderr)
            status = 1
            continue
        outputs.append((f, ok[0]))
        reports.append(ok[1])
    return status, outputs, reports


def cmd_opt(args, cfg) -> int:
    status, outputs, reports = run_files(args, cfg)
    if args.output:
        out = Path(args.output)
        if len(args.files) > 1 or out.is_dir():
            out.mkdir(parents=True, exist_ok=True)
            for f, text in outputs:
                (out / Path(f).name).write_text(text, encoding="utf-8")
        else:
            for _, text in outputs:
                out.write_text(text, encoding="utf-8")
    else:
        for _, text in outputs:
            sys.stdout.write(text)
    if args.report_file and reports:
        _write_report(args, reports)
    return status


def cmd_report(args, cfg) -> int:
    status, _, reports = run_files(args, cfg)
    if reports:
        text = _write_report(args, reports)
        if text is not None:
            print(text)
    return status


def cmd_verify(args, cfg) -> int:
    status, docs = 0, []
    for f in args.files:
        try:
            text, metrics, (m, _) = process_source(f, cfg)
            rep = diff_test(m, parse(text, f), trials=args.trials, tol_rel=args.tol, seed=args.seed)
        except Exception as e:
            print(f"satcc: error: {_format_error(f, e)}", file=sys.stderr)
            status = 1
            continue
        doc = {"file": f, "variant": cfg.variant.name, **rep.to_dict()}
        docs.append(doc)
        if not rep.ok:
            status = 2
    text = json.dumps(docs[0] if len(docs) == 1 else docs, indent=2, sort_keys=True)
    if args.report_file:
        Path(args.report_file).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return status


def cache_dir() -> Path:
    return Path(os.environ.get("SATCC_CACHE_DIR", ".satcc-cache"))


def wrap_compiler(cmd: list, cfg: PipelineConfig = PipelineConfig(), keep: bool = False) -> int:
    """Optimize every source argument into a temp copy, run ``cmd`` on the copies,
    and return its exit code.  Any optimizer failure passes the original file through."""
    if not cmd:
        print("satcc: error: no command after '--'", file=sys.stderr)
        return 2
    if keep:
        base = cache_dir()
        base.mkdir(parents=True, exist_ok=True)
        workdir = Path(tempfile.mkdtemp(prefix="run-", dir=base))
    else:
        workdir = Path(tempfile.mkdtemp(prefix="satcc-"))
    try:
        new_cmd = [cmd[0]]
        for i, arg in enumerate(cmd[1:]):
            if arg.endswith(SOURCE_EXTS) and os.path.isfile(arg):
                try:
                    text, _, _ = process_source(arg, cfg)
                    dst = workdir / str(i) / Path(arg).name
                    dst.parent.mkdir(parents=True, exist_ok=True)
                    dst.write_text(text, encoding="utf-8")
                    new_cmd.append(str(dst))
                    continue
                except Exception as e:
                    print(f"satcc: warning: {_format_error(arg, e)}; compiling the original",
                          file=sys.stderr)
            new_cmd.append(arg)
        try:
            proc = subprocess.run(new_cmd)
        except OSError as e:
            print(f"satcc: error: cannot run {cmd[0]!r}: {e}", file=sys.stderr)
            return 127
        return proc.returncode
    finally:
        if keep:
            print(f"satcc: kept optimized sources in {workdir}", file=sys.stderr)
        else:
            shutil.rmtree(workdir, ignore_errors=True)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    wrapped = None
    if "--" in argv:
        k = argv.index("--")
        argv, wrapped = argv[:k], argv[k + 1:]
    if wrapped is not None:
        if argv and argv[0] in SUBCOMMANDS:
            argv = argv[1:]
        argv = ["wrap"] + argv
    elif argv and argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help", "--version"):
        argv = ["opt"] + argv
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd is None:
        parser.print_help()
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="satcc: %(levelname)s: %(message)s")
    try:
        cfg = make_config(args)
    except (ValueError, OSError) as e:
        print(f"satcc: error: {e}", file=sys.stderr)
        return 2
    if args.cmd == "wrap":
        return wrap_compiler(wrapped, cfg, keep=args.keep)
    if args.cmd == "opt":
        return cmd_opt(args, cfg)
    if args.cmd == "verify":
        return cmd_verify(args, cfg)
    return cmd_report(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
