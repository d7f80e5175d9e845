"""Command line entry point.

Verbs:
    run <config>        full pipeline on a crate, per the config file
    resume <state-dir>  continue a persisted run
    metrics <crate>     the five safety counters, table or JSON
    decompose <crate>   dump each function's translation units (debug)
    order <crate>       dump the unit translation order (debug)

Exit codes: 0 success, 2 baseline validation failure, 3 configuration
error (bad file, bad value, or resume against a different config),
1 anything else.
"""

import argparse
import json
import sys
from pathlib import Path

from . import pipeline, report
from .config import load_config
from .decompose import DecompositionConfig, decompose_crate, dump_forest
from .errors import BaselineFailed, ConfigError, SafeliftError
from .metrics import compute_metrics
from .ordering import dump_order, order_units
from .source_model import parse_crate, resolve_calls
from .validate import PASS

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_BASELINE = 2
EXIT_CONFIG = 3


def _add_override_flags(p: argparse.ArgumentParser):
    p.add_argument("--crate-dir", help="crate to translate")
    p.add_argument("--max-unit-lines", type=int, help="unit size limit L")
    p.add_argument("--max-attempts", type=int, help="repair attempts per unit N")
    p.add_argument("--build-cmd", help="build command")
    p.add_argument(
        "--test-cmd",
        action="append",
        dest="test_cmd",
        metavar="CMD",
        help="test command; repeat for several (replaces the config list)",
    )
    p.add_argument("--state-dir", help="where run state lives")
    p.add_argument("--command-timeout", type=float, help="per-command timeout, seconds")
    p.add_argument("--covered-only", action="store_const", const=True, default=None,
                   help="translate only functions named in covered_fns_file")
    p.add_argument("--covered-fns-file", help="file listing covered functions")
    p.add_argument("--backend-endpoint", help="mock:DIR | identity: | garbage: | http(s)://...")
    p.add_argument("--backend-model", help="model name sent to an HTTP backend")
    p.add_argument("--backend-temperature", type=float, help="sampling temperature")
    p.add_argument("--backend-timeout", type=float, help="backend request timeout, seconds")
    p.add_argument("--backend-max-retries", type=int, help="HTTP retry budget")
    p.add_argument("--audit-log", help="JSONL file recording every prompt/response")


_OVERRIDE_KEYS = [
    "crate_dir",
    "max_unit_lines",
    "max_attempts",
    "build_cmd",
    "state_dir",
    "command_timeout",
    "covered_only",
    "covered_fns_file",
    "backend_endpoint",
    "backend_model",
    "backend_temperature",
    "backend_timeout",
    "backend_max_retries",
    "audit_log",
]


def _overrides(args) -> dict:
    out = {}
    for key in _OVERRIDE_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if getattr(args, "test_cmd", None):
        out["test_cmd"] = list(args.test_cmd)
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="safelift", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="translate a crate per a config file")
    p_run.add_argument("config", help="flat key = value config file")
    _add_override_flags(p_run)
    p_run.add_argument("--report", choices=["table", "json"], default="table")

    p_res = sub.add_parser("resume", help="continue a persisted run")
    p_res.add_argument("state_dir_arg", metavar="state-dir")
    _add_override_flags(p_res)
    p_res.add_argument("--report", choices=["table", "json"], default="table")

    p_met = sub.add_parser("metrics", help="count the five safety metrics")
    p_met.add_argument("crate_dir_arg", metavar="crate-dir")
    grp = p_met.add_mutually_exclusive_group()
    grp.add_argument("--json", action="store_true")
    grp.add_argument("--table", action="store_true")

    p_dec = sub.add_parser("decompose", help="dump translation units per function")
    p_dec.add_argument("crate_dir_arg", metavar="crate-dir")
    p_dec.add_argument("--dump", action="store_true", help="print the rendered units")
    p_dec.add_argument("--max-unit-lines", type=int, default=150)

    p_ord = sub.add_parser("order", help="dump the unit translation order")
    p_ord.add_argument("crate_dir_arg", metavar="crate-dir")
    p_ord.add_argument("--dump", action="store_true", help="print the order")
    p_ord.add_argument("--max-unit-lines", type=int, default=150)
    return ap


def _cmd_run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    rep = pipeline.run(cfg)
    sys.stdout.write(report.render(rep, args.report))
    return EXIT_OK if rep.final_status == PASS else EXIT_OTHER


def _cmd_resume(args) -> int:
    rep = pipeline.resume(Path(args.state_dir_arg), _overrides(args))
    sys.stdout.write(report.render(rep, args.report))
    return EXIT_OK if rep.final_status == PASS else EXIT_OTHER


def _cmd_metrics(args) -> int:
    diag: dict = {}
    m = compute_metrics(args.crate_dir_arg, collect=diag)
    if args.json:
        payload = dict(m.as_dict())
        payload["per_file"] = diag.get("per_file", {})
        payload["unclassified_derefs"] = diag.get("unclassified_derefs", 0)
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        width = max(len(n) for n in m.as_dict())
        for name, value in m.as_dict().items():
            sys.stdout.write(f"{name:<{width}}  {value}\n")
        if diag.get("unclassified_derefs"):
            sys.stdout.write(f"(unclassified dereferences: {diag['unclassified_derefs']})\n")
        for w in diag.get("warnings", []):
            sys.stderr.write(f"warning: {w}\n")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    model = parse_crate(args.crate_dir_arg)
    forest = decompose_crate(model, DecompositionConfig(max_unit_lines=args.max_unit_lines))
    dumps = dump_forest(forest, model)
    for fn in sorted(dumps):
        sys.stdout.write(f"== {fn} ==\n{dumps[fn]}\n")
    for err in forest.errors:
        sys.stderr.write(f"warning: {err}\n")
    return EXIT_OK


def _cmd_order(args) -> int:
    model = parse_crate(args.crate_dir_arg)
    forest = decompose_crate(model, DecompositionConfig(max_unit_lines=args.max_unit_lines))
    graph = resolve_calls(model)
    order = order_units(graph, forest)
    sys.stdout.write(dump_order(graph, order) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "resume": _cmd_resume,
        "metrics": _cmd_metrics,
        "decompose": _cmd_decompose,
        "order": _cmd_order,
    }[args.verb]
    try:
        return handler(args)
    except BaselineFailed as e:
        sys.stderr.write(f"baseline failure: {e}\n")
        return EXIT_BASELINE
    except ConfigError as e:  # ConfigMismatch included
        sys.stderr.write(f"config error: {e}\n")
        return EXIT_CONFIG
    except SafeliftError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
