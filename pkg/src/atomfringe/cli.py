"""Command-line entry point: ``atomfringe run|fit|check``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import acceptance
from .averaging import BeamModel
from .errors import AtomfringeError, ConfigError
from .scenario import emit, fit_two_coil, load_scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomfringe",
        description="Fringe phase and visibility of a separated-arm atom "
        "interferometer in electric and magnetic fields.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run a scan scenario")
    run_p.add_argument("--config", required=True, type=Path)
    run_p.add_argument("--out", required=True, type=Path)
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")

    fit_p = sub.add_parser("fit", help="fit the two-coil dephasing model")
    fit_p.add_argument("--config", required=True, type=Path)
    fit_p.add_argument("--out", required=True, type=Path)

    check_p = sub.add_parser("check", help="run the acceptance suite")
    check_p.add_argument("--out", type=Path, default=None)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    scn = load_scenario(args.config)
    records = run_scenario(scn)
    emit(records, scn, args.out, args.format)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def _load_fit_config(path: Path) -> dict:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "fit" not in doc:
        raise ConfigError("fit: missing required section")
    return doc["fit"]


def _cmd_fit(args: argparse.Namespace) -> int:
    node = _load_fit_config(args.config)
    mode = node.get("mode", "j1")
    data_path = node.get("data_csv")
    if data_path is None:
        raise ConfigError("fit.data_csv: missing required key")
    rows = []
    with open(Path(args.config).parent / data_path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    for ln in lines[1:]:  # header row mandatory
        rows.append(tuple(float(c) for c in ln.split(",")))
    beam = None
    if mode == "visibility":
        beam = BeamModel(
            v_m=float(node.get("mean_velocity", 1065.0)),
            s_parallel=float(node["speed_ratio"]),
        )
    fit = fit_two_coil(rows, mode=mode, chi=float(node.get("chi", 0.0)), beam=beam)
    out = {
        "model": {
            "a_j1": fit.model.a_j1,
            "i0": fit.model.i0,
            "a_j1c": fit.model.a_j1c,
            "i0c": fit.model.i0c,
            "j0_ic": fit.model.j0_ic,
            "zero_current_j0": fit.zero_current_j0,
        },
        "rms_residual": fit.rms_residual,
        "mode": fit.mode,
        "compensator_absorbed": fit.compensator_absorbed,
    }
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True))
    print(f"fit rms residual {fit.rms_residual:.3e}; wrote {args.out}")
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    results = acceptance.run_all(verbose=True)
    if args.out is not None:
        doc = [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ]
        Path(args.out).write_text(json.dumps(doc, indent=2))
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} criterion(s) FAILED")
        return EXIT_NUMERICAL
    print(f"all {len(results)} criteria passed")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "fit":
            return _cmd_fit(args)
        return _cmd_check(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (AtomfringeError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
