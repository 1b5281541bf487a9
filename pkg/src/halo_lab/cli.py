"""Command-line entry points.

``halo-lab run CONFIG`` executes the full pipeline described by a JSON config
and writes byte-reproducible artifacts; the other subcommands run a single
stage of the same pipeline on the same config format.  Exit codes separate
the assertion classes:

  0  everything ran and every gated assertion is certified
  1  unexpected internal failure
  2  the config (or an input file) is invalid
  3  a certified coefficient valuation sits below the required lambda bound
  4  an operator entry violates its norm bound
  5  a factorization or Riesz consistency residual survived
  6  precision ran out before an assertion could be decided either way
"""

from __future__ import annotations

import argparse
import importlib.resources
import sys
from pathlib import Path

from .errors import (
    ConfigInvalid,
    FactorizationResidual,
    HaloError,
    KernelDimensionMismatch,
    NoSeparatingVertex,
    NormViolation,
    PrecisionExhausted,
    PrecisionLoss,
    UncertifiedInput,
    UncertifiedValuation,
    UncertifiedVertexCandidate,
)
from .experiment import ExperimentConfig, ExperimentReport, run_experiment

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_LAMBDA = 3
EXIT_ENTRY_BOUND = 4
EXIT_RESIDUAL = 5
EXIT_PRECISION = 6

_PRECISION_ERRORS = (PrecisionExhausted, PrecisionLoss, UncertifiedValuation,
                     UncertifiedInput, UncertifiedVertexCandidate,
                     NoSeparatingVertex)
_RESIDUAL_ERRORS = (FactorizationResidual, KernelDimensionMismatch)

_STAGES = {
    "run": ("lambda", "points", "factor", "riesz"),
    "charseries": ("lambda",),
    "lambda-check": ("lambda",),
    "polygon": ("points",),
    "slope-scan": ("points",),
    "factor": ("factor",),
    "riesz": ("riesz",),
}

# Subcommands whose exit code is gated on the lambda table.
_LAMBDA_GATED = ("run", "lambda-check")


def report_schema_path() -> Path:
    """Filesystem path of the shipped report JSON schema."""
    return Path(str(importlib.resources.files("halo_lab") / "report_schema.json"))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halo-lab",
        description="valuation-certified slope experiments for compact "
                    "p-adic operators")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment config (JSON)")
    common.add_argument("--out", default="halo_out",
                        help="output directory (default: halo_out)")
    common.add_argument("--format", dest="formats", default=None,
                        help="comma-separated subset of csv,json,svg "
                             "(default: the config's outputs.formats)")
    common.add_argument("--jobs", type=int, default=1,
                        help="reserved concurrency knob; results are computed "
                             "in a deterministic order regardless")
    sub.add_parser("run", parents=[common],
                   help="full pipeline with all gated assertions")
    sub.add_parser("charseries", parents=[common],
                   help="characteristic series coefficients and their "
                        "certified moduli (no exit gating)")
    sub.add_parser("lambda-check", parents=[common],
                   help="coefficient valuation bound check (gates the exit "
                        "code)")
    sub.add_parser("polygon", parents=[common],
                   help="Newton polygons at the configured points")
    sub.add_parser("slope-scan", parents=[common],
                   help="polygons plus slope/v_p(x) ratio table on stdout")
    sub.add_parser("factor", parents=[common],
                   help="slope factorization at the configured point")
    sub.add_parser("riesz", parents=[common],
                   help="Riesz kernel dimension and characteristic series")
    return parser


def _parse_formats(arg: str | None, config: ExperimentConfig) -> tuple:
    if arg is None:
        return config.formats
    parts = tuple(sorted({q.strip() for q in arg.split(",") if q.strip()}))
    for q in parts:
        if q not in ("csv", "json", "svg"):
            raise ConfigInvalid("unknown output format %r" % (q,))
    if not parts:
        raise ConfigInvalid("--format needs at least one of csv,json,svg")
    return parts


def _write_outputs(rep: ExperimentReport, out_dir: Path, formats: tuple,
                   echo) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(rep.to_json())
        written.append(path)
    for name in sorted(rep.artifacts):
        if name.endswith(".svg"):
            if "svg" not in formats:
                continue
        elif "csv" not in formats:
            continue
        path = out_dir / name
        path.write_text(rep.artifacts[name])
        written.append(path)
    for path in written:
        echo("wrote %s" % path)


def _echo_summary(command: str, rep: ExperimentReport, echo) -> None:
    r = rep.report
    if "lambda_table" in r:
        table = r["lambda_table"]
        bad = [row["n"] for row in table if row["status"] == "violated"]
        soft = [row["n"] for row in table if row["status"] == "inconclusive"]
        if bad:
            echo("lambda-bound: VIOLATED at n=%s" % ",".join(map(str, bad)))
        elif soft:
            echo("lambda-bound: INCONCLUSIVE at n=%s" % ",".join(map(str, soft)))
        else:
            echo("lambda-bound: OK (%d coefficients)" % len(table))
    echo("entry-bound: OK (matrix size %d)" % r["matrix_size"])
    for blk in r.get("points", ()):
        echo("point %s: first slopes [%s] certified through %d%s"
             % (blk["label"], ", ".join(blk["first_slopes"]),
                blk["certified_upto"],
                " (final segment provisional)" if blk["provisional_final"]
                else ""))
        if command == "slope-scan":
            for row in blk["slopes"]:
                ratio = row["ratio"] if row["ratio"] is not None else "-"
                echo("  slope %d/%d multiplicity %d ratio %s%s"
                     % (row["slope_num"], row["slope_den"],
                        row["multiplicity"], ratio,
                        " provisional" if row["provisional"] else ""))
    if "factorization" in r:
        fb = r["factorization"]
        echo("factor at h=%s: deg Q = %d, residual certified below target"
             % (fb["h"], fb["q_degree"]))
    if "riesz" in r:
        rb = r["riesz"]
        echo("riesz at h=%s: kernel dimension %d matches deg Q"
             % (rb["h"], rb["dimension"]))


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    echo = lambda line: print(line)  # noqa: E731
    try:
        if args.jobs < 1:
            raise ConfigInvalid("--jobs must be at least 1")
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigInvalid("cannot read config %s: %s" % (path, e))
        config = ExperimentConfig.from_json(text)
        stages = _STAGES[args.command]
        if "factor" in stages and args.command == "factor" and config.factor is None:
            raise ConfigInvalid("factor subcommand needs a factor section")
        if "riesz" in stages and args.command == "riesz" and config.riesz is None:
            raise ConfigInvalid("riesz subcommand needs a riesz section")
        formats = _parse_formats(args.formats, config)
        rep = run_experiment(config, stages=stages)
        _write_outputs(rep, Path(args.out), formats, echo)
        _echo_summary(args.command, rep, echo)
        if args.command in _LAMBDA_GATED and "lambda_table" in rep.report:
            if rep.lambda_violated:
                return EXIT_LAMBDA
            if rep.lambda_inconclusive:
                return EXIT_PRECISION
        return EXIT_OK
    except ConfigInvalid as e:
        echo("config error: %s" % e)
        return EXIT_CONFIG
    except NormViolation as e:
        echo("entry-bound violation: %s" % e)
        return EXIT_ENTRY_BOUND
    except _RESIDUAL_ERRORS as e:
        echo("residual failure: %s" % e)
        return EXIT_RESIDUAL
    except _PRECISION_ERRORS as e:
        echo("precision inconclusive: %s" % e)
        return EXIT_PRECISION
    except HaloError as e:
        echo("config error: %s" % e)
        return EXIT_CONFIG
    except Exception as e:  # pragma: no cover - safety net
        echo("internal error: %s" % e)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
