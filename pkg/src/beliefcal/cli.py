"""Command-line entry point: ``beliefcal {calibrate,recourse,validate} config.json``.

Exit codes: 0 ok, 1 configuration error, 2 data error, 3 solver error. Errors
print one ``error=<kind> reason=<text>`` line on stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .calibrate import SweepError, calibrate_run
from .config import ConfigError, RunConfig
from .context import assess_rows, belief_for
from .data import DataError
from .recourse import RecourseError
from .report import write_flipset, write_report

log = logging.getLogger("beliefcal")

EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 1, 2, 3


def _fail(kind, code, err):
    reason = " ".join(str(err).split())
    print(f"error={kind} reason={reason}", file=sys.stderr)
    return code


def _guarded(fn):
    def wrapper(args):
        try:
            return fn(args)
        except ConfigError as err:
            return _fail("config", EXIT_CONFIG, err)
        except DataError as err:
            return _fail("data", EXIT_DATA, err)
        except (SweepError, RecourseError) as err:
            return _fail("solver", EXIT_SOLVER, err)
    return wrapper


def _load(path):
    cfg = RunConfig.load(path)
    ds = cfg.load_dataset()
    return cfg, ds


@_guarded
def cmd_validate(args) -> int:
    cfg = RunConfig.load(args.config)
    ds = cfg.load_dataset()
    d = ds.d - 1  # without the intercept
    print(f"n={ds.n} d={d} cells={len(cfg.grid)}")
    print(f"actionable={int(ds.actionable.sum())} context={cfg.context['kind']} "
          f"objectives={','.join(cfg.objectives)}")
    return 0


@_guarded
def cmd_calibrate(args) -> int:
    cfg, ds = _load(args.config)
    ctx = cfg.context_for(ds)
    run = calibrate_run(ds, cfg.grid, ctx, cfg.objectives, threads=args.threads)
    out = cfg.resolved_output_dir
    paths = write_report(out, run, cfg.context["kind"])
    log.info("%d cells, %d on frontier -> %s", len(run.cells), len(run.pareto), out)
    if run.pareto.warning:
        print(f"warning: {run.pareto.warning}", file=sys.stderr)
    for name in ("cells.csv", "pareto.csv", "pareto.md", "scatter.svg"):
        print(paths[name])
    return 0


def select_rows(selector: str, index: np.ndarray, decision: np.ndarray) -> np.ndarray:
    """Positions matching ``all``, ``all-denied``, ``all-approved`` or ids like ``3,10-12``."""
    sel = selector.strip()
    if sel == "all":
        return np.arange(len(index))
    if sel in ("all-denied", "denied"):
        return np.flatnonzero(decision < 0)
    if sel in ("all-approved", "approved"):
        return np.flatnonzero(decision > 0)
    wanted = []
    try:
        for part in sel.split(","):
            if "-" in part.strip()[1:]:
                lo, hi = part.split("-", 1)
                wanted.extend(range(int(lo), int(hi) + 1))
            else:
                wanted.append(int(part))
    except ValueError:
        raise ConfigError(f"bad row selector {selector!r}") from None
    pos = {int(r): i for i, r in enumerate(index)}
    missing = [r for r in wanted if r not in pos]
    if missing:
        raise ConfigError(f"rows not in dataset: {missing[:5]}")
    return np.array([pos[r] for r in wanted], dtype=int)


@_guarded
def cmd_recourse(args) -> int:
    cfg, ds = _load(args.config)
    ctx = cfg.context_for(ds)
    try:
        b = belief_for(ds, args.sigma, args.lam, args.beta, ctx)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    rows = assess_rows(ds, b, ctx)
    selected = select_rows(args.rows, ds.index, rows.decision)
    out = cfg.resolved_output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "flipset.csv")
    write_flipset(path, ds.feature_names, rows, selected)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beliefcal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="sweep the belief grid and write frontier reports")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("recourse", help="write per-individual flipsets for one belief")
    p.add_argument("config")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--rows", default="all-denied",
                   help="all, all-denied, all-approved, or ids such as 0,5,10-20")
    p.add_argument("--threads", type=int, default=1, help="accepted for symmetry; unused")
    p.set_defaults(func=cmd_recourse)

    p = sub.add_parser("validate", help="check a config and report dataset and grid sizes")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
