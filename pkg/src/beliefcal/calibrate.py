"""Belief-grid sweeps and Pareto frontier extraction."""
from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .context import OBJECTIVES, ContextSpec, GridCellMetrics, apply_tn_floor, belief_for, evaluate_cell
from .data import Dataset

log = logging.getLogger(__name__)

DEFAULT_SIGMAS = (0.001, 0.01, 0.1, 1.0, 10.0)
DEFAULT_LAMBDAS = (0.001, 0.01, 0.1, 1.0, 10.0)
DEFAULT_BETAS = (0.1, 1.0, 10.0)


class SweepError(RuntimeError):
    pass


def _ascending(name, values, allow_zero=False):
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError(f"{name} grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} grid must be strictly ascending")
    if values[0] < 0 or (values[0] == 0 and not allow_zero):
        raise ValueError(f"{name} grid must be positive")
    return values


@dataclass(frozen=True)
class BeliefGrid:
    sigmas: tuple = DEFAULT_SIGMAS
    lambdas: tuple = DEFAULT_LAMBDAS
    betas: tuple = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "sigmas", _ascending("sigma", self.sigmas))
        object.__setattr__(self, "lambdas", _ascending("lambda", self.lambdas))
        object.__setattr__(self, "betas", _ascending("beta", self.betas, allow_zero=True))

    def __len__(self):
        return len(self.sigmas) * len(self.lambdas) * len(self.betas)

    def __iter__(self):
        # row-major: sigma slowest, beta fastest
        return itertools.product(self.sigmas, self.lambdas, self.betas)


@dataclass
class ParetoSet:
    entries: list
    dominated_count: int
    warning: Optional[str] = None

    def __len__(self):
        return len(self.entries)

    @property
    def items(self):
        return [item for item, _ in self.entries]


def resolve_threads(threads: int) -> int:
    return (os.cpu_count() or 1) if threads == 0 else max(1, threads)


def sweep(ds: Dataset, grid: BeliefGrid, ctx: ContextSpec, threads: int = 1) -> list[GridCellMetrics]:
    """Evaluate every grid cell; results come back in grid order."""
    beliefs = [belief_for(ds, s, l, b, ctx) for s, l, b in grid]

    def run(b):
        try:
            return evaluate_cell(ds, b, ctx)
        except (ArithmeticError, RuntimeError, ValueError) as err:
            raise SweepError(f"cell sigma={b.sigma:g} lambda={b.lam:g} beta={b.beta:g}: {err}") from err

    workers = resolve_threads(threads)
    if workers == 1:
        return [run(b) for b in beliefs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, beliefs))


def dominates(a, b) -> bool:
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_front(cells: Sequence) -> ParetoSet:
    """Non-dominated subset of ``(item, objective_vector)`` pairs (all minimised).

    Duplicated non-dominated vectors are all kept. Entries are sorted
    lexicographically by objective values, input order breaking ties.
    """
    cells = list(cells)
    if not cells:
        return ParetoSet([], 0, warning="no cells to rank")
    F = np.array([np.asarray(v, dtype=float) for _, v in cells])
    if F.ndim != 2:
        raise ValueError("objective vectors must share one arity")
    if not np.all(np.isfinite(F)):
        raise ValueError("objective values must be finite")
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    # dominated[j]: some i with F_i <= F_j everywhere and < somewhere
    dominated = np.any(le & lt, axis=0)
    keep = np.flatnonzero(~dominated)
    order = sorted(keep, key=lambda i: (tuple(F[i]), i))
    entries = [(cells[i][0], tuple(float(v) for v in F[i])) for i in order]
    return ParetoSet(entries, int(dominated.sum()))


@dataclass
class CalibrationRun:
    cells: list
    kept: list
    objectives: tuple
    pareto: ParetoSet
    filters: dict = field(default_factory=dict)


def project(cells, objectives):
    unknown = [o for o in objectives if o not in OBJECTIVES]
    if unknown:
        raise KeyError(f"unknown objective {unknown[0]!r}")
    return [(c, tuple(c.objective(o) for o in objectives)) for c in cells]


def calibrate_run(ds: Dataset, grid: BeliefGrid, ctx: ContextSpec, objectives=("avg_cost", "neg_log_prob"),
                  tn_floor=None, threads=1, cells=None) -> CalibrationRun:
    """sweep -> filter -> project -> pareto_front.

    ``tn_floor`` defaults to the context's floor. Pass precomputed ``cells``
    to re-rank an existing sweep under other objectives or filters.
    """
    objectives = tuple(objectives)
    project([], objectives)
    if cells is None:
        cells = sweep(ds, grid, ctx, threads)
    floor = ctx.tn_floor if tn_floor is None else tn_floor
    kept = cells if floor is None else apply_tn_floor(cells, floor)
    if floor is not None:
        log.info("tn floor %g keeps %d of %d cells", floor, len(kept), len(cells))
    if kept:
        front = pareto_front(project(kept, objectives))
    else:
        front = ParetoSet([], 0, warning="all cells removed by filters")
    return CalibrationRun(cells, kept, objectives, front, {"tn_floor": floor})
