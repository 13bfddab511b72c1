"""Per-belief objective values under a recourse context."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset
from .posterior import (
    INTERCEPT_PROFILE,
    Belief,
    decisions,
    fit_posterior,
    intercept_mask,
    mean_neg_log_prob,
    normal_cdf,
    predictive_scores,
    row_log_probs,
)
from .recourse import CostWeights, PolicySolver, RecourseError, weighted_costs

KINDS = ("plain", "actionable", "fn_tn_split", "policy")
AVERAGING = ("n", "denied")
OBJECTIVES = ("neg_log_prob", "avg_cost", "fn_cost", "tn_cost")
# cost weight on the intercept; the coordinate is frozen anyway
INTERCEPT_COST = 1e9


@dataclass(frozen=True)
class ContextSpec:
    kind: str = "plain"
    weights: Optional[CostWeights] = None
    beta: Optional[float] = None
    tn_floor: Optional[float] = None
    average_over: str = "n"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown context kind {self.kind!r}")
        if self.kind == "actionable" and self.weights is None:
            raise ValueError("actionable context needs cost weights")
        if self.kind == "policy" and self.beta is None:
            raise ValueError("policy context needs beta")
        if self.tn_floor is not None and self.tn_floor < 0:
            raise ValueError("tn_floor must be nonnegative")
        if self.average_over not in AVERAGING:
            raise ValueError(f"average_over must be one of {AVERAGING}")


def actionable_context(ds: Dataset, nonactionable_weight=100.0, **kw) -> ContextSpec:
    """Cost weights 1 on actionable features, ``nonactionable_weight`` elsewhere."""
    diag = np.where(ds.actionable, 1.0, nonactionable_weight)
    diag[intercept_mask(ds.feature_names)] = INTERCEPT_COST
    return ContextSpec(kind="actionable", weights=CostWeights(diag), **kw)


def belief_for(ds: Dataset, sigma, lam, beta, ctx: ContextSpec) -> Belief:
    """Build the belief for one grid cell.

    The actionable context reuses its cost weights as the prior profile, so
    non-actionable features are also shrunk harder.
    """
    if ctx.kind == "actionable":
        profile = ctx.weights.diag.copy()
    else:
        profile = np.ones(ds.d)
    profile[intercept_mask(ds.feature_names)] = INTERCEPT_PROFILE
    return Belief(sigma, lam, profile, beta)


@dataclass(frozen=True)
class GridCellMetrics:
    belief: Belief
    neg_log_prob: float
    avg_cost: float
    fn_cost: float
    tn_cost: float
    denial_count: int
    max_kkt_residual: float = 0.0

    def objective(self, name: str) -> float:
        if name not in OBJECTIVES:
            raise KeyError(f"unknown objective {name!r}")
        return getattr(self, name)


@dataclass
class RowAssessment:
    """Per-row decision, probability and recourse for one belief."""
    index: np.ndarray
    labels: np.ndarray
    decision: np.ndarray
    probability: np.ndarray
    log_prob: np.ndarray
    cost: np.ndarray
    action: np.ndarray
    kkt_residual: np.ndarray = field(default=None)


def _mean(values, n):
    return math.fsum(values) / n if n else 0.0


def fn_tn_costs(labels, decision, costs, average_over="n"):
    """False-negative and true-negative recourse cost means.

    Both are averaged over all rows (``average_over='n'``) or over the
    denied rows only (``'denied'``).
    """
    labels = np.asarray(labels, dtype=float)
    decision = np.asarray(decision, dtype=float)
    costs = np.asarray(costs, dtype=float)
    denied = decision < 0
    base = len(labels) if average_over == "n" else int(denied.sum())
    fn = _mean(costs[denied & (labels > 0)], base)
    tn = _mean(costs[denied & (labels < 0)], base)
    return fn, tn


def assess_rows(ds: Dataset, b: Belief, ctx: ContextSpec, posterior=None) -> RowAssessment:
    p = fit_posterior(ds, b) if posterior is None else posterior
    mu, sd, z = predictive_scores(p, ds.X)
    decision = decisions(mu, sd, b.beta)
    frozen = intercept_mask(ds.feature_names)
    denied = np.flatnonzero(decision < 0)
    cost = np.zeros(ds.n)
    action = np.zeros_like(ds.X)
    resid = np.zeros(ds.n)
    if denied.size:
        Xd = ds.X[denied]
        if ctx.kind == "policy" and b.beta > 0:
            out = PolicySolver(p, b.beta, frozen).solve(Xd)
            bad = np.flatnonzero(~np.isin(out["status"], ("ok", "feasible")))
            if bad.size:
                row = int(ds.index[denied[bad[0]]])
                raise RecourseError(f"row {row}: policy recourse {out['status'][bad[0]]}")
            c, a, r = out["cost"], out["action"], out["kkt_residual"]
        else:
            diag = ctx.weights.diag if ctx.kind == "actionable" else None
            try:
                c, a = weighted_costs(p.w_post, Xd, diag, frozen)
            except RecourseError as err:
                raise RecourseError(f"row {int(ds.index[denied[0]])}: {err}") from None
            r = np.zeros(len(denied))
        cost[denied], action[denied], resid[denied] = c, a, r
    return RowAssessment(
        index=ds.index,
        labels=ds.y,
        decision=decision,
        probability=normal_cdf(z + b.beta),
        log_prob=row_log_probs(ds.y, z, b.beta),
        cost=cost,
        action=action,
        kkt_residual=resid,
    )


def evaluate_cell(ds: Dataset, b: Belief, ctx: ContextSpec) -> GridCellMetrics:
    rows = assess_rows(ds, b, ctx)
    denied = rows.decision < 0
    n_denied = int(denied.sum())
    base = ds.n if ctx.average_over == "n" else n_denied
    fn, tn = fn_tn_costs(rows.labels, rows.decision, rows.cost, ctx.average_over)
    return GridCellMetrics(
        belief=b,
        neg_log_prob=mean_neg_log_prob(rows.log_prob),
        avg_cost=_mean(rows.cost[denied], base),
        fn_cost=fn,
        tn_cost=tn,
        denial_count=n_denied,
        max_kkt_residual=float(rows.kkt_residual.max()) if ds.n else 0.0,
    )


def apply_tn_floor(cells, floor):
    if floor < 0:
        raise ValueError("floor must be nonnegative")
    return [c for c in cells if c.tn_cost >= floor]
