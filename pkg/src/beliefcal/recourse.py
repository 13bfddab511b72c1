"""Minimum-norm counterfactual actions ("recourse") for a linear decision rule.

Three variants:

* ``linear_recourse``   -- min ||c|| s.t. w.(x + c) >= 0
* ``weighted_recourse`` -- min ||D c|| s.t. w.(x + c) >= 0, D diagonal
* ``policy_recourse``   -- min ||c|| s.t. w.(x + c) + beta (x + c)' M (x + c) >= 0,
  with M the posterior covariance.

Coordinates listed in ``frozen`` (the intercept) never move.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .posterior import Posterior, rowdot

MAX_BISECTIONS = 200
HARD_CASE_TOL = 1e-12
HARD_CASE_SHIFT = 1e-9


class RecourseError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RecourseResult:
    cost: float
    action: np.ndarray
    multiplier: Optional[float] = None
    kkt_residual: float = 0.0
    iterations: int = 0
    status: str = "ok"

    @property
    def success(self) -> bool:
        return self.status in ("ok", "feasible")


@dataclass(frozen=True)
class CostWeights:
    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        object.__setattr__(self, "diag", diag)
        if diag.ndim != 1 or not np.all(diag > 0):
            raise ValueError("cost weights must be positive")

    @classmethod
    def actionable(cls, actionable, nonactionable_weight=100.0):
        return cls(np.where(np.asarray(actionable, dtype=bool), 1.0, nonactionable_weight))


def _free_mask(d, frozen):
    if frozen is None:
        return np.ones(d, dtype=bool)
    frozen = np.asarray(frozen, dtype=bool)
    if frozen.shape != (d,):
        raise ValueError("frozen mask has wrong length")
    return ~frozen


# ---------------------------------------------------------------------------
# halfspace recourse


def weighted_costs(w, X, diag=None, frozen=None):
    """Vectorised weighted recourse over the rows of X.

    Returns ``(costs, actions)``. Substituting u = D c turns the problem into a
    Euclidean projection onto {u : w.x + (D^-1 w).u >= 0}.
    """
    w = np.asarray(w, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = w.shape[0]
    inv = np.ones(d) if diag is None else 1.0 / np.asarray(diag, dtype=float)
    v = np.where(_free_mask(d, frozen), inv * w, 0.0)
    vv = v @ v
    margin = rowdot(X, w)
    denied = margin < 0
    if np.any(denied) and not vv > 0:
        raise RecourseError("no recourse exists under null model")
    costs = np.zeros(len(X))
    actions = np.zeros_like(X)
    if np.any(denied):
        costs[denied] = -margin[denied] / np.sqrt(vv)
        # c = D^-1 u*,  u* = -(w.x / ||v||^2) v
        actions[denied] = (-margin[denied] / vv)[:, None] * (inv * v)[None, :]
    return costs, actions


def weighted_recourse(w, x, D: CostWeights, frozen=None) -> RecourseResult:
    costs, actions = weighted_costs(w, np.asarray(x)[None, :], D.diag, frozen)
    action = actions[0]
    resid = abs(float(np.dot(w, x + action))) if costs[0] > 0 else 0.0
    return RecourseResult(float(costs[0]), action, kkt_residual=resid,
                          status="ok" if costs[0] > 0 else "feasible")


def linear_recourse(w, x, frozen=None) -> RecourseResult:
    costs, actions = weighted_costs(w, np.asarray(x)[None, :], None, frozen)
    action = actions[0]
    resid = abs(float(np.dot(w, x + action))) if costs[0] > 0 else 0.0
    return RecourseResult(float(costs[0]), action, kkt_residual=resid,
                          status="ok" if costs[0] > 0 else "feasible")


# ---------------------------------------------------------------------------
# lenient-policy recourse


class PolicySolver:
    """Quadratically constrained projection for a fixed (posterior, beta).

    In the eigenbasis of H = M restricted to the free coordinates, the KKT
    stationarity condition gives c_i(mu) = (mu/2) b_i / (1 - mu beta gamma_i)
    with b = grad g(x). The constraint value h(mu) = g(x + c(mu)) increases on
    (0, 1/(beta gamma_max)), so its unique root there is the global minimiser;
    it is located by bisection.
    """

    def __init__(self, p: Posterior, beta: float, frozen=None):
        if not beta > 0:
            raise ValueError("policy recourse needs beta > 0")
        self.p = p
        self.beta = float(beta)
        self.free = _free_mask(p.d, frozen)
        if np.all(self.free):
            self.gamma = 1.0 / p.eigvals
            self.Q = p.eigvecs
        else:
            M = linalg.cho_solve((p.chol, True), np.eye(p.d), check_finite=False)
            H = M[np.ix_(self.free, self.free)]
            self.gamma, self.Q = linalg.eigh(0.5 * (H + H.T), check_finite=False)
        self.gamma_max = self.gamma.max()
        self.pole = 1.0 / (self.beta * self.gamma_max)
        self.top = self.gamma >= self.gamma_max * (1 - 1e-12)

    def constraint(self, Z):
        """g(z) = w.z + beta z' M z, row-wise."""
        Z = np.atleast_2d(Z)
        return rowdot(Z, self.p.w_post) + self.beta * self.p.covariance_quadratic(Z)

    def gradient(self, Z):
        return self.p.w_post[None, :] + 2 * self.beta * self.p.covariance_apply(Z)

    def to_eigenbasis(self, G):
        return rowdot(G[:, None, self.free], self.Q.T[None, :, :])

    def from_eigenbasis(self, Ct):
        C = np.zeros((len(Ct), self.p.d))
        C[:, self.free] = rowdot(Ct[:, None, :], self.Q[None, :, :])
        return C

    def _h(self, mu, g0, bt):
        t = 0.5 * mu[:, None] / (1.0 - mu[:, None] * self.beta * self.gamma[None, :])
        ct = t * bt
        return g0 + rowdot(bt + self.beta * self.gamma[None, :] * ct, ct), ct

    def _bisect(self, g0, bt):
        k = len(g0)
        lo = np.zeros(k)
        hi = np.full(k, self.pole)
        tol = 1e-12 * (1.0 + np.abs(g0))
        mu = np.full(k, np.nan)
        its = np.zeros(k, dtype=int)
        active = np.ones(k, dtype=bool)
        for it in range(1, MAX_BISECTIONS + 1):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            mid = 0.5 * (lo[idx] + hi[idx])
            h, _ = self._h(mid, g0[idx], bt[idx])
            pos = h >= 0
            hi[idx[pos]] = mid[pos]
            lo[idx[~pos]] = mid[~pos]
            its[idx] = it
            # stop on a feasible point close to the boundary, or a collapsed bracket
            done = (pos & (h <= tol[idx])) | (hi[idx] - lo[idx] <= 4 * np.finfo(float).eps * hi[idx])
            mu[idx[done]] = hi[idx[done]]
            active[idx[done]] = False
        converged = ~active
        mu[active] = hi[active]
        return mu, its, converged

    def solve(self, X):
        """Solve for every row of X; returns a dict of per-row arrays."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k, d = X.shape
        g0 = self.constraint(X)
        cost = np.zeros(k)
        action = np.zeros((k, d))
        mult = np.zeros(k)
        resid = np.zeros(k)
        its = np.zeros(k, dtype=int)
        status = np.full(k, "feasible", dtype=object)

        todo = np.flatnonzero(g0 < 0)
        if todo.size:
            Xd = X[todo].copy()
            bt = self.to_eigenbasis(self.gradient(Xd))
            hard = self._hard(g0[todo], bt)
            if np.any(hard):
                # nudge along the top eigendirection and retry once
                shift = np.zeros(d)
                shift[self.free] = self.Q[:, np.flatnonzero(self.top)[0]]
                Xd[hard] += HARD_CASE_SHIFT * shift
                g0[todo[hard]] = self.constraint(Xd[hard])
                bt[hard] = self.to_eigenbasis(self.gradient(Xd[hard]))
                hard = self._hard(g0[todo], bt)
            mu, n_it, ok = self._bisect(g0[todo], bt)
            _, ct = self._h(mu, g0[todo], bt)
            c = self.from_eigenbasis(ct)
            # a hard-case shift is part of the action
            c += Xd - X[todo]
            action[todo] = c
            cost[todo] = np.linalg.norm(c, axis=1)
            mult[todo] = mu
            its[todo] = n_it
            resid[todo] = self.residual(X[todo], c, mu)
            status[todo] = np.where(ok, "ok", "no-convergence")
            status[todo[hard]] = "hard-case"
        return {"cost": cost, "action": action, "multiplier": mult,
                "kkt_residual": resid, "iterations": its, "status": status}

    def _hard(self, g0, bt):
        pole_part = np.sqrt(np.sum(bt[:, self.top] ** 2, axis=1))
        scale = 1.0 + np.linalg.norm(bt, axis=1)
        candidate = pole_part <= HARD_CASE_TOL * scale
        if not np.any(candidate):
            return candidate
        # h at the pole with the vanishing components dropped; a root before the pole is fine
        rest = ~self.top
        t = 0.5 * self.pole / (1.0 - self.pole * self.beta * self.gamma[rest])
        ct = t * bt[:, rest]
        h_pole = g0 + rowdot(bt[:, rest] + self.beta * self.gamma[rest] * ct, ct)
        return candidate & (h_pole < 0)

    def residual(self, X, C, mu):
        """Stationarity + boundary residual of actions C at multipliers mu."""
        X = np.atleast_2d(X)
        C = np.atleast_2d(C)
        Z = X + C
        grad = self.gradient(Z)
        station = 2 * C - mu[:, None] * grad
        station[:, ~self.free] = C[:, ~self.free]
        return np.max(np.abs(station), axis=1) + np.abs(self.constraint(Z))


def policy_recourse(p: Posterior, x, beta: float, frozen=None) -> RecourseResult:
    solver = PolicySolver(p, beta, frozen)
    out = solver.solve(np.asarray(x, dtype=float)[None, :])
    status = out["status"][0]
    if status == "hard-case":
        raise RecourseError(
            f"hard-case failure: gradient orthogonal to top covariance direction "
            f"(residual {out['kkt_residual'][0]:.3g})"
        )
    if status == "no-convergence":
        raise RecourseError(f"bisection did not converge in {MAX_BISECTIONS} steps")
    return RecourseResult(
        cost=float(out["cost"][0]),
        action=out["action"][0],
        multiplier=float(out["multiplier"][0]),
        kkt_residual=float(out["kkt_residual"][0]),
        iterations=int(out["iterations"][0]),
        status=status,
    )


def verify_kkt(p: Posterior, x, beta: float, r: RecourseResult, frozen=None) -> float:
    """Recompute the KKT residual of a policy-recourse result from scratch."""
    if r.cost == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    c = np.asarray(r.action, dtype=float)
    z = x + c
    M = linalg.cho_solve((p.chol, True), np.eye(p.d))
    grad = p.w_post + 2 * beta * (M @ z)
    free = _free_mask(p.d, frozen)
    station = np.where(free, 2 * c - r.multiplier * grad, c)
    boundary = float(p.w_post @ z + beta * z @ M @ z)
    return float(np.max(np.abs(station)) + abs(boundary))
