"""Brute-force verifiers: dense-grid concavification and scheme auditing.

These recompute everything from core and cvar primitives only, independently
of how a scheme was produced, and are what the acceptance suite trusts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import MASS_TOL, PersuasionInstance, Signal, SignalingScheme, sender_value
from .cvar import best_response_set, ic_margin, ic_regret, rho_all
from .approx import enumerate_grid
from .lpcore import LpProblem, solve_lp

GRID_OPT_STATE_CAP = 3


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridOptResult:
    lower_bound_value: float
    scheme: SignalingScheme


def grid_opt(inst: PersuasionInstance, grid_resolution: int,
             min_margin: Optional[float] = None) -> GridOptResult:
    """Certified exact-IC lower bound by searching schemes supported on a grid.

    Evaluates the sender-favorable pointwise value W(mu) at every
    grid_resolution-uniform posterior, restricted to EXACT best responses
    (and, if ``min_margin`` is set, to recommendations with at least that IC
    margin), then picks Bayes-plausible weights by a small LP. The value
    converges to the optimum from below as the resolution grows.
    """
    if inst.n_states > GRID_OPT_STATE_CAP:
        raise OracleError(f"grid_opt supports at most {GRID_OPT_STATE_CAP} states")
    grid = enumerate_grid(inst.n_states, grid_resolution)
    n_pts = grid.shape[0]
    w = np.full(n_pts, -np.inf)
    chosen = np.full(n_pts, -1, dtype=int)
    for i in range(n_pts):
        mu = grid[i]
        vals = rho_all(inst, mu)
        candidates = sorted(best_response_set(inst, mu))
        if min_margin is not None and inst.n_actions >= 2:
            candidates = [a for a in candidates
                          if vals[a] - np.delete(vals, a).max() >= min_margin]
        if not candidates:
            continue
        sv = [float(mu @ inst.sender_payoff[:, a]) for a in candidates]
        j = int(np.argmax(sv))  # lowest index wins sender ties
        w[i] = sv[j]
        chosen[i] = candidates[j]
    keep = np.flatnonzero(np.isfinite(w))
    if keep.size == 0:
        raise OracleError("no grid point admits a qualifying recommendation")
    # Weights p >= 0 with sum_p p * mu_bar = prior, maximizing sum p W.
    problem = LpProblem(c=w[keep], a_eq=grid[keep].T.copy(), b_eq=np.array(inst.prior))
    sol = solve_lp(problem)
    if not sol.optimal:
        raise OracleError(f"grid-oracle LP not solved: {sol.status}")
    signals = []
    for pos, i in enumerate(keep):
        p = float(sol.x[pos])
        if p <= MASS_TOL:
            continue
        signals.append(Signal(probability=p, posterior=grid[i], action=int(chosen[i])))
    return GridOptResult(lower_bound_value=sol.objective,
                         scheme=SignalingScheme(signals=tuple(signals)))


@dataclass(frozen=True)
class AuditReport:
    bayes_residual: float
    value: float
    regrets: tuple
    margins: Optional[tuple]

    @property
    def max_regret(self) -> float:
        return max(self.regrets)


def audit_scheme(inst: PersuasionInstance, scheme: SignalingScheme) -> AuditReport:
    """Recompute Bayes residual, sender value, and per-signal regrets/margins."""
    if len(scheme) == 0:
        raise OracleError("cannot audit an empty scheme")
    resid = float(np.max(np.abs(scheme.mean_posterior() - inst.prior)))
    value = sender_value(inst, scheme)
    regrets = tuple(ic_regret(inst, s.posterior, s.action) for s in scheme)
    margins = None
    if inst.n_actions >= 2:
        margins = tuple(ic_margin(inst, s.posterior, s.action) for s in scheme)
    return AuditReport(bayes_residual=resid, value=value, regrets=regrets,
                       margins=margins)
