"""Dense/standard-form linear programs and a single solve entry point.

All optimization modules in the package express their programs as
``LpProblem`` (maximize <c, x> subject to A x = b, G x >= h, x >= 0) and go
through ``solve_lp``. Feasibility tolerance is 1e-8 and is inherited by every
downstream module; solves are deterministic given identical input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-8
NEG_CLIP = 2e-9  # tiny negative primal entries from the solver are zeroed

Matrix = Union[np.ndarray, sp.spmatrix]


class LpBuildError(ValueError):
    """Inconsistent dimensions or non-finite data in an LP."""


@dataclass(frozen=True, eq=False)
class LpProblem:
    """maximize <c, x>  s.t.  a_eq x = b_eq,  g_ineq x >= h_ineq,  x >= 0."""

    c: np.ndarray
    a_eq: Optional[Matrix] = None
    b_eq: Optional[np.ndarray] = None
    g_ineq: Optional[Matrix] = None
    h_ineq: Optional[np.ndarray] = None

    @property
    def n_vars(self) -> int:
        return int(np.asarray(self.c).shape[0])

    @property
    def n_rows(self) -> int:
        rows = 0
        if self.a_eq is not None:
            rows += self.a_eq.shape[0]
        if self.g_ineq is not None:
            rows += self.g_ineq.shape[0]
        return rows

    def validate(self) -> None:
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1:
            raise LpBuildError("objective must be a vector")
        if not np.all(np.isfinite(c)):
            raise LpBuildError("objective contains non-finite entries")
        n = c.shape[0]
        for mat, rhs, name in ((self.a_eq, self.b_eq, "equality"),
                               (self.g_ineq, self.h_ineq, "inequality")):
            if mat is None and rhs is None:
                continue
            if mat is None or rhs is None:
                raise LpBuildError(f"{name} matrix and rhs must be given together")
            if mat.shape[1] != n or mat.shape[0] != np.asarray(rhs).shape[0]:
                raise LpBuildError(f"{name} block has inconsistent shape {mat.shape}")
            data = mat.data if sp.issparse(mat) else mat
            if not np.all(np.isfinite(data)) or not np.all(np.isfinite(rhs)):
                raise LpBuildError(f"{name} block contains non-finite entries")


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "numerical_failure"
    objective: float
    x: Optional[np.ndarray]
    max_eq_residual: float = 0.0
    max_ineq_violation: float = 0.0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _residuals(p: LpProblem, x: np.ndarray):
    eq = 0.0
    ineq = 0.0
    if p.a_eq is not None:
        eq = float(np.max(np.abs(p.a_eq @ x - p.b_eq)))
    if p.g_ineq is not None:
        ineq = float(max(0.0, np.max(p.h_ineq - p.g_ineq @ x)))
    return eq, ineq


def solve_lp(p: LpProblem, maxiter: Optional[int] = None) -> LpSolution:
    """Solve an ``LpProblem``; deterministic for identical input.

    The default iteration cap is 10 (rows + cols)^2; hitting it yields a
    ``numerical_failure`` status rather than an exception.
    """
    p.validate()
    n = p.n_vars
    if maxiter is None:
        maxiter = 10 * (p.n_rows + n) ** 2
    maxiter = min(maxiter, 2**31 - 1)  # HiGHS stores the cap as int32
    a_ub = h_ub = None
    if p.g_ineq is not None:
        a_ub = -p.g_ineq  # Gx >= h  ->  -Gx <= -h
        h_ub = -np.asarray(p.h_ineq, dtype=float)
    res = linprog(
        c=-np.asarray(p.c, dtype=float),
        A_ub=a_ub,
        b_ub=h_ub,
        A_eq=p.a_eq,
        b_eq=None if p.b_eq is None else np.asarray(p.b_eq, dtype=float),
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": maxiter,
            "presolve": True,
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
        },
    )
    if res.status == 2:
        return LpSolution(status="infeasible", objective=float("nan"), x=None,
                          message=res.message)
    if res.status == 3:
        return LpSolution(status="unbounded", objective=float("inf"), x=None,
                          message=res.message)
    if res.status != 0 or res.x is None:
        return LpSolution(status="numerical_failure", objective=float("nan"), x=None,
                          message=res.message)
    x = np.asarray(res.x, dtype=float)
    x[(x < 0) & (x > -NEG_CLIP)] = 0.0
    eq, ineq = _residuals(p, x)
    if eq > FEAS_TOL or ineq > FEAS_TOL or np.any(x < -1e-10):
        return LpSolution(status="numerical_failure", objective=float(-res.fun), x=x,
                          max_eq_residual=eq, max_ineq_violation=ineq,
                          message=f"residuals exceed {FEAS_TOL}")
    return LpSolution(status="optimal", objective=float(-res.fun), x=x,
                      max_eq_residual=eq, max_ineq_violation=ineq,
                      message=res.message)


def lp_to_text(p: LpProblem) -> str:
    """Plain-text dump for external cross-checking (see docs/formats.md).

    Line 1: ``max`` followed by the objective coefficients; then one line per
    constraint row: the coefficients, a relation token (``=`` or ``>=``), and
    the right-hand side. Variables are implicitly nonnegative.
    """
    def fmt(vec):
        return " ".join(f"{float(v):.17g}" for v in vec)

    lines = ["max " + fmt(p.c)]
    if p.a_eq is not None:
        dense = p.a_eq.toarray() if sp.issparse(p.a_eq) else np.asarray(p.a_eq)
        for row, rhs in zip(dense, p.b_eq):
            lines.append(f"{fmt(row)} = {float(rhs):.17g}")
    if p.g_ineq is not None:
        dense = p.g_ineq.toarray() if sp.issparse(p.g_ineq) else np.asarray(p.g_ineq)
        for row, rhs in zip(dense, p.h_ineq):
            lines.append(f"{fmt(row)} >= {float(rhs):.17g}")
    return "\n".join(lines) + "\n"
