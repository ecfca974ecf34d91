"""Exact persuasion LPs: active-facet program, risk-neutral baseline, re-evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (
    JointMass,
    PersuasionInstance,
    SignalingScheme,
    scheme_from_joint_mass,
)
from .cvar import FacetSet, best_response_set, facet_set, ic_regret
from .lpcore import LpProblem, LpSolution, solve_lp

IC_CHECK_TOL = 1e-7  # looser than the 1e-8 LP residual bound, absorbs accumulation
SPARSE_ENTRY_THRESHOLD = 2_000_000


class SolverFailure(RuntimeError):
    """The LP backend did not return an optimal solution."""


class IcVerificationError(RuntimeError):
    """A solved scheme failed the post-hoc incentive check (facet/LP bug)."""


@dataclass(frozen=True)
class ActiveFacetIndex:
    """Variable layout of the active-facet LP: q[(a, l), w] -> column t*m + w."""

    types: tuple  # ordered (action, facet) pairs
    vectors: tuple  # coefficient vector per type, aligned with ``types``
    n_states: int

    def var(self, t: int, w: int) -> int:
        return t * self.n_states + w


def _ic_rows(index: ActiveFacetIndex, sparse: bool):
    """Rows sum_w q[t, w] (c_t(w) - c_t'(w)) >= 0 for all ordered pairs t != t'."""
    m = index.n_states
    ntypes = len(index.types)
    n_vars = ntypes * m
    n_rows = ntypes * (ntypes - 1)
    vecs = np.asarray(index.vectors)
    if not sparse:
        g = np.zeros((n_rows, n_vars))
        r = 0
        for t in range(ntypes):
            for t2 in range(ntypes):
                if t2 == t:
                    continue
                g[r, t * m:(t + 1) * m] = vecs[t] - vecs[t2]
                r += 1
        return g, np.zeros(n_rows)
    data = np.empty(n_rows * m)
    rows = np.repeat(np.arange(n_rows), m)
    cols = np.empty(n_rows * m, dtype=np.int64)
    r = 0
    for t in range(ntypes):
        base = np.arange(t * m, (t + 1) * m)
        for t2 in range(ntypes):
            if t2 == t:
                continue
            data[r * m:(r + 1) * m] = vecs[t] - vecs[t2]
            cols[r * m:(r + 1) * m] = base
            r += 1
    g = sp.csr_matrix((data, (rows, cols)), shape=(n_rows, n_vars))
    return g, np.zeros(n_rows)


def _build_lp_from_facets(inst: PersuasionInstance, fs: FacetSet):
    m = inst.n_states
    index = ActiveFacetIndex(types=tuple(fs.pairs()),
                             vectors=tuple(fs.vectors()),
                             n_states=m)
    ntypes = len(index.types)
    n_vars = ntypes * m
    c = np.empty(n_vars)
    for t, (a, _) in enumerate(index.types):
        c[t * m:(t + 1) * m] = inst.sender_payoff[:, a]
    # Bayes plausibility: per state, the masses over all types sum to the prior.
    a_eq = np.tile(np.eye(m), ntypes)
    b_eq = np.array(inst.prior)
    sparse = ntypes * (ntypes - 1) * n_vars > SPARSE_ENTRY_THRESHOLD
    if ntypes > 1:
        g, h = _ic_rows(index, sparse)
    else:
        g, h = None, None
    return LpProblem(c=c, a_eq=a_eq, b_eq=b_eq, g_ineq=g, h_ineq=h), index


def build_active_facet_lp(inst: PersuasionInstance):
    """Joint-mass LP over refined recommendation types (action, active facet).

    Variables q[a,l,w] >= 0 (one block of m per type); the objective is the
    sender payoff; m equality rows enforce Bayes plausibility; L(L-1)
    inequality rows make the labeled facet dominate every other action-facet
    pair. Tautological self-comparisons are omitted. Returns the problem and
    the variable index map.
    """
    fs = facet_set(inst)  # rejects succinct clique specs
    return _build_lp_from_facets(inst, fs)


def _extract(inst: PersuasionInstance, index: ActiveFacetIndex, x: np.ndarray):
    m = inst.n_states
    mass = {}
    for t, (a, l) in enumerate(index.types):
        vec = np.clip(x[t * m:(t + 1) * m], 0.0, None)
        mass[(a, l)] = vec
    joint = JointMass(mass=mass)
    scheme = scheme_from_joint_mass(inst, joint)
    return joint, scheme


@dataclass(frozen=True)
class ExactResult:
    value: float
    scheme: SignalingScheme
    joint: JointMass
    solution: LpSolution


def solve_exact(inst: PersuasionInstance) -> ExactResult:
    """Optimal incentive-compatible persuasion value for a max-affine risk.

    Solves the active-facet LP, extracts one signal per positive-mass type,
    and verifies every supported signal has IC regret at most 1e-7 against
    the full risk functional. Facet tags on the signals record the active
    piece.
    """
    problem, index = build_active_facet_lp(inst)
    sol = solve_lp(problem)
    if not sol.optimal:
        raise SolverFailure(f"active-facet LP not solved: {sol.status} ({sol.message})")
    joint, scheme = _extract(inst, index, sol.x)
    for s in scheme:
        reg = ic_regret(inst, s.posterior, s.action)
        if reg > IC_CHECK_TOL:
            raise IcVerificationError(
                f"signal (a={s.action}, l={s.facet}) has IC regret {reg:.3e} > {IC_CHECK_TOL}")
    return ExactResult(value=sol.objective, scheme=scheme, joint=joint, solution=sol)


@dataclass(frozen=True)
class RiskNeutralResult:
    value: float
    scheme: SignalingScheme
    solution: LpSolution


def risk_neutral_solve(inst: PersuasionInstance) -> RiskNeutralResult:
    """Classical expected-utility persuasion optimum, ignoring the risk spec.

    Direct-recommendation LP with one type per action: the expected-utility
    IC rows are the active-facet rows for the single affine piece u(., a).
    """
    fs = FacetSet(facets=tuple((inst.receiver_payoff[:, a],)
                               for a in range(inst.n_actions)),
                  provenance="user-listed")
    problem, index = _build_lp_from_facets(inst, fs)
    sol = solve_lp(problem)
    if not sol.optimal:
        raise SolverFailure(f"risk-neutral LP not solved: {sol.status} ({sol.message})")
    _, scheme = _extract(inst, index, sol.x)
    return RiskNeutralResult(value=sol.objective, scheme=scheme, solution=sol)


@dataclass(frozen=True)
class ReEvaluation:
    value: float
    max_regret: float
    per_signal: tuple  # (probability, original_action, chosen_action, original_regret)


def evaluate_under_cvar(inst: PersuasionInstance, scheme: SignalingScheme) -> ReEvaluation:
    """Re-evaluate a scheme against the instance's own (risk-conscious) receiver.

    Each signal's recommendation is replaced by the receiver's best response
    at the signal posterior, breaking ties in the sender's favor, and the
    sender value is recomputed. The reported regrets refer to the original
    recommendations.
    """
    total = 0.0
    max_regret = 0.0
    rows = []
    for s in scheme:
        br = sorted(best_response_set(inst, s.posterior))
        sender_vals = [float(s.posterior @ inst.sender_payoff[:, a]) for a in br]
        chosen = br[int(np.argmax(sender_vals))]
        total += s.probability * max(sender_vals)
        reg = ic_regret(inst, s.posterior, s.action)
        max_regret = max(max_regret, reg)
        rows.append((s.probability, s.action, chosen, reg))
    return ReEvaluation(value=total, max_regret=max_regret, per_signal=tuple(rows))
