"""CVaR evaluation, its finite max-affine representation, and the binary-state toolkit."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    CliqueRisk,
    CvarRisk,
    PersuasionInstance,
    PolyhedralRisk,
    Signal,
    SignalingScheme,
)

TIE_TOL = 1e-9
CLIQUE_VERTEX_CAP = 20


class NoCrossingError(ValueError):
    """The two expected-utility lines do not cross inside (0, 1)."""


class CliqueCapError(RuntimeError):
    """Brute-force clique evaluation refused above the vertex cap."""


def cvar_value(mu: np.ndarray, u_vec: np.ndarray, r: float) -> float:
    """CVaR at level ``r`` of the payoff vector ``u_vec`` under distribution ``mu``.

    Uses the closed breakpoint form: the variational supremum over b is
    attained at one of the distinct payoff values v_k, where it equals
    v_k - (1/r) * sum_w mu(w) (v_k - u(w))^+.
    """
    if not (0.0 < r <= 1.0):
        raise ValueError(f"CVaR level r={r!r} outside (0, 1]")
    mu = np.asarray(mu, dtype=float)
    u_vec = np.asarray(u_vec, dtype=float)
    vs = np.unique(u_vec)
    shortfall = np.clip(vs[:, None] - u_vec[None, :], 0.0, None)  # (q, m)
    candidates = vs - (shortfall @ mu) / r
    return float(candidates.max())


def cvar_facets(u_vec: np.ndarray, r: float) -> list:
    """Affine pieces realizing CVaR_r as a max over <c_k, mu>.

    One coefficient vector per distinct payoff value (ascending):
    c_k(w) = v_k - (1/r) (v_k - u(w))^+. At most m pieces; if
    max|u| <= C then ||c_k||_inf <= C (1 + 2/r).
    """
    if not (0.0 < r <= 1.0):
        raise ValueError(f"CVaR level r={r!r} outside (0, 1]")
    u_vec = np.asarray(u_vec, dtype=float)
    out = []
    for v in np.unique(u_vec):
        out.append(v - np.clip(v - u_vec, 0.0, None) / r)
    return out


@dataclass(frozen=True)
class FacetSet:
    """Per-action affine pieces of a max-affine risk, with provenance."""

    facets: tuple  # per action: tuple of length-m coefficient vectors
    provenance: str  # "cvar-derived" | "user-listed" | "clique-expanded"

    @property
    def total(self) -> int:
        return sum(len(fs) for fs in self.facets)

    def pairs(self) -> list:
        """All (action, facet-index) labels in deterministic order."""
        return [(a, l) for a, fs in enumerate(self.facets) for l in range(len(fs))]

    def vectors(self) -> np.ndarray:
        """All coefficient vectors stacked in ``pairs()`` order."""
        return np.array([c for fs in self.facets for c in fs])


def _dedup_vectors(vectors) -> list:
    seen = []
    for v in vectors:
        if not any(np.array_equal(v, w) for w in seen):
            seen.append(v)
    return seen


def facet_set(inst: PersuasionInstance, dedup: bool = True) -> FacetSet:
    """Max-affine representation of the instance's risk.

    For CVaR the pieces are derived from the payoff table; for explicit
    polyhedral risks they are taken as listed. Duplicate coefficient vectors
    within an action are removed when ``dedup`` is set (the max is unchanged).
    Succinct clique risks are rejected: expand them first
    (see ``hardness.expand_clique_facets``).
    """
    risk = inst.risk
    if isinstance(risk, CvarRisk):
        per_action = [cvar_facets(inst.receiver_payoff[:, a], risk.r)
                      for a in range(inst.n_actions)]
        tag = "cvar-derived"
    elif isinstance(risk, PolyhedralRisk):
        per_action = [list(fs) for fs in risk.facets]
        tag = risk.provenance
    else:
        raise TypeError("succinct clique risk has no listed facets; expand it first")
    if dedup:
        per_action = [_dedup_vectors(fs) for fs in per_action]
    return FacetSet(facets=tuple(tuple(fs) for fs in per_action), provenance=tag)


def _clique_value(risk: CliqueRisk, mu: np.ndarray, vertex_cap: int) -> float:
    n = mu.shape[0]
    if n > vertex_cap:
        raise CliqueCapError(f"clique evaluation capped at {vertex_cap} vertices, got {n}")
    k = risk.k_clique
    best = None
    for subset in itertools.combinations(range(n), k):
        if all(frozenset(p) in risk.edges for p in itertools.combinations(subset, 2)):
            val = float(mu[list(subset)].sum())
            if best is None or val > best:
                best = val
    return 0.0 if best is None else best  # empty clique family is worth 0


def rho(inst: PersuasionInstance, mu: np.ndarray, action: int,
        vertex_cap: int = CLIQUE_VERTEX_CAP) -> float:
    """Receiver's risk value of ``action`` at posterior ``mu``."""
    mu = np.asarray(mu, dtype=float)
    risk = inst.risk
    if isinstance(risk, CvarRisk):
        return cvar_value(mu, inst.receiver_payoff[:, action], risk.r)
    if isinstance(risk, PolyhedralRisk):
        return float(max(float(np.dot(c, mu)) for c in risk.facets[action]))
    if isinstance(risk, CliqueRisk):
        if action == 0:  # a_T: best K-clique mass
            return _clique_value(risk, mu, vertex_cap)
        return 1.0  # a_0 is worth 1 everywhere
    raise TypeError(f"unknown risk spec {type(risk).__name__}")


def rho_all(inst: PersuasionInstance, mu: np.ndarray) -> np.ndarray:
    """Vector of rho(mu, a) over all actions."""
    return np.array([rho(inst, mu, a) for a in range(inst.n_actions)])


def best_response_set(inst: PersuasionInstance, mu: np.ndarray) -> set:
    """All actions within TIE_TOL of the receiver's best risk value."""
    vals = rho_all(inst, mu)
    return set(np.flatnonzero(vals >= vals.max() - TIE_TOL).tolist())


def ic_regret(inst: PersuasionInstance, posterior: np.ndarray, action: int) -> float:
    """Best-response gap max_a' rho(mu, a') - rho(mu, action); zero iff weak BR."""
    vals = rho_all(inst, posterior)
    return float(vals.max() - vals[action])


def ic_margin(inst: PersuasionInstance, posterior: np.ndarray, action: int) -> float:
    """Gap to the best competing action; positive iff strict best response."""
    if inst.n_actions < 2:
        raise ValueError("IC margin undefined with a single action")
    vals = rho_all(inst, posterior)
    others = np.delete(vals, action)
    return float(vals[action] - others.max())


def risk_premium(inst: PersuasionInstance, mu: np.ndarray, action: int) -> float:
    """Expected payoff minus CVaR of ``action`` at ``mu`` (nonnegative for r <= 1)."""
    if not isinstance(inst.risk, CvarRisk):
        raise TypeError("risk premium defined only for CVaR risk specs")
    mu = np.asarray(mu, dtype=float)
    u = inst.receiver_payoff[:, action]
    return float(mu @ u) - cvar_value(mu, u, inst.risk.r)


# ---------------------------------------------------------------------------
# Binary state space. Beliefs are scalars mu = P(w1) where w1 is the SECOND
# listed state; the posterior vector is (1 - mu, mu).
# ---------------------------------------------------------------------------

def _facet_lines(inst: PersuasionInstance):
    """Per action the affine pieces of rho as (intercept, slope) in mu = P(w1)."""
    fs = facet_set(inst)
    lines = []
    for a in range(inst.n_actions):
        lines.append([(float(c[0]), float(c[1] - c[0])) for c in fs.facets[a]])
    return lines


def _rho_scalar(lines_a, mu: float) -> float:
    return max(b + s * mu for (b, s) in lines_a)


@dataclass(frozen=True)
class Thresholds2x2:
    mu_eu: float
    mu_cvar: float
    case: str  # "High-Belief" | "Low-Belief" | "Equal"


def thresholds_2x2(inst: PersuasionInstance) -> Thresholds2x2:
    """Risk-neutral and CVaR indifference thresholds for a 2x2 CVaR instance.

    mu_eu solves E_mu[u(a1)] = E_mu[u(a0)], mu_cvar solves
    rho(mu, a1) = rho(mu, a0); both as functions of mu = P(second state).
    Raises NoCrossingError when one action dominates on [0, 1].
    """
    if inst.n_states != 2 or inst.n_actions != 2:
        raise ValueError("thresholds_2x2 requires a 2x2 instance")
    if not isinstance(inst.risk, CvarRisk):
        raise TypeError("thresholds_2x2 requires a CVaR risk spec")
    u = inst.receiver_payoff
    # Expected-utility difference a1 - a0 is affine in mu.
    d0 = float(u[0, 1] - u[0, 0])
    d1 = float(u[1, 1] - u[1, 0])
    slope = d1 - d0
    if abs(slope) < 1e-15 or not (0.0 < -d0 / slope < 1.0):
        raise NoCrossingError("expected-utility lines do not cross in (0, 1)")
    mu_eu = -d0 / slope

    lines = _facet_lines(inst)

    def diff(mu: float) -> float:
        return _rho_scalar(lines[1], mu) - _rho_scalar(lines[0], mu)

    # Piecewise-linear root: split [0,1] at every pairwise crossing of facet
    # lines, then solve the affine piece containing a sign change exactly.
    knots = {0.0, 1.0}
    all_lines = lines[0] + lines[1]
    for (b1, s1), (b2, s2) in itertools.combinations(all_lines, 2):
        if abs(s1 - s2) > 1e-15:
            x = (b2 - b1) / (s1 - s2)
            if 0.0 < x < 1.0:
                knots.add(x)
    xs = sorted(knots)
    mu_cvar = None
    for lo, hi in zip(xs[:-1], xs[1:]):
        flo, fhi = diff(lo), diff(hi)
        if flo == 0.0:
            mu_cvar = lo
            break
        if flo * fhi < 0:
            mu_cvar = lo - flo * (hi - lo) / (fhi - flo)
            break
        if fhi == 0.0 and hi == xs[-1]:
            mu_cvar = hi
            break
    if mu_cvar is None:
        raise NoCrossingError("one action dominates under CVaR on [0, 1]")

    p1 = risk_premium(inst, np.array([1 - mu_eu, mu_eu]), 1)
    p0 = risk_premium(inst, np.array([1 - mu_eu, mu_eu]), 0)
    if abs(p1 - p0) <= TIE_TOL:
        case = "Equal"
    elif slope > 0:
        case = "High-Belief"
    else:
        case = "Low-Belief"
    return Thresholds2x2(mu_eu=float(mu_eu), mu_cvar=float(mu_cvar), case=case)


@dataclass(frozen=True)
class ConcavifyResult:
    value: float
    scheme: SignalingScheme


def concavify_2x2(inst: PersuasionInstance) -> ConcavifyResult:
    """Exact optimum for a binary state space via concave closure.

    Builds the receiver's best-response segmentation of [0, 1] from the
    pairwise crossings of the risk facet lines, evaluates the sender's
    step value with sender-favorable tie-breaking, and supports the prior
    with at most two posteriors. Works for CVaR and listed polyhedral risks
    with any number of actions.
    """
    if inst.n_states != 2:
        raise ValueError("concavify_2x2 requires a binary state space")
    mu0 = float(inst.prior[1])
    lines = _facet_lines(inst)
    v = inst.sender_payoff  # sender value of action a at mu: affine in mu

    def sender_at(mu: float, a: int) -> float:
        return float((1 - mu) * v[0, a] + mu * v[1, a])

    knots = {0.0, 1.0, mu0}
    all_lines = [ln for lns in lines for ln in lns]
    for (b1, s1), (b2, s2) in itertools.combinations(all_lines, 2):
        if abs(s1 - s2) > 1e-15:
            x = (b2 - b1) / (s1 - s2)
            if 0.0 < x < 1.0:
                knots.add(x)
    # Sender-line crossings too: inside a segment the sender-best tied action
    # must not change, so the step value stays affine between knots.
    for a, b in itertools.combinations(range(inst.n_actions), 2):
        sa, sb = v[1, a] - v[0, a], v[1, b] - v[0, b]
        if abs(sa - sb) > 1e-15:
            x = (v[0, b] - v[0, a]) / (sa - sb)
            if 0.0 < x < 1.0:
                knots.add(x)
    points = sorted(knots)

    def step_value(mu: float):
        """Sender-favorable value and chosen action at belief mu."""
        vals = np.array([_rho_scalar(lines[a], mu) for a in range(inst.n_actions)])
        best = vals.max()
        candidates = np.flatnonzero(vals >= best - TIE_TOL)
        sv = np.array([sender_at(mu, a) for a in candidates])
        pick = candidates[int(np.argmax(sv))]  # argmax takes the lowest index on ties
        return float(sv.max()), int(pick)

    vals_actions = [step_value(x) for x in points]
    best_val, best_action = step_value(mu0)
    best_pair = None
    for i, x in enumerate(points):
        if x > mu0:
            break
        for j in range(len(points) - 1, -1, -1):
            y = points[j]
            if y < mu0 or y == x:
                continue
            if not (x <= mu0 <= y):
                continue
            t = (mu0 - x) / (y - x)
            chord = (1 - t) * vals_actions[i][0] + t * vals_actions[j][0]
            if chord > best_val + 1e-15:
                best_val = chord
                best_pair = (i, j, t)
    if best_pair is None:
        scheme = SignalingScheme(signals=(
            Signal(probability=1.0, posterior=np.array([1 - mu0, mu0]),
                   action=best_action),))
        return ConcavifyResult(value=float(best_val), scheme=scheme)
    i, j, t = best_pair
    x, y = points[i], points[j]
    signals = []
    if 1 - t > 1e-12:
        signals.append(Signal(probability=1 - t, posterior=np.array([1 - x, x]),
                              action=vals_actions[i][1]))
    if t > 1e-12:
        signals.append(Signal(probability=t, posterior=np.array([1 - y, y]),
                              action=vals_actions[j][1]))
    return ConcavifyResult(value=float(best_val), scheme=SignalingScheme(signals=tuple(signals)))
