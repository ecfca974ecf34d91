"""Instance and scheme data model: priors, payoffs, risk specs, signaling schemes.

Conventions used throughout the package:

* payoff matrices are row-per-state, column-per-action;
* probability vectors sum to 1 within ``SUM_TOL``; positivity cutoffs use
  ``MASS_TOL``;
* entropy is reported in nats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

SUM_TOL = 1e-9
STRICT_SUM_TOL = 1e-12
MASS_TOL = 1e-12


class MassMismatchError(ValueError):
    """Joint mass does not total 1 within tolerance."""


@dataclass(frozen=True)
class CvarRisk:
    """Receiver evaluates each action by CVaR of its payoff at level ``r``."""

    r: float


@dataclass(frozen=True, eq=False)
class PolyhedralRisk:
    """Explicitly listed max-affine risk: rho(mu, a) = max_l <facets[a][l], mu>."""

    facets: tuple  # per action: tuple of length-m coefficient vectors
    provenance: str = "user-listed"  # or "clique-expanded"

    def __post_init__(self):
        frozen = tuple(
            tuple(np.asarray(v, dtype=float) for v in action_facets)
            for action_facets in self.facets
        )
        object.__setattr__(self, "facets", frozen)


@dataclass(frozen=True)
class CliqueRisk:
    """Succinct max-affine risk indexed by the K-cliques of a graph.

    Valid only with exactly two actions ordered (a_T, a_0): the target action
    a_T has one hidden affine piece per K-clique, the fallback a_0 is worth 1
    at every posterior.
    """

    edges: frozenset  # frozenset of frozenset({i, j}) pairs
    k_clique: int

    @staticmethod
    def from_edge_list(edges: Iterable[Sequence[int]], k_clique: int) -> "CliqueRisk":
        normalized = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            if i < 0 or j < 0:
                raise ValueError(f"negative vertex in edge ({i},{j})")
            normalized.add(frozenset((i, j)))
        return CliqueRisk(edges=frozenset(normalized), k_clique=int(k_clique))

    def edge_list(self) -> list:
        return sorted(sorted(e) for e in self.edges)


RiskSpec = Union[CvarRisk, PolyhedralRisk, CliqueRisk]


@dataclass(frozen=True, eq=False)
class PersuasionInstance:
    """A finite persuasion problem: states, actions, prior, payoffs, risk spec."""

    states: tuple
    actions: tuple
    prior: np.ndarray
    receiver_payoff: np.ndarray  # m x n
    sender_payoff: np.ndarray  # m x n
    risk: RiskSpec
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        for name in ("prior", "receiver_payoff", "sender_payoff"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)


def validate_instance(inst: PersuasionInstance) -> list:
    """Return every invariant violation as a human-readable string.

    An empty list means the instance is well formed. Violations are data,
    not exceptions: callers decide whether to abort.
    """
    v = []
    m, n = inst.n_states, inst.n_actions
    if m < 1:
        v.append("instance must have at least one state")
    if n < 1:
        v.append("instance must have at least one action")
    if inst.prior.shape != (m,):
        v.append(f"prior has shape {inst.prior.shape}, expected ({m},)")
    else:
        s = float(inst.prior.sum())
        if abs(s - 1.0) > STRICT_SUM_TOL:
            v.append(f"prior sums to {s!r}, not 1 within {STRICT_SUM_TOL}")
        if np.any(inst.prior <= 0):
            v.append("prior must be strictly positive in every entry (interior prior)")
    for name, mat in (("receiver_payoff", inst.receiver_payoff),
                      ("sender_payoff", inst.sender_payoff)):
        if mat.shape != (m, n):
            v.append(f"{name} has shape {mat.shape}, expected ({m}, {n})")
        elif not np.all(np.isfinite(mat)):
            v.append(f"{name} contains non-finite entries")
    risk = inst.risk
    if isinstance(risk, CvarRisk):
        if not (0.0 < risk.r <= 1.0):
            v.append(f"CVaR level r={risk.r!r} outside (0, 1]")
    elif isinstance(risk, PolyhedralRisk):
        if len(risk.facets) != n:
            v.append(f"polyhedral risk lists facets for {len(risk.facets)} actions, expected {n}")
        else:
            for a, fs in enumerate(risk.facets):
                if len(fs) < 1:
                    v.append(f"action {a} has no facet")
                for l, c in enumerate(fs):
                    if np.asarray(c).shape != (m,):
                        v.append(f"facet ({a},{l}) has length {np.asarray(c).size}, expected {m}")
    elif isinstance(risk, CliqueRisk):
        if n != 2:
            v.append("clique risk requires exactly 2 actions ordered (a_T, a_0)")
        if risk.k_clique < 1:
            v.append(f"clique size k={risk.k_clique} must be positive")
        vertices = {u for e in risk.edges for u in e}
        if vertices and max(vertices) >= m:
            v.append(f"edge vertex {max(vertices)} outside state range 0..{m - 1}")
    else:
        v.append(f"unknown risk spec {type(risk).__name__}")
    return v


@dataclass(frozen=True, eq=False)
class Signal:
    """One signal realization: (probability, posterior, recommended action)."""

    probability: float
    posterior: np.ndarray
    action: int
    facet: Optional[int] = None

    def __post_init__(self):
        arr = np.array(self.posterior, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "posterior", arr)


@dataclass(frozen=True)
class SignalingScheme:
    signals: tuple

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))

    def __len__(self) -> int:
        return len(self.signals)

    def __iter__(self):
        return iter(self.signals)

    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.signals])

    def posteriors(self) -> np.ndarray:
        return np.array([s.posterior for s in self.signals])

    def mean_posterior(self) -> np.ndarray:
        return self.probabilities() @ self.posteriors()

    def validate(self, inst: PersuasionInstance) -> list:
        """Check probability normalization and Bayes plausibility against ``inst``."""
        v = []
        if len(self.signals) == 0:
            v.append("scheme has no signals")
            return v
        p = self.probabilities()
        if np.any(p < -MASS_TOL) or np.any(p > 1 + SUM_TOL):
            v.append("signal probabilities outside [0, 1]")
        if abs(p.sum() - 1.0) > SUM_TOL:
            v.append(f"signal probabilities sum to {p.sum()!r}, not 1 within {SUM_TOL}")
        for i, s in enumerate(self.signals):
            if s.posterior.shape != (inst.n_states,):
                v.append(f"signal {i} posterior has wrong length")
                return v
            if abs(s.posterior.sum() - 1.0) > SUM_TOL:
                v.append(f"signal {i} posterior sums to {s.posterior.sum()!r}")
            if np.any(s.posterior < -MASS_TOL):
                v.append(f"signal {i} posterior has negative entries")
            if not (0 <= s.action < inst.n_actions):
                v.append(f"signal {i} recommends unknown action {s.action}")
        resid = np.max(np.abs(self.mean_posterior() - inst.prior))
        if resid > SUM_TOL:
            v.append(f"Bayes plausibility violated: max residual {resid!r} > {SUM_TOL}")
        return v


@dataclass(frozen=True)
class JointMass:
    """Joint mass q[(action, facet)] -> length-m vector over states."""

    mass: dict

    def types(self) -> list:
        return sorted(self.mass.keys())

    def total_by_state(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        for vec in self.mass.values():
            out += np.asarray(vec, dtype=float)
        return out


def scheme_from_joint_mass(inst: PersuasionInstance, q: JointMass) -> SignalingScheme:
    """Turn a Bayes-plausible joint mass into a signaling scheme.

    Each type (a, l) with mass above ``MASS_TOL`` becomes one signal with
    probability lambda = sum_w q[a,l,w] and the normalized posterior; the
    facet tag is preserved. Zero-mass types are dropped.
    """
    total = float(sum(np.sum(v) for v in q.mass.values()))
    if abs(total - 1.0) > SUM_TOL:
        raise MassMismatchError(f"joint mass totals {total!r}, expected 1 within {SUM_TOL}")
    signals = []
    for (a, l) in q.types():
        vec = np.asarray(q.mass[(a, l)], dtype=float)
        lam = float(vec.sum())
        if lam <= MASS_TOL:
            continue
        signals.append(Signal(probability=lam, posterior=vec / lam, action=a, facet=l))
    return SignalingScheme(signals=tuple(signals))


def joint_mass_from_scheme(scheme: SignalingScheme) -> JointMass:
    """Re-aggregate a scheme into joint masses q[a,l,w] = p_s * mu_s(w)."""
    mass: dict = {}
    for s in scheme:
        key = (s.action, s.facet if s.facet is not None else 0)
        vec = s.probability * s.posterior
        mass[key] = mass.get(key, 0) + vec
    return JointMass(mass=mass)


def sender_value(inst: PersuasionInstance, scheme: SignalingScheme) -> float:
    """Sender's expected payoff when each signal's own recommendation is followed."""
    total = 0.0
    for s in scheme:
        if s.posterior.shape != (inst.n_states,):
            raise ValueError("posterior length does not match instance")
        total += s.probability * float(s.posterior @ inst.sender_payoff[:, s.action])
    return total


def shannon_entropy(mu: np.ndarray) -> float:
    """Entropy of a distribution in nats, with 0*log(0) = 0."""
    mu = np.asarray(mu, dtype=float)
    pos = mu[mu > 0]
    return float(-(pos * np.log(pos)).sum())


def scheme_entropy(scheme: SignalingScheme) -> float:
    """Mean posterior entropy sum_s P(s) H(mu_s), in nats."""
    return float(sum(s.probability * shannon_entropy(s.posterior) for s in scheme))


# ---------------------------------------------------------------------------
# JSON interface. Field names are part of the stable external format, see
# docs/formats.md.
# ---------------------------------------------------------------------------

def risk_to_json(risk: RiskSpec) -> dict:
    if isinstance(risk, CvarRisk):
        return {"type": "cvar", "r": risk.r}
    if isinstance(risk, PolyhedralRisk):
        return {"type": "polyhedral",
                "facets": [[list(map(float, c)) for c in fs] for fs in risk.facets]}
    if isinstance(risk, CliqueRisk):
        return {"type": "clique", "edges": risk.edge_list(), "k": risk.k_clique}
    raise TypeError(f"unknown risk spec {type(risk).__name__}")


def risk_from_json(obj: dict) -> RiskSpec:
    kind = obj.get("type")
    if kind == "cvar":
        return CvarRisk(r=float(obj["r"]))
    if kind == "polyhedral":
        return PolyhedralRisk(facets=tuple(tuple(np.array(c, dtype=float) for c in fs)
                                           for fs in obj["facets"]))
    if kind == "clique":
        return CliqueRisk.from_edge_list(obj["edges"], obj["k"])
    raise ValueError(f"unknown risk type {kind!r}")


def instance_to_json(inst: PersuasionInstance) -> dict:
    return {
        "states": list(inst.states),
        "actions": list(inst.actions),
        "prior": [float(x) for x in inst.prior],
        "receiver_payoff": inst.receiver_payoff.tolist(),
        "sender_payoff": inst.sender_payoff.tolist(),
        "risk": risk_to_json(inst.risk),
    }


def instance_from_json(obj: dict) -> PersuasionInstance:
    return PersuasionInstance(
        states=tuple(obj["states"]),
        actions=tuple(obj["actions"]),
        prior=np.array(obj["prior"], dtype=float),
        receiver_payoff=np.array(obj["receiver_payoff"], dtype=float),
        sender_payoff=np.array(obj["sender_payoff"], dtype=float),
        risk=risk_from_json(obj["risk"]),
    )


def load_instance(path) -> PersuasionInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_json(json.load(fh))


def save_instance(inst: PersuasionInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_json(inst), fh, indent=2)
        fh.write("\n")


def scheme_to_json(scheme: SignalingScheme, value: Optional[float] = None) -> dict:
    out = {"signals": [{"p": float(s.probability),
                        "posterior": [float(x) for x in s.posterior],
                        "action": int(s.action),
                        "facet": None if s.facet is None else int(s.facet)}
                       for s in scheme]}
    if value is not None:
        out["value"] = float(value)
    return out


def scheme_from_json(obj: dict) -> SignalingScheme:
    signals = tuple(Signal(probability=float(s["p"]),
                           posterior=np.array(s["posterior"], dtype=float),
                           action=int(s["action"]),
                           facet=None if s.get("facet") is None else int(s["facet"]))
                    for s in obj["signals"])
    return SignalingScheme(signals=signals)
