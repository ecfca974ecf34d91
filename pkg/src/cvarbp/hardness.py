"""Clique-indexed succinct risk instances: generator, facet expansion, decision."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    CliqueRisk,
    PersuasionInstance,
    PolyhedralRisk,
    Signal,
    SignalingScheme,
    sender_value,
)
from .cvar import CLIQUE_VERTEX_CAP, CliqueCapError, ic_regret
from .exact import ExactResult, solve_exact

DECISION_TOL = 1e-9


def gen_clique_instance(edges: Iterable[Sequence[int]], k_clique: int,
                        n_vertices: Optional[int] = None) -> PersuasionInstance:
    """Persuasion instance whose target action hides the K-clique problem.

    States are the graph vertices with a uniform prior; the sender earns 1
    exactly when the target action a_T is taken; the receiver values a_T by
    the largest posterior mass on any K-clique and the fallback a_0 by 1.
    The decision threshold K/|V| is attached as metadata.
    """
    risk = CliqueRisk.from_edge_list(edges, k_clique)
    vertices = {u for e in risk.edges for u in e}
    n = max(vertices) + 1 if vertices else 0
    if n_vertices is not None:
        if vertices and n_vertices <= max(vertices):
            raise ValueError(f"n_vertices={n_vertices} too small for edge list")
        n = n_vertices
    if n < 1:
        raise ValueError("graph must have at least one vertex")
    if not (1 <= k_clique <= n):
        raise ValueError(f"clique size k={k_clique} outside 1..{n}")
    sender = np.zeros((n, 2))
    sender[:, 0] = 1.0  # a_T pays the sender, a_0 does not
    return PersuasionInstance(
        states=tuple(f"v{i}" for i in range(n)),
        actions=("a_T", "a_0"),
        prior=np.full(n, 1.0 / n),
        receiver_payoff=np.zeros((n, 2)),  # unused: the risk spec is the preference
        sender_payoff=sender,
        risk=risk,
        metadata={"clique_threshold": k_clique / n},
    )


def enumerate_k_cliques(risk: CliqueRisk, n: int,
                        vertex_cap: int = CLIQUE_VERTEX_CAP) -> list:
    """All K-cliques as sorted vertex tuples, lexicographic; capped brute force."""
    if n > vertex_cap:
        raise CliqueCapError(f"clique enumeration capped at {vertex_cap} vertices, got {n}")
    cliques = []
    for subset in itertools.combinations(range(n), risk.k_clique):
        if all(frozenset(p) in risk.edges for p in itertools.combinations(subset, 2)):
            cliques.append(subset)
    return cliques


def expand_clique_facets(inst: PersuasionInstance,
                         vertex_cap: int = CLIQUE_VERTEX_CAP) -> PersuasionInstance:
    """Replace the succinct clique risk by its explicit facet lists.

    a_T gets one 0/1 indicator facet per K-clique (the all-zero facet when the
    clique family is empty, matching the empty-maximum convention); a_0 gets
    the single all-ones facet.
    """
    if not isinstance(inst.risk, CliqueRisk):
        raise TypeError("expand_clique_facets requires a succinct clique risk")
    n = inst.n_states
    cliques = enumerate_k_cliques(inst.risk, n, vertex_cap)
    if cliques:
        target_facets = []
        for c in cliques:
            vec = np.zeros(n)
            vec[list(c)] = 1.0
            target_facets.append(vec)
    else:
        target_facets = [np.zeros(n)]
    facets = (tuple(target_facets), (np.ones(n),))
    return replace(inst, risk=PolyhedralRisk(facets=facets, provenance="clique-expanded"))


def _witness_scheme(inst: PersuasionInstance, clique: Sequence[int]) -> SignalingScheme:
    """Two-signal witness: reveal membership in the clique, recommend a_T inside."""
    n = inst.n_states
    members = np.zeros(n, dtype=bool)
    members[list(clique)] = True
    p_t = float(inst.prior[members].sum())
    post_t = np.where(members, inst.prior, 0.0) / p_t
    signals = [Signal(probability=p_t, posterior=post_t, action=0)]
    if p_t < 1.0:
        post_0 = np.where(members, 0.0, inst.prior) / (1.0 - p_t)
        signals.append(Signal(probability=1.0 - p_t, posterior=post_0, action=1))
    return SignalingScheme(signals=tuple(signals))


@dataclass(frozen=True)
class CliqueDecision:
    achievable: bool
    value: float
    witness_scheme: Optional[SignalingScheme]
    exact: ExactResult


def clique_decision(inst: PersuasionInstance, eta: float,
                    vertex_cap: int = CLIQUE_VERTEX_CAP) -> CliqueDecision:
    """Decide whether the sender can reach value ``eta`` on a clique instance.

    Expands the facets, solves the exact LP, and compares the optimum with
    eta. Whenever a K-clique exists, also builds the explicit two-signal
    witness and verifies (against the succinct risk) that it is exactly IC
    with value K/|V|.
    """
    expanded = expand_clique_facets(inst, vertex_cap)
    res = solve_exact(expanded)
    cliques = enumerate_k_cliques(inst.risk, inst.n_states, vertex_cap)
    witness = None
    if cliques:
        witness = _witness_scheme(inst, cliques[0])
        expected = inst.risk.k_clique / inst.n_states
        val = sender_value(inst, witness)
        if abs(val - expected) > 1e-12:
            raise AssertionError(f"witness value {val!r} != K/n = {expected!r}")
        for s in witness:
            reg = ic_regret(inst, s.posterior, s.action)
            if reg > 1e-9:
                raise AssertionError(f"witness signal has IC regret {reg:.3e}")
    return CliqueDecision(achievable=bool(res.value >= eta - DECISION_TOL),
                          value=res.value, witness_scheme=witness, exact=res)
