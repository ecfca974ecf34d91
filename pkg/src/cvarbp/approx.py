"""Finite-precision posterior discretization.

Pipeline: k-uniform grid -> approximate-center signal alphabet (optionally
margin-filtered) -> state-contingent LP with statistic-cell rows -> scheme
extraction with soundness checks. A local variant restricts both the grid and
the statistics to the facets active near a probe region.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .core import MASS_TOL, PersuasionInstance, Signal, SignalingScheme
from .cvar import facet_set, ic_margin, ic_regret
from .lpcore import LpProblem, LpSolution, solve_lp

GRID_CAP = 5_000_000
SPARSE_ENTRY_THRESHOLD = 2_000_000
REGRET_SLACK = 1e-7


class GridSizeError(RuntimeError):
    """Requested grid or LP exceeds the configured size cap."""


class EmptyAlphabetError(RuntimeError):
    """No (grid posterior, action) pair survives the filters."""


class DiscretizationInfeasible(RuntimeError):
    """The state-contingent LP has no feasible signaling rule."""


class SoundnessError(RuntimeError):
    """A solved scheme violates its theoretical regret/margin bound."""


@dataclass(frozen=True, eq=False)
class StatisticFamily:
    """Finite family of linear posterior statistics determining the risk values.

    For max-affine risks the statistics are exactly the (deduplicated) facet
    vectors, the Lipschitz constant is 1, and b_rho = c_g.
    """

    vectors: np.ndarray  # D x m
    l_psi: float = 1.0

    @property
    def d(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def c_g(self) -> float:
        return float(np.abs(self.vectors).max())

    @property
    def b_rho(self) -> float:
        return self.c_g * self.l_psi

    @staticmethod
    def from_instance(inst: PersuasionInstance) -> "StatisticFamily":
        vecs = facet_set(inst).vectors()
        return StatisticFamily(vectors=np.unique(vecs, axis=0), l_psi=1.0)


def enumerate_grid(m: int, k: int, cap: int = GRID_CAP) -> np.ndarray:
    """All k-uniform distributions on m states, lexicographic by composition.

    Size is C(m+k-1, k); refuses above ``cap`` before enumerating.
    """
    if m < 1 or k < 1:
        raise ValueError("need m >= 1 and k >= 1")
    size = math.comb(m + k - 1, k)
    if size > cap:
        raise GridSizeError(f"grid would have {size} points, cap is {cap}")
    # Stars and bars: each choice of m-1 bar positions among k+m-1 slots is
    # one composition of k; combinations() emits them in lexicographic order.
    out = np.empty((size, m), dtype=float)
    for i, bars in enumerate(itertools.combinations(range(k + m - 1), m - 1)):
        prev = -1
        for j, b in enumerate(bars):
            out[i, j] = b - prev - 1
            prev = b
        out[i, m - 1] = k + m - 2 - prev
    out /= k
    return out


def choose_k(b_rho: float, d: int, eps_r: float) -> int:
    """Grid resolution sufficient for eps_r-accurate statistics: ceil(2 B^2 log(2D) / eps_r^2)."""
    if b_rho <= 0 or d < 1 or eps_r <= 0:
        raise ValueError("choose_k needs positive b_rho, d >= 1, eps_r > 0")
    return math.ceil(2.0 * b_rho ** 2 / eps_r ** 2 * math.log(2.0 * d))


@dataclass(frozen=True, eq=False)
class GridAlphabet:
    """Signal labels (grid posterior, action) surviving the admission filters."""

    centers: np.ndarray  # S x m grid posteriors
    actions: np.ndarray  # S action indices
    eps_r: float
    gamma: Optional[float] = None

    def __len__(self) -> int:
        return int(self.actions.shape[0])


def _rho_matrix(inst: PersuasionInstance, grid: np.ndarray) -> np.ndarray:
    """rho(grid_point, action) for all points x actions, vectorized where possible."""
    fs = facet_set(inst)
    out = np.empty((grid.shape[0], inst.n_actions))
    for a in range(inst.n_actions):
        vals = grid @ np.asarray(fs.facets[a]).T
        out[:, a] = vals.max(axis=1)
    return out


def build_alphabet(inst: PersuasionInstance, grid: np.ndarray, stats: StatisticFamily,
                   eps_r: float, gamma: Optional[float] = None) -> GridAlphabet:
    """Admit (mu_bar, a) when rho(mu_bar, a) >= max_a' rho(mu_bar, a') - 2 eps_r.

    With ``gamma`` set, additionally require the IC margin at the center to be
    at least gamma/2. Comparisons are pure arithmetic (no tie tolerance).
    """
    if gamma is not None and inst.n_actions < 2:
        raise ValueError("margin filtering undefined with a single action")
    vals = _rho_matrix(inst, grid)
    best = vals.max(axis=1, keepdims=True)
    admit = vals >= best - 2.0 * eps_r
    if gamma is not None:
        margins = np.empty_like(vals)
        for a in range(inst.n_actions):
            others = np.delete(vals, a, axis=1).max(axis=1)
            margins[:, a] = vals[:, a] - others
        admit &= margins >= gamma / 2.0
    idx, acts = np.nonzero(admit)
    if idx.size == 0:
        raise EmptyAlphabetError(
            f"no (grid point, action) pair qualifies (eps_r={eps_r}, gamma={gamma})")
    return GridAlphabet(centers=grid[idx], actions=acts.astype(int),
                        eps_r=eps_r, gamma=gamma)


@dataclass(frozen=True)
class StateContingentIndex:
    """phi(w, sigma) lives at column sigma * m + w."""

    n_states: int
    n_signals: int

    def var(self, w: int, sigma: int) -> int:
        return sigma * self.n_states + w


def build_state_contingent_lp(inst: PersuasionInstance, alphabet: GridAlphabet,
                              stats: StatisticFamily, eps_r: float,
                              cap: int = GRID_CAP):
    """State-contingent LP over phi(w, sigma) with statistic-cell rows.

    Objective sum_w mu0(w) sum_sigma phi(w, sigma) v(w, a_sigma); per-state
    signaling rows sum_sigma phi(w, sigma) = 1; for every signal and
    statistic, two homogeneous cell rows keep the induced posterior within
    eps_r / L_psi of the grid center in that statistic.
    """
    m = inst.n_states
    n_sig = len(alphabet)
    n_vars = m * n_sig
    if n_vars > cap:
        raise GridSizeError(f"LP would have {n_vars} variables, cap is {cap}")
    mu0 = np.asarray(inst.prior)
    c = np.empty(n_vars)
    for s in range(n_sig):
        c[s * m:(s + 1) * m] = mu0 * inst.sender_payoff[:, alphabet.actions[s]]
    a_eq = np.tile(np.eye(m), n_sig)
    b_eq = np.ones(m)
    slack = eps_r / stats.l_psi
    # Cell row coefficients: mu0(w) (g_j(w) - <g_j, center> +/- slack).
    center_stats = alphabet.centers @ stats.vectors.T  # S x D
    n_rows = 2 * stats.d * n_sig
    use_sparse = n_rows * n_vars > SPARSE_ENTRY_THRESHOLD
    blocks = []
    for s in range(n_sig):
        dev = stats.vectors - center_stats[s][:, None]  # D x m
        lower = mu0[None, :] * (dev + slack)
        upper = -mu0[None, :] * (dev - slack)  # flip of the <= 0 row
        blocks.append(np.vstack([lower, upper]))
    if use_sparse:
        g = sp.block_diag([sp.csr_matrix(b) for b in blocks], format="csr")
    else:
        g = np.zeros((n_rows, n_vars))
        per = 2 * stats.d
        for s, b in enumerate(blocks):
            g[s * per:(s + 1) * per, s * m:(s + 1) * m] = b
    h = np.zeros(n_rows)
    problem = LpProblem(c=c, a_eq=a_eq, b_eq=b_eq, g_ineq=g, h_ineq=h)
    return problem, StateContingentIndex(n_states=m, n_signals=n_sig)


@dataclass(frozen=True, eq=False)
class DiscretizedResult:
    value: float
    scheme: SignalingScheme
    centers: np.ndarray  # grid center per supported signal, aligned with scheme
    max_regret: float
    min_margin: Optional[float]
    grid_size: int
    alphabet_size: int
    k: int
    eps_r: float
    solution: LpSolution


def _extract_scheme(inst: PersuasionInstance, alphabet: GridAlphabet, x: np.ndarray):
    m = inst.n_states
    mu0 = np.asarray(inst.prior)
    signals = []
    centers = []
    for s in range(len(alphabet)):
        mass = mu0 * np.clip(x[s * m:(s + 1) * m], 0.0, None)
        p = float(mass.sum())
        if p <= MASS_TOL:
            continue
        signals.append(Signal(probability=p, posterior=mass / p,
                              action=int(alphabet.actions[s])))
        centers.append(alphabet.centers[s])
    return SignalingScheme(signals=tuple(signals)), np.array(centers)


def _regret_and_margin(inst: PersuasionInstance, scheme: SignalingScheme):
    max_regret = 0.0
    min_margin = None
    for s in scheme:
        max_regret = max(max_regret, ic_regret(inst, s.posterior, s.action))
        if inst.n_actions >= 2:
            mg = ic_margin(inst, s.posterior, s.action)
            min_margin = mg if min_margin is None else min(min_margin, mg)
    return max_regret, min_margin


def solve_discretized(inst: PersuasionInstance, eps: float,
                      k_override: Optional[int] = None,
                      gamma: Optional[float] = None,
                      eps_r: Optional[float] = None,
                      grid_cap: int = GRID_CAP) -> DiscretizedResult:
    """Run the full discretization pipeline on a max-affine risk.

    Sets eps_r = eps/4 (margin mode: gamma/8, overridable via ``eps_r``) and
    k from ``choose_k`` unless ``k_override`` is given. The returned scheme is
    checked against the full risk functional: regret at most 4 eps_r (+ slack),
    and in margin mode every margin at least gamma/2 - 2 eps_r (+ slack) > 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    stats = StatisticFamily.from_instance(inst)
    if eps_r is None:
        eps_r = gamma / 8.0 if gamma is not None else eps / 4.0
    k = k_override if k_override is not None else choose_k(stats.b_rho, stats.d, eps_r)
    grid = enumerate_grid(inst.n_states, k, cap=grid_cap)
    alphabet = build_alphabet(inst, grid, stats, eps_r, gamma=gamma)
    problem, _ = build_state_contingent_lp(inst, alphabet, stats, eps_r, cap=grid_cap)
    sol = solve_lp(problem)
    if sol.status == "infeasible":
        raise DiscretizationInfeasible(
            f"state-contingent LP infeasible: k={k}, eps_r={eps_r}, gamma={gamma}, "
            f"grid={grid.shape[0]}, alphabet={len(alphabet)}")
    if not sol.optimal:
        raise DiscretizationInfeasible(f"state-contingent LP failed: {sol.status}")
    scheme = _extract_scheme(inst, alphabet, sol.x)
    max_regret, min_margin = _regret_and_margin(inst, scheme)
    if max_regret > 4.0 * eps_r + REGRET_SLACK:
        raise SoundnessError(
            f"IC regret {max_regret:.3e} exceeds 4*eps_r + {REGRET_SLACK}")
    if gamma is not None:
        bound = gamma / 2.0 - 2.0 * eps_r
        if bound <= 0:
            raise ValueError("margin mode needs eps_r < gamma/4")
        if min_margin is None or min_margin < bound - REGRET_SLACK:
            raise SoundnessError(
                f"min margin {min_margin!r} below gamma/2 - 2 eps_r = {bound:.3e}")
    return DiscretizedResult(value=sol.objective, scheme=scheme, max_regret=max_regret,
                             min_margin=min_margin, grid_size=int(grid.shape[0]),
                             alphabet_size=len(alphabet), k=k, eps_r=eps_r, solution=sol)


# ---------------------------------------------------------------------------
# Local active-facet refinement.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalFacetFamily:
    """Facets active somewhere within L1 radius eta of the probe set."""

    pairs: tuple  # (action, facet-index) labels
    vectors: np.ndarray  # aligned with pairs
    n_loc: int
    c_loc: float
    v_loc: float


def _probe_cloud(probes: np.ndarray, eta: float) -> np.ndarray:
    """Probes plus deterministic L1 perturbations of radius eta on the simplex.

    Moving mass eta/2 from coordinate j to i changes the L1 distance by at
    most eta and stays exactly on the simplex.
    """
    points = [probes]
    if eta > 0:
        m = probes.shape[1]
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                delta = np.minimum(eta / 2.0, probes[:, j])
                shifted = probes.copy()
                shifted[:, i] += delta
                shifted[:, j] -= delta
                points.append(shifted)
    return np.vstack(points)


def local_facets(inst: PersuasionInstance, probes: Sequence[np.ndarray],
                 eta: float) -> LocalFacetFamily:
    """Collect the argmax facets at each probe and its eta-perturbations.

    Ties within 1e-9 are all included. Also reports the family's coefficient
    bound and the largest per-probe variance of any member facet.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.size == 0:
        raise ValueError("probe set must be nonempty")
    fs = facet_set(inst)
    cloud = _probe_cloud(probes, eta)
    active = set()
    for a in range(inst.n_actions):
        mat = np.asarray(fs.facets[a])  # L_a x m
        vals = cloud @ mat.T
        best = vals.max(axis=1, keepdims=True)
        hit = np.nonzero(vals >= best - 1e-9)
        for l in hit[1]:
            active.add((a, int(l)))
    pairs = sorted(active)
    vectors = np.array([fs.facets[a][l] for (a, l) in pairs])
    c_loc = float(np.abs(vectors).max())
    v_loc = 0.0
    for nu in probes:
        means = vectors @ nu
        second = (vectors ** 2) @ nu
        v_loc = max(v_loc, float((second - means ** 2).max()))
    return LocalFacetFamily(pairs=tuple(pairs), vectors=vectors,
                            n_loc=len(pairs), c_loc=c_loc, v_loc=v_loc)


def local_k_bound(v_loc: float, c_loc: float, n_loc: int, eps: float,
                  delta: float) -> int:
    """Bernstein sample bound: ceil(((2 V + (2/3) C eps) / eps^2) log(2 N / delta)).

    One concrete instantiation of the local discretization constant.
    """
    if v_loc < 0 or c_loc <= 0 or n_loc < 1 or eps <= 0:
        raise ValueError("local_k_bound needs nonnegative variance and positive inputs")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    coeff = (2.0 * v_loc + (2.0 / 3.0) * c_loc * eps) / eps ** 2
    return math.ceil(coeff * math.log(2.0 * n_loc / delta))


def _l1_to_probes(points: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """L1 distance from each point to its nearest probe."""
    diffs = np.abs(points[:, None, :] - probes[None, :, :]).sum(axis=2)
    return diffs.min(axis=1)


@dataclass(frozen=True, eq=False)
class LocalDiscretizedResult(DiscretizedResult):
    n_loc: int = 0
    family: Optional[LocalFacetFamily] = None
    certified: bool = True
    fallback: bool = False


def solve_discretized_local(inst: PersuasionInstance, probes: Sequence[np.ndarray],
                            eta: float, eps: float, delta: float,
                            k_override: Optional[int] = None,
                            grid_cap: int = GRID_CAP) -> LocalDiscretizedResult:
    """Discretization restricted to the locally active facet family.

    Statistics are the facets active within L1 radius eta of the probes; the
    grid keeps only k-uniform points within eta of a probe. After solving, the
    certificate is checked: every induced posterior must lie within eta of the
    probe set and the FULL-risk regret must stay within 4 eps_r. If the
    posterior certificate fails, the solver falls back to the global pipeline
    with a warning.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    family = local_facets(inst, probes, eta)
    stats = StatisticFamily(vectors=np.unique(family.vectors, axis=0), l_psi=1.0)
    eps_r = eps / 4.0
    k = k_override if k_override is not None else local_k_bound(
        family.v_loc, family.c_loc, family.n_loc, eps_r, delta)
    grid = enumerate_grid(inst.n_states, k, cap=grid_cap)
    keep = _l1_to_probes(grid, probes) <= eta + 1e-12
    grid = grid[keep]
    if grid.shape[0] == 0:
        raise GridSizeError("no grid point lies within eta of the probe set")
    alphabet = build_alphabet(inst, grid, stats, eps_r, gamma=None)
    problem, _ = build_state_contingent_lp(inst, alphabet, stats, eps_r, cap=grid_cap)
    sol = solve_lp(problem)
    if sol.status == "infeasible":
        raise DiscretizationInfeasible(
            f"local state-contingent LP infeasible: k={k}, eta={eta}")
    if not sol.optimal:
        raise DiscretizationInfeasible(f"local state-contingent LP failed: {sol.status}")
    scheme = _extract_scheme(inst, alphabet, sol.x)
    induced = scheme.posteriors()
    certified = bool(np.all(_l1_to_probes(induced, probes) <= eta + 1e-9))
    if not certified:
        warnings.warn("local certificate failed: induced posterior left the probe "
                      "region; falling back to the global pipeline", RuntimeWarning)
        g = solve_discretized(inst, eps, k_override=k_override if k_override is not None else k,
                              grid_cap=grid_cap)
        return LocalDiscretizedResult(value=g.value, scheme=g.scheme,
                                      max_regret=g.max_regret, min_margin=g.min_margin,
                                      grid_size=g.grid_size, alphabet_size=g.alphabet_size,
                                      k=g.k, eps_r=g.eps_r, solution=g.solution,
                                      n_loc=family.n_loc, family=family,
                                      certified=False, fallback=True)
    max_regret, min_margin = _regret_and_margin(inst, scheme)
    if max_regret > 4.0 * eps_r + REGRET_SLACK:
        raise SoundnessError(
            f"local scheme has full-risk regret {max_regret:.3e} > eps + slack")
    return LocalDiscretizedResult(value=sol.objective, scheme=scheme,
                                  max_regret=max_regret, min_margin=min_margin,
                                  grid_size=int(grid.shape[0]),
                                  alphabet_size=len(alphabet), k=k, eps_r=eps_r,
                                  solution=sol, n_loc=family.n_loc, family=family,
                                  certified=True, fallback=False)
