"""Likelihood machinery, exact posterior, estimators, and TV experiments.

Relative to the independent-pair null, the likelihood of a triple
(pi, G, Gbar) factors over vertex pairs through the three-case edge ratio
ell, and collapses to P^{|edges of H_pi|} Q^{|E|+|Ebar|} R^{C(n,2)} / n!
with

    P = (1-2ps+ps^2) / (p(1-s)^2),
    Q = (1-s)(1-ps) / (1-2ps+ps^2),
    R = (1-2ps+ps^2) / (1-ps)^2.

|E| and |Ebar| are fixed by the observation, so the posterior over
matchings orders exactly by intersection-edge count (P > 1 always, since
numerator minus denominator is 1 - p).  Everything posterior-exact is
gated to small n where the n! enumeration is affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from .admissibility import AdmissibilityConstants, check_admissible, is_good_set
from .density import DensityResult, densest_subgraph_bruteforce, densest_subgraph_exact
from .graphs import (
    Bijection,
    Graph,
    ModelParams,
    intersection_graph,
    sample_independent,
)
from .rng import stream

__all__ = [
    "LikelihoodConstants",
    "PosteriorTable",
    "EstimatorConfig",
    "MapEstimate",
    "CandidateCheck",
    "edge_ll",
    "log_likelihood_ratio",
    "joint_log_prob_given_pi",
    "null_log_prob",
    "exact_posterior",
    "posterior_overlap_mass",
    "posterior_w",
    "map_estimator",
    "reasonable_candidate_check",
    "reasonable_candidate_search",
    "tv_exact",
    "tv_mc",
    "truncated_mass_f",
    "truncated_mass_g",
]

_POSTERIOR_N_MAX = 7


@dataclass(frozen=True)
class LikelihoodConstants:
    """The edge likelihood-ratio factors and their logs.

    s = 1 degenerates the model (the two copies are parent duplicates);
    P blows up and Q vanishes there, so the closed-form identities demand
    s < 1 while the raw ell table stays usable.
    """

    p: float
    s: float
    big_p: float
    big_q: float
    big_r: float

    @classmethod
    def from_params(cls, p: float, s: float) -> "LikelihoodConstants":
        if not (0.0 < p < 1.0):
            raise ValueError("p must lie in (0, 1)")
        if not (0.0 < s <= 1.0):
            raise ValueError("s must lie in (0, 1]")
        ps = p * s
        q00 = 1.0 - 2.0 * ps + p * s * s
        if s < 1.0:
            big_p = q00 / (p * (1.0 - s) ** 2)
            big_q = (1.0 - s) * (1.0 - ps) / q00
        else:
            big_p = math.inf
            big_q = 0.0
        big_r = q00 / (1.0 - ps) ** 2
        return cls(p=p, s=s, big_p=big_p, big_q=big_q, big_r=big_r)

    @property
    def log_p(self) -> float:
        return math.log(self.big_p) if self.big_p != math.inf else math.inf

    @property
    def log_q(self) -> float:
        return math.log(self.big_q) if self.big_q > 0.0 else -math.inf

    @property
    def log_r(self) -> float:
        return math.log(self.big_r)

    def ll_table(self) -> np.ndarray:
        """ell(x, y) as a 2x2 array indexed [x][y]."""
        return np.array(
            [[edge_ll(x, y, self.p, self.s) for y in (0, 1)] for x in (0, 1)]
        )


def edge_ll(x: int, y: int, p: float, s: float) -> float:
    """The three-case edge likelihood ratio ell(x, y)."""
    if x not in (0, 1) or y not in (0, 1):
        raise ValueError("bits must be 0 or 1")
    ps = p * s
    if x == 1 and y == 1:
        return 1.0 / p
    if x != y:
        return (1.0 - s) / (1.0 - ps)
    return (1.0 - 2.0 * ps + p * s * s) / (1.0 - ps) ** 2


def _all_pairs_packed(n: int) -> np.ndarray:
    us, vs = np.triu_indices(n, k=1)
    return us.astype(np.int64) * n + vs.astype(np.int64)


def log_likelihood_ratio(pi: Bijection, g: Graph, g_bar: Graph, consts: LikelihoodConstants) -> float:
    """log( n! * Q[pi, G, Gbar] / P[G, Gbar] ) + log n!, i.e. the log of
    prod_e ell(G_e, Gbar_{Pi(e)}).

    Evaluated both as the literal per-pair product and as the
    count-collapsed P/Q/R form; the two must agree to relative 1e-9.
    """
    if consts.s >= 1.0:
        raise ValueError("the P/Q/R closed form requires s < 1")
    n = g.n
    if g_bar.n != n or pi.n != n:
        raise ValueError("size mismatch")
    packed = _all_pairs_packed(n)
    x = g.contains_packed(packed).astype(np.int64)
    y = g_bar.contains_packed(pi.map_packed(n, packed)).astype(np.int64)
    table = np.log(consts.ll_table())
    product_form = float(table[x, y].sum())
    n11 = int((x & y).sum())
    closed_form = (
        n11 * consts.log_p
        + (g.edge_count + g_bar.edge_count) * consts.log_q
        + packed.size * consts.log_r
    )
    if abs(product_form - closed_form) > 1e-9 * max(1.0, abs(closed_form)):
        raise AssertionError(
            f"likelihood routes disagree: product {product_form} vs closed {closed_form}"
        )
    return closed_form


def joint_log_prob_given_pi(g: Graph, g_bar: Graph, pi: Bijection, params: ModelParams) -> float:
    """log Q[G, Gbar | pi* = pi]: product over pairs of the joint pair pmf."""
    n = g.n
    p, s = params.p, params.s
    ps = p * s
    q11, q10, q00 = p * s * s, ps * (1.0 - s), 1.0 - 2.0 * ps + p * s * s
    packed = _all_pairs_packed(n)
    x = g.contains_packed(packed)
    y = g_bar.contains_packed(pi.map_packed(n, packed))
    n11 = int((x & y).sum())
    n_mismatch = int((x ^ y).sum())
    n00 = packed.size - n11 - n_mismatch
    out = 0.0
    for count, value in ((n11, q11), (n_mismatch, q10), (n00, q00)):
        if count:
            if value <= 0.0:
                return -math.inf
            out += count * math.log(value)
    return out


def null_log_prob(g: Graph, g_bar: Graph, params: ModelParams) -> float:
    """log P[G, Gbar] under the independent-pair null."""
    q = params.p * params.s
    total = g.n * (g.n - 1) // 2
    m = g.edge_count + g_bar.edge_count
    return m * math.log(q) + (2 * total - m) * math.log(1.0 - q)


# -- the exact posterior ---------------------------------------------------------


@dataclass(frozen=True)
class PosteriorTable:
    """Exact posterior over all n! matchings, in lexicographic order."""

    n: int
    perms: np.ndarray          # (n!, n) int8
    probs: np.ndarray          # (n!,)
    log_weights: np.ndarray    # (n!,) unnormalized

    def __post_init__(self) -> None:
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("posterior does not normalize")

    @property
    def entries(self) -> list[tuple[Bijection, float]]:
        return [(Bijection(row), float(p)) for row, p in zip(self.perms, self.probs)]

    def probability_of(self, pi: Bijection) -> float:
        idx = np.flatnonzero((self.perms == pi.forward).all(axis=1))
        return float(self.probs[idx[0]])


def _intersection_counts(g: Graph, g_bar: Graph, perms: np.ndarray) -> np.ndarray:
    """|edges of H_pi| for a batch of permutations (rows)."""
    edges = g.edge_array()
    if edges.size == 0:
        return np.zeros(len(perms), dtype=np.int64)
    us = perms[:, edges[:, 0]].astype(np.int64)
    vs = perms[:, edges[:, 1]].astype(np.int64)
    packed = np.minimum(us, vs) * g.n + np.maximum(us, vs)
    return g_bar.contains_packed(packed.ravel()).reshape(packed.shape).sum(axis=1)


def exact_posterior(g: Graph, g_bar: Graph, params: ModelParams) -> PosteriorTable:
    """Posterior of the hidden matching given (G, Gbar), by enumerating all
    n! matchings (n <= 7).  Weights depend on pi only through the
    intersection-edge count."""
    n = g.n
    if n > _POSTERIOR_N_MAX:
        raise ValueError(f"exact posterior limited to n <= {_POSTERIOR_N_MAX}")
    if g_bar.n != n or params.n != n:
        raise ValueError("size mismatch")
    perms = np.array(list(permutations(range(n))), dtype=np.int8)
    n11 = _intersection_counts(g, g_bar, perms)
    p, s = params.p, params.s
    ps = p * s
    l11 = math.log(1.0 / p)
    l10 = math.log((1.0 - s) / (1.0 - ps)) if s < 1.0 else -math.inf
    l00 = math.log((1.0 - 2.0 * ps + p * s * s) / (1.0 - ps) ** 2)
    m_sum = g.edge_count + g_bar.edge_count
    total = n * (n - 1) // 2
    n10 = m_sum - 2 * n11
    n00 = total - m_sum + n11
    logw = n11 * l11 + n00 * l00
    with np.errstate(invalid="ignore"):
        logw = logw + np.where(n10 > 0, n10 * l10, 0.0)
    peak = logw.max()
    if peak == -math.inf:
        raise ValueError("no matching has positive likelihood for this pair")
    weights = np.exp(logw - peak)
    probs = weights / weights.sum()
    return PosteriorTable(n=n, perms=perms, probs=probs, log_weights=logw)


def posterior_overlap_mass(table: PosteriorTable, pi_tilde: Bijection, delta: float) -> float:
    """Posterior mass of matchings agreeing with pi_tilde on >= ceil(delta n)
    vertices."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    threshold = math.ceil(delta * table.n)
    agree = (table.perms == pi_tilde.forward.astype(np.int8)).sum(axis=1)
    return float(table.probs[agree >= threshold].sum())


def posterior_w(table: PosteriorTable, delta: float, chunk: int = 512) -> float:
    """max over reference matchings of the delta-overlap posterior mass
    (exhaustive over all n! references)."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    threshold = math.ceil(delta * table.n)
    best = 0.0
    perms = table.perms
    for start in range(0, len(perms), chunk):
        block = perms[start:start + chunk]
        agree = (perms[None, :, :] == block[:, None, :]).sum(axis=2)
        masses = np.where(agree >= threshold, table.probs[None, :], 0.0).sum(axis=1)
        best = max(best, float(masses.max()))
    return best


# -- estimators -------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for the estimators.

    rho_hat and c_lambda_hat come from the density module; eta is the
    density margin; delta the overlap fraction of interest.  In the
    supercritical regime eta should satisfy 0 < eta < (rho_hat - 1/alpha)/4
    (see check_supercritical).
    """

    rho_hat: float
    c_lambda_hat: float
    eta: float = 0.1
    delta: float = 0.1
    strategy: str = "auto"          # auto | exhaustive | hill_climb
    budget: int = 50_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if not (0.0 < self.c_lambda_hat <= 1.0):
            raise ValueError("c_lambda_hat must lie in (0, 1]")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [0, 1]")
        if self.strategy not in ("auto", "exhaustive", "hill_climb"):
            raise ValueError(f"unknown strategy {self.strategy}")
        if self.budget < 1:
            raise ValueError("budget must be positive")

    def check_supercritical(self, alpha: float) -> bool:
        return 0.0 < self.eta < (self.rho_hat - 1.0 / alpha) / 4.0


@dataclass(frozen=True)
class MapEstimate:
    pi: Bijection
    intersection_edges: int
    exhaustive: bool
    budget_exhausted: bool


def _assert_p_above_one(params: ModelParams) -> None:
    consts = LikelihoodConstants.from_params(params.p, params.s)
    if not consts.big_p > 1.0:
        raise AssertionError("posterior monotonicity needs P > 1")


def map_estimator(g: Graph, g_bar: Graph, params: ModelParams, config: EstimatorConfig) -> MapEstimate:
    """Posterior-mode matching: argmax of the intersection-edge count.

    Exhaustive (lexicographic argmax) up to n = 9 or when forced;
    otherwise transposition hill climbing with restarts under the move
    budget.  An empty g makes every matching optimal and the identity wins
    the lexicographic tie-break.
    """
    _assert_p_above_one(params)
    n = g.n
    use_exhaustive = config.strategy == "exhaustive" or (config.strategy == "auto" and n <= 9)
    if use_exhaustive:
        if n > 9:
            raise ValueError("exhaustive argmax limited to n <= 9")
        best_count = -1
        best_perm: tuple[int, ...] | None = None
        chunk = 40320
        buffer: list[tuple[int, ...]] = []
        for perm in permutations(range(n)):
            buffer.append(perm)
            if len(buffer) == chunk:
                best_count, best_perm = _scan_chunk(g, g_bar, buffer, best_count, best_perm)
                buffer.clear()
        if buffer:
            best_count, best_perm = _scan_chunk(g, g_bar, buffer, best_count, best_perm)
        return MapEstimate(
            pi=Bijection(best_perm),
            intersection_edges=best_count,
            exhaustive=True,
            budget_exhausted=False,
        )
    return _hill_climb(g, g_bar, config)


def _scan_chunk(g, g_bar, perms_list, best_count, best_perm):
    counts = _intersection_counts(g, g_bar, np.array(perms_list, dtype=np.int16))
    idx = int(counts.argmax())   # first maximum = lexicographically least
    if counts[idx] > best_count:
        return int(counts[idx]), perms_list[idx]
    return best_count, best_perm


def _hill_climb(g: Graph, g_bar: Graph, config: EstimatorConfig) -> MapEstimate:
    n = g.n
    if n < 2:
        return MapEstimate(
            pi=Bijection.identity(n), intersection_edges=0, exhaustive=False, budget_exhausted=False
        )
    rng = stream(config.seed, 0)
    moves_left = config.budget
    best_perm: np.ndarray | None = None
    best_count = -1
    exhausted = False
    while moves_left > 0:
        fwd = rng.permutation(n).astype(np.int64)
        count = _count_for(g, g_bar, fwd)
        improved = True
        while improved and moves_left > 0:
            improved = False
            for i in range(n):
                for j in range(i + 1, n):
                    if moves_left <= 0:
                        exhausted = True
                        break
                    moves_left -= 1
                    delta = _swap_delta(g, g_bar, fwd, i, j)
                    if delta > 0:
                        fwd[i], fwd[j] = fwd[j], fwd[i]
                        count += delta
                        improved = True
                if exhausted:
                    break
        if count > best_count or (
            count == best_count and best_perm is not None and tuple(fwd) < tuple(best_perm)
        ):
            best_count = count
            best_perm = fwd.copy()
    return MapEstimate(
        pi=Bijection(best_perm),
        intersection_edges=best_count,
        exhaustive=False,
        budget_exhausted=exhausted,
    )


def _count_for(g: Graph, g_bar: Graph, fwd: np.ndarray) -> int:
    edges = g.edge_array()
    if edges.size == 0:
        return 0
    us, vs = fwd[edges[:, 0]], fwd[edges[:, 1]]
    packed = np.minimum(us, vs) * g.n + np.maximum(us, vs)
    return int(g_bar.contains_packed(packed).sum())


def _swap_delta(g: Graph, g_bar: Graph, fwd: np.ndarray, i: int, j: int) -> int:
    delta = 0
    fi, fj = int(fwd[i]), int(fwd[j])
    for a, old_img, new_img in ((i, fi, fj), (j, fj, fi)):
        for u in g.neighbors(a):
            if u == i or u == j:
                continue
            fu = int(fwd[u])
            delta += int(g_bar.has_edge(new_img, fu)) - int(g_bar.has_edge(old_img, fu))
    return delta


# -- reasonable candidates ----------------------------------------------------------


@dataclass(frozen=True)
class CandidateCheck:
    accepted: bool
    density_cap_ok: bool
    dense_subset_ok: bool
    max_density: Fraction
    certificate: tuple[int, ...] | None
    certificate_density: Fraction | None


def _best_density(g: Graph) -> DensityResult:
    return densest_subgraph_bruteforce(g) if g.n <= 12 else densest_subgraph_exact(g)


def reasonable_candidate_check(
    pi: Bijection, g: Graph, g_bar: Graph, config: EstimatorConfig
) -> CandidateCheck:
    """Both conditions of the candidate test on H_pi.

    (i) the global max density stays at most rho_hat + eta;
    (ii) some subset of size >= ceil(c_lambda_hat n) reaches density
    rho_hat - eta.  For (ii) the global maximizer is tried first, then
    min-degree peeling of the whole graph; a returned certificate is
    sound, a miss is possible.
    """
    h = intersection_graph(g, g_bar, pi)
    dens = _best_density(h)
    cap_ok = float(dens.density) <= config.rho_hat + config.eta
    size_min = max(1, math.ceil(config.c_lambda_hat * h.n))
    target = config.rho_hat - config.eta
    certificate = None
    cert_density = None
    if len(dens.best_subset) >= size_min and float(dens.density) >= target:
        certificate = dens.best_subset
        cert_density = dens.density
    else:
        peel = _peel_best_subset(h, size_min, target)
        if peel is not None:
            certificate, cert_density = peel
    dense_ok = certificate is not None
    return CandidateCheck(
        accepted=cap_ok and dense_ok,
        density_cap_ok=cap_ok,
        dense_subset_ok=dense_ok,
        max_density=dens.density,
        certificate=certificate,
        certificate_density=cert_density,
    )


def _peel_best_subset(
    h: Graph, size_min: int, target: float
) -> tuple[tuple[int, ...], Fraction] | None:
    """Min-degree peeling; best prefix of size >= size_min with density >=
    target, or None."""
    import heapq

    n = h.n
    deg = [h.degree(v) for v in range(n)]
    alive = [True] * n
    edges_left = h.edge_count
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    removal_order = []
    best: tuple[int, Fraction] | None = None   # (#removed before, density)
    size = n
    if size >= size_min and edges_left >= target * size:
        best = (0, Fraction(edges_left, size))
    while size > 1:
        while True:
            d, v = heapq.heappop(heap)
            if alive[v] and d == deg[v]:
                break
        alive[v] = False
        removal_order.append(v)
        for w in h.neighbors(v):
            if alive[w]:
                deg[w] -= 1
                edges_left -= 1
                heapq.heappush(heap, (deg[w], w))
        size -= 1
        if size >= size_min:
            density = Fraction(edges_left, size)
            if density >= target and (best is None or density > best[1]):
                best = (len(removal_order), density)
    if best is None:
        return None
    removed = set(removal_order[: best[0]])
    subset = tuple(v for v in range(n) if v not in removed)
    assert Fraction(h.edges_within(subset), len(subset)) == best[1]
    return subset, best[1]


def reasonable_candidate_search(
    g: Graph, g_bar: Graph, params: ModelParams, config: EstimatorConfig
) -> tuple[Bijection, CandidateCheck] | None:
    """Some accepted candidate matching, or None.

    Exhaustive lexicographic scan for n <= 9 (cheap pre-filter: a
    qualifying subset needs at least target * size_min intersection
    edges); otherwise hill climbing on the intersection-edge count with
    the acceptance test applied to each new incumbent.  Absence is a
    legitimate outcome.
    """
    n = g.n
    use_exhaustive = config.strategy == "exhaustive" or (config.strategy == "auto" and n <= 9)
    size_min = max(1, math.ceil(config.c_lambda_hat * n))
    min_edges = (config.rho_hat - config.eta) * size_min
    if use_exhaustive:
        if n > 9:
            raise ValueError("exhaustive scan limited to n <= 9")
        for perm in permutations(range(n)):
            pi = Bijection(perm)
            if _count_for(g, g_bar, pi.forward) < min_edges:
                continue
            check = reasonable_candidate_check(pi, g, g_bar, config)
            if check.accepted:
                return pi, check
        return None
    rng = stream(config.seed, 1)
    moves_left = config.budget
    while moves_left > 0:
        fwd = rng.permutation(n).astype(np.int64)
        improved = True
        while improved and moves_left > 0:
            improved = False
            for i in range(n):
                for j in range(i + 1, n):
                    if moves_left <= 0:
                        break
                    moves_left -= 1
                    if _swap_delta(g, g_bar, fwd, i, j) > 0:
                        fwd[i], fwd[j] = fwd[j], fwd[i]
                        improved = True
            pi = Bijection(fwd.copy())
            if _count_for(g, g_bar, fwd) >= min_edges:
                check = reasonable_candidate_check(pi, g, g_bar, config)
                if check.accepted:
                    return pi, check
    return None


# -- total variation ------------------------------------------------------------------


def _pair_pmf(p: float, s: float) -> tuple[float, float, float]:
    ps = p * s
    return p * s * s, ps * (1.0 - s), 1.0 - 2.0 * ps + p * s * s


def tv_exact(params: ModelParams) -> float:
    """Exact TV(null, correlated) by enumerating every graph pair (n <= 4)."""
    n = params.n
    if n > 4:
        raise ValueError("exact TV limited to n <= 4")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    n_pairs = len(pairs)
    pair_index = {e: i for i, e in enumerate(pairs)}
    q11, q10, q00 = _pair_pmf(params.p, params.s)
    q = params.p * params.s
    n_graphs = 1 << n_pairs
    bits = ((np.arange(n_graphs)[:, None] >> np.arange(n_pairs)[None, :]) & 1).astype(bool)
    # null: product of marginals
    counts = bits.sum(axis=1)
    log_pg = counts * math.log(q) + (n_pairs - counts) * math.log(1.0 - q)
    p_null = np.exp(log_pg[:, None] + log_pg[None, :])
    # correlated: average over pi* of the per-pair joint pmf
    q_corr = np.zeros((n_graphs, n_graphs))
    perm_list = list(permutations(range(n)))
    lookup = np.array([[q00, q10], [q10, q11]])
    for perm in perm_list:
        mapped = np.array(
            [pair_index[tuple(sorted((perm[u], perm[v])))] for u, v in pairs]
        )
        contrib = lookup[bits[:, None, :].astype(int), bits[None, :, mapped].astype(int)]
        q_corr += contrib.prod(axis=2)
    q_corr /= len(perm_list)
    return 0.5 * float(np.abs(p_null - q_corr).sum())


def tv_mc(params: ModelParams, replicates: int, seed: int) -> tuple[float, float]:
    """Monte Carlo TV estimate E_null[(1 - L)_+] with the exact mixture
    likelihood ratio L (n <= 7), plus its standard error."""
    n = params.n
    if n > _POSTERIOR_N_MAX:
        raise ValueError(f"mixture likelihood enumeration limited to n <= {_POSTERIOR_N_MAX}")
    if replicates < 2:
        raise ValueError("need at least two replicates")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    pair_index = {e: i for i, e in enumerate(pairs)}
    perm_maps = np.array(
        [
            [pair_index[tuple(sorted((perm[u], perm[v])))] for u, v in pairs]
            for perm in permutations(range(n))
        ]
    )
    consts = LikelihoodConstants.from_params(params.p, params.s)
    table = consts.ll_table()
    vals = np.empty(replicates)
    packed_all = _all_pairs_packed(n)
    for r in range(replicates):
        g, g_bar = sample_independent(params, seed, r)
        x = g.contains_packed(packed_all).astype(int)
        y = g_bar.contains_packed(packed_all).astype(int)
        ell = table[x[None, :], y[perm_maps]]
        l_mix = float(ell.prod(axis=1).mean())
        vals[r] = max(0.0, 1.0 - l_mix)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(replicates))


# -- truncated posterior masses ---------------------------------------------------------


def truncated_mass_f(
    g: Graph,
    g_bar: Graph,
    a: set[int],
    sigma: dict[int, int],
    params: ModelParams,
    consts: AdmissibilityConstants,
) -> float:
    """Sum over extensions pi of sigma of P^{|H_pi edges|} Q^{|E|+|Ebar|}
    R^{C(n,2)}, truncated to admissible H_pi in which a is a good set.

    Verification-scale only (n <= 7): the sum enumerates the (n-|A|)!
    extensions outright.
    """
    n = g.n
    if n > _POSTERIOR_N_MAX:
        raise ValueError(f"truncated mass limited to n <= {_POSTERIOR_N_MAX}")
    a_sorted = sorted(int(v) for v in a)
    if set(sigma.keys()) != set(a_sorted):
        raise ValueError("sigma must be defined exactly on a")
    if len(set(sigma.values())) != len(a_sorted):
        raise ValueError("sigma must be injective")
    lik = LikelihoodConstants.from_params(params.p, params.s)
    rest = [v for v in range(n) if v not in set(a_sorted)]
    targets = [w for w in range(n) if w not in set(sigma.values())]
    total = n * (n - 1) // 2
    base = (g.edge_count + g_bar.edge_count) * lik.log_q + total * lik.log_r
    out = 0.0
    for image in permutations(targets):
        fwd = np.empty(n, dtype=np.int64)
        for v in a_sorted:
            fwd[v] = sigma[v]
        for v, w in zip(rest, image):
            fwd[v] = w
        pi = Bijection(fwd)
        h = intersection_graph(g, g_bar, pi)
        report = check_admissible(h, consts)
        if report.undecided:
            raise RuntimeError("admissibility undecided inside truncated mass")
        if not report.admissible:
            continue
        if not is_good_set(h, set(a_sorted), consts.c_big):
            continue
        out += math.exp(h.edge_count * lik.log_p + base)
    return out


def truncated_mass_g(
    g: Graph,
    g_bar: Graph,
    a: set[int],
    params: ModelParams,
    consts: AdmissibilityConstants,
) -> float:
    """max over embeddings sigma of A into the matched side of the
    truncated mass f."""
    n = g.n
    a_sorted = sorted(int(v) for v in a)
    best = 0.0
    for image in permutations(range(n), len(a_sorted)):
        sigma = dict(zip(a_sorted, image))
        best = max(best, truncated_mass_f(g, g_bar, a, sigma, params, consts))
    return best
