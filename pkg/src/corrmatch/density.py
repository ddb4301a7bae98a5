"""Exact maximum subgraph density and the empirical rho curve.

The maximizer of |E(U)|/|U| is found through the classical flow reduction:
for a guess gamma = a/b, a network with source->v capacity b*deg(v),
v->sink capacity 2a and doubled internal arcs of capacity b has minimum
cut 2bm - 2 max_U (b|E(U)| - a|U|), so one max-flow decides whether any
subgraph beats gamma and exhibits a better one when it exists.  Guesses
are refined Newton-style (each new guess is the density actually attained
by the last witness), which keeps all capacities integral and small; the
attainable densities are rationals with denominator <= n, so the loop
terminates at the exact optimum.

rho(lambda), the large-n limit of the maximum density of G(n, lambda/n),
has no usable closed form; it is estimated here by Monte Carlo over exact
solves, and the threshold estimate is read off by inverting the fitted
monotone curve.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .graphs import Graph, sample_er
from .rng import stream

__all__ = [
    "DensityResult",
    "RhoEstimate",
    "RhoCurve",
    "LambdaStarEstimate",
    "densest_subgraph_exact",
    "densest_subgraph_bruteforce",
    "estimate_rho",
    "build_rho_curve",
    "rho_inverse",
    "isotonic_fit",
    "rho_curve_csv",
]


@dataclass(frozen=True)
class DensityResult:
    """A certified maximizer of the edge-vertex ratio."""

    best_subset: tuple[int, ...]
    density: Fraction
    witness_edges: int

    def __post_init__(self) -> None:
        if not self.best_subset:
            raise ValueError("maximizer must be nonempty")


def _improving_subset(g: Graph, gamma: Fraction) -> tuple[int, ...] | None:
    """A vertex set with density strictly above gamma, or None.

    One integer max-flow on the reduction network; the residual source
    side realizes max_U (b|E(U)| - a|U|).
    """
    n, m = g.n, g.edge_count
    a, b = gamma.numerator, gamma.denominator
    src, dst = n, n + 1
    edges = g.edge_array()
    deg = g.degrees
    rows = np.concatenate([
        np.full(n, src, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        edges[:, 0],
        edges[:, 1],
    ])
    cols = np.concatenate([
        np.arange(n, dtype=np.int64),
        np.full(n, dst, dtype=np.int64),
        edges[:, 1],
        edges[:, 0],
    ])
    caps = np.concatenate([
        b * deg,
        np.full(n, 2 * a, dtype=np.int64),
        np.full(m, b, dtype=np.int64),
        np.full(m, b, dtype=np.int64),
    ])
    if caps.size and caps.max() >= 2**31:
        raise OverflowError("capacities exceed the 32-bit flow solver range")
    graph = csr_matrix(
        (caps.astype(np.int32), (rows, cols)), shape=(n + 2, n + 2)
    )
    result = maximum_flow(graph, src, dst)
    if result.flow_value >= 2 * b * m:
        return None
    residual = graph - result.flow
    residual.data = np.maximum(residual.data, 0)
    residual.eliminate_zeros()
    reach = _bfs_reachable(residual, src)
    side = tuple(int(v) for v in np.flatnonzero(reach[:n]))
    return side if side else None


def _bfs_reachable(residual: csr_matrix, src: int) -> np.ndarray:
    indptr, indices = residual.indptr, residual.indices
    n_nodes = residual.shape[0]
    seen = np.zeros(n_nodes, dtype=bool)
    seen[src] = True
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
        frontier = nxt
    return seen


def densest_subgraph_exact(g: Graph) -> DensityResult:
    """Exact maximizer of |E(U)|/|U| over nonempty U, as a rational.

    Edgeless graphs report density 0 on the singleton {0}.  Distinct
    attainable densities differ by at least 1/(n(n-1)), and every Newton
    step strictly improves the attained value, so the loop is finite.
    """
    if g.n == 0:
        raise ValueError("graph must have at least one vertex")
    if g.edge_count == 0:
        return DensityResult(best_subset=(0,), density=Fraction(0), witness_edges=0)
    best = tuple(range(g.n))
    val = Fraction(g.edge_count, g.n)
    for _ in range(2 * g.n * g.n + 8):
        improved = _improving_subset(g, val)
        if improved is None:
            return DensityResult(best_subset=best, density=val, witness_edges=g.edges_within(best))
        cand = Fraction(g.edges_within(improved), len(improved))
        if cand <= val:
            raise AssertionError("flow witness failed to improve the density")
        best, val = improved, cand
    raise AssertionError("density refinement did not terminate")


def densest_subgraph_bruteforce(g: Graph) -> DensityResult:
    """Exhaustive maximum over all 2^n - 1 nonempty subsets (n <= 20).

    Subset edge counts fill in by dynamic programming on the lowest bit.
    Ties break toward smaller, then lexicographically earlier subsets.
    """
    if g.n > 20:
        raise ValueError("brute force limited to n <= 20")
    if g.edge_count == 0:
        return DensityResult(best_subset=(0,), density=Fraction(0), witness_edges=0)
    n = g.n
    adj = [g.adjacency_bits(v) for v in range(n)]
    counts = [0] * (1 << n)
    best_mask, best_val = 1, Fraction(0)
    for mask in range(1, 1 << n):
        low = mask & -mask
        prev = mask ^ low
        cnt = counts[prev] + (adj[low.bit_length() - 1] & prev).bit_count()
        counts[mask] = cnt
        val = Fraction(cnt, mask.bit_count())
        if val > best_val or (
            val == best_val
            and (mask.bit_count(), _mask_vertices(mask)) < (best_mask.bit_count(), _mask_vertices(best_mask))
        ):
            best_mask, best_val = mask, val
    subset = _mask_vertices(best_mask)
    return DensityResult(best_subset=subset, density=best_val, witness_edges=counts[best_mask])


def _mask_vertices(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


# -- the rho curve ------------------------------------------------------------


@dataclass(frozen=True)
class RhoEstimate:
    """Monte Carlo estimate of rho at a single lambda."""

    lam: float
    n: int
    replicates: int
    mean: float
    stderr: float
    size_q05: float
    size_q50: float


def estimate_rho(lam: float, n: int, replicates: int, seed: int, stream_offset: int = 0) -> RhoEstimate:
    """Mean/stderr of the exact maximum density over G(n, lambda/n) draws,
    plus quantiles of the maximizer size fraction (the c_lambda readout)."""
    if lam < 0 or lam > n:
        raise ValueError("lambda must lie in [0, n]")
    if replicates < 1:
        raise ValueError("need at least one replicate")
    densities = np.empty(replicates)
    fractions = np.empty(replicates)
    for i in range(replicates):
        g = sample_er(n, lam / n, stream(seed, stream_offset + i))
        res = densest_subgraph_exact(g)
        densities[i] = float(res.density)
        fractions[i] = len(res.best_subset) / n
    se = float(densities.std(ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0
    return RhoEstimate(
        lam=lam,
        n=n,
        replicates=replicates,
        mean=float(densities.mean()),
        stderr=se,
        size_q05=float(np.quantile(fractions, 0.05)),
        size_q50=float(np.quantile(fractions, 0.50)),
    )


@dataclass(frozen=True)
class RhoCurve:
    """rho estimates over a lambda grid, with uncertainty."""

    lambda_grid: tuple[float, ...]
    rho_hat: tuple[float, ...]
    stderr: tuple[float, ...]
    size_q05: tuple[float, ...]
    size_q50: tuple[float, ...]
    n_used: int
    replicates: int

    def __post_init__(self) -> None:
        k = len(self.lambda_grid)
        if not k:
            raise ValueError("empty grid")
        if any(len(t) != k for t in (self.rho_hat, self.stderr, self.size_q05, self.size_q50)):
            raise ValueError("curve columns must share the grid length")
        if list(self.lambda_grid) != sorted(self.lambda_grid):
            raise ValueError("grid must be sorted")

    def isotonic(self) -> np.ndarray:
        return isotonic_fit(np.asarray(self.rho_hat))

    def lower_bound_ok(self, slack: float = 0.0) -> bool:
        """Pointwise check rho_hat >= max(1, lam/2 * (n-1)/n) - 3 se - slack."""
        n = self.n_used
        for lam, r, se in zip(self.lambda_grid, self.rho_hat, self.stderr):
            floor_val = max(1.0, lam / 2.0 * (n - 1) / n)
            if r < floor_val - 3.0 * se - slack:
                return False
        return True


def build_rho_curve(
    lambda_grid: list[float], n: int, replicates: int, seed: int
) -> RhoCurve:
    """Estimate rho over a grid; replicate i of grid point j uses the
    stream (seed, j * replicates + i) so the curve is reproducible."""
    grid = sorted(float(v) for v in lambda_grid)
    ests = [
        estimate_rho(lam, n, replicates, seed, stream_offset=j * replicates)
        for j, lam in enumerate(grid)
    ]
    return RhoCurve(
        lambda_grid=tuple(grid),
        rho_hat=tuple(e.mean for e in ests),
        stderr=tuple(e.stderr for e in ests),
        size_q05=tuple(e.size_q05 for e in ests),
        size_q50=tuple(e.size_q50 for e in ests),
        n_used=n,
        replicates=replicates,
    )


def isotonic_fit(values: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit: the closest non-decreasing sequence."""
    vals = [float(v) for v in values]
    weights = [1.0] * len(vals)
    blocks: list[tuple[float, float]] = []
    for v, w in zip(vals, weights):
        blocks.append((v, w))
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v2, w2 = blocks.pop()
            v1, w1 = blocks.pop()
            blocks.append(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2))
    out = []
    for v, w in blocks:
        out.extend([v] * int(round(w)))
    return np.asarray(out)


@dataclass(frozen=True)
class LambdaStarEstimate:
    """Inverted threshold estimate with a stderr-band interval."""

    target: float
    lambda_star: float
    lo: float
    hi: float


def _invert_monotone(grid: np.ndarray, values: np.ndarray, target: float) -> float:
    """Leftmost lambda where the piecewise-linear interpolant reaches target,
    located by bisection."""
    lo, hi = float(grid[0]), float(grid[-1])
    if target <= values[0]:
        return lo
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if np.interp(mid, grid, values) >= target:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def rho_inverse(target: float, curve: RhoCurve, band: float = 2.0) -> LambdaStarEstimate:
    """lambda* estimate: invert the isotonic rho curve at `target`.

    The interval comes from inverting the curve shifted by +-band*stderr;
    targets outside the observed isotonic range are refused rather than
    extrapolated.
    """
    grid = np.asarray(curve.lambda_grid)
    iso = curve.isotonic()
    if not (iso[0] <= target <= iso[-1]):
        raise ValueError(
            f"target {target} outside the observed rho range [{iso[0]}, {iso[-1]}]; refusing to extrapolate"
        )
    se = np.asarray(curve.stderr)
    center = _invert_monotone(grid, iso, target)
    upper_curve = isotonic_fit(np.asarray(curve.rho_hat) + band * se)
    lower_curve = isotonic_fit(np.asarray(curve.rho_hat) - band * se)
    lo = _invert_monotone(grid, upper_curve, target) if target <= upper_curve[-1] else float(grid[-1])
    hi = _invert_monotone(grid, lower_curve, target) if target <= lower_curve[-1] else float(grid[-1])
    return LambdaStarEstimate(target=target, lambda_star=center, lo=min(lo, hi), hi=max(lo, hi))


def rho_curve_csv(curve: RhoCurve) -> str:
    """Columns: lambda, n, replicates, rho_hat, stderr, size_q05, size_q50."""
    buf = io.StringIO()
    buf.write("lambda,n,replicates,rho_hat,stderr,size_q05,size_q50\n")
    for lam, r, se, q05, q50 in zip(
        curve.lambda_grid, curve.rho_hat, curve.stderr, curve.size_q05, curve.size_q50
    ):
        buf.write(
            f"{lam:.10g},{curve.n_used},{curve.replicates},{r:.10g},{se:.10g},{q05:.10g},{q50:.10g}\n"
        )
    return buf.getvalue()
