"""Graphs, vertex matchings, and the correlated generative law.

Two n-vertex graphs are produced by independently keeping each edge of a
common parent G(n, p) with probability s.  One copy lives on V, the other
is relabeled through a hidden uniform bijection pi*.  Marginally each copy
is G(n, ps); edge pairs (G_e, Gbar at the pi*-image of e) are correlated
through the shared parent indicator.

Vertices of both sides are represented by indices [0, n); a Bijection
carries the semantic distinction between V and the matched side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .rng import stream

__all__ = [
    "Graph",
    "Bijection",
    "ModelParams",
    "CorrelatedSample",
    "sample_correlated",
    "sample_independent",
    "sample_er",
    "intersection_graph",
    "overlap",
    "relabel",
]


def _pack(n: int, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    return us.astype(np.int64) * n + vs.astype(np.int64)


class Graph:
    """Simple undirected graph on n labeled vertices.

    Edges are canonical unordered pairs (u, v) with u < v, stored once, as
    a sorted packed index array (vector membership tests) and per-vertex
    adjacency bitsets (O(1) scalar membership).  Instances are immutable.
    """

    __slots__ = ("n", "_packed", "_adj_bits", "_degrees")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        arr = np.asarray(sorted({(min(u, v), max(u, v)) for u, v in edges}), dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        self._init_from_canonical(n, arr)

    def _init_from_canonical(self, n: int, arr: np.ndarray) -> None:
        if arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise ValueError("edge endpoint out of range")
            if (arr[:, 0] == arr[:, 1]).any():
                raise ValueError("self-loops are not allowed")
        self.n = n
        packed = _pack(n, arr[:, 0], arr[:, 1]) if arr.size else np.empty(0, dtype=np.int64)
        order = np.argsort(packed, kind="stable")
        self._packed = packed[order]
        if np.any(self._packed[1:] == self._packed[:-1]):
            raise ValueError("duplicate edge")
        adj = [0] * n
        deg = np.zeros(n, dtype=np.int64)
        for u, v in arr:
            adj[u] |= 1 << int(v)
            adj[v] |= 1 << int(u)
            deg[u] += 1
            deg[v] += 1
        self._adj_bits = adj
        self._degrees = deg
        self._degrees.flags.writeable = False

    @classmethod
    def from_arrays(cls, n: int, us: np.ndarray, vs: np.ndarray) -> "Graph":
        """Build from endpoint arrays; pairs are canonicalized, must be distinct."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        g = cls.__new__(cls)
        g._init_from_canonical(n, np.column_stack([lo, hi]) if lo.size else np.empty((0, 2), dtype=np.int64))
        return g

    # -- basic queries ----------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self._packed.size)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(p // self.n), int(p % self.n)) for p in self._packed)

    def edge_array(self) -> np.ndarray:
        """(m, 2) int64 array of canonical edges in sorted order."""
        if self._packed.size == 0:
            return np.empty((0, 2), dtype=np.int64)
        return np.column_stack([self._packed // self.n, self._packed % self.n])

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        return bool((self._adj_bits[u] >> v) & 1)

    def contains_packed(self, packed: np.ndarray) -> np.ndarray:
        """Vector membership test for packed canonical pair indices."""
        idx = np.searchsorted(self._packed, packed)
        idx = np.minimum(idx, max(self._packed.size - 1, 0))
        if self._packed.size == 0:
            return np.zeros(packed.shape, dtype=bool)
        return self._packed[idx] == packed

    def degree(self, u: int) -> int:
        return int(self._degrees[u])

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def neighbors(self, u: int) -> list[int]:
        bits = self._adj_bits[u]
        out = []
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def adjacency_bits(self, u: int) -> int:
        return self._adj_bits[u]

    def edges_within(self, vertices: Iterable[int]) -> int:
        """Number of edges with both endpoints in the given vertex set."""
        mask = 0
        for v in vertices:
            mask |= 1 << int(v)
        total = 0
        rest = mask
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            total += (self._adj_bits[v] & mask).bit_count()
            rest ^= low
        return total // 2

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self._packed.shape == other._packed.shape
            and bool(np.all(self._packed == other._packed))
        )

    def __hash__(self) -> int:
        return hash((self.n, self._packed.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Edge-list format: 'n m' header, then one 'u v' line per edge."""
        lines = [f"{self.n} {self.edge_count}"]
        lines.extend(f"{u} {v}" for u, v in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        rows = [line.split() for line in text.strip().splitlines() if line.strip()]
        if not rows or len(rows[0]) != 2:
            raise ValueError("malformed header; expected 'n m'")
        n, m = int(rows[0][0]), int(rows[0][1])
        if len(rows) - 1 != m:
            raise ValueError(f"header promises {m} edges, found {len(rows) - 1}")
        return cls(n, [(int(r[0]), int(r[1])) for r in rows[1:]])


class Bijection:
    """A matching between two n-vertex index sets, with its inverse."""

    __slots__ = ("n", "forward", "inverse")

    def __init__(self, forward: Sequence[int] | np.ndarray):
        fwd = np.asarray(forward, dtype=np.int64).copy()
        n = fwd.size
        inv = np.full(n, -1, dtype=np.int64)
        if n and (fwd.min() < 0 or fwd.max() >= n):
            raise ValueError("image out of range")
        inv[fwd] = np.arange(n, dtype=np.int64)
        if (inv < 0).any():
            raise ValueError("not a permutation")
        fwd.flags.writeable = False
        inv.flags.writeable = False
        self.n = int(n)
        self.forward = fwd
        self.inverse = inv

    @classmethod
    def identity(cls, n: int) -> "Bijection":
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator) -> "Bijection":
        return cls(rng.permutation(n))

    def __call__(self, v: int) -> int:
        return int(self.forward[v])

    def invert(self) -> "Bijection":
        return Bijection(self.inverse)

    def compose(self, other: "Bijection") -> "Bijection":
        """self after other: v -> self(other(v))."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        return Bijection(self.forward[other.forward])

    def map_edge(self, u: int, v: int) -> tuple[int, int]:
        a, b = int(self.forward[u]), int(self.forward[v])
        return (a, b) if a < b else (b, a)

    def map_packed(self, n: int, packed: np.ndarray) -> np.ndarray:
        """Map packed canonical pairs through the bijection, re-canonicalized."""
        us = self.forward[packed // n]
        vs = self.forward[packed % n]
        return _pack(n, np.minimum(us, vs), np.maximum(us, vs))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Bijection) and self.n == other.n and bool(np.all(self.forward == other.forward))

    def __hash__(self) -> int:
        return hash(self.forward.tobytes())

    def __repr__(self) -> str:
        return f"Bijection({list(self.forward)})"


@dataclass(frozen=True)
class ModelParams:
    """Parameters (n, p, s) of the correlated pair model.

    lam = n * p * s^2 is the mean degree of the intersection graph under the
    true matching; alpha_hat = -ln p / ln n treats the sparsity exponent as
    exact at finite n.
    """

    n: int
    p: float
    s: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")
        if not (0.0 < self.s <= 1.0):
            raise ValueError("s must lie in (0, 1]")

    @property
    def lam(self) -> float:
        return self.n * self.p * self.s**2

    @property
    def alpha_hat(self) -> float:
        return -float(np.log(self.p)) / float(np.log(self.n))


@dataclass(frozen=True)
class CorrelatedSample:
    """One draw (pi*, G, Gbar) from the correlated law."""

    params: ModelParams
    pi_star: Bijection
    g: Graph
    g_bar: Graph

    def __post_init__(self) -> None:
        n = self.params.n
        if self.g.n != n or self.g_bar.n != n or self.pi_star.n != n:
            raise ValueError("component sizes disagree with params.n")


# -- sampling -------------------------------------------------------------


def _pair_count(n: int) -> int:
    return n * (n - 1) // 2


def _decode_pairs(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear pair index -> (u, v), u < v, lexicographic order."""
    u_grid = np.arange(n, dtype=np.int64)
    starts = u_grid * n - u_grid * (u_grid + 1) // 2   # first index with left endpoint u
    us = np.searchsorted(starts, idx, side="right") - 1
    vs = idx - starts[us] + us + 1
    return us, vs


def _sample_distinct(rng: np.random.Generator, universe: int, m: int) -> np.ndarray:
    """m distinct uniform indices in [0, universe), by first appearance."""
    if m > universe:
        raise ValueError("cannot sample more indices than the universe holds")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if 2 * m > universe:
        return rng.permutation(universe)[:m].astype(np.int64)
    draws = np.empty(0, dtype=np.int64)
    while True:
        batch = rng.integers(0, universe, size=max(16, int(1.2 * (m + 8))), dtype=np.int64)
        draws = np.concatenate([draws, batch])
        uniq, first = np.unique(draws, return_index=True)
        if uniq.size >= m:
            keep = uniq[np.argsort(first)][:m]
            return keep


def sample_er(n: int, q: float, rng: np.random.Generator) -> Graph:
    """One G(n, q) draw: binomial edge count, then a uniform edge set."""
    if not (0.0 <= q <= 1.0):
        raise ValueError("edge probability must lie in [0, 1]")
    total = _pair_count(n)
    m = int(rng.binomial(total, q)) if total else 0
    idx = np.sort(_sample_distinct(rng, total, m))
    us, vs = _decode_pairs(n, idx)
    return Graph.from_arrays(n, us, vs)


def sample_correlated(params: ModelParams, seed: int, replicate: int = 0) -> CorrelatedSample:
    """Draw (pi*, G, Gbar): G_e = I_e J_e and Gbar at the pi*-image of e is
    I_e Jbar_e, with I ~ Bern(p) on the parent pairs and J, Jbar ~ Bern(s)
    independent subsampling masks."""
    rng = stream(seed, replicate)
    n = params.n
    pi_star = Bijection.uniform(n, rng)
    total = _pair_count(n)
    parent_m = int(rng.binomial(total, params.p))
    parent_idx = np.sort(_sample_distinct(rng, total, parent_m))
    keep_g = rng.random(parent_m) < params.s
    keep_gbar = rng.random(parent_m) < params.s
    us, vs = _decode_pairs(n, parent_idx)
    g = Graph.from_arrays(n, us[keep_g], vs[keep_g])
    bus, bvs = pi_star.forward[us[keep_gbar]], pi_star.forward[vs[keep_gbar]]
    g_bar = Graph.from_arrays(n, bus, bvs)
    return CorrelatedSample(params=params, pi_star=pi_star, g=g, g_bar=g_bar)


def sample_independent(params: ModelParams, seed: int, replicate: int = 0) -> tuple[Graph, Graph]:
    """Two independent G(n, ps) draws (the null law for detection)."""
    rng = stream(seed, replicate)
    q = params.p * params.s
    return sample_er(params.n, q, rng), sample_er(params.n, q, rng)


# -- elementary operations -------------------------------------------------


def intersection_graph(g: Graph, g_bar: Graph, pi: Bijection) -> Graph:
    """Graph on V keeping (u,v) iff (u,v) is in g and (pi u, pi v) is in g_bar."""
    if g.n != g_bar.n or g.n != pi.n:
        raise ValueError("size mismatch")
    if g.edge_count == 0:
        return Graph(g.n)
    packed = g._packed
    mapped = pi.map_packed(g.n, packed)
    keep = g_bar.contains_packed(mapped)
    us, vs = packed[keep] // g.n, packed[keep] % g.n
    return Graph.from_arrays(g.n, us, vs)


def overlap(pi1: Bijection, pi2: Bijection) -> int:
    """Number of vertices on which the two matchings agree."""
    if pi1.n != pi2.n:
        raise ValueError("size mismatch")
    return int(np.count_nonzero(pi1.forward == pi2.forward))


def relabel(g: Graph, pi: Bijection) -> Graph:
    """Image of g under pi; edge count is preserved."""
    if g.n != pi.n:
        raise ValueError("size mismatch")
    arr = g.edge_array()
    return Graph.from_arrays(g.n, pi.forward[arr[:, 0]], pi.forward[arr[:, 1]])
