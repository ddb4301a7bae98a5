"""The truncation event ("admissible" intersection graphs) and good sets.

A graph is admissible when five caps hold: (i) every subset has edge-vertex
ratio at most xi; (ii) subsets up to the small-set cap have ratio at most
zeta; (iii) maximal degree below the degree cap; (iv) small connected sets
contain at most one cycle (edges <= vertices); (v) for each k the number of
simple k-cycles stays under the per-length cap.  A vertex set is good when
its members are pairwise farther than 2C+2 apart and farther than C from
every cycle of length at most C.

The asymptotic thresholds (log n, n/log n, log log n, n^{delta1 k}) are
instantiated as explicit integer caps, base-2 logs, all test-overridable;
at desk scale the natural-log caps sit so low that typical sparse graphs
fail condition (iii) constantly, which would defeat the event's purpose of
holding with probability near one.

Conditions (ii) and (iv) are decided by exhaustive enumeration of connected
candidate sets inside the relevant core (any inclusion-minimal violator is
connected with min degree above the ratio, hence lives in that core).  The
enumeration carries an explicit budget; exceeding it yields an "undecided"
status, never a silent pass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .density import densest_subgraph_exact
from .graphs import Graph

__all__ = [
    "AdmissibilityConstants",
    "ConditionResult",
    "AdmissibilityReport",
    "ConstantsInfeasibleError",
    "BudgetExceeded",
    "default_constants",
    "check_admissible",
    "is_good_set",
    "find_good_set",
    "GoodSetResult",
    "simple_cycle_counts",
]

ZETA_GRID = tuple(1.0 + 0.5**j for j in range(1, 8))   # 1.5, 1.25, ..., ~1.0078


class ConstantsInfeasibleError(ValueError):
    """No constants satisfy the constraint system (density already at or
    above the admissibility level 1/alpha)."""


class BudgetExceeded(RuntimeError):
    """Internal signal: an enumeration ran out of budget."""


@dataclass(frozen=True)
class AdmissibilityConstants:
    alpha: float
    n: int
    xi: float
    zeta: float
    beta: float
    c_big: int
    delta1: float
    degree_cap: int
    small_set_cap: int
    tiny_component_cap: int
    cycle_len_cap: int = 12

    def validate(self) -> None:
        """Assert the five defining inequalities."""
        a = self.alpha
        if not self.xi < 1.0 / a:
            raise ConstantsInfeasibleError(f"xi={self.xi} >= 1/alpha={1/a}")
        if not (self.zeta > 1.0 and 1.0 + self.zeta * (a - 1.0) < 2.0 - self.zeta):
            raise ConstantsInfeasibleError(f"zeta={self.zeta} violates its constraint")
        lower = max(1.0 - a, (1.0 + self.zeta * (a - 1.0)) / (2.0 - self.zeta))
        if not (lower < self.beta < 1.0):
            raise ConstantsInfeasibleError(f"beta={self.beta} outside ({lower}, 1)")
        if not a * (self.xi + 1.0 / self.c_big) < 1.0:
            raise ConstantsInfeasibleError(f"C={self.c_big} violates alpha(xi + 1/C) < 1")
        if not 0.0 < self.delta1 < min(1.0 - a * self.xi, self.beta / self.c_big):
            raise ConstantsInfeasibleError(f"delta1={self.delta1} outside its cap")

    def cycle_count_cap(self, k: int) -> int:
        return math.ceil(self.n ** (self.delta1 * k))

    @property
    def good_set_size(self) -> int:
        """K = floor(n^beta), the good-set size used by the truncation."""
        return math.floor(self.n**self.beta)

    def with_caps(self, **caps: int) -> "AdmissibilityConstants":
        """Copy with overridden caps (tests inflate them to exercise paths)."""
        return replace(self, **caps)


def default_constants(alpha: float, rho_hat: float, n: int) -> AdmissibilityConstants:
    """Instantiate the constants from (alpha, estimated density level, n).

    xi is the midpoint of rho_hat and 1/alpha; zeta is the coarsest grid
    value below 1/alpha (near-1 choices are asymptotically valid but void
    the small-set condition's slack at desk scale); beta the midpoint of
    its feasible interval; C the smallest integer allowed; delta1 half its
    cap.  Raises when rho_hat >= 1/alpha, which signals the regime above
    the recovery threshold where no truncation constants exist.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if rho_hat < 1.0:
        raise ValueError("rho_hat must be at least 1")
    if n < 4:
        raise ValueError("n too small for the caps")
    inv_a = 1.0 / alpha
    xi = (rho_hat + inv_a) / 2.0
    if xi >= inv_a:
        raise ConstantsInfeasibleError(
            f"rho_hat={rho_hat} >= 1/alpha={inv_a}: above-threshold regime"
        )
    zeta = next((z for z in ZETA_GRID if z < inv_a), None)
    if zeta is None:
        raise ConstantsInfeasibleError(f"no grid zeta below 1/alpha={inv_a}")
    lower = max(1.0 - alpha, (1.0 + zeta * (alpha - 1.0)) / (2.0 - zeta))
    beta = (lower + 1.0) / 2.0
    c_big = max(1, math.floor(1.0 / (inv_a - xi)) + 1)
    delta1 = 0.5 * min(1.0 - alpha * xi, beta / c_big)
    log2n = math.log2(n)
    consts = AdmissibilityConstants(
        alpha=alpha,
        n=n,
        xi=xi,
        zeta=zeta,
        beta=beta,
        c_big=c_big,
        delta1=delta1,
        degree_cap=math.ceil(log2n),
        small_set_cap=max(2, math.floor(n / log2n)),
        tiny_component_cap=max(3, math.ceil(math.log2(max(log2n, 2.0)))),
    )
    consts.validate()
    return consts


# -- report types -------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    status: str                      # "pass" | "fail" | "undecided"
    witness: dict | None = None

    def __post_init__(self) -> None:
        if self.status not in ("pass", "fail", "undecided"):
            raise ValueError(f"bad status {self.status}")
        if self.status == "fail" and self.witness is None:
            raise ValueError("failures must carry a witness")


CONDITIONS = (
    "density_cap",          # (i)
    "small_set_density",    # (ii)
    "max_degree",           # (iii)
    "local_unicyclicity",   # (iv)
    "cycle_counts",         # (v)
)


@dataclass(frozen=True)
class AdmissibilityReport:
    conditions: dict[str, ConditionResult]

    @property
    def admissible(self) -> bool:
        return all(c.status == "pass" for c in self.conditions.values())

    @property
    def undecided(self) -> bool:
        return any(c.status == "undecided" for c in self.conditions.values())

    def to_json(self) -> str:
        payload = {
            name: {"status": res.status, "witness": res.witness}
            for name, res in self.conditions.items()
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def revalidate(self, h: Graph, consts: AdmissibilityConstants) -> bool:
        """Re-evaluate every failure witness against its condition."""
        for name, res in self.conditions.items():
            if res.status != "fail":
                continue
            w = res.witness
            if name == "density_cap":
                sub = w["subset"]
                if not h.edges_within(sub) > consts.xi * len(sub):
                    return False
            elif name == "small_set_density":
                sub = w["subset"]
                if len(sub) > consts.small_set_cap:
                    return False
                if not h.edges_within(sub) > consts.zeta * len(sub):
                    return False
            elif name == "max_degree":
                if not h.degree(w["vertex"]) >= consts.degree_cap:
                    return False
            elif name == "local_unicyclicity":
                sub = w["subset"]
                if len(sub) > consts.tiny_component_cap or not _connected(h, sub):
                    return False
                if not h.edges_within(sub) > len(sub):
                    return False
            elif name == "cycle_counts":
                k = w["length"]
                counts, done = simple_cycle_counts(h, k)
                if not (done and counts.get(k, 0) == w["count"] > consts.cycle_count_cap(k)):
                    return False
        return True


def _connected(h: Graph, vertices) -> bool:
    vset = set(int(v) for v in vertices)
    if not vset:
        return False
    start = next(iter(vset))
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for w in h.neighbors(u):
                if w in vset and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen == vset


# -- enumeration machinery ----------------------------------------------------


def _adjacency(h: Graph) -> list[list[int]]:
    return [h.neighbors(v) for v in range(h.n)]


def _core(adj: list[list[int]], min_degree: int) -> list[bool]:
    """Vertices surviving repeated removal of degree < min_degree."""
    n = len(adj)
    alive = [True] * n
    deg = [len(a) for a in adj]
    stack = [v for v in range(n) if deg[v] < min_degree]
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for w in adj[v]:
            if alive[w]:
                deg[w] -= 1
                if deg[w] < min_degree:
                    stack.append(w)
    return alive


def _connected_sets(adj: list[list[int]], alive: list[bool], max_size: int, budget: list[int]):
    """Yield every connected vertex set of size <= max_size within the
    alive mask exactly once (ESU-style growth from each root)."""
    n = len(adj)
    for root in range(n):
        if not alive[root]:
            continue

        def grow(sub: list[int], in_sub: set[int], ext: list[int], banned: set[int]):
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded
            yield tuple(sub)
            if len(sub) == max_size:
                return
            for i, u in enumerate(ext):
                fresh = [
                    w
                    for w in adj[u]
                    if alive[w] and w > root and w not in in_sub and w not in banned
                ]
                banned_next = banned | set(ext[i + 1:]) | set(fresh)
                sub.append(u)
                in_sub.add(u)
                yield from grow(sub, in_sub, ext[i + 1:] + fresh, banned_next)
                sub.pop()
                in_sub.remove(u)

        ext0 = [w for w in adj[root] if alive[w] and w > root]
        yield from grow([root], {root}, ext0, set(ext0))


def simple_cycle_counts(
    h: Graph, max_len: int, budget: int = 20_000_000, collect_vertices: bool = False
) -> tuple[dict[int, int], bool] | tuple[dict[int, int], bool, set[int]]:
    """Count simple cycles per length 3..max_len.

    Each cycle is counted once, rooted at its least vertex with the two
    traversal directions deduplicated.  Returns (counts, completed); the
    optional third element collects all vertices lying on counted cycles.
    Only the 2-core is searched (cycles live there).
    """
    adj = _adjacency(h)
    alive = _core(adj, 2)
    counts = {k: 0 for k in range(3, max_len + 1)}
    on_cycles: set[int] = set()
    steps = budget
    completed = True
    try:
        for root in range(h.n):
            if not alive[root]:
                continue
            # iterative DFS over simple paths from root using vertices > root
            stack = [(root, iter([w for w in adj[root] if alive[w] and w > root]))]
            path = [root]
            in_path = {root}
            while stack:
                steps -= 1
                if steps < 0:
                    raise BudgetExceeded
                node, it = stack[-1]
                advanced = False
                for w in it:
                    if w in in_path:
                        continue
                    if len(path) >= 2 and h.has_edge(w, root) and path[1] < w:
                        counts[len(path) + 1] += 1
                        if collect_vertices:
                            on_cycles.update(path)
                            on_cycles.add(w)
                    if len(path) + 1 < max_len:
                        path.append(w)
                        in_path.add(w)
                        stack.append((w, iter([x for x in adj[w] if alive[x] and x > root])))
                        advanced = True
                        break
                if not advanced:
                    stack.pop()
                    in_path.remove(path.pop())
    except BudgetExceeded:
        completed = False
    if collect_vertices:
        return counts, completed, on_cycles
    return counts, completed


# -- the admissibility check ----------------------------------------------------


def check_admissible(
    h: Graph,
    consts: AdmissibilityConstants,
    set_budget: int = 2_000_000,
    cycle_budget: int = 20_000_000,
) -> AdmissibilityReport:
    """Evaluate the five conditions on h; see the module docstring."""
    consts.validate()
    results: dict[str, ConditionResult] = {}

    dens = densest_subgraph_exact(h)
    size = len(dens.best_subset)
    if dens.witness_edges > consts.xi * size:
        results["density_cap"] = ConditionResult(
            "fail", {"subset": list(dens.best_subset), "edges": dens.witness_edges}
        )
    else:
        results["density_cap"] = ConditionResult("pass")

    results["small_set_density"] = _check_small_sets(h, consts, dens, set_budget)

    degs = h.degrees
    if h.n and int(degs.max()) >= consts.degree_cap:
        v = int(degs.argmax())
        results["max_degree"] = ConditionResult("fail", {"vertex": v, "degree": int(degs[v])})
    else:
        results["max_degree"] = ConditionResult("pass")

    results["local_unicyclicity"] = _check_tiny_components(h, consts, set_budget)
    results["cycle_counts"] = _check_cycle_counts(h, consts, cycle_budget)
    return AdmissibilityReport(conditions=results)


def _check_small_sets(h, consts, dens, set_budget) -> ConditionResult:
    if float(dens.density) <= consts.zeta:
        return ConditionResult("pass")   # no subset of any size violates zeta
    subset = list(dens.best_subset)
    if len(subset) <= consts.small_set_cap:
        return ConditionResult("fail", {"subset": subset, "edges": h.edges_within(subset)})
    shrunk = _shrink_violator(h, subset, consts.zeta)
    if len(shrunk) <= consts.small_set_cap:
        return ConditionResult("fail", {"subset": shrunk, "edges": h.edges_within(shrunk)})
    # exhaustive: minimal violators are connected with min degree > zeta
    adj = _adjacency(h)
    alive = _core(adj, math.floor(consts.zeta) + 1)
    budget = [set_budget]
    try:
        for sub in _connected_sets(adj, alive, consts.small_set_cap, budget):
            if h.edges_within(sub) > consts.zeta * len(sub):
                return ConditionResult("fail", {"subset": list(sub), "edges": h.edges_within(sub)})
    except BudgetExceeded:
        return ConditionResult("undecided")
    return ConditionResult("pass")


def _shrink_violator(h: Graph, subset: list[int], ratio: float) -> list[int]:
    """Greedily peel to an inclusion-minimal set with edges > ratio * size."""
    current = set(subset)
    changed = True
    while changed:
        changed = False
        for v in sorted(current, key=lambda u: (h.degree(u), u)):
            trial = current - {v}
            if trial and h.edges_within(trial) > ratio * len(trial):
                current = trial
                changed = True
                break
    return sorted(current)


def _check_tiny_components(h, consts, set_budget) -> ConditionResult:
    adj = _adjacency(h)
    alive = _core(adj, 2)
    budget = [set_budget]
    try:
        for sub in _connected_sets(adj, alive, consts.tiny_component_cap, budget):
            if h.edges_within(sub) > len(sub):
                return ConditionResult("fail", {"subset": list(sub), "edges": h.edges_within(sub)})
    except BudgetExceeded:
        return ConditionResult("undecided")
    return ConditionResult("pass")


def _check_cycle_counts(h, consts, cycle_budget) -> ConditionResult:
    counts, completed = simple_cycle_counts(h, consts.cycle_len_cap, cycle_budget)
    for k in range(3, consts.cycle_len_cap + 1):
        cap = consts.cycle_count_cap(k)
        if counts.get(k, 0) > cap:
            return ConditionResult("fail", {"length": k, "count": counts[k], "cap": cap})
    if not completed:
        return ConditionResult("undecided")
    return ConditionResult("pass")


# -- good sets -------------------------------------------------------------------


@dataclass(frozen=True)
class GoodSetResult:
    ok: bool
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.ok


def _balls(h: Graph, sources: set[int], depth: int) -> set[int]:
    seen = set(sources)
    frontier = list(sources)
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for w in h.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    return seen


def _short_cycle_vertices(h: Graph, c_big: int) -> set[int]:
    if c_big < 3:
        return set()
    _, completed, verts = simple_cycle_counts(h, c_big, collect_vertices=True)
    if not completed:
        raise BudgetExceeded("cycle enumeration for good sets ran out of budget")
    return verts


def is_good_set(h: Graph, a: set[int], c_big: int) -> GoodSetResult:
    """True iff members of a are pairwise farther than 2C+2 apart and
    farther than C from every cycle of length <= C."""
    a_sorted = sorted(int(v) for v in a)
    near_cycles = _balls(h, _short_cycle_vertices(h, c_big), c_big)
    for v in a_sorted:
        if v in near_cycles:
            return GoodSetResult(False, {"vertex": v, "reason": "within C of a short cycle"})
    taken: set[int] = set()
    for v in a_sorted:
        ball = _balls(h, {v}, 2 * c_big + 2)
        hit = ball & taken
        if hit:
            return GoodSetResult(False, {"pair": [min(hit), v], "reason": "closer than 2C+2"})
        taken.add(v)
    return GoodSetResult(True)


def find_good_set(h: Graph, b: set[int], k_target: int, c_big: int) -> tuple[int, ...]:
    """Greedy good subset of b: drop vertices near short cycles, then add
    candidates in ascending id whose (2C+2)-ball avoids the current set.
    Returns the first k_target vertices found, or the maximal set if the
    greedy runs out (a shortfall, not an error)."""
    blocked = _balls(h, _short_cycle_vertices(h, c_big), c_big)
    chosen: list[int] = []
    covered: set[int] = set()
    for v in sorted(int(u) for u in b):
        if v in blocked or v in covered:
            continue
        chosen.append(v)
        if len(chosen) == k_target:
            break
        covered |= _balls(h, {v}, 2 * c_big + 2)
    return tuple(chosen)
