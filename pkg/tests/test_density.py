from fractions import Fraction

import numpy as np
import pytest

from corrmatch.density import (
    RhoCurve,
    build_rho_curve,
    densest_subgraph_bruteforce,
    densest_subgraph_exact,
    estimate_rho,
    isotonic_fit,
    rho_curve_csv,
    rho_inverse,
)
from corrmatch.graphs import Bijection, Graph, relabel, sample_er
from corrmatch.rng import stream


def test_trivial_examples_both_solvers():
    triangle = Graph(3, [(0, 1), (1, 2), (0, 2)])
    edge = Graph(2, [(0, 1)])
    k4 = Graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    path4 = Graph(4, [(0, 1), (1, 2), (2, 3)])
    for solver in (densest_subgraph_exact, densest_subgraph_bruteforce):
        assert solver(triangle).density == Fraction(1)
        assert solver(edge).density == Fraction(1, 2)
        assert solver(k4).density == Fraction(3, 2)
        assert solver(path4).density == Fraction(3, 4)


def test_no_edges_gives_zero_on_singleton():
    for solver in (densest_subgraph_exact, densest_subgraph_bruteforce):
        res = solver(Graph(5))
        assert res.density == 0 and len(res.best_subset) == 1


def test_density_is_attained_by_reported_subset():
    rng = stream(8, 0)
    for _ in range(30):
        n = int(rng.integers(2, 15))
        g = sample_er(n, float(rng.random()) * 0.7, rng)
        res = densest_subgraph_exact(g)
        k = len(res.best_subset)
        assert res.witness_edges == g.edges_within(res.best_subset)
        assert res.density == Fraction(res.witness_edges, k)


def test_exact_equals_bruteforce_random_corpus():
    rng = stream(9, 0)
    for trial in range(120):
        n = int(rng.integers(2, 14))
        q = float(rng.random()) * 0.8
        g = sample_er(n, q, rng)
        assert densest_subgraph_exact(g).density == densest_subgraph_bruteforce(g).density


def test_solver_invariant_under_relabeling():
    rng = stream(10, 0)
    for _ in range(15):
        n = int(rng.integers(3, 12))
        g = sample_er(n, 0.4, rng)
        pi = Bijection.uniform(n, rng)
        h = relabel(g, pi)
        a = densest_subgraph_exact(g)
        b = densest_subgraph_exact(h)
        assert a.density == b.density
        # the image of a's maximizer attains the optimum in the relabeled graph
        image = [int(pi.forward[v]) for v in a.best_subset]
        assert Fraction(h.edges_within(image), len(image)) == b.density


def test_bruteforce_rejects_large_n():
    with pytest.raises(ValueError):
        densest_subgraph_bruteforce(Graph(21))


def test_estimate_rho_whole_graph_bound():
    est = estimate_rho(3.0, n=400, replicates=5, seed=5)
    floor_val = 3.0 / 2 * (400 - 1) / 400
    assert est.mean >= floor_val - 3 * est.stderr
    assert 0 < est.size_q05 <= est.size_q50 <= 1


def test_rho_curve_monotone_after_isotonic_and_bounds():
    curve = build_rho_curve([1.5, 2.0, 4.0], n=300, replicates=4, seed=6)
    iso = curve.isotonic()
    assert all(iso[i] <= iso[i + 1] + 1e-12 for i in range(len(iso) - 1))
    assert curve.lower_bound_ok(slack=0.1)


def test_isotonic_fit_pools_violators():
    fit = isotonic_fit(np.array([1.0, 3.0, 2.0, 5.0]))
    assert list(fit) == [1.0, 2.5, 2.5, 5.0]
    increasing = isotonic_fit(np.array([1.0, 2.0, 3.0]))
    assert list(increasing) == [1.0, 2.0, 3.0]


def test_rho_inverse_at_knot_and_refusal():
    curve = RhoCurve(
        lambda_grid=(1.0, 2.0, 4.0, 8.0),
        rho_hat=(1.0, 1.4, 2.2, 4.05),
        stderr=(0.01, 0.01, 0.01, 0.02),
        size_q05=(0.05, 0.2, 0.5, 0.8),
        size_q50=(0.08, 0.3, 0.6, 0.86),
        n_used=1000,
        replicates=10,
    )
    est = rho_inverse(1.4, curve)
    assert est.lambda_star == pytest.approx(2.0, abs=0.05)
    assert est.lo <= est.lambda_star <= est.hi
    est1 = rho_inverse(1.0, curve)
    assert est1.lambda_star == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        rho_inverse(5.0, curve)
    with pytest.raises(ValueError):
        rho_inverse(0.5, curve)


def test_rho_inverse_target_two_bounded_by_four():
    # rho(4) >= 2 by the whole-graph bound, so the alpha = 1/2 threshold
    # estimate cannot exceed 4 by more than the band.
    curve = build_rho_curve([1.0, 2.0, 3.0, 4.0, 5.0], n=500, replicates=5, seed=12)
    est = rho_inverse(2.0, curve)
    assert est.lambda_star <= 4.0 + (est.hi - est.lo) + 0.5


def test_rho_curve_csv_schema():
    curve = build_rho_curve([1.0, 2.0], n=100, replicates=3, seed=3)
    lines = rho_curve_csv(curve).strip().splitlines()
    assert lines[0] == "lambda,n,replicates,rho_hat,stderr,size_q05,size_q50"
    assert len(lines) == 3
    assert all(len(row.split(",")) == 7 for row in lines[1:])
