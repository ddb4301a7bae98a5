import json
from dataclasses import replace

import pytest

from corrmatch.admissibility import (
    ConstantsInfeasibleError,
    check_admissible,
    default_constants,
    find_good_set,
    is_good_set,
    simple_cycle_counts,
)
from corrmatch.density import densest_subgraph_bruteforce
from corrmatch.graphs import Graph, sample_er
from corrmatch.rng import stream


def k4(n=4):
    return Graph(n, [(i, j) for i in range(4) for j in range(i + 1, 4)])


def lenient_constants(n=50, **overrides):
    # alpha = 0.1 leaves generous room (1/alpha = 10) for xi overrides
    base = default_constants(0.1, 1.2, max(n, 16))
    caps = dict(
        n=n,
        degree_cap=10**6,
        small_set_cap=2,
        tiny_component_cap=3,
        cycle_len_cap=6,
    )
    caps.update(overrides)
    return replace(base, **caps)


# -- constants --


def test_default_constants_worked_example():
    c = default_constants(0.5, 1.5, 2000)
    assert c.xi == pytest.approx(1.75)
    # smallest integer C with 0.5 * (1.75 + 1/C) < 1 strictly
    assert c.c_big == 5
    assert 0.5 * (1.75 + 1 / 4) == pytest.approx(1.0)  # C = 4 sits exactly at the wall
    c.validate()


def test_default_constants_all_inequalities_hold():
    for alpha, rho in [(0.3, 1.3), (0.5, 1.4), (0.7, 1.2), (0.9, 1.05)]:
        c = default_constants(alpha, rho, 5000)
        c.validate()  # raises on violation
        assert 1.0 - alpha < c.beta < 1.0


def test_zeta_tightens_as_alpha_approaches_one():
    loose = default_constants(0.5, 1.3, 1000)
    tight = default_constants(0.95, 1.02, 1000)
    assert tight.zeta < loose.zeta
    assert tight.zeta < 1.0 / 0.95


def test_infeasible_constants_signal_above_threshold():
    with pytest.raises(ConstantsInfeasibleError):
        default_constants(0.5, 2.2, 1000)   # rho_hat >= 1/alpha
    with pytest.raises(ConstantsInfeasibleError):
        default_constants(0.999, 1.0, 1000)  # no grid zeta below 1/alpha


def test_good_set_size_is_floor_n_beta():
    c = default_constants(0.5, 1.4, 2000)
    assert c.good_set_size == int(2000**c.beta)


# -- check_admissible --


def test_empty_graph_is_admissible():
    report = check_admissible(Graph(10), lenient_constants(10))
    assert report.admissible
    assert not report.undecided


def test_k4_fails_density_cap_at_xi_one():
    consts = replace(lenient_constants(4), xi=1.0)
    report = check_admissible(k4(), consts)
    res = report.conditions["density_cap"]
    assert res.status == "fail"
    assert sorted(res.witness["subset"]) == [0, 1, 2, 3]
    assert res.witness["edges"] == 6
    assert report.revalidate(k4(), consts)


def test_small_set_density_condition():
    # K4 plus a long pendant path: zeta = 1.25 violated by the K4 itself
    edges = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    edges += [(3, 4), (4, 5), (5, 6)]
    g = Graph(7, edges)
    consts = replace(lenient_constants(7), xi=1.9, zeta=1.25, small_set_cap=4)
    report = check_admissible(g, consts)
    res = report.conditions["small_set_density"]
    assert res.status == "fail"
    assert sorted(res.witness["subset"]) == [0, 1, 2, 3]
    assert report.revalidate(g, consts)


def test_density_condition_agrees_with_bruteforce_small_n():
    rng = stream(23, 0)
    consts_base = lenient_constants(12)
    for _ in range(25):
        g = sample_er(12, 0.25, rng)
        report = check_admissible(g, consts_base)
        dens = densest_subgraph_bruteforce(g)
        assert (report.conditions["density_cap"].status == "pass") == (
            float(dens.density) <= consts_base.xi
        )


def test_max_degree_condition():
    star = Graph(6, [(0, i) for i in range(1, 6)])
    consts = lenient_constants(6, degree_cap=5)
    report = check_admissible(star, consts)
    res = report.conditions["max_degree"]
    assert res.status == "fail" and res.witness == {"vertex": 0, "degree": 5}
    assert report.revalidate(star, consts)
    ok = check_admissible(star, lenient_constants(6, degree_cap=6))
    assert ok.conditions["max_degree"].status == "pass"


def test_local_unicyclicity_condition():
    # two triangles sharing an edge: 4 vertices, 5 edges, two cycles
    g = Graph(6, [(0, 1), (1, 2), (0, 2), (1, 3), (2, 3)])
    consts = lenient_constants(6, tiny_component_cap=4)
    report = check_admissible(g, consts)
    res = report.conditions["local_unicyclicity"]
    assert res.status == "fail"
    assert res.witness["edges"] > len(res.witness["subset"])
    assert report.revalidate(g, consts)
    # single triangle passes (one cycle only)
    tri = Graph(4, [(0, 1), (1, 2), (0, 2)])
    assert check_admissible(tri, consts).conditions["local_unicyclicity"].status == "pass"


def test_cycle_count_condition_and_witness():
    # three disjoint triangles against a cap of 2
    edges = []
    for b in (0, 3, 6):
        edges += [(b, b + 1), (b + 1, b + 2), (b, b + 2)]
    g = Graph(9, edges)
    consts = lenient_constants(9)
    consts = replace(consts, delta1=1e-9, n=2)  # caps collapse to ceil(2^eps) = 2
    assert consts.cycle_count_cap(3) == 2
    report = check_admissible(g, consts)
    res = report.conditions["cycle_counts"]
    assert res.status == "fail"
    assert res.witness == {"length": 3, "count": 3, "cap": 2}
    assert report.revalidate(g, consts)


def test_budget_exhaustion_reports_undecided():
    g = sample_er(60, 0.15, stream(77, 0))
    consts = lenient_constants(60, small_set_cap=30, tiny_component_cap=10)
    consts = replace(consts, xi=8.0, zeta=1.01, c_big=2, delta1=0.1)
    report = check_admissible(g, consts, set_budget=5, cycle_budget=5)
    statuses = {name: r.status for name, r in report.conditions.items()}
    assert "undecided" in statuses.values()
    assert not report.admissible


def test_report_json_schema():
    report = check_admissible(Graph(5), lenient_constants(5))
    payload = json.loads(report.to_json())
    assert set(payload) == {
        "density_cap",
        "small_set_density",
        "max_degree",
        "local_unicyclicity",
        "cycle_counts",
    }
    for entry in payload.values():
        assert entry["status"] in ("pass", "fail", "undecided")
        assert "witness" in entry


def test_simple_cycle_counts_triangle_with_chord():
    g = Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3), (1, 3)])
    counts, done = simple_cycle_counts(g, 4)
    assert done
    assert counts[3] == 2 and counts[4] == 1


# -- good sets --


def test_good_set_trivial_cases():
    forest = Graph(6, [(0, 1), (2, 3)])
    assert is_good_set(forest, {5}, c_big=2).ok
    assert not is_good_set(forest, {0, 1}, c_big=2).ok  # adjacent pair


def test_good_set_cycle_distance_boundary():
    c = 3
    # triangle 0-1-2, pendant path of length c from vertex 2: endpoint at
    # distance exactly c from the cycle, which is not allowed (> c needed)
    edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5)]
    g = Graph(7, edges)
    res = is_good_set(g, {5}, c_big=c)
    assert not res.ok and res.witness["vertex"] == 5
    # one step farther is fine
    edges2 = edges + [(5, 6)]
    g2 = Graph(8, edges2)
    assert is_good_set(g2, {6}, c_big=c).ok


def test_good_set_pairwise_distance_boundary():
    c = 2
    # path with 2c+2 edges: endpoints exactly 2c+2 apart -> not good
    m = 2 * c + 2
    g = Graph(m + 1, [(i, i + 1) for i in range(m)])
    assert not is_good_set(g, {0, m}, c_big=c).ok
    # path with 2c+3 edges: endpoints 2c+3 apart -> good
    g2 = Graph(m + 2, [(i, i + 1) for i in range(m + 1)])
    assert is_good_set(g2, {0, m + 1}, c_big=c).ok


def test_find_good_set_on_empty_graph_returns_k():
    g = Graph(9)
    got = find_good_set(g, set(range(9)), k_target=4, c_big=3)
    assert got == (0, 1, 2, 3)
    assert is_good_set(g, set(got), 3).ok


def test_find_good_set_long_path_endpoints():
    c = 2
    m = 2 * c + 3
    g = Graph(m + 1, [(i, i + 1) for i in range(m)])
    got = find_good_set(g, {0, m}, k_target=2, c_big=c)
    assert got == (0, m)


def test_find_good_set_output_always_good_and_monotone():
    rng = stream(44, 0)
    for _ in range(15):
        n = int(rng.integers(8, 40))
        g = sample_er(n, 2.0 / n, rng)
        b = {int(v) for v in rng.choice(n, size=n // 2, replace=False)}
        got = find_good_set(g, b, k_target=3, c_big=2)
        assert set(got) <= b
        assert is_good_set(g, set(got), 2).ok
        # shrinking preserves goodness
        if len(got) >= 2:
            assert is_good_set(g, set(got[:-1]), 2).ok


def test_find_good_set_reports_shortfall_not_error():
    g = Graph(3, [(0, 1), (1, 2)])
    got = find_good_set(g, {0, 1, 2}, k_target=3, c_big=1)
    assert len(got) < 3  # everything is within 2C+2 of vertex 0
