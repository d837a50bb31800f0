import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxcomm.core import BudgetExceeded, SortedTuple, iterated_log, substream
from ctxcomm.reductions import (
    CoinFlipOracle,
    ExactSubsetOracle,
    Graph,
    Pi1Params,
    ShiftGameInstance,
    Side,
    StretchParams,
    StretchShape,
    chromatic_lower_bound,
    chromatic_number_exact,
    coordinate_law_direct,
    graph_from_text,
    graph_to_text,
    odd_shift_instances,
    parity_difference_counts,
    prefix_suffix_scores,
    product_law_counts,
    protocol_pi_prime,
    random_sorted_tuple,
    scores,
    shift_game_experiment,
    shift_graph,
    stretch,
    stretch_worked_example,
    verify_indep_coord,
)

WORKED_EXAMPLE = {
    "sigma": (3, 4, 7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21),
    "phi": (3, 4, 7, 8, 9, 10, 13, 14, 19, 20, 21),
    "psi": (7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21),
}


def test_stretch_worked_example():
    assert stretch_worked_example() == WORKED_EXAMPLE


@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_stretch_preserves_containment(d, r, a, data):
    t = data.draw(st.integers(1, d))
    values = sorted(data.draw(st.sets(st.integers(1, d), min_size=t, max_size=t)))
    sigma = SortedTuple(values, d)
    sp = StretchParams(r, a, d)
    big, W = stretch(sigma, sp)
    assert len(big) == t * r + a and big.values == W.indices
    for part in (sigma.prefix(), sigma.suffix()):
        _, Wp = stretch(part, sp)
        assert set(Wp.indices) <= set(W.indices)
        assert len(set(W.indices) - set(Wp.indices)) == r


def test_stretch_rejects_out_of_range():
    with pytest.raises(ValueError):
        stretch(SortedTuple([5], 5), StretchParams(1, 0, 4))


def test_shift_graph_single_element_is_complete():
    for m in range(1, 7):
        g = shift_graph(m, 1)
        assert g.edge_count() == m * (m - 1) // 2


def test_shift_graph_adjacency_examples():
    g = shift_graph(4, 3)
    idx = {v: i for i, v in enumerate(g.vertices)}
    assert idx[2, 3, 4] in g.adjacency[idx[1, 2, 3]]
    assert idx[1, 2, 4] not in g.adjacency[idx[1, 2, 3]]


@pytest.mark.parametrize("m,t", [(5, 2), (6, 3), (7, 3), (8, 4), (7, 5)])
def test_shift_graph_degree_bound(m, t):
    g = shift_graph(m, t)
    assert max(g.degree(v) for v in range(len(g))) <= 2 * (m - t)


def test_shift_graph_budget():
    with pytest.raises(BudgetExceeded):
        shift_graph(30, 15)


def test_chromatic_examples():
    assert chromatic_number_exact(shift_graph(4, 1)) == 4
    assert chromatic_number_exact(Graph.from_edges([1, 2, 3], [])) == 1
    assert chromatic_number_exact(shift_graph(6, 3)) >= iterated_log(2, 6)
    c5 = Graph.from_edges(range(5), [(i, (i + 1) % 5) for i in range(5)])
    assert chromatic_number_exact(c5) == 3
    petersen = Graph.from_edges(range(10), [(i, (i + 1) % 5) for i in range(5)]
                                + [(i, i + 5) for i in range(5)]
                                + [(5 + i, 5 + (i + 2) % 5) for i in range(5)])
    assert chromatic_number_exact(petersen) == 3


def test_chromatic_budget():
    with pytest.raises(BudgetExceeded):
        chromatic_number_exact(Graph.from_edges(range(70), []))


def test_chromatic_bound_on_small_odd_instances():
    for m, t in odd_shift_instances(max_vertices=35, max_m=8):
        assert chromatic_number_exact(shift_graph(m, t)) >= chromatic_lower_bound(m, t)


def test_graph_text_round_trip():
    g = shift_graph(5, 3)
    back = graph_from_text(graph_to_text(g))
    assert back.vertices == g.vertices and back.adjacency == g.adjacency
    with pytest.raises(ValueError):
        graph_from_text("(1,2): (3,4)\n")


def test_prefix_suffix_score_examples():
    lam = SortedTuple([1, 3, 4], 6)
    assert prefix_suffix_scores(lam, lam, lam, [1] * 6, [1] * 6) == (1, 1)
    rng = substream(2)
    for _ in range(50):
        X, Y = 1 - 2 * rng.integers(0, 2, (2, 6))
        g, h = prefix_suffix_scores(lam, lam, lam, X, Y)
        assert g == h
    with pytest.raises(ValueError):
        prefix_suffix_scores(lam, SortedTuple([1, 2], 6), lam, [1] * 6, [1] * 6)


def test_scores_match_loop():
    rng = substream(5)
    lam, other = SortedTuple([1, 2, 5], 5), SortedTuple([2, 3, 4], 5)
    x = rng.integers(0, 2, (40, 5), dtype=np.uint8)
    y = rng.integers(0, 2, (40, 5), dtype=np.uint8)
    want = [int(sum((-1) ** int(x[i, a - 1] ^ y[i, b - 1]) for a, b in zip(lam, other)) >= 0)
            for i in range(40)]
    assert scores(lam, other, x, y).tolist() == want


def test_pi1_params_derivation():
    p = Pi1Params.from_delta(0.25, 0.1, 0.1, alpha=1.0)
    assert (p.ell, p.t, p.r, p.a, p.s, p.k) == (6400, 30, 64, 4480, 6336, 400)
    assert p.s == (p.t - 1) * p.r + p.a
    with pytest.raises(ValueError):
        Pi1Params(0.25, 0.1, 105, 0.5)


def _small_params():
    return Pi1Params(0.25, 0.1, 100, 0.5)


def test_pi_prime_bit_accounting():
    p = _small_params()
    assert (p.t, p.r, p.a, p.s, p.k) == (3, 10, 70, 90, 16)
    sigma = SortedTuple([1, 3, 5], 6)
    run = protocol_pi_prime(ShiftGameInstance(sigma, Side.PREFIX), p,
                            ExactSubsetOracle(cost=p.ell), substream(1))
    assert run.bits_communicated == p.k * (p.ell + p.s)
    with pytest.raises(ValueError):
        protocol_pi_prime(ShiftGameInstance(SortedTuple([1, 2], 6), Side.PREFIX), p,
                          ExactSubsetOracle(), substream(1))


def test_pi_prime_exact_oracle_decides_both_sides():
    p = Pi1Params(0.25, 0.1, 100, 0.25)
    for side, want in ((Side.PREFIX, "YES"), (Side.SUFFIX, "NO")):
        answers = [protocol_pi_prime(ShiftGameInstance(random_sorted_tuple(8, 3, substream(3, i)),
                                                       side), p, ExactSubsetOracle(),
                                     substream(4, i)).answer for i in range(40)]
        assert answers.count(want) >= 34


def test_pi_prime_coin_flip_is_null():
    p = _small_params()
    rep = shift_game_experiment(p, 8, 400, Side.PREFIX, "coin", seed=11)
    assert abs(rep.estimate - 0.5) <= 3 * rep.stderr + 0.05


def test_coin_oracle_ignores_inputs():
    box = CoinFlipOracle(substream(0))
    out = box((None, np.zeros((1000, 4), np.uint8)), (None, np.zeros((1000, 4), np.uint8)))
    assert abs(out.mean() - 0.5) < 0.06


def test_indep_coord_toy_instance():
    assert verify_indep_coord(StretchShape(2, 1, 1))


def test_indep_coord_two_routes_agree():
    for shape in (StretchShape(2, 1, 1), StretchShape(2, 2, 1), StretchShape(3, 1, 2),
                  StretchShape(3, 2, 0)):
        for side in Side:
            direct = coordinate_law_direct(shape, side=side)
            hist = parity_difference_counts(shape, side=side)
            Lambda_size = shape.s
            by_c = {}
            for pattern, count in direct.items():
                c = sum(int(g != h) << j for j, (g, h) in enumerate(pattern))
                by_c.setdefault(c, set()).add(count)
                assert all(gv in (-1, 1) for gv, _ in pattern)
            for c, counts in by_c.items():
                assert len(counts) == 1
            total = sum(direct.values())
            assert total == int(hist.sum()) * 2**Lambda_size
            assert direct == product_law_counts(shape, int(math.log2(total)))


def test_indep_coord_direct_marginals_are_mean_zero():
    direct = coordinate_law_direct(StretchShape(3, 1, 1))
    total = sum(direct.values())
    s = len(next(iter(direct)))
    for j in range(s):
        assert sum(c * pat[j][0] for pat, c in direct.items()) == 0
        assert sum(c * pat[j][1] for pat, c in direct.items()) == 0
    assert total > 0


def test_indep_coord_rejects_single_element():
    with pytest.raises(ValueError):
        verify_indep_coord(StretchShape(1, 1, 1))
