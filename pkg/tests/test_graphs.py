import itertools
import math

import numpy as np
import pytest

from extractomat.errors import (BudgetExceededError, InvalidInputError,
                                TargetUnreachableError)
from extractomat.graphs import (BipartiteGraph, search_gadget,
                                verify_and_disperser, verify_expander,
                                verify_extractor_graph)


def _identity_graph(n):
    return BipartiteGraph(n, n, 1, tuple((i,) for i in range(n)))


def _complete_graph(l, r):
    return BipartiteGraph(l, r, r, tuple(tuple(range(r)) for _ in range(l)))


def test_graph_invariants():
    with pytest.raises(InvalidInputError):
        BipartiteGraph(2, 3, 2, ((0, 0), (1, 2)))  # multi-edge
    with pytest.raises(InvalidInputError):
        BipartiteGraph(2, 3, 2, ((0, 3), (1, 2)))  # out of range
    with pytest.raises(InvalidInputError):
        BipartiteGraph(3, 3, 1, ((0,), (1,)))      # wrong length


def test_identity_graph_is_disperser_for_every_delta():
    g = _identity_graph(6)
    for delta in (1 / 6, 0.5, 5 / 6):
        assert verify_and_disperser(g, delta, delta).ok


def test_complete_graph_fails_disperser():
    g = _complete_graph(4, 4)
    verdict = verify_and_disperser(g, 0.5, 0.25)
    assert not verdict.ok
    assert verdict.witness is not None
    assert len(verdict.witness) == 2  # ceil(0.5 * 4)


def test_complete_graph_is_expander_for_all_beta():
    g = _complete_graph(4, 4)
    for beta in (0.25, 0.5, 1.0):
        assert verify_expander(g, beta).ok


def test_star_graph_fails_expander_with_witness():
    # every left vertex points at right vertex 0
    g = BipartiteGraph(4, 4, 1, ((0,), (0,), (0,), (0,)))
    verdict = verify_expander(g, 0.5)
    assert not verdict.ok
    u, v = verdict.witness
    assert 0 not in v  # the violated right subset avoids vertex 0


def test_disperser_verdict_matches_naive(tmp_path):
    rng = np.random.default_rng(3)
    for trial in range(5):
        g = BipartiteGraph.random(12, 8, 2, rng)
        verdict = verify_and_disperser(g, 0.5, 0.125)
        # independent enumeration
        need = math.ceil(0.125 * 12)
        ok = True
        for V in itertools.combinations(range(8), 4):
            inside = sum(1 for nbrs in g.adj if set(nbrs) <= set(V))
            if inside < need:
                ok = False
                break
        assert verdict.ok == ok


def test_budget_exceeded():
    g = _complete_graph(10, 20)
    with pytest.raises(BudgetExceededError):
        verify_and_disperser(g, 0.5, 0.5, budget=10)


def test_rounding_is_reported():
    g = _identity_graph(5)
    verdict = verify_and_disperser(g, 0.5, 0.3)
    assert verdict.applied["right_subset_size"] == 3  # ceil(2.5)
    assert verdict.applied["left_required"] == 2      # ceil(1.5)


def test_extractor_graph_two_sided_deviation_recorded():
    g = _complete_graph(6, 4)
    verdict = verify_extractor_graph(g, 0, 0.51, alpha=0.5)
    assert verdict.ok
    assert verdict.applied["deviation"] == "two-sided"


def test_search_outputs_reverify():
    g, verdict, rec = search_gadget(
        "and-disperser", {"l": 12, "r": 8, "d": 2, "delta": 0.5,
                          "gamma": 0.125}, seed=3)
    assert verdict.ok
    assert verify_and_disperser(g, 0.5, 0.125).ok
    assert rec.attempts >= 1


def test_search_is_deterministic_in_seed():
    params = {"l": 10, "r": 10, "d": 4, "beta": 0.3}
    g1, _, r1 = search_gadget("expander", params, seed=11)
    g2, _, r2 = search_gadget("expander", params, seed=11)
    assert g1.adj == g2.adj
    assert r1.steps == r2.steps


def test_search_trivially_satisfiable_first_draw():
    # beta = 1 needs an edge between the full sets; any graph qualifies
    g, verdict, rec = search_gadget(
        "expander", {"l": 4, "r": 4, "d": 1, "beta": 1.0}, seed=0)
    assert verdict.ok and rec.steps == 0


def test_search_unreachable():
    # an AND-disperser with d > delta*r cannot exist
    with pytest.raises(TargetUnreachableError):
        search_gadget("and-disperser",
                      {"l": 4, "r": 4, "d": 3, "delta": 0.25, "gamma": 0.25},
                      seed=0, attempts=2, steps=50)


def test_disperser_monotone_in_delta():
    g, _, _ = search_gadget(
        "and-disperser", {"l": 12, "r": 8, "d": 2, "delta": 0.5,
                          "gamma": 0.125}, seed=5)
    for delta in (0.5, 0.625, 0.75, 1.0):
        assert verify_and_disperser(g, delta, 0.125).ok


def test_extractor_graph_search_and_reverify():
    g, verdict, rec = search_gadget(
        "extractor-graph",
        {"l": 16, "r": 8, "d": 4, "K": 2, "eps": 0.25, "alpha": 0.5}, seed=7)
    assert verdict.ok
    assert verify_extractor_graph(g, 2, 0.25, 0.5).ok


def test_json_roundtrip():
    g = _identity_graph(4)
    g2 = BipartiteGraph.from_json(g.to_json())
    assert g2 == g
