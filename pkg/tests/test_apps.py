from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmine.apps import (
    CliqueFinding,
    Domain,
    FrequentSubgraphMining,
    MotifCounting,
    frequent_patterns,
    is_clique,
    motif_counts,
    support,
)
from graphmine.canonical import iter_canonical
from graphmine.embedding import EDGE_INDUCED, VERTEX_INDUCED, Embedding
from graphmine.engine import Context, EngineConfig, run
from graphmine.graph import InputGraph
from graphmine.pattern import Canonicalizer, Pattern
from oracles import (
    cliques_upto,
    fsm_oracle,
    motif_census,
    pattern_graph,
    random_graph,
    relabel_strings,
)

BLUE_YELLOW = Pattern((0, 1), ((0, 1, 0),), True)


def test_fsm_bicolor_single_edge(bicolor):
    result = run(bicolor, FrequentSubgraphMining(2, 1), EngineConfig(workers=1))
    dom = result.aggregates[1][BLUE_YELLOW]
    assert dom.slots == (frozenset({0, 2}), frozenset({1, 3}))
    assert support(dom) == 2
    assert frequent_patterns(result, 2)[BLUE_YELLOW] == 2


def test_fsm_threshold_one_keeps_everything(bicolor):
    result = run(bicolor, FrequentSubgraphMining(1), EngineConfig(workers=1))
    # every connected edge subset is output exactly once
    assert len(result.output_values) == 4 + 5 + 4 + 1


def test_support_examples():
    assert support(Domain((frozenset({1, 3}), frozenset({2, 4})))) == 2
    assert support(Domain((frozenset({5}), frozenset({6})))) == 1
    assert support(Domain(())) == 0
    # star K(1,3): centre A, leaves B; pattern A-B has support 1 (min, not sum)
    star = InputGraph.from_edges([0, 1, 1, 1], [(0, 1), (0, 2), (0, 3)])
    result = run(star, FrequentSubgraphMining(1, 1), EngineConfig(workers=1))
    dom = result.aggregates[1][Pattern((0, 1), ((0, 1, 0),), True)]
    assert [len(s) for s in dom.slots] == [1, 3]
    assert support(dom) == 1


def test_fsm_parameter_checks():
    with pytest.raises(ValueError):
        FrequentSubgraphMining(0)
    with pytest.raises(ValueError):
        MotifCounting(0)
    with pytest.raises(ValueError):
        CliqueFinding(0)


def _match_fsm(g: InputGraph, threshold: int, max_edges: int) -> None:
    result = run(g, FrequentSubgraphMining(threshold, max_edges), EngineConfig(workers=1))
    class_of, classes, supports = fsm_oracle(g, threshold, max_edges)
    n_before = len(classes.reps)
    got = {}
    for p, s in frequent_patterns(result, threshold).items():
        got[classes.classify(relabel_strings(pattern_graph(p)))] = s
    assert len(classes.reps) == n_before
    assert got == {c: s for c, s in supports.items() if s >= threshold}
    outputs = {frozenset(e.words) for e in result.output_values}
    assert len(outputs) == len(result.output_values)
    assert outputs == {s for s, c in class_of.items() if supports[c] >= threshold}


def test_fsm_random_fifteen_vertices():
    g = random_graph(random.Random(15), 15, 0.2, labels=2)
    _match_fsm(g, 3, 3)


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 12), theta=st.integers(1, 3))
def test_fsm_matches_oracle(seed, n, theta):
    g = random_graph(random.Random(seed), n, 0.25, labels=2, edge_labels=2)
    _match_fsm(g, theta, 3)


def test_motifs_triangle_and_path(triangle, path3):
    counts = motif_counts(run(triangle, MotifCounting(3), EngineConfig(workers=1)))
    assert {(p.size, len(p.edges)): c for p, c in counts.items()} == {(1, 0): 3, (2, 1): 3, (3, 3): 1}
    counts = motif_counts(run(path3, MotifCounting(3), EngineConfig(workers=1)))
    assert {(p.size, len(p.edges)): c for p, c in counts.items() if p.size == 3} == {(3, 2): 1}


def test_motifs_ignore_labels_unless_asked(bicolor):
    plain = motif_counts(run(bicolor, MotifCounting(2), EngineConfig(workers=1)))
    labeled = motif_counts(run(bicolor, MotifCounting(2, labeled=True), EngineConfig(workers=1)))
    assert len(plain) == 2
    assert len(labeled) == 4  # two vertex labels, blue-blue and blue-yellow edges


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 30), ms=st.integers(1, 5))
def test_motif_counts_match_census(seed, n, ms):
    rng = random.Random(seed)
    p = 2.0 / max(n, 1) if ms >= 4 else 0.2
    g = random_graph(rng, n, p)
    counts = motif_counts(run(g, MotifCounting(ms), EngineConfig(workers=1)))
    classes, expected = motif_census(g, ms)
    n_before = len(classes.reps)
    got = {classes.classify(relabel_strings(pattern_graph(p))): c for p, c in counts.items()}
    assert len(classes.reps) == n_before
    assert got == expected
    assert sum(1 for p in counts if p.size == 3) <= 2


def test_cliques_examples(k4, bicolor):
    result = run(k4, CliqueFinding(5), EngineConfig(workers=1))
    assert len(result.output_values) == 15
    square = InputGraph.from_edges([0] * 4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    result = run(square, CliqueFinding(5), EngineConfig(workers=1))
    assert max(len(e.words) for e in result.output_values) == 2
    result = run(bicolor, CliqueFinding(5), EngineConfig(workers=1))
    assert [e.words for e in result.output_values if len(e.words) >= 3] == [(0, 1, 2)]


def test_is_clique_examples(k4, path3, bicolor):
    assert is_clique(k4, Embedding(VERTEX_INDUCED, (0, 1, 2, 3)))
    assert not is_clique(path3, Embedding(VERTEX_INDUCED, (0, 1, 2)))
    assert is_clique(bicolor, Embedding(VERTEX_INDUCED, (0, 1, 2)))
    with pytest.raises(ValueError):
        is_clique(bicolor, Embedding(EDGE_INDUCED, (0, 1)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 25), p=st.floats(0.1, 0.6), ms=st.integers(1, 5))
def test_cliques_match_oracle(seed, n, p, ms):
    g = random_graph(random.Random(seed), n, p)
    result = run(g, CliqueFinding(ms), EngineConfig(workers=1))
    found = [frozenset(e.words) for e in result.output_values]
    assert len(found) == len(set(found))
    assert set(found) == cliques_upto(g, ms)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 10), p=st.floats(0.2, 0.8))
def test_domain_alignment_under_reordering(seed, n, p):
    """Merged domains per canonical pattern ignore the visit order of embeddings."""
    rng = random.Random(seed)
    g = random_graph(rng, n, p, labels=2)
    app = FrequentSubgraphMining(1)
    table = Canonicalizer()
    ctx = Context(g, app, 1, {}, table)

    def canonical_domain(e: Embedding) -> tuple[Pattern, Domain]:
        canon, mapping = table(ctx.pattern(e))
        return canon, app.domains(e, ctx).remap_slots(mapping)

    for e in iter_canonical(g, EDGE_INDUCED, 3):
        words = list(e.words)
        rng.shuffle(words)
        order = [words.pop(0)]
        while words:
            touching = [
                w for w in words
                if any(set(g.edges[w][:2]) & set(g.edges[x][:2]) for x in order)
            ]
            pick = rng.choice(touching)
            words.remove(pick)
            order.append(pick)
        c1, d1 = canonical_domain(e)
        c2, d2 = canonical_domain(Embedding(EDGE_INDUCED, tuple(order)))
        assert c1 == c2 and d1 == d2
