from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmine.apps import CliqueFinding, FrequentSubgraphMining, MotifCounting
from graphmine.embedding import EDGE_INDUCED, VERTEX_INDUCED, Embedding
from graphmine.engine import (
    Application,
    AutomorphismInvarianceError,
    CallbackError,
    Context,
    EngineConfig,
    local_reduce,
    one_level_reduce,
    run,
    two_level_reduce,
)
from graphmine.graph import InputGraph
from graphmine.pattern import Canonicalizer, Pattern, PatternTooLarge
from oracles import connected_vertex_sets, random_graph


class EdgeCount(Application):
    """Maps every single-edge embedding to its quick pattern."""

    mode = EDGE_INDUCED

    def filter(self, e, ctx):
        return len(e.words) == 1

    def process(self, e, ctx):
        ctx.map(ctx.pattern(e), 1)

    def reduce(self, key, values):
        return sum(values)


class Reader(Application):
    """Vertex mode: counts per pattern, read back one step later."""

    def __init__(self):
        self.seen: list[tuple[int, object, object]] = []

    def filter(self, e, ctx):
        return len(e.words) <= 2

    def process(self, e, ctx):
        ctx.map("total", 1)
        ctx.map(ctx.pattern(e), 1)

    def reduce(self, key, values):
        return sum(values)

    def aggregation_filter(self, e, ctx):
        self.seen.append((ctx.step, ctx.read_aggregate("total"), ctx.read_aggregate("nope")))
        return True


def test_cliques_bicolor(bicolor):
    result = run(bicolor, CliqueFinding(5), EngineConfig(workers=1))
    by_size = Counter(len(e.words) for e in result.output_values)
    assert by_size == {1: 4, 2: 4, 3: 1}
    assert "0 1 2" in result.outputs


def test_motifs_three_vertices_two_patterns():
    # a triangle plus a pendant vertex: has both a triangle and a wedge
    g = InputGraph.from_edges([0] * 4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    result = run(g, MotifCounting(3), EngineConfig(workers=1))
    size3 = {p: c for p, c in result.output_aggregates.items() if p.size == 3}
    assert len(size3) == 2
    assert sorted(size3.values()) == [1, 2]
    assert result.steps[2].quick_patterns <= 3
    assert result.steps[2].canonical_patterns == 2


def test_empty_graph():
    result = run(InputGraph.from_edges([], []), CliqueFinding(3), EngineConfig(workers=1))
    assert result.steps == [] and result.outputs == []


def test_map_visible_next_step(bicolor):
    app = Reader()
    result = run(bicolor, app, EngineConfig(workers=1))
    # step 2 sees the 4 single vertices mapped in step 1, and nothing for unknown keys
    assert {(s, t, n) for s, t, n in app.seen if s == 2} == {(2, 4, None)}
    assert result.aggregates[1]["total"] == 4
    assert result.aggregates[2]["total"] == 4


def test_two_level_bicolor_single_edges(bicolor):
    result = run(bicolor, EdgeCount(), EngineConfig(workers=1, record_map_calls=True))
    calls = result.map_calls[1]
    # blue-blue (0,2) plus three blue-yellow edges in two orientations
    quick = Counter(k for k, _ in calls)
    assert quick[Pattern((0, 1), ((0, 1, 0),))] == 2
    assert quick[Pattern((1, 0), ((0, 1, 0),))] == 1
    agg = result.aggregates[1]
    blue_yellow = Pattern((0, 1), ((0, 1, 0),), True)
    assert agg[blue_yellow] == 3
    assert result.steps[0].canonization_calls == result.steps[0].quick_patterns == 3


def test_single_quick_pattern_single_canonization():
    table = Canonicalizer()
    p = Pattern((0, 0), ((0, 1, 0),))
    out = two_level_reduce([{p: 5}, {p: 7}], lambda k, v: sum(v), table)
    assert table.calls == 1
    assert out == {Pattern((0, 0), ((0, 1, 0),), True): 12}


def test_unlabeled_three_quick_two_canonical():
    g = random_graph(random.Random(1), 25, 0.3)
    result = run(g, MotifCounting(3), EngineConfig(workers=1))
    step3 = result.steps[2]
    assert step3.quick_patterns == 3
    assert step3.canonical_patterns == 2


class RejectAll(Application):
    def filter(self, e, ctx):
        return True

    def process(self, e, ctx):
        pass

    def aggregation_filter(self, e, ctx):
        return False


def test_alpha_rejecting_everything_stops(bicolor):
    result = run(bicolor, RejectAll(), EngineConfig(workers=1))
    assert len(result.steps) == 2
    assert result.steps[1].canonical_candidates == 0
    assert result.steps[1].frontier == 0


class Boom(Application):
    def filter(self, e, ctx):
        if len(e.words) == 2:
            raise RuntimeError("kaboom")
        return True

    def process(self, e, ctx):
        pass


def test_callback_error_names_step_and_embedding(bicolor):
    with pytest.raises(CallbackError) as info:
        run(bicolor, Boom(), EngineConfig(workers=1))
    assert "step 2" in str(info.value) and "kaboom" in str(info.value)


def test_pattern_cap_aborts():
    g = InputGraph.from_edges([0] * 4, [(0, 1), (1, 2), (2, 3)])
    with pytest.raises(PatternTooLarge):
        run(g, MotifCounting(4), EngineConfig(workers=1, max_pattern_size=3))


class OrderSensitive(Application):
    """Violates automorphism invariance on purpose."""

    def filter(self, e, ctx):
        return len(e.words) < 3 or e.words[1] < e.words[2]

    def process(self, e, ctx):
        pass

    def termination_filter(self, e, ctx):
        return len(e.words) < 3


def test_debug_harness_flags_order_sensitive_filter():
    g = InputGraph.from_edges([0] * 5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3)])
    cfg = EngineConfig(workers=1, debug_checks=True, debug_sample_every=1)
    with pytest.raises(AutomorphismInvarianceError):
        run(g, OrderSensitive(), cfg)


def test_debug_harness_quiet_for_real_apps(bicolor):
    cfg = EngineConfig(workers=1, debug_checks=True, debug_sample_every=1)
    run(bicolor, CliqueFinding(4), cfg)
    run(bicolor, FrequentSubgraphMining(1, 3), cfg)
    run(bicolor, MotifCounting(4), cfg)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 30), p=st.floats(0.05, 0.4))
def test_no_duplicates_and_completeness(seed, n, p):
    g = random_graph(random.Random(seed), n, p)
    result = run(g, MotifCounting(4), EngineConfig(workers=1, record_processed=True))
    sets = [frozenset(e.words) for e in result.processed]
    assert len(sets) == len(set(sets))
    assert set(sets) == connected_vertex_sets(g, 4)


@pytest.mark.parametrize("storage", ["odag", "list"])
def test_storage_kinds_agree(storage):
    g = random_graph(random.Random(4), 14, 0.3, labels=2)
    ref = run(g, FrequentSubgraphMining(2, 3), EngineConfig(workers=1, storage="list"))
    got = run(g, FrequentSubgraphMining(2, 3), EngineConfig(workers=1, storage=storage, block_size=3))
    assert got.outputs == ref.outputs
    assert got.aggregates == ref.aggregates


def test_odag_round_trip_is_verified():
    g = random_graph(random.Random(9), 18, 0.3, labels=2)
    result = run(g, FrequentSubgraphMining(2, 3), EngineConfig(workers=1, verify_odag=True))
    assert all(s.roundtrip_ok for s in result.steps)


@pytest.mark.parametrize("workers", [2, 3])
def test_worker_count_does_not_change_output(workers):
    g = random_graph(random.Random(2), 16, 0.3, labels=2)
    for app in (lambda: CliqueFinding(4), lambda: MotifCounting(3), lambda: FrequentSubgraphMining(2, 3)):
        one = run(g, app(), EngineConfig(workers=1))
        many = run(g, app(), EngineConfig(workers=workers, block_size=4))
        assert one.outputs == many.outputs
        assert one.output_aggregates == many.output_aggregates
        assert one.aggregates == many.aggregates


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 16), p=st.floats(0.1, 0.6))
def test_two_level_equals_one_level(seed, n, p):
    rng = random.Random(seed)
    g = random_graph(rng, n, p, labels=2)
    result = run(g, FrequentSubgraphMining(1, 3), EngineConfig(workers=1, record_map_calls=True))
    app = FrequentSubgraphMining(1)
    for step, calls in result.map_calls.items():
        # split the calls across pretend workers at random
        shards: list[list] = [[] for _ in range(rng.randint(1, 4))]
        for c in calls:
            rng.choice(shards).append(c)
        partials = [local_reduce(s, app.reduce) for s in shards]
        two = two_level_reduce(partials, app.reduce, Canonicalizer())
        one = one_level_reduce(calls, app.reduce, Canonicalizer())
        assert two == one == result.aggregates[step]


def test_output_file_is_written(tmp_path, bicolor):
    path = tmp_path / "out.txt"
    run(bicolor, CliqueFinding(3), EngineConfig(workers=1, output_path=path, keep_outputs=False))
    lines = path.read_text().splitlines()
    assert lines[:4] == ["0", "1", "2", "3"] and lines[-1] == "0 1 2"


def test_context_pattern_is_usable_key(bicolor):
    ctx = Context(bicolor, EdgeCount(), 1, {}, Canonicalizer())
    p = ctx.pattern(Embedding(VERTEX_INDUCED, (0, 1)))
    assert ctx.read_aggregate(p) is None
