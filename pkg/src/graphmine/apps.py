"""Reference applications: frequent subgraphs, motif counts and cliques."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

from .embedding import (
    EDGE_INDUCED,
    VERTEX_INDUCED,
    Embedding,
    ExplorationMode,
    embedding_vertices,
    visit_order_vertices,
)
from .engine import Application, Context, RunResult
from .graph import InputGraph
from .pattern import Pattern, SlotMapping, automorphisms


@dataclass(frozen=True)
class Domain:
    """Per pattern slot, the distinct graph vertices mapped onto it."""

    slots: tuple[frozenset[int], ...]

    @classmethod
    def merge(cls, domains: Iterable["Domain"]) -> "Domain":
        domains = list(domains)
        if not domains:
            return cls(())
        k = len(domains[0].slots)
        merged: list[set[int]] = [set() for _ in range(k)]
        for d in domains:
            if len(d.slots) != k:
                raise ValueError("cannot merge domains of different pattern sizes")
            for acc, s in zip(merged, d.slots):
                acc |= s
        return cls(tuple(frozenset(s) for s in merged))

    def remap_slots(self, mapping: SlotMapping) -> "Domain":
        out: list[frozenset[int]] = [frozenset()] * len(self.slots)
        for q, c in enumerate(mapping.forward):
            out[c] = self.slots[q]
        return Domain(tuple(out))

    def support(self) -> int:
        return support(self)

    def __str__(self) -> str:
        return "[" + " | ".join(",".join(map(str, sorted(s))) for s in self.slots) + "]"


def support(d: Domain) -> int:
    """Minimum image-based support: smallest slot image."""
    if not d.slots:
        return 0
    return min(len(s) for s in d.slots)


def is_clique(g: InputGraph, e: Embedding) -> bool:
    """Incremental test: the last vertex is adjacent to every earlier one.

    Assumes ``e`` minus its last vertex is already a clique.
    """
    if e.mode is not VERTEX_INDUCED:
        raise ValueError("clique finding runs in vertex-induced mode")
    *head, last = e.words
    return all(g.are_adjacent(v, last) for v in head)


class FrequentSubgraphMining(Application):
    """Frequent patterns under minimum image-based support.

    Every candidate maps its per-slot domains to its pattern; the next step
    keeps embeddings whose merged pattern domain has support >= ``threshold``
    and outputs them. ``max_size`` (edges, in edge mode) stops growth.
    """

    mode = EDGE_INDUCED

    def __init__(self, threshold: int, max_size: int | None = None) -> None:
        if threshold < 1:
            raise ValueError("support threshold must be >= 1")
        if max_size is not None and max_size < 1:
            raise ValueError("max size must be >= 1")
        self.threshold = threshold
        self.max_size = max_size
        self._auts: dict[Pattern, list[tuple[int, ...]]] = {}

    def domains(self, e: Embedding, ctx: Context) -> Domain:
        p = ctx.pattern(e)
        auts = self._auts.get(p)
        if auts is None:
            auts = self._auts[p] = automorphisms(p)
        order = visit_order_vertices(ctx.graph, e)
        return Domain(
            tuple(frozenset(order[a[j]] for a in auts) for j in range(len(order)))
        )

    def filter(self, e: Embedding, ctx: Context) -> bool:
        return True

    def process(self, e: Embedding, ctx: Context) -> None:
        ctx.map(ctx.pattern(e), self.domains(e, ctx))

    def reduce(self, key: Hashable, values: list) -> Domain:
        return Domain.merge(values)

    def aggregation_filter(self, e: Embedding, ctx: Context) -> bool:
        merged = ctx.read_aggregate(ctx.pattern(e))
        return merged is not None and merged.support() >= self.threshold

    def aggregation_process(self, e: Embedding, ctx: Context) -> None:
        ctx.output(e)

    def termination_filter(self, e: Embedding, ctx: Context) -> bool:
        return self.max_size is None or len(e.words) < self.max_size


def frequent_patterns(result: RunResult, threshold: int) -> dict[Pattern, int]:
    """Support of every frequent canonical pattern found in an FSM run."""
    table: dict[Pattern, int] = {}
    for store in result.aggregates.values():
        for key, value in store.items():
            if isinstance(key, Pattern) and isinstance(value, Domain):
                s = value.support()
                if s >= threshold:
                    table[key] = s
    return table


class MotifCounting(Application):
    """Counts of connected induced subgraphs with up to ``max_size`` vertices, per pattern."""

    mode = VERTEX_INDUCED

    def __init__(self, max_size: int, labeled: bool = False) -> None:
        if max_size < 1:
            raise ValueError("max size must be >= 1")
        self.max_size = max_size
        self.use_labels = labeled

    def _num_vertices(self, e: Embedding, ctx: Context) -> int:
        if e.mode is VERTEX_INDUCED:
            return len(e.words)
        return len(embedding_vertices(ctx.graph, e))

    def filter(self, e: Embedding, ctx: Context) -> bool:
        return self._num_vertices(e, ctx) <= self.max_size

    def process(self, e: Embedding, ctx: Context) -> None:
        ctx.map_output(ctx.pattern(e), 1)

    def reduce_output(self, key: Hashable, values: list) -> int:
        return sum(values)

    def termination_filter(self, e: Embedding, ctx: Context) -> bool:
        # edge mode can still add edges among the same vertices
        return e.mode is EDGE_INDUCED or len(e.words) < self.max_size


def motif_counts(result: RunResult) -> Mapping[Pattern, int]:
    return {k: v for k, v in result.output_aggregates.items() if isinstance(k, Pattern)}


class CliqueFinding(Application):
    """Every clique with up to ``max_size`` vertices, output once."""

    mode = VERTEX_INDUCED

    def __init__(self, max_size: int) -> None:
        if max_size < 1:
            raise ValueError("max size must be >= 1")
        self.max_size = max_size

    def filter(self, e: Embedding, ctx: Context) -> bool:
        return is_clique(ctx.graph, e)

    def process(self, e: Embedding, ctx: Context) -> None:
        ctx.output(e)

    def termination_filter(self, e: Embedding, ctx: Context) -> bool:
        return len(e.words) < self.max_size


def fsm_app(threshold: int, max_size: int | None = None) -> FrequentSubgraphMining:
    return FrequentSubgraphMining(threshold, max_size)


def motifs_app(max_size: int, labeled: bool = False) -> MotifCounting:
    return MotifCounting(max_size, labeled)


def cliques_app(max_size: int) -> CliqueFinding:
    return CliqueFinding(max_size)


APPS: dict[str, type[Application]] = {
    "fsm": FrequentSubgraphMining,
    "motifs": MotifCounting,
    "cliques": CliqueFinding,
}


def with_mode(app: Application, mode: ExplorationMode) -> Application:
    app.mode = mode
    return app
