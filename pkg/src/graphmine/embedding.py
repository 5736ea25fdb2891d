"""Embeddings (ordered vertex or edge id sequences) and candidate generation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

from .graph import InputGraph


class ExplorationMode(enum.Enum):
    VERTEX_INDUCED = "vertex"
    EDGE_INDUCED = "edge"


VERTEX_INDUCED = ExplorationMode.VERTEX_INDUCED
EDGE_INDUCED = ExplorationMode.EDGE_INDUCED


@dataclass(frozen=True, slots=True)
class Embedding:
    """A connected subgraph given by ids in visit order.

    ``words`` holds vertex ids in vertex-induced mode and edge ids in
    edge-induced mode. Equality is sequence equality, so automorphic
    embeddings with different visit orders compare unequal.
    """

    mode: ExplorationMode
    words: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.words)

    def extend(self, word: int) -> "Embedding":
        return Embedding(self.mode, self.words + (word,))

    def parent(self) -> "Embedding":
        return Embedding(self.mode, self.words[:-1])


def initial_candidates(g: InputGraph, mode: ExplorationMode) -> Iterator[Embedding]:
    count = g.num_vertices if mode is VERTEX_INDUCED else g.num_edges
    for i in range(count):
        yield Embedding(mode, (i,))


def extend_candidates(g: InputGraph, e: Embedding) -> list[int]:
    """All ids that keep ``e`` connected when appended, ascending, no repeats."""
    words = set(e.words)
    out: set[int] = set()
    if e.mode is VERTEX_INDUCED:
        for v in e.words:
            out.update(g.neighbor_ids(v))
    else:
        for v in embedding_vertices(g, e):
            out.update(g.incident_edges(v))
    out.difference_update(words)
    return sorted(out)


def visit_order_vertices(g: InputGraph, e: Embedding) -> list[int]:
    """Vertices of ``e`` in first-visit order.

    In edge-induced mode each edge contributes its endpoints lower id first.
    """
    if e.mode is VERTEX_INDUCED:
        return list(e.words)
    seen: dict[int, None] = {}
    edges = g.edges
    for eid in e.words:
        a, b, _ = edges[eid]
        seen.setdefault(a)
        seen.setdefault(b)
    return list(seen)


def embedding_vertices(g: InputGraph, e: Embedding) -> frozenset[int]:
    return frozenset(visit_order_vertices(g, e))


def embedding_edges(g: InputGraph, e: Embedding) -> frozenset[int]:
    """Edge ids of the subgraph ``e`` denotes.

    Vertex-induced: every graph edge with both endpoints in the vertex set.
    Edge-induced: exactly the listed edges.
    """
    if e.mode is EDGE_INDUCED:
        return frozenset(e.words)
    vs = set(e.words)
    found = set()
    for v in e.words:
        for u, eid in g.adjacency[v]:
            if u in vs:
                found.add(eid)
    return frozenset(found)


def is_connected(g: InputGraph, e: Embedding) -> bool:
    """Whether the words of ``e`` denote a connected subgraph (order ignored)."""
    if not e.words:
        return False
    if e.mode is VERTEX_INDUCED:
        members = set(e.words)
        start = e.words[0]
        stack, seen = [start], {start}
        while stack:
            v = stack.pop()
            for u in g.neighbor_ids(v):
                if u in members and u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(members)
    members = set(e.words)
    edges = g.edges
    start = e.words[0]
    stack, seen = [start], {start}
    while stack:
        x = stack.pop()
        a, b, _ = edges[x]
        for v in (a, b):
            for y in g.incident_edges(v):
                if y in members and y not in seen:
                    seen.add(y)
                    stack.append(y)
    return len(seen) == len(members)


def render_embedding(g: InputGraph, e: Embedding) -> str:
    if e.mode is VERTEX_INDUCED:
        return " ".join(map(str, e.words))
    edges = g.edges
    return " ".join(f"({edges[x][0]},{edges[x][1]})" for x in e.words)
