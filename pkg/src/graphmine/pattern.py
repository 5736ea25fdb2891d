"""Quick patterns, canonical patterns and small-graph isomorphism.

A quick pattern is read straight off an embedding: slot ``i`` is the ``i``-th
visited vertex. It is cheap but not unique per isomorphism class. The
canonical pattern is the isomorphism-class representative with the
lexicographically smallest serialization, found by colour refinement plus
individualization over the (small) template graph.
"""

from __future__ import annotations

import struct
from typing import NamedTuple

from .embedding import VERTEX_INDUCED, Embedding, visit_order_vertices
from .graph import InputGraph

DEFAULT_MAX_PATTERN_SIZE = 10


class PatternTooLarge(ValueError):
    pass


class Pattern(NamedTuple):
    """Small labeled graph over slots ``0..k-1``.

    ``edges`` holds ``(a, b, label)`` triples with ``a < b``, sorted.
    ``canonical`` separates canonical patterns from quick patterns so the two
    never collide as aggregation keys.
    """

    labels: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    canonical: bool = False

    @property
    def size(self) -> int:
        return len(self.labels)

    def to_bytes(self) -> bytes:
        k, m = len(self.labels), len(self.edges)
        flat = [c for edge in self.edges for c in edge]
        return struct.pack(f"<I{k}II{3 * m}I", k, *self.labels, m, *flat)

    @classmethod
    def from_bytes(cls, data: bytes, canonical: bool = True) -> "Pattern":
        (k,) = struct.unpack_from("<I", data, 0)
        labels = struct.unpack_from(f"<{k}I", data, 4)
        (m,) = struct.unpack_from("<I", data, 4 + 4 * k)
        flat = struct.unpack_from(f"<{3 * m}I", data, 8 + 4 * k)
        edges = tuple(tuple(flat[i : i + 3]) for i in range(0, 3 * m, 3))
        return cls(tuple(labels), edges, canonical)  # type: ignore[arg-type]

    def render(self) -> str:
        labels = ",".join(map(str, self.labels))
        edges = "".join(f"({a},{b},{lab})" for a, b, lab in self.edges)
        return f"k={len(self.labels)}; labels={labels}; edges={edges}"


class SlotMapping(NamedTuple):
    """Bijection ``forward[quick_slot] = canonical_slot``."""

    forward: tuple[int, ...]

    @classmethod
    def identity(cls, k: int) -> "SlotMapping":
        return cls(tuple(range(k)))

    def inverse(self) -> "SlotMapping":
        inv = [0] * len(self.forward)
        for q, c in enumerate(self.forward):
            inv[c] = q
        return SlotMapping(tuple(inv))

    def apply(self, p: Pattern, canonical: bool = True) -> Pattern:
        return relabel(p, self.forward, canonical)


def relabel(p: Pattern, pos: tuple[int, ...] | list[int], canonical: bool) -> Pattern:
    """Move slot ``i`` of ``p`` to slot ``pos[i]``."""
    labels = [0] * len(p.labels)
    for i, lab in enumerate(p.labels):
        labels[pos[i]] = lab
    edges = []
    for a, b, lab in p.edges:
        x, y = pos[a], pos[b]
        edges.append((x, y, lab) if x < y else (y, x, lab))
    edges.sort()
    return Pattern(tuple(labels), tuple(edges), canonical)


def quick_pattern(g: InputGraph, e: Embedding) -> Pattern:
    vlabels = g.vertex_labels
    if e.mode is VERTEX_INDUCED:
        words = e.words
        k = len(words)
        nbr = g._nbr
        gedges = g.edges
        edges = []
        # slot-major scan emits edges already sorted
        for i in range(k - 1):
            row = nbr[words[i]]
            for j in range(i + 1, k):
                eid = row.get(words[j])
                if eid is not None:
                    edges.append((i, j, gedges[eid][2]))
        return Pattern(tuple([vlabels[w] for w in words]), tuple(edges))
    order = visit_order_vertices(g, e)
    slot = {v: i for i, v in enumerate(order)}
    edges = []
    for x in e.words:
        a, b, lab = g.edges[x]
        sa, sb = slot[a], slot[b]
        edges.append((sa, sb, lab) if sa < sb else (sb, sa, lab))
    edges.sort()
    return Pattern(tuple(vlabels[v] for v in order), tuple(edges))


def _adjacency(p: Pattern) -> list[dict[int, int]]:
    adj: list[dict[int, int]] = [{} for _ in p.labels]
    for a, b, lab in p.edges:
        adj[a][b] = lab
        adj[b][a] = lab
    return adj


def _refine(adj: list[dict[int, int]], colors: list[int]) -> list[int]:
    """Equitable refinement; colours are ranks of invariant signatures."""
    cells = len(set(colors))
    while True:
        sigs = [
            (colors[v], tuple(sorted((colors[u], lab) for u, lab in adj[v].items())))
            for v in range(len(adj))
        ]
        rank = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [rank[s] for s in sigs]
        if len(rank) == cells:
            return new
        cells = len(rank)
        colors = new


def _twins(adj: list[dict[int, int]], labels: tuple[int, ...], u: int, v: int) -> bool:
    # swapping u and v is an automorphism
    if labels[u] != labels[v]:
        return False
    au = {w: lab for w, lab in adj[u].items() if w != v}
    av = {w: lab for w, lab in adj[v].items() if w != u}
    return au == av


def canonical_pattern(
    p: Pattern, max_size: int = DEFAULT_MAX_PATTERN_SIZE
) -> tuple[Pattern, SlotMapping]:
    """Canonical representative of ``p``'s class and a slot bijection onto it."""
    k = len(p.labels)
    if k > max_size:
        raise PatternTooLarge(f"pattern with {k} vertices exceeds the cap of {max_size}")
    if k == 0:
        return Pattern((), (), True), SlotMapping(())
    adj = _adjacency(p)
    label_rank = {lab: i for i, lab in enumerate(sorted(set(p.labels)))}
    start = _refine(adj, [label_rank[lab] for lab in p.labels])

    best_key: tuple | None = None
    best_pos: list[int] = []

    def leaf(pos: list[int]) -> None:
        nonlocal best_key, best_pos
        labels = [0] * k
        for v in range(k):
            labels[pos[v]] = p.labels[v]
        edges = []
        for a, b, lab in p.edges:
            x, y = pos[a], pos[b]
            edges.append((x, y, lab) if x < y else (y, x, lab))
        edges.sort()
        key = (tuple(labels), tuple(edges))
        if best_key is None or key < best_key:
            best_key, best_pos = key, pos

    def search(colors: list[int]) -> None:
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min((c for c, n in counts.items() if n > 1), default=None)
        if target is None:
            leaf(colors)
            return
        cell = [v for v in range(k) if colors[v] == target]
        tried: list[int] = []
        for v in cell:
            if any(_twins(adj, p.labels, v, t) for t in tried):
                continue
            tried.append(v)
            split = [
                2 * c + (1 if c == target and u != v else 0) for u, c in enumerate(colors)
            ]
            search(_refine(adj, split))

    search(start)
    assert best_key is not None
    canon = Pattern(best_key[0], best_key[1], True)
    if (p.labels, p.edges) == best_key:
        return canon, SlotMapping.identity(k)
    return canon, SlotMapping(tuple(best_pos))


def patterns_isomorphic(p1: Pattern, p2: Pattern) -> bool:
    """Label-preserving isomorphism test by plain backtracking."""
    k = len(p1.labels)
    if k != len(p2.labels) or len(p1.edges) != len(p2.edges):
        return False
    if sorted(p1.labels) != sorted(p2.labels):
        return False
    adj1, adj2 = _adjacency(p1), _adjacency(p2)
    image = [-1] * k
    used = [False] * k

    def extend(i: int) -> bool:
        if i == k:
            return True
        for t in range(k):
            if used[t] or p2.labels[t] != p1.labels[i]:
                continue
            if len(adj1[i]) != len(adj2[t]):
                continue
            if all(adj1[i].get(j) == adj2[t].get(image[j]) for j in range(i)):
                image[i], used[t] = t, True
                if extend(i + 1):
                    return True
                image[i], used[t] = -1, False
        return False

    return extend(0)


def automorphisms(p: Pattern) -> list[tuple[int, ...]]:
    """Every label- and edge-preserving slot permutation of ``p``."""
    k = len(p.labels)
    adj = _adjacency(p)
    image = [-1] * k
    used = [False] * k
    found: list[tuple[int, ...]] = []

    def extend(i: int) -> None:
        if i == k:
            found.append(tuple(image))
            return
        for t in range(k):
            if used[t] or p.labels[t] != p.labels[i] or len(adj[t]) != len(adj[i]):
                continue
            if all(adj[i].get(j) == adj[t].get(image[j]) for j in range(i)):
                image[i], used[t] = t, True
                extend(i + 1)
                image[i], used[t] = -1, False

    extend(0)
    return found


class Canonicalizer:
    """Memoizing front end to :func:`canonical_pattern`.

    ``calls`` counts actual canonizations, i.e. cache misses.
    """

    def __init__(self, max_size: int = DEFAULT_MAX_PATTERN_SIZE) -> None:
        self.max_size = max_size
        self.calls = 0
        self._memo: dict[Pattern, tuple[Pattern, SlotMapping]] = {}

    def __call__(self, p: Pattern) -> tuple[Pattern, SlotMapping]:
        hit = self._memo.get(p)
        if hit is None:
            self.calls += 1
            hit = canonical_pattern(p, self.max_size)
            self._memo[p] = hit
        return hit

    def __contains__(self, p: Pattern) -> bool:
        return p in self._memo

    def known(self) -> dict[Pattern, tuple[Pattern, SlotMapping]]:
        return dict(self._memo)
