"""Coordination-free duplicate elimination for embeddings.

An embedding is canonical when it starts at its smallest id and every later
word is the smallest unvisited id adjacent to the prefix built so far. For
edge-induced embeddings "adjacent" means "shares an endpoint". Every
automorphism class holds exactly one canonical ordering, and dropping the
last word of a canonical embedding leaves a canonical embedding, so workers
can discard non-canonical candidates without talking to each other.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .embedding import VERTEX_INDUCED, Embedding, ExplorationMode
from .graph import InputGraph


class DisconnectedError(ValueError):
    pass


def is_canonical_extension(g: InputGraph, parent: Embedding, v: int) -> bool:
    """Check whether ``parent + v`` is canonical, assuming ``parent`` is.

    ``v`` must be a vertex adjacent to the parent and not already in it.
    """
    words = parent.words
    if words[0] > v:
        return False
    found_neighbour = False
    for w in words:
        if not found_neighbour and g.are_adjacent(w, v):
            found_neighbour = True
        elif found_neighbour and w > v:
            return False
    return True


def _edges_touch(g: InputGraph, x: int, y: int) -> bool:
    a, b, _ = g.edges[x]
    c, d, _ = g.edges[y]
    return a == c or a == d or b == c or b == d


def is_canonical_extension_edges(g: InputGraph, parent: Embedding, x: int) -> bool:
    """Edge-induced counterpart of :func:`is_canonical_extension`."""
    words = parent.words
    if words[0] > x:
        return False
    found_neighbour = False
    for w in words:
        if not found_neighbour and _edges_touch(g, w, x):
            found_neighbour = True
        elif found_neighbour and w > x:
            return False
    return True


def check_extension(g: InputGraph, parent: Embedding, word: int) -> bool:
    if parent.mode is VERTEX_INDUCED:
        return is_canonical_extension(g, parent, word)
    return is_canonical_extension_edges(g, parent, word)


def canonical_extensions(g: InputGraph, e: Embedding) -> list[int]:
    """Ascending extension ids ``w`` for which ``e + w`` is canonical.

    Same answers as filtering the extension candidates through
    :func:`check_extension`, in one pass: a candidate's first neighbor in
    ``e`` is found while scanning ``e`` in order, and the candidate passes iff
    it exceeds ``e``'s first word and every word after that neighbor.
    """
    words = e.words
    n = len(words)
    # suffix_max[i] = max(words[i:]), with -1 past the end
    suffix_max = [-1] * (n + 1)
    for i in range(n - 1, -1, -1):
        w = words[i]
        suffix_max[i] = w if w > suffix_max[i + 1] else suffix_max[i + 1]
    first = words[0]
    members = set(words)
    accepted: list[int] = []
    seen: set[int] = set()
    if e.mode is VERTEX_INDUCED:
        nbr_ids = g.neighbor_ids
        for i, w in enumerate(words):
            bound = suffix_max[i + 1]
            if bound < first:
                bound = first
            for u in nbr_ids(w):
                if u in seen or u in members:
                    continue
                seen.add(u)
                if u > bound:
                    accepted.append(u)
    else:
        edges = g.edges
        incident = g.incident_edges
        for i, x in enumerate(words):
            bound = suffix_max[i + 1]
            if bound < first:
                bound = first
            a, b, _ = edges[x]
            for y in incident(a) + incident(b):
                if y in seen or y in members:
                    continue
                seen.add(y)
                if y > bound:
                    accepted.append(y)
    accepted.sort()
    return accepted


def is_canonical(g: InputGraph, e: Embedding) -> bool:
    """Chained incremental check over every prefix of ``e``.

    Also rejects repeated words and words not adjacent to their prefix.
    """
    words = e.words
    if not words:
        return False
    for k in range(1, len(words)):
        prefix = Embedding(e.mode, words[:k])
        w = words[k]
        if w in prefix.words or not _touches_prefix(g, prefix, w):
            return False
        if not check_extension(g, prefix, w):
            return False
    return True


def _touches_prefix(g: InputGraph, prefix: Embedding, w: int) -> bool:
    if prefix.mode is VERTEX_INDUCED:
        return any(g.are_adjacent(v, w) for v in prefix.words)
    return any(_edges_touch(g, x, w) for x in prefix.words)


def canonical_form(
    g: InputGraph, ids: Iterable[int], mode: ExplorationMode = VERTEX_INDUCED
) -> Embedding:
    """The canonical ordering of a connected id set, built greedily."""
    remaining = set(ids)
    if not remaining:
        raise ValueError("empty id set")
    order = [min(remaining)]
    remaining.discard(order[0])
    frontier: set[int] = set()

    def grow(w: int) -> None:
        if mode is VERTEX_INDUCED:
            frontier.update(u for u in g.neighbor_ids(w) if u in remaining)
        else:
            a, b, _ = g.edges[w]
            frontier.update(y for y in g.incident_edges(a) + g.incident_edges(b) if y in remaining)

    grow(order[0])
    while remaining:
        if not frontier:
            raise DisconnectedError(f"ids {sorted(set(order) | remaining)} are not connected")
        nxt = min(frontier)
        frontier.discard(nxt)
        remaining.discard(nxt)
        order.append(nxt)
        grow(nxt)
    return Embedding(mode, tuple(order))


def iter_canonical(
    g: InputGraph, mode: ExplorationMode, max_size: int
) -> Iterator[Embedding]:
    """Depth-first enumeration of every canonical embedding up to ``max_size`` words."""
    count = g.num_vertices if mode is VERTEX_INDUCED else g.num_edges
    stack = [Embedding(mode, (i,)) for i in range(count - 1, -1, -1)]
    while stack:
        e = stack.pop()
        yield e
        if len(e.words) < max_size:
            for w in reversed(canonical_extensions(g, e)):
                stack.append(e.extend(w))


def is_valid_canonical_extension(g: InputGraph, parent: Embedding, word: int) -> bool:
    """Like :func:`check_extension` but also rejects repeated or non-adjacent words.

    Used when decoding stored sequences, where ``word`` is not known to come
    from the extension candidates.
    """
    words = parent.words
    if word < words[0] or word in words:
        return False
    if parent.mode is VERTEX_INDUCED:
        def touches(w: int) -> bool:
            return g.are_adjacent(w, word)
    else:
        def touches(w: int) -> bool:
            return _edges_touch(g, w, word)
    found_neighbour = False
    for w in words:
        if not found_neighbour and touches(w):
            found_neighbour = True
        elif found_neighbour and w > word:
            return False
    return found_neighbour
