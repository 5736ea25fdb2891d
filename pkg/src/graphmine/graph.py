"""Immutable labeled input graph and its text loader.

File format, one vertex per line::

    <vertex-id> <vertex-label> [<neighbor-id>[:<edge-label>] ...]

Vertex ids appear in ascending order 0..N-1. An undirected edge may be listed
on one or both endpoint lines (labels must then agree). Edge ids are assigned
0..M-1 in order of first appearance. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class GraphFormatError(ValueError):
    """Raised when a graph file (or edge list) violates the input format."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class InputGraph:
    num_vertices: int
    vertex_labels: tuple[int, ...]
    # (endpoint_a, endpoint_b, edge_label) with endpoint_a < endpoint_b
    edges: tuple[tuple[int, int, int], ...]
    # per vertex: ascending (neighbor id, edge id)
    adjacency: tuple[tuple[tuple[int, int], ...], ...]
    _nbr: tuple[dict[int, int], ...] = field(init=False, repr=False, compare=False)
    _nbr_ids: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _incident: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_nbr", tuple(dict(adj) for adj in self.adjacency))
        object.__setattr__(
            self, "_nbr_ids", tuple(tuple(u for u, _ in adj) for adj in self.adjacency)
        )
        object.__setattr__(
            self,
            "_incident",
            tuple(tuple(sorted(eid for _, eid in adj)) for adj in self.adjacency),
        )

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def from_edges(
        cls,
        vertex_labels: Sequence[int],
        edges: Iterable[tuple[int, int] | tuple[int, int, int]],
    ) -> "InputGraph":
        """Build a graph from labels and an edge list; edge ids follow list order."""
        n = len(vertex_labels)
        norm: list[tuple[int, int, int]] = []
        seen: set[tuple[int, int]] = set()
        for edge in edges:
            a, b = edge[0], edge[1]
            label = edge[2] if len(edge) > 2 else 0  # type: ignore[misc]
            if a == b:
                raise GraphFormatError(f"self-loop on vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise GraphFormatError(f"edge ({a},{b}) references a missing vertex")
            a, b = min(a, b), max(a, b)
            if (a, b) in seen:
                raise GraphFormatError(f"duplicate edge ({a},{b})")
            seen.add((a, b))
            norm.append((a, b, label))
        return cls._build(tuple(vertex_labels), norm)

    @classmethod
    def _build(
        cls, labels: tuple[int, ...], edges: list[tuple[int, int, int]]
    ) -> "InputGraph":
        adj: list[list[tuple[int, int]]] = [[] for _ in labels]
        for eid, (a, b, _) in enumerate(edges):
            adj[a].append((b, eid))
            adj[b].append((a, eid))
        return cls(
            num_vertices=len(labels),
            vertex_labels=labels,
            edges=tuple(edges),
            adjacency=tuple(tuple(sorted(lst)) for lst in adj),
        )

    def neighbors(self, v: int) -> tuple[tuple[int, int], ...]:
        return self.adjacency[v]

    def neighbor_ids(self, v: int) -> tuple[int, ...]:
        return self._nbr_ids[v]

    def incident_edges(self, v: int) -> tuple[int, ...]:
        """Ascending ids of edges touching ``v``."""
        return self._incident[v]

    def are_adjacent(self, u: int, v: int) -> bool:
        ids = self._nbr_ids[u]
        i = bisect_left(ids, v)
        return i < len(ids) and ids[i] == v

    def edge_id(self, u: int, v: int) -> int | None:
        return self._nbr[u].get(v)

    def edge_label(self, u: int, v: int) -> int:
        return self.edges[self._nbr[u][v]][2]

    def unlabeled(self) -> "InputGraph":
        """Copy with every vertex and edge label set to 0."""
        return InputGraph._build(
            (0,) * self.num_vertices, [(a, b, 0) for a, b, _ in self.edges]
        )


def neighbors(g: InputGraph, v: int) -> tuple[tuple[int, int], ...]:
    return g.neighbors(v)


def are_adjacent(g: InputGraph, u: int, v: int) -> bool:
    return g.are_adjacent(u, v)


def parse_graph(text: str) -> InputGraph:
    labels: list[int] = []
    edges: list[tuple[int, int, int]] = []
    edge_index: dict[tuple[int, int], int] = {}
    # pending references checked once N is known: (line, vertex, neighbor)
    refs: list[tuple[int, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise GraphFormatError("expected '<vertex-id> <vertex-label> ...'", lineno)
        try:
            vid = int(tokens[0])
            vlabel = int(tokens[1])
        except ValueError:
            raise GraphFormatError("vertex id and label must be integers", lineno) from None
        if vid != len(labels):
            raise GraphFormatError(
                f"vertex id {vid} out of order (expected {len(labels)})", lineno
            )
        if vlabel < 0:
            raise GraphFormatError("labels must be non-negative", lineno)
        labels.append(vlabel)

        on_line: set[int] = set()
        for tok in tokens[2:]:
            nbr_s, _, elabel_s = tok.partition(":")
            try:
                nbr = int(nbr_s)
                elabel = int(elabel_s) if elabel_s else 0
            except ValueError:
                raise GraphFormatError(f"malformed neighbor entry {tok!r}", lineno) from None
            if nbr < 0 or elabel < 0:
                raise GraphFormatError(f"negative id or label in {tok!r}", lineno)
            if nbr == vid:
                raise GraphFormatError(f"self-loop on vertex {vid}", lineno)
            if nbr in on_line:
                raise GraphFormatError(f"duplicate edge ({vid},{nbr})", lineno)
            on_line.add(nbr)
            key = (min(vid, nbr), max(vid, nbr))
            if key in edge_index:
                if edges[edge_index[key]][2] != elabel:
                    raise GraphFormatError(
                        f"edge ({vid},{nbr}) listed with conflicting labels", lineno
                    )
                continue
            edge_index[key] = len(edges)
            edges.append((key[0], key[1], elabel))
            refs.append((lineno, vid, nbr))

    n = len(labels)
    for lineno, vid, nbr in refs:
        if nbr >= n:
            raise GraphFormatError(f"vertex {vid} references missing vertex {nbr}", lineno)
    return InputGraph._build(tuple(labels), edges)


def load_graph(path: str | Path) -> InputGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def format_graph(g: InputGraph) -> str:
    """Render ``g`` in the file format, each edge on its lower endpoint's line.

    Round-trips through :func:`parse_graph` with identical vertex and edge ids
    only when edge ids are already ordered by first appearance.
    """
    lines = []
    for v in range(g.num_vertices):
        parts = [str(v), str(g.vertex_labels[v])]
        for u, eid in g.adjacency[v]:
            if u > v:
                label = g.edges[eid][2]
                parts.append(f"{u}:{label}" if label else str(u))
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def load_label_dictionary(path: str | Path) -> dict[str, int]:
    """Read ``<name> <integer>`` lines mapping string labels to integer labels."""
    mapping: dict[str, int] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, _, value = line.rpartition(" ")
        if not name:
            raise GraphFormatError("expected '<name> <integer>'", lineno)
        try:
            mapping[name.strip()] = int(value)
        except ValueError:
            raise GraphFormatError(f"label value {value!r} is not an integer", lineno) from None
    return mapping
