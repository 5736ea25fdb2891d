"""Overapproximating DAG storage for sets of same-length id sequences.

Array ``i`` holds every id seen at position ``i``; an element links to the
elements of array ``i+1`` that followed it in at least one stored sequence.
Decoding all root-to-leaf paths yields a superset of what was inserted, so
extraction re-applies the exploration predicates to drop spurious paths.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from .pattern import Pattern

MAGIC = b"ODAG"
VERSION = 1
DEFAULT_BLOCK_SIZE = 1024

# pruner(prefix) -> keep?  Called on every prefix, leaf included.
Pruner = Callable[[tuple[int, ...]], bool]


class OdagError(ValueError):
    pass


class Odag:
    def __init__(self, depth: int, key: Hashable = None) -> None:
        if depth < 1:
            raise OdagError("depth must be at least 1")
        self.depth = depth
        self.key = key
        # levels[i]: id -> ids that follow it at position i+1
        self.levels: list[dict[int, set[int]]] = [{} for _ in range(depth)]
        # insert() calls, for size accounting; not part of equality
        self.inserted = 0
        self._frozen: _Frozen | None = None

    def __repr__(self) -> str:
        sizes = [len(lv) for lv in self.levels]
        return f"Odag(depth={self.depth}, key={self.key!r}, arrays={sizes})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Odag):
            return NotImplemented
        return (self.depth, self.key, self.levels) == (other.depth, other.key, other.levels)

    def __len__(self) -> int:
        """Number of decoded paths (spurious ones included)."""
        return self.total_cost()

    def is_empty(self) -> bool:
        return not self.levels[0]

    def insert(self, words: Sequence[int], key: Hashable = None) -> "Odag":
        if len(words) != self.depth:
            raise OdagError(f"embedding of size {len(words)} in ODAG of depth {self.depth}")
        if key is not None and key != self.key:
            raise OdagError(f"pattern {key!r} does not match ODAG key {self.key!r}")
        levels = self.levels
        last = self.depth - 1
        for i in range(last):
            succ = levels[i].get(words[i])
            if succ is None:
                levels[i][words[i]] = {words[i + 1]}
            else:
                succ.add(words[i + 1])
        if words[last] not in levels[last]:
            levels[last][words[last]] = set()
        self.inserted += 1
        self._frozen = None
        return self

    def merge(self, other: "Odag") -> "Odag":
        """Positionwise union; returns a new ODAG."""
        if other.depth != self.depth or other.key != self.key:
            raise OdagError("can only merge ODAGs with equal depth and key")
        out = Odag(self.depth, self.key)
        for i in range(self.depth):
            merged: dict[int, set[int]] = {k: set(v) for k, v in self.levels[i].items()}
            for k, v in other.levels[i].items():
                if k in merged:
                    merged[k] |= v
                else:
                    merged[k] = set(v)
            out.levels[i] = merged
        out.inserted = self.inserted + other.inserted
        return out

    # frozen, index-based view used for decoding, costing and partitioning

    def frozen(self) -> "_Frozen":
        if self._frozen is None:
            self._frozen = _Frozen.build(self.levels)
        return self._frozen

    @property
    def arrays(self) -> list[list[int]]:
        return self.frozen().arrays

    @property
    def successors(self) -> list[list[tuple[int, ...]]]:
        return self.frozen().successors

    def costs(self) -> list[list[int]]:
        return self.frozen().costs

    def total_cost(self) -> int:
        return sum(self.frozen().costs[0])

    def paths(self) -> Iterator[tuple[int, ...]]:
        """Every decoded path, unpruned."""
        return self.extract(lambda prefix: True)

    def extract(self, pruner: Pruner) -> Iterator[tuple[int, ...]]:
        fz = self.frozen()
        for root in range(len(fz.arrays[0])):
            yield from fz.decode((root,), pruner)

    def storage_entries(self) -> int:
        return sum(len(lv) for lv in self.levels) + sum(
            len(s) for lv in self.levels for s in lv.values()
        )

    # serialization

    def to_bytes(self) -> bytes:
        fz = self.frozen()
        key = _key_bytes(self.key)
        out = [struct.pack("<4sBHI", MAGIC, VERSION, self.depth, len(key)), key]
        for i, arr in enumerate(fz.arrays):
            out.append(struct.pack(f"<I{len(arr)}I", len(arr), *arr))
            for succ in fz.successors[i]:
                out.append(struct.pack(f"<I{len(succ)}I", len(succ), *succ))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Odag":
        magic, version, depth, klen = struct.unpack_from("<4sBHI", data, 0)
        if magic != MAGIC:
            raise OdagError("bad magic")
        if version != VERSION:
            raise OdagError(f"unsupported version {version}")
        off = struct.calcsize("<4sBHI")
        key_raw = data[off : off + klen]
        off += klen
        key = Pattern.from_bytes(key_raw) if klen else None
        arrays: list[tuple[int, ...]] = []
        succs: list[list[tuple[int, ...]]] = []
        for _ in range(depth):
            (n,) = struct.unpack_from("<I", data, off)
            arr = struct.unpack_from(f"<{n}I", data, off + 4)
            off += 4 + 4 * n
            row = []
            for _ in range(n):
                (m,) = struct.unpack_from("<I", data, off)
                row.append(struct.unpack_from(f"<{m}I", data, off + 4))
                off += 4 + 4 * m
            arrays.append(arr)
            succs.append(row)
        o = cls(depth, key)
        for i in range(depth):
            nxt = arrays[i + 1] if i + 1 < depth else ()
            o.levels[i] = {v: {nxt[j] for j in succs[i][x]} for x, v in enumerate(arrays[i])}
        return o


def _key_bytes(key: Hashable) -> bytes:
    if key is None:
        return b""
    if isinstance(key, Pattern):
        return key.to_bytes()
    if isinstance(key, bytes):
        return key
    raise OdagError(f"cannot serialize ODAG key {key!r}")


@dataclass
class _Frozen:
    arrays: list[list[int]]
    successors: list[list[tuple[int, ...]]]
    costs: list[list[int]]

    @classmethod
    def build(cls, levels: list[dict[int, set[int]]]) -> "_Frozen":
        arrays = [sorted(lv) for lv in levels]
        index = [{v: i for i, v in enumerate(arr)} for arr in arrays]
        successors: list[list[tuple[int, ...]]] = []
        for i, lv in enumerate(levels):
            if i + 1 < len(levels):
                nxt = index[i + 1]
                successors.append([tuple(sorted(nxt[u] for u in lv[v])) for v in arrays[i]])
            else:
                successors.append([() for _ in arrays[i]])
        costs: list[list[int]] = [[] for _ in arrays]
        costs[-1] = [1] * len(arrays[-1])
        for i in range(len(arrays) - 2, -1, -1):
            below = costs[i + 1]
            costs[i] = [sum(below[j] for j in succ) for succ in successors[i]]
        return cls(arrays, successors, costs)

    def words(self, path: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(self.arrays[i][x] for i, x in enumerate(path))

    def decode(self, path: tuple[int, ...], pruner: Pruner) -> Iterator[tuple[int, ...]]:
        """Paths below index ``path`` that survive ``pruner`` on every prefix."""
        words = self.words(path)
        for i in range(1, len(words) + 1):
            if not pruner(words[:i]):
                return
        depth = len(self.arrays)
        if len(words) == depth:
            yield words
            return
        arrays, successors = self.arrays, self.successors
        # explicit stack of (level, element index, prefix words)
        stack = [(len(path) - 1, path[-1], words)]
        while stack:
            level, idx, prefix = stack.pop()
            nxt_level = level + 1
            nxt_arr = arrays[nxt_level]
            for j in reversed(successors[level][idx]):
                cand = prefix + (nxt_arr[j],)
                if not pruner(cand):
                    continue
                if nxt_level == depth - 1:
                    yield cand
                else:
                    stack.append((nxt_level, j, cand))


def odag_insert(o: Odag, words: Sequence[int], key: Hashable = None) -> Odag:
    return o.insert(words, key)


def odag_merge(a: Odag, b: Odag) -> Odag:
    return a.merge(b)


def odag_extract(o: Odag, pruner: Pruner) -> Iterator[tuple[int, ...]]:
    return o.extract(pruner)


def odag_costs(o: Odag) -> list[list[int]]:
    return o.costs()


def build_odag(depth: int, sequences: Iterable[Sequence[int]], key: Hashable = None) -> Odag:
    o = Odag(depth, key)
    for words in sequences:
        o.insert(words)
    return o


def keyed_merge(per_worker: Iterable[dict[Hashable, Odag]]) -> dict[Hashable, Odag]:
    """Merge per-worker ODAG maps by reducing array entries on (key, position, id)."""
    entries: dict[tuple[Hashable, int, int], set[int]] = {}
    depths: dict[Hashable, int] = {}
    for odags in per_worker:
        for key, o in odags.items():
            if depths.setdefault(key, o.depth) != o.depth:
                raise OdagError(f"depth mismatch while merging key {key!r}")
            for pos, lv in enumerate(o.levels):
                for v, succ in lv.items():
                    slot = entries.get((key, pos, v))
                    if slot is None:
                        entries[(key, pos, v)] = set(succ)
                    else:
                        slot |= succ
    merged = {key: Odag(depth, key) for key, depth in depths.items()}
    for (key, pos, v), succ in entries.items():
        merged[key].levels[pos][v] = succ
    return merged


@dataclass
class WorkPartition:
    """Paths of one ODAG owned by one worker.

    Each prefix is a tuple of element indices (``arrays[0]`` index, then
    ``arrays[1]`` index, ...); the worker owns every decoded path starting
    with one of them.
    """

    worker: int
    prefixes: list[tuple[int, ...]] = field(default_factory=list)
    cost: int = 0
    block_size: int = DEFAULT_BLOCK_SIZE


def odag_partition(
    o: Odag, workers: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> list[WorkPartition]:
    """Split the decoded paths into ``workers`` contiguous, cost-balanced ranges.

    Paths are ranked in depth-first order; worker ``w`` owns ranks from
    ``cut[w]`` to ``cut[w+1]`` where cut points sit at the nearest multiple of
    ``block_size`` to ``w * total / workers``. A range is covered by whole
    first-array elements where possible and by recursively split successor
    lists where an element straddles a cut.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    return partition_many([o], workers, block_size)[0][1]


def partition_many(
    odags: Sequence[Odag], workers: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> list[tuple[int, list[WorkPartition]]]:
    """Balance several ODAGs at once by cutting their concatenated path ranks.

    Returns ``(odag index, partitions)`` pairs; partitions with no prefixes
    are included so every worker appears for every ODAG.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    frozen = [o.frozen() for o in odags]
    totals = [sum(fz.costs[0]) for fz in frozen]
    total = sum(totals)
    cuts = [0]
    for w in range(1, workers):
        cut = round(w * total / workers / block_size) * block_size
        cuts.append(min(max(cut, cuts[-1]), total))
    cuts.append(total)
    out = []
    offset = 0
    for i, fz in enumerate(frozen):
        parts = [WorkPartition(w, block_size=block_size) for w in range(workers)]
        for w in range(workers):
            lo = max(cuts[w], offset) - offset
            hi = min(cuts[w + 1], offset + totals[i]) - offset
            if lo < hi:
                parts[w].cost = hi - lo
                _cover(fz, lo, hi, parts[w].prefixes)
        out.append((i, parts))
        offset += totals[i]
    return out


def _cover(fz: _Frozen, lo: int, hi: int, out: list[tuple[int, ...]]) -> None:
    depth = len(fz.arrays)
    start = 0
    # (path, rank of its first leaf)
    stack: list[tuple[tuple[int, ...], int]] = []
    for root, c in enumerate(fz.costs[0]):
        if start < hi and start + c > lo:
            stack.append(((root,), start))
        start += c
    stack.reverse()
    while stack:
        path, first = stack.pop()
        level = len(path) - 1
        c = fz.costs[level][path[-1]]
        if lo <= first and first + c <= hi:
            out.append(path)
            continue
        # straddles a cut: descend (never at leaf level, where cost is 1)
        assert level < depth - 1
        children = []
        pos = first
        for j in fz.successors[level][path[-1]]:
            cj = fz.costs[level + 1][j]
            if pos < hi and pos + cj > lo:
                children.append((path + (j,), pos))
            pos += cj
        stack.extend(reversed(children))


def extract_partition(o: Odag, part: WorkPartition, pruner: Pruner) -> Iterator[tuple[int, ...]]:
    fz = o.frozen()
    for path in part.prefixes:
        yield from fz.decode(path, pruner)


def list_serialized_size(count: int, depth: int) -> int:
    """Bytes for a plain list dump: u32 count, then ``depth`` u32 words each."""
    return 4 + 4 * depth * count
