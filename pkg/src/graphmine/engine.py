"""Filter-process execution over bulk-synchronous supersteps.

Each superstep takes the frontier ``I`` of canonical embeddings stored at the
previous barrier, runs the aggregation filter/process on them, grows each by
one vertex or edge, keeps the canonical candidates that pass ``filter``,
calls ``process`` on them and stores the survivors as the next frontier.
Map calls are reduced at the barrier and become readable one step later.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
import random
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping

from .canonical import canonical_extensions, is_valid_canonical_extension
from .embedding import (
    VERTEX_INDUCED,
    Embedding,
    ExplorationMode,
    render_embedding,
)
from .graph import InputGraph
from .odag import (
    DEFAULT_BLOCK_SIZE,
    Odag,
    WorkPartition,
    extract_partition,
    keyed_merge,
    list_serialized_size,
    partition_many,
)
from .pattern import (
    DEFAULT_MAX_PATTERN_SIZE,
    Canonicalizer,
    Pattern,
    PatternTooLarge,
    SlotMapping,
    quick_pattern,
)

log = logging.getLogger(__name__)

STORAGE_KINDS = ("odag", "list")
# values reduced per key before a worker collapses its buffer
_REDUCE_BATCH = 256


class EngineError(RuntimeError):
    pass


class CallbackError(EngineError):
    """An application callback raised; the message names the step and embedding."""


class AutomorphismInvarianceError(EngineError):
    """A filter answered differently for two orderings of the same embedding."""


class Application:
    """Base class for applications.

    Subclasses must implement :meth:`filter` and :meth:`process`; the other
    callbacks have pass-through defaults. ``filter`` and
    ``aggregation_filter`` must be anti-monotonic and every callback must give
    the same answer for automorphic embeddings.
    """

    mode: ExplorationMode = VERTEX_INDUCED
    # False: the engine runs on a copy of the graph with all labels set to 0
    use_labels: bool = True

    def filter(self, e: Embedding, ctx: "Context") -> bool:
        raise NotImplementedError

    def process(self, e: Embedding, ctx: "Context") -> None:
        raise NotImplementedError

    def aggregation_filter(self, e: Embedding, ctx: "Context") -> bool:
        return True

    def aggregation_process(self, e: Embedding, ctx: "Context") -> None:
        pass

    def reduce(self, key: Hashable, values: list) -> Any:
        raise NotImplementedError(f"{type(self).__name__} maps values but defines no reduce")

    def reduce_output(self, key: Hashable, values: list) -> Any:
        raise NotImplementedError(
            f"{type(self).__name__} maps output values but defines no reduce_output"
        )

    def termination_filter(self, e: Embedding, ctx: "Context") -> bool:
        return True

    def uses_aggregation(self) -> bool:
        cls = type(self)
        return (
            cls.aggregation_filter is not Application.aggregation_filter
            or cls.aggregation_process is not Application.aggregation_process
        )


def remap_value(value: Any, mapping: SlotMapping) -> Any:
    """Re-index a slot-indexed aggregate value onto canonical slots."""
    remap = getattr(value, "remap_slots", None)
    return remap(mapping) if remap is not None else value


def is_quick_key(key: Hashable) -> bool:
    return isinstance(key, Pattern) and not key.canonical


def local_reduce(
    calls: Iterable[tuple[Hashable, Any]], reduce: Callable[[Hashable, list], Any]
) -> dict[Hashable, Any]:
    """First level: group raw map calls by their own key and reduce."""
    grouped: dict[Hashable, list] = defaultdict(list)
    for key, value in calls:
        grouped[key].append(value)
    return {key: reduce(key, values) for key, values in grouped.items()}


def two_level_reduce(
    partials: Iterable[Mapping[Hashable, Any]],
    reduce: Callable[[Hashable, list], Any],
    canonicalize: Callable[[Pattern], tuple[Pattern, SlotMapping]],
) -> dict[Hashable, Any]:
    """Second level: re-key quick-pattern partials by canonical pattern and reduce.

    ``partials`` are per-worker maps already reduced by quick pattern.
    ``canonicalize`` is called once per quick-pattern entry; pass a memoizing
    :class:`Canonicalizer` to canonize each distinct quick pattern once.
    """
    grouped: dict[Hashable, list] = defaultdict(list)
    for part in partials:
        for key, value in part.items():
            if is_quick_key(key):
                canon, mapping = canonicalize(key)
                grouped[canon].append(remap_value(value, mapping))
            else:
                grouped[key].append(value)
    return {key: reduce(key, values) for key, values in grouped.items()}


def one_level_reduce(
    calls: Iterable[tuple[Hashable, Any]],
    reduce: Callable[[Hashable, list], Any],
    canonicalize: Callable[[Pattern], tuple[Pattern, SlotMapping]],
) -> dict[Hashable, Any]:
    """Reference path: canonicalize the key of every single map call."""
    grouped: dict[Hashable, list] = defaultdict(list)
    for key, value in calls:
        if is_quick_key(key):
            canon, mapping = canonicalize(key)
            grouped[canon].append(remap_value(value, mapping))
        else:
            grouped[key].append(value)
    return {key: reduce(key, values) for key, values in grouped.items()}


class _Buffer:
    """Per-worker keyed values, collapsed through ``reduce`` in batches."""

    def __init__(self, reduce: Callable[[Hashable, list], Any]) -> None:
        self.reduce = reduce
        self.values: dict[Hashable, list] = {}

    def add(self, key: Hashable, value: Any) -> None:
        bucket = self.values.get(key)
        if bucket is None:
            self.values[key] = [value]
            return
        bucket.append(value)
        if len(bucket) >= _REDUCE_BATCH:
            self.values[key] = [self.reduce(key, bucket)]

    def finish(self) -> dict[Hashable, Any]:
        return {key: self.reduce(key, bucket) for key, bucket in self.values.items()}


class Context:
    """Framework services handed to every callback.

    ``read_aggregate`` sees the aggregates reduced at the end of the previous
    step; ``map`` values become readable one step later; ``map_output`` values
    are reduced once when the computation ends.
    """

    def __init__(
        self,
        graph: InputGraph,
        app: Application,
        step: int,
        history: Mapping[int, Mapping[Hashable, Any]],
        table: Canonicalizer,
        record_map_calls: bool = False,
    ) -> None:
        self.graph = graph
        self.step = step
        self._history = history
        self._table = table
        self._fallback = Canonicalizer(table.max_size)
        self.read_step = step - 1
        self.outputs: list[Any] = []
        self.maps = _Buffer(app.reduce)
        self.map_outputs = _Buffer(app.reduce_output)
        self.map_calls: list[tuple[Hashable, Any]] | None = [] if record_map_calls else None
        self.map_output_calls: list[tuple[Hashable, Any]] | None = (
            [] if record_map_calls else None
        )
        self._last_e: Embedding | None = None
        self._last_p: Pattern | None = None

    def output(self, value: Any) -> None:
        self.outputs.append(value)

    def map(self, key: Hashable, value: Any) -> None:
        if self.map_calls is not None:
            self.map_calls.append((key, value))
        self.maps.add(key, value)

    def map_output(self, key: Hashable, value: Any) -> None:
        if self.map_output_calls is not None:
            self.map_output_calls.append((key, value))
        self.map_outputs.add(key, value)

    def read_aggregate(self, key: Hashable, default: Any = None) -> Any:
        store = self._history.get(self.read_step)
        if not store:
            return default
        if is_quick_key(key):
            key = self.canonical(key)[0]  # type: ignore[arg-type]
        return store.get(key, default)

    def pattern(self, e: Embedding) -> Pattern:
        """Quick pattern of ``e``; usable directly as a map key."""
        if e is self._last_e:
            return self._last_p  # type: ignore[return-value]
        p = quick_pattern(self.graph, e)
        self._last_e, self._last_p = e, p
        return p

    def canonical(self, p: Pattern) -> tuple[Pattern, SlotMapping]:
        hit = self._table._memo.get(p)
        if hit is None:
            hit = self._fallback(p)
        return hit


@dataclass
class EngineConfig:
    workers: int | None = None
    block_size: int = DEFAULT_BLOCK_SIZE
    storage: str = "odag"
    max_pattern_size: int = DEFAULT_MAX_PATTERN_SIZE
    max_steps: int | None = None
    # opt-in checks and instrumentation
    debug_checks: bool = False
    debug_sample_every: int = 97
    verify_odag: bool = False
    record_processed: bool = False
    record_map_calls: bool = False
    keep_outputs: bool = True
    output_path: str | Path | None = None

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass
class StepStats:
    step: int
    input_embeddings: int = 0
    canonical_candidates: int = 0
    processed: int = 0
    frontier: int = 0
    terminal: int = 0
    quick_patterns: int = 0
    canonical_patterns: int = 0
    canonization_calls: int = 0
    odag_bytes: int = 0
    list_bytes: int = 0
    roundtrip_ok: bool | None = None
    seconds: float = 0.0


# group key for stored embeddings: (canonical pattern, terminal?)
GroupKey = tuple[Pattern, bool]


@dataclass
class StepState:
    """Everything carried across a barrier."""

    step: int
    frontier: dict[GroupKey, Odag | list[tuple[int, ...]]] | None
    history: dict[int, dict[Hashable, Any]] = field(default_factory=dict)
    output_partials: dict[Hashable, list] = field(default_factory=dict)
    stats: list[StepStats] = field(default_factory=list)
    done: bool = False


@dataclass
class RunResult:
    outputs: list[str]
    output_values: list[Any]
    aggregates: dict[int, dict[Hashable, Any]]
    output_aggregates: dict[Hashable, Any]
    steps: list[StepStats]
    processed: list[Embedding] | None
    map_calls: dict[int, list[tuple[Hashable, Any]]] | None
    wall_time: float
    map_output_calls: dict[int, list[tuple[Hashable, Any]]] | None = None

    def aggregate_lines(self) -> list[str]:
        lines = []
        for key, value in sorted(self.output_aggregates.items(), key=lambda kv: _key_order(kv[0])):
            name = key.render() if isinstance(key, Pattern) else str(key)
            lines.append(f"{name}\t{value}")
        return lines

    def summary_text(self) -> str:
        cols = (
            "step", "input_embeddings", "canonical_candidates", "processed", "frontier",
            "terminal", "quick_patterns", "canonical_patterns", "canonization_calls",
            "odag_bytes", "list_bytes", "seconds",
        )
        rows = ["\t".join(cols)]
        for s in self.steps:
            vals = [getattr(s, c) for c in cols]
            rows.append("\t".join(f"{v:.3f}" if isinstance(v, float) else str(v) for v in vals))
        rows.append(f"total_wall_seconds\t{self.wall_time:.3f}")
        return "\n".join(rows) + "\n"


def _key_order(key: Hashable) -> tuple:
    if isinstance(key, Pattern):
        return (0, key.to_bytes())
    return (1, repr(key))


def _output_order(value: Any) -> tuple:
    if isinstance(value, Embedding):
        return (0, len(value.words), value.words)
    return (1, 0, repr(value))


@dataclass
class _WorkerResult:
    outputs: list[Any]
    maps: dict[Hashable, Any]
    map_outputs: dict[Hashable, Any]
    frontier: dict[tuple[Pattern, bool], Odag | list[tuple[int, ...]]]
    counts: dict[str, int]
    processed: list[Embedding] | None
    map_calls: list[tuple[Hashable, Any]] | None
    map_output_calls: list[tuple[Hashable, Any]] | None = None
    # plain copy of the frontier, kept only to verify ODAG round trips
    plain: dict[tuple[Pattern, bool], list[tuple[int, ...]]] | None = None


@dataclass
class _Shared:
    """Read-only state every worker sees during one superstep."""

    graph: InputGraph
    app: Application
    config: EngineConfig
    step: int
    frontier: dict[GroupKey, Odag | list[tuple[int, ...]]] | None
    tasks: list[list[tuple[GroupKey | None, Any]]]
    history: dict[int, dict[Hashable, Any]]
    table: Canonicalizer


# set by the parent right before forking a worker pool
_SHARED: _Shared | None = None


def _pool_entry(worker: int) -> _WorkerResult:
    assert _SHARED is not None
    return _run_worker(_SHARED, worker)


def make_pruner(
    shared: _Shared, ctx: Context, group: GroupKey, depth: int
) -> Callable[[tuple[int, ...]], bool]:
    """Prefix predicate that accepts exactly the stored embeddings of ``group``.

    Re-applies, per prefix: canonicality (with adjacency), ``filter`` against
    the aggregates of the prefix's parent step, and for inner prefixes
    ``termination_filter`` and ``aggregation_filter``. At full depth it also
    checks the terminal flag and that the canonical pattern matches the group.
    """
    g, app, mode = shared.graph, shared.app, shared.app.mode
    canon, terminal = group
    memo = shared.table._memo

    def pruner(words: tuple[int, ...]) -> bool:
        j = len(words)
        if j > 1 and not is_valid_canonical_extension(g, Embedding(mode, words[:-1]), words[-1]):
            return False
        e = Embedding(mode, words)
        ctx.read_step = j - 1
        if not app.filter(e, ctx):
            return False
        if j < depth:
            if not app.termination_filter(e, ctx):
                return False
            ctx.read_step = j
            return bool(app.aggregation_filter(e, ctx))
        if app.termination_filter(e, ctx) == terminal:
            return False
        hit = memo.get(quick_pattern(g, e))
        return hit is not None and hit[0] == canon

    return pruner


def _random_order(g: InputGraph, e: Embedding, rng: random.Random) -> Embedding:
    """A random connected visit order of ``e``'s ids (an automorphic embedding)."""
    from .canonical import _edges_touch

    remaining = list(e.words)
    order = [remaining.pop(rng.randrange(len(remaining)))]
    while remaining:
        if e.mode is VERTEX_INDUCED:
            options = [w for w in remaining if any(g.are_adjacent(w, v) for v in order)]
        else:
            options = [w for w in remaining if any(_edges_touch(g, w, x) for x in order)]
        pick = rng.choice(options)
        remaining.remove(pick)
        order.append(pick)
    return Embedding(e.mode, tuple(order))


def _check_invariance(
    app: Application, ctx: Context, e: Embedding, rng: random.Random, which: str
) -> None:
    other = _random_order(ctx.graph, e, rng)
    if which == "filter":
        # other's prefixes are not canonical extensions of a filtered parent,
        # so compare against the prefix-wise conjunction
        mine = app.filter(e, ctx)
        theirs = all(
            app.filter(Embedding(e.mode, other.words[:i]), ctx)
            for i in range(1, len(other.words) + 1)
        )
    else:
        mine = app.aggregation_filter(e, ctx)
        theirs = app.aggregation_filter(other, ctx)
    if bool(mine) != bool(theirs):
        raise AutomorphismInvarianceError(
            f"{which} gave {mine} for {e.words} but {theirs} for automorphic {other.words}"
        )


def _iter_inputs(shared: _Shared, ctx: Context, worker: int) -> Iterator[tuple[Embedding, bool]]:
    mode = shared.app.mode
    for group, work in shared.tasks[worker]:
        if group is None:
            # first step: ``work`` is a range of initial ids
            continue
        terminal = group[1]
        if isinstance(work, WorkPartition):
            o = shared.frontier[group]  # type: ignore[index]
            pruner = make_pruner(shared, ctx, group, o.depth)
            for words in extract_partition(o, work, pruner):
                yield Embedding(mode, words), terminal
        else:
            for words in work:
                yield Embedding(mode, words), terminal


def _run_worker(shared: _Shared, worker: int) -> _WorkerResult:
    g, app, cfg, step = shared.graph, shared.app, shared.config, shared.step
    mode = app.mode
    ctx = Context(g, app, step, shared.history, shared.table, cfg.record_map_calls)
    keep_terminal = app.uses_aggregation()
    use_odag = cfg.storage == "odag"
    frontier: dict[tuple[Pattern, bool], Any] = {}
    plain: dict[tuple[Pattern, bool], list] | None = (
        defaultdict(list) if cfg.verify_odag and use_odag else None
    )
    counts = dict(inputs=0, candidates=0, processed=0, frontier=0, terminal=0)
    processed: list[Embedding] | None = [] if cfg.record_processed else None
    rng = random.Random(step * 7919 + worker)
    sample = 0

    def consider(e2: Embedding) -> None:
        nonlocal sample
        counts["candidates"] += 1
        ctx.read_step = step - 1
        passed = app.filter(e2, ctx)
        if cfg.debug_checks:
            sample += 1
            if (sample - 1) % cfg.debug_sample_every == 0:
                _check_invariance(app, ctx, e2, rng, "filter")
        if not passed:
            return
        counts["processed"] += 1
        app.process(e2, ctx)
        if processed is not None:
            processed.append(e2)
        keep = app.termination_filter(e2, ctx)
        if not keep and not keep_terminal:
            return
        key = (ctx.pattern(e2), not keep)
        slot = frontier.get(key)
        if slot is None:
            slot = frontier[key] = Odag(step, key[0]) if use_odag else []
        if use_odag:
            slot.insert(e2.words)
            if plain is not None:
                plain[key].append(e2.words)
        else:
            slot.append(e2.words)
        counts["frontier" if keep else "terminal"] += 1

    current: tuple[int, ...] = ()
    try:
        for group, work in shared.tasks[worker]:
            if group is None:
                for i in work:
                    current = (i,)
                    consider(Embedding(mode, current))
        for e, terminal in _iter_inputs(shared, ctx, worker):
            current = e.words
            counts["inputs"] += 1
            ctx.read_step = step - 1
            if cfg.debug_checks and (counts["inputs"] - 1) % cfg.debug_sample_every == 0:
                _check_invariance(app, ctx, e, rng, "aggregation_filter")
            if not app.aggregation_filter(e, ctx):
                continue
            app.aggregation_process(e, ctx)
            if terminal:
                continue
            for w in canonical_extensions(g, e):
                current = e.words + (w,)
                consider(Embedding(mode, current))
    except (EngineError, PatternTooLarge):
        raise
    except Exception as exc:
        raise CallbackError(
            f"step {step}: callback failed on embedding {list(current)}: {exc!r}"
        ) from exc

    return _WorkerResult(
        outputs=ctx.outputs,
        maps=ctx.maps.finish(),
        map_outputs=ctx.map_outputs.finish(),
        frontier=frontier,
        counts=counts,
        processed=processed,
        map_calls=ctx.map_calls,
        map_output_calls=ctx.map_output_calls,
        plain=dict(plain) if plain is not None else None,
    )


class Engine:
    def __init__(self, graph: InputGraph, app: Application, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        if self.config.storage not in STORAGE_KINDS:
            raise ValueError(f"storage must be one of {STORAGE_KINDS}")
        if self.config.block_size < 1:
            raise ValueError("block size must be >= 1")
        self.app = app
        self.graph = graph if app.use_labels else graph.unlabeled()
        self.workers = max(1, self.config.resolved_workers())
        self.table = Canonicalizer(self.config.max_pattern_size)
        self.outputs: list[str] = []
        self.output_values: list[Any] = []
        self.processed: list[Embedding] | None = [] if self.config.record_processed else None
        self.map_calls: dict[int, list] | None = {} if self.config.record_map_calls else None
        self.map_output_calls: dict[int, list] | None = (
            {} if self.config.record_map_calls else None
        )
        self._out_file = None

    # work assignment

    def _tasks(self, state: StepState) -> list[list[tuple[GroupKey | None, Any]]]:
        W, b = self.workers, self.config.block_size
        tasks: list[list[tuple[GroupKey | None, Any]]] = [[] for _ in range(W)]
        if state.frontier is None:
            count = self.graph.num_vertices if self.app.mode is VERTEX_INDUCED else self.graph.num_edges
            for n, start in enumerate(range(0, count, b)):
                tasks[n % W].append((None, range(start, min(start + b, count))))
            return tasks
        groups = sorted(state.frontier, key=lambda gk: (gk[0].to_bytes(), gk[1]))
        if self.config.storage == "odag":
            odags = [state.frontier[gk] for gk in groups]
            for gi, parts in partition_many(odags, W, b):  # type: ignore[arg-type]
                for part in parts:
                    if part.prefixes:
                        tasks[part.worker].append((groups[gi], part))
            return tasks
        flat = [(gk, words) for gk in groups for words in state.frontier[gk]]  # type: ignore[union-attr]
        for n, start in enumerate(range(0, len(flat), b)):
            chunk = flat[start : start + b]
            by_group: dict[GroupKey, list] = defaultdict(list)
            for gk, words in chunk:
                by_group[gk].append(words)
            tasks[n % W].extend(by_group.items())
        return tasks

    def _execute(self, shared: _Shared) -> list[_WorkerResult]:
        global _SHARED
        W = len(shared.tasks)
        if W == 1 or "fork" not in mp.get_all_start_methods():
            return [_run_worker(shared, w) for w in range(W)]
        if shared.frontier is not None and self.config.storage == "odag":
            for o in shared.frontier.values():
                o.frozen()  # type: ignore[union-attr]
        _SHARED = shared
        try:
            with mp.get_context("fork").Pool(W) as pool:
                return pool.map(_pool_entry, range(W), chunksize=1)
        finally:
            _SHARED = None

    # one barrier-delimited step

    def superstep(self, state: StepState) -> StepState:
        t0 = time.perf_counter()
        step = state.step
        shared = _Shared(
            graph=self.graph,
            app=self.app,
            config=self.config,
            step=step,
            frontier=state.frontier,
            tasks=self._tasks(state),
            history=state.history,
            table=self.table,
        )
        results = self._execute(shared)
        stats = StepStats(step=step)
        for key in ("inputs", "candidates", "processed", "frontier", "terminal"):
            total = sum(r.counts[key] for r in results)
            name = {"inputs": "input_embeddings", "candidates": "canonical_candidates"}.get(key, key)
            setattr(stats, name, total)

        calls_before = self.table.calls
        quick_seen: set[Pattern] = set()
        for r in results:
            quick_seen.update(k for k in r.maps if is_quick_key(k))
            quick_seen.update(k for k in r.map_outputs if is_quick_key(k))
            quick_seen.update(qp for qp, _ in r.frontier)

        # aggregation: readable next step
        history = dict(state.history)
        history[step] = two_level_reduce((r.maps for r in results), self.app.reduce, self.table)
        step_out = two_level_reduce(
            (r.map_outputs for r in results), self.app.reduce_output, self.table
        )
        output_partials = {k: list(v) for k, v in state.output_partials.items()}
        for key, value in step_out.items():
            output_partials.setdefault(key, []).append(value)

        frontier = self._merge_frontier(results)
        stats.quick_patterns = len(quick_seen)
        stats.canonical_patterns = len({self.table(qp)[0] for qp in quick_seen})
        stats.canonization_calls = self.table.calls - calls_before
        for gk, store in frontier.items():
            if isinstance(store, Odag):
                stats.odag_bytes += len(store.to_bytes())
        stats.list_bytes = sum(
            list_serialized_size(self._group_counts[gk], step) for gk in frontier
        )

        if self.config.verify_odag and self.config.storage == "odag":
            stats.roundtrip_ok = self._verify_roundtrip(results, frontier, step, history)

        self._flush_outputs(results)
        if self.processed is not None:
            for r in results:
                self.processed.extend(r.processed or ())
        if self.map_calls is not None:
            self.map_calls[step] = [c for r in results for c in (r.map_calls or ())]
        if self.map_output_calls is not None:
            self.map_output_calls[step] = [
                c for r in results for c in (r.map_output_calls or ())
            ]

        stats.seconds = time.perf_counter() - t0
        log.info("step %d: %s", step, stats)
        done = not frontier or (
            self.config.max_steps is not None and step >= self.config.max_steps
        )
        return StepState(
            step=step + 1,
            frontier=frontier,
            history=history,
            output_partials=output_partials,
            stats=state.stats + [stats],
            done=done,
        )

    def _merge_frontier(
        self, results: list[_WorkerResult]
    ) -> dict[GroupKey, Odag | list[tuple[int, ...]]]:
        self._group_counts: dict[GroupKey, int] = defaultdict(int)
        if self.config.storage == "odag":
            per_worker = []
            for r in results:
                rekeyed: dict[GroupKey, Odag] = {}
                for (qp, terminal), o in r.frontier.items():
                    gk = (self.table(qp)[0], terminal)
                    # several quick patterns of one worker may share a group
                    rekeyed[gk] = rekeyed[gk].merge(_rekey(o, gk)) if gk in rekeyed else _rekey(o, gk)
                per_worker.append(rekeyed)
            merged = keyed_merge(per_worker)
            for gk, o in merged.items():
                o.key = gk[0]
            out: dict[GroupKey, Any] = dict(merged)
        else:
            lists: dict[GroupKey, list] = defaultdict(list)
            for r in results:
                for (qp, terminal), words in r.frontier.items():
                    lists[(self.table(qp)[0], terminal)].extend(words)
            out = {gk: sorted(ws) for gk, ws in lists.items()}
        for r in results:
            for (qp, terminal), store in r.frontier.items():
                n = store.inserted if isinstance(store, Odag) else len(store)
                self._group_counts[(self.table(qp)[0], terminal)] += n
        return out

    def _verify_roundtrip(
        self,
        results: list[_WorkerResult],
        frontier: dict[GroupKey, Any],
        step: int,
        history: dict[int, dict[Hashable, Any]],
    ) -> bool:
        """Decode every merged ODAG as the next step will and compare with what was stored."""
        stored: dict[GroupKey, set[tuple[int, ...]]] = defaultdict(set)
        for r in results:
            for (qp, terminal), words in (r.plain or {}).items():
                stored[(self.table(qp)[0], terminal)].update(words)
        shared = _Shared(self.graph, self.app, self.config, step + 1, frontier, [], history, self.table)
        ctx = Context(self.graph, self.app, step + 1, history, self.table)
        for gk, o in frontier.items():
            decoded = set(o.extract(make_pruner(shared, ctx, gk, o.depth)))
            if decoded != stored[gk]:
                return False
        return True

    def _flush_outputs(self, results: list[_WorkerResult]) -> None:
        values = [v for r in results for v in r.outputs]
        values.sort(key=_output_order)
        lines = [
            render_embedding(self.graph, v) if isinstance(v, Embedding) else str(v) for v in values
        ]
        if self._out_file is not None and lines:
            self._out_file.write("\n".join(lines) + "\n")
            self._out_file.flush()
        if self.config.keep_outputs:
            self.outputs.extend(lines)
            self.output_values.extend(values)

    def run(self) -> RunResult:
        t0 = time.perf_counter()
        if self.config.output_path is not None:
            self._out_file = open(self.config.output_path, "w", encoding="utf-8")
        try:
            state = StepState(step=1, frontier=None)
            count = self.graph.num_vertices if self.app.mode is VERTEX_INDUCED else self.graph.num_edges
            if count == 0:
                state.done = True
            while not state.done:
                state = self.superstep(state)
        finally:
            if self._out_file is not None:
                self._out_file.close()
                self._out_file = None
        final = {
            key: self.app.reduce_output(key, values) for key, values in state.output_partials.items()
        }
        return RunResult(
            outputs=self.outputs,
            output_values=self.output_values,
            aggregates=state.history,
            output_aggregates=final,
            steps=state.stats,
            processed=self.processed,
            map_calls=self.map_calls,
            wall_time=time.perf_counter() - t0,
            map_output_calls=self.map_output_calls,
        )


def _rekey(o: Odag, gk: GroupKey) -> Odag:
    o.key = gk
    return o


def run(graph: InputGraph, app: Application, config: EngineConfig | None = None) -> RunResult:
    return Engine(graph, app, config).run()
