"""Command-line front end: ``mine {fsm,motifs,cliques} --input FILE ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .apps import CliqueFinding, FrequentSubgraphMining, MotifCounting, frequent_patterns
from .embedding import EDGE_INDUCED, VERTEX_INDUCED, ExplorationMode
from .engine import Application, EngineConfig, EngineError, RunResult, run
from .graph import GraphFormatError, load_graph
from .odag import DEFAULT_BLOCK_SIZE
from .pattern import PatternTooLarge

log = logging.getLogger("graphmine")

APP_NAMES = ("fsm", "motifs", "cliques")
DEFAULT_MAX_SIZE = {"motifs": 4, "cliques": 5}
WORKERS_ENV = "MINE_WORKERS"


@dataclass
class RunConfig:
    app: str
    input: Path
    out: Path
    mode: ExplorationMode | None = None
    support: int | None = None
    max_size: int | None = None
    workers: int | None = None
    block_size: int = DEFAULT_BLOCK_SIZE
    storage: str = "odag"
    debug_checks: bool = False
    labeled: bool = False

    def __post_init__(self) -> None:
        if self.app not in APP_NAMES:
            raise ValueError(f"unknown app {self.app!r}")
        if self.app == "fsm":
            if self.support is None or self.support < 1:
                raise ValueError("fsm requires --support >= 1")
        elif self.support is not None:
            raise ValueError(f"--support only applies to fsm, not {self.app}")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("--max-size must be >= 1")
        if self.app == "cliques" and self.mode is EDGE_INDUCED:
            raise ValueError("cliques run in vertex mode only")
        if self.workers is not None and self.workers < 1:
            raise ValueError("--workers must be >= 1")
        if self.block_size < 1:
            raise ValueError("--block-size must be >= 1")

    def application(self) -> Application:
        app: Application
        if self.app == "fsm":
            assert self.support is not None
            app = FrequentSubgraphMining(self.support, self.max_size)
        elif self.app == "motifs":
            app = MotifCounting(self.max_size or DEFAULT_MAX_SIZE["motifs"], self.labeled)
        else:
            app = CliqueFinding(self.max_size or DEFAULT_MAX_SIZE["cliques"])
        if self.mode is not None:
            app.mode = self.mode
        return app

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            workers=self.workers,
            block_size=self.block_size,
            storage=self.storage,
            debug_checks=self.debug_checks,
            keep_outputs=False,
            output_path=self.out / "output.txt",
        )


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mine", description="Mine patterns, motifs or cliques from a labeled graph."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="app", required=True, metavar="{fsm,motifs,cliques}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, type=Path, help="graph file")
    common.add_argument("--out", type=Path, default=Path("mine-out"), help="output directory")
    common.add_argument("--mode", choices=("vertex", "edge"), help="override exploration mode")
    common.add_argument("--workers", type=_positive, help=f"worker processes (env {WORKERS_ENV})")
    common.add_argument("--block-size", type=_positive, default=DEFAULT_BLOCK_SIZE)
    common.add_argument("--storage", choices=("odag", "list"), default="odag")
    common.add_argument("--debug-checks", action="store_true",
                        help="sample embeddings and check filters for automorphism invariance")
    common.add_argument("-v", "--verbose", action="store_true")

    fsm = sub.add_parser("fsm", parents=[common], help="frequent subgraph mining")
    fsm.add_argument("--support", type=_positive, required=True, help="minimum support")
    fsm.add_argument("--max-size", type=_positive, help="largest pattern, in edges")

    motifs = sub.add_parser("motifs", parents=[common], help="motif counting")
    motifs.add_argument("--max-size", type=_positive, default=DEFAULT_MAX_SIZE["motifs"])
    motifs.add_argument("--labeled", action="store_true", help="keep vertex and edge labels")
    motifs.add_argument("--support", type=int, help=argparse.SUPPRESS)

    cliques = sub.add_parser("cliques", parents=[common], help="clique finding")
    cliques.add_argument("--max-size", type=_positive, default=DEFAULT_MAX_SIZE["cliques"])
    cliques.add_argument("--support", type=int, help=argparse.SUPPRESS)
    return parser


def parse_args(argv: list[str] | None = None) -> RunConfig:
    """Validated run configuration; usage errors exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.app != "fsm" and ns.support is not None:
        parser.error(f"--support only applies to fsm, not {ns.app}")
    workers = ns.workers
    if workers is None and os.environ.get(WORKERS_ENV):
        try:
            workers = _positive(os.environ[WORKERS_ENV])
        except argparse.ArgumentTypeError as exc:
            parser.error(f"{WORKERS_ENV}: {exc}")
    mode = {"vertex": VERTEX_INDUCED, "edge": EDGE_INDUCED}.get(ns.mode) if ns.mode else None
    if ns.app == "cliques" and mode is EDGE_INDUCED:
        parser.error("cliques run in vertex mode only")
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    return RunConfig(
        app=ns.app,
        input=ns.input,
        out=ns.out,
        mode=mode,
        support=ns.support,
        max_size=ns.max_size,
        workers=workers,
        block_size=ns.block_size,
        storage=ns.storage,
        debug_checks=ns.debug_checks,
        labeled=getattr(ns, "labeled", False),
    )


def _summary(cfg: RunConfig, app: Application, result: RunResult, extra: dict[str, int]) -> str:
    head = [
        f"app\t{cfg.app}",
        f"input\t{cfg.input}",
        f"mode\t{app.mode.value}",
        f"storage\t{cfg.storage}",
        f"block_size\t{cfg.block_size}",
    ]
    if cfg.support is not None:
        head.append(f"support\t{cfg.support}")
    if getattr(app, "max_size", None) is not None:
        head.append(f"max_size\t{app.max_size}")  # type: ignore[attr-defined]
    head.extend(f"{k}\t{v}" for k, v in extra.items())
    return "\n".join(head) + "\n\n" + result.summary_text()


def execute(cfg: RunConfig) -> RunResult:
    graph = load_graph(cfg.input)
    app = cfg.application()
    cfg.out.mkdir(parents=True, exist_ok=True)
    result = run(graph, app, cfg.engine_config())

    extra = {"processed_embeddings": sum(s.processed for s in result.steps)}
    agg_lines = result.aggregate_lines()
    (cfg.out / "aggregates.txt").write_text(
        "".join(line + "\n" for line in agg_lines), encoding="utf-8"
    )
    if cfg.app == "fsm":
        assert cfg.support is not None
        table = frequent_patterns(result, cfg.support)
        rows = sorted(table.items(), key=lambda kv: (kv[0].size, len(kv[0].edges), kv[0].to_bytes()))
        (cfg.out / "supports.txt").write_text(
            "".join(f"{p.render()}\t{s}\n" for p, s in rows), encoding="utf-8"
        )
        extra["frequent_patterns"] = len(table)
    (cfg.out / "summary.txt").write_text(_summary(cfg, app, result, extra), encoding="utf-8")
    return result


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"mine: error: {exc}", file=sys.stderr)
        return 2
    try:
        execute(cfg)
    except GraphFormatError as exc:
        print(f"mine: {cfg.input}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"mine: {exc}", file=sys.stderr)
        return 1
    except (EngineError, PatternTooLarge, ValueError) as exc:
        print(f"mine: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
