from __future__ import annotations

import pytest

from graphmine.graph import InputGraph, parse_graph
from oracles import BICOLOR_TEXT


@pytest.fixture
def bicolor() -> InputGraph:
    # 0-based: blue (0) = {0, 2}, yellow (1) = {1, 3}; edges 0-1, 1-2, 2-3, 0-2
    return parse_graph(BICOLOR_TEXT)


@pytest.fixture
def triangle() -> InputGraph:
    return InputGraph.from_edges([0, 0, 0], [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4() -> InputGraph:
    return InputGraph.from_edges([0] * 4, [(a, b) for a in range(4) for b in range(a + 1, 4)])


@pytest.fixture
def path3() -> InputGraph:
    return InputGraph.from_edges([0, 0, 0], [(0, 1), (1, 2)])
