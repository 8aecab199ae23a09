import os
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from mevolve.graph import Graph

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.environ.get("MEVOLVE_DATA_DIR", ROOT / "data"))


def from_nx(h: nx.Graph) -> Graph:
    h = nx.convert_node_labels_to_integers(h)
    return Graph(h.number_of_nodes(), h.edges())


def random_graph(rng: np.random.Generator, n_min: int = 5, n_max: int = 60) -> Graph:
    """Erdos-Renyi or Barabasi-Albert graph with a seed drawn from ``rng``."""
    n = int(rng.integers(n_min, n_max + 1))
    seed = int(rng.integers(2**31))
    if rng.random() < 0.5 or n < 2:
        p = float(rng.uniform(0.05, 0.4))
        return from_nx(nx.gnp_random_graph(n, p, seed=seed))
    m = int(rng.integers(1, min(4, n - 1) + 1))
    return from_nx(nx.barabasi_albert_graph(n, m, seed=seed))


@pytest.fixture
def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def cycle4():
    return Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
