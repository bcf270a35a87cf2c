from pathlib import Path

import pytest

from brwnav import Graph, load_edge_list

DATA_DIR = Path(__file__).resolve().parents[1] / "data"

KARATE_TARGET = "31"  # eccentricity-3 node used by the experiment recipes


@pytest.fixture(scope="session")
def karate() -> Graph:
    """Unweighted Zachary karate club (34 nodes, 78 edges)."""
    return load_edge_list(DATA_DIR / "karate.tsv")


@pytest.fixture(scope="session")
def karate_weighted() -> Graph:
    """Karate club with the original interaction-strength weights."""
    return load_edge_list(DATA_DIR / "karate_weighted.tsv")


def path3() -> Graph:
    """a - b - t unit chain."""
    return Graph.from_edges([("a", "b"), ("b", "t")])


def cycle4() -> Graph:
    """Unit 4-cycle a - b - c - d - a."""
    return Graph.from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])


def triangle_pendant() -> Graph:
    """Triangle a, b, t plus pendant c - a."""
    return Graph.from_edges([("a", "b"), ("a", "t"), ("b", "t"), ("a", "c")])
