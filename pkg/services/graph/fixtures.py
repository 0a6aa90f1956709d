"""
Bundled synthetic graphs.

Datasets can be named as "fixture:<name>[:n]" anywhere a path is accepted:
    fixture:triangle
    fixture:path[:n]        path with n nodes (default 4)
    fixture:planted[:n]     2-block planted partition, p_in=0.5, p_out=0.02 (default n=60)
"""

from pathlib import Path

import networkx as nx
import numpy as np

from exceptions import ConfigError
from models import Graph
from services.graph.loader import load_edge_list

FIXTURE_PREFIX = "fixture:"
FIXTURE_NAMES = ("triangle", "path", "planted")


def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)], name="triangle")


def path(n: int = 4) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], name=f"path{n}")


def planted_partition(
    n: int = 200,
    blocks: int = 2,
    p_in: float = 0.5,
    p_out: float = 0.02,
    seed: int = 0,
) -> Graph:
    """Planted-partition graph: `blocks` groups of n // blocks nodes."""
    size = n // blocks
    nxg = nx.planted_partition_graph(blocks, size, p_in, p_out, seed=seed)
    edges = np.asarray(sorted(nxg.edges()), dtype=np.int64).reshape(-1, 2)
    return Graph.from_edges(blocks * size, edges, name=f"planted{blocks * size}")


def is_fixture(spec: str) -> bool:
    return spec.startswith(FIXTURE_PREFIX)


def build_fixture(spec: str) -> Graph:
    parts = spec[len(FIXTURE_PREFIX):].split(":")
    name = parts[0]
    try:
        size = int(parts[1]) if len(parts) > 1 else None
    except ValueError:
        raise ConfigError(f"fixture size must be an integer: {spec}") from None
    if name == "triangle":
        return triangle()
    if name == "path":
        return path(size or 4)
    if name == "planted":
        return planted_partition(n=size or 60)
    raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")


def resolve_dataset(spec: str) -> Graph:
    """A fixture spec or an edge-list path."""
    if is_fixture(spec):
        return build_fixture(spec)
    return load_edge_list(spec)


def write_edge_list(graph: Graph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    edges = graph.node_ids[graph.edge_array()]
    lines = [f"# {graph.name}: {graph.num_nodes} nodes, {graph.num_edges} edges"]
    lines += [f"{u} {v}" for u, v in edges]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
