"""Neighborhood queries, query-node detection and dataset statistics."""

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from models import Graph, GraphStats


def neighbors_closed(g: Graph, u: int) -> np.ndarray:
    """adj(u) together with u itself, sorted."""
    return np.union1d(g.adj(u), [u])


def non_neighbors(g: Graph, u: int) -> np.ndarray:
    """Every node that is neither u nor adjacent to u, sorted."""
    return np.setdiff1d(np.arange(g.num_nodes), neighbors_closed(g, u), assume_unique=True)


def query_nodes(g: Graph) -> np.ndarray:
    """
    Nodes that sit on at least one triangle.

    (A @ A) * A holds, for every edge (u, v), the size of adj(u) ∩ adj(v); a node
    is a query node iff one of its edges has a common neighbor.
    """
    a = g.csr
    common = (a @ a).multiply(a)
    counts = np.asarray(common.sum(axis=1)).reshape(-1)
    return np.flatnonzero(counts > 0)


def is_query_node(g: Graph, u: int) -> bool:
    nbrs = g.adj(u)
    return any(np.intersect1d(g.adj(v), nbrs, assume_unique=True).size for v in nbrs)


def diameter(g: Graph, chunk: int = 256) -> int:
    """Largest finite BFS eccentricity inside the largest connected component."""
    _, labels = connected_components(g.csr, directed=False)
    largest = np.flatnonzero(labels == np.bincount(labels).argmax())
    if len(largest) < 2:
        return 0
    sub = g.csr[largest][:, largest]
    best = 0
    for start in range(0, len(largest), chunk):
        dist = shortest_path(sub, directed=False, unweighted=True, indices=np.arange(start, min(start + chunk, len(largest))))
        best = max(best, int(dist[np.isfinite(dist)].max()))
    return best


def graph_stats(g: Graph) -> GraphStats:
    return GraphStats(
        dataset=g.name,
        num_nodes=g.num_nodes,
        num_edges=g.num_edges,
        diameter=diameter(g),
        num_queries=len(query_nodes(g)),
        avg_degree=2 * g.num_edges / g.num_nodes,
    )
