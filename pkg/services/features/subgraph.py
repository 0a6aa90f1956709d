"""
Enclosing-subgraph extraction.

The node set is every node within K hops of u or of v in the message graph.
The (u, v) edge is removed from the induced adjacency before distances are
computed, so labels never see the answer.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from exceptions import ContractError
from models import EnclosingSubgraph, Graph


def k_hop_nodes(g: Graph, sources, hops: int) -> np.ndarray:
    """Sorted ids of every node within `hops` of any source (multi-source frontier expansion)."""
    visited = np.zeros(g.num_nodes, dtype=bool)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    visited[frontier] = True
    csr = g.csr
    for _ in range(hops):
        if not len(frontier):
            break
        reached = np.unique(csr[frontier].indices)
        frontier = reached[~visited[reached]]
        visited[frontier] = True
    return np.flatnonzero(visited)


def extract_enclosing_subgraph(g: Graph, u: int, v: int, hops: int = 1) -> EnclosingSubgraph:
    """
    Extract the K-hop enclosing subgraph of (u, v).

    Args:
        g: Message-passing graph
        u, v: Candidate pair, u != v
        hops: K >= 1

    Returns:
        EnclosingSubgraph with u at local 0, v at local 1, the other nodes
        ordered by (min distance to the pair, node id)
    """
    if u == v:
        raise ContractError(f"enclosing subgraph needs two distinct nodes, got ({u}, {v})")
    if hops < 1:
        raise ContractError(f"hops must be >= 1, got {hops}")
    g._check_node(u)
    g._check_node(v)

    nodes = k_hop_nodes(g, [u, v], hops)
    iu, iv = np.searchsorted(nodes, [u, v])
    induced = sp.coo_array(g.csr[nodes][:, nodes])
    target = ((induced.row == iu) & (induced.col == iv)) | ((induced.row == iv) & (induced.col == iu))
    row, col = induced.row[~target], induced.col[~target]

    local = sp.csr_array((np.ones(len(row)), (row, col)), shape=(len(nodes), len(nodes)))
    dist = shortest_path(local, directed=False, unweighted=True, indices=[iu, iv])

    rest = np.setdiff1d(np.arange(len(nodes)), [iu, iv])
    nearest = np.minimum(dist[0, rest], dist[1, rest])
    rest = rest[np.lexsort((nodes[rest], nearest))]
    order = np.concatenate([[iu, iv], rest]).astype(np.int64)

    position = np.empty_like(order)
    position[order] = np.arange(len(order))
    adjacency = sp.csr_array((np.ones(len(row)), (position[row], position[col])), shape=local.shape)
    adjacency.sum_duplicates()
    adjacency.sort_indices()

    return EnclosingSubgraph(
        nodes=nodes[order],
        adjacency=adjacency,
        dist_u=dist[0, order],
        dist_v=dist[1, order],
        hops=hops,
    )

