from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from exceptions import ContractError, DataError


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Immutable undirected graph in compressed row layout.

    adj(u) = indices[indptr[u]:indptr[u+1]], sorted ascending, no duplicates,
    no self-loops. Every edge is stored in both directions.
    """

    indptr: np.ndarray
    indices: np.ndarray
    node_ids: np.ndarray  # original id of each compacted node
    name: str = "graph"

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))
        object.__setattr__(self, "node_ids", _frozen(self.node_ids, np.int64))

    @classmethod
    def from_edges(cls, num_nodes: int, edges, node_ids=None, name: str = "graph") -> "Graph":
        """Build from an (m, 2) edge array; duplicates, reversals and self-loops are merged away."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edges = edges[edges[:, 0] != edges[:, 1]]
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        matrix = sp.coo_array((np.ones(len(rows)), (rows, cols)), shape=(num_nodes, num_nodes)).tocsr()
        matrix.sum_duplicates()
        matrix.sort_indices()
        if node_ids is None:
            node_ids = np.arange(num_nodes)
        return cls(indptr=matrix.indptr, indices=matrix.indices, node_ids=node_ids, name=name)

    @property
    def num_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def adj(self, u: int) -> np.ndarray:
        self._check_node(u)
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.indptr[u + 1] - self.indptr[u])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adj(u)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def edge_array(self) -> np.ndarray:
        """Each undirected edge once, as (u, v) with u < v."""
        rows = np.repeat(np.arange(self.num_nodes), self.degrees())
        mask = rows < self.indices
        return np.stack([rows[mask], self.indices[mask]], axis=1)

    def without_edges(self, pairs) -> "Graph":
        """Copy of the graph with the given undirected edges removed (node set unchanged)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs) == 0:
            return self
        n = self.num_nodes
        drop = set((np.minimum(pairs[:, 0], pairs[:, 1]) * n + np.maximum(pairs[:, 0], pairs[:, 1])).tolist())
        edges = self.edge_array()
        keys = edges[:, 0] * n + edges[:, 1]
        keep = ~np.isin(keys, np.fromiter(drop, dtype=np.int64, count=len(drop)))
        return Graph.from_edges(n, edges[keep], node_ids=self.node_ids, name=self.name)

    @cached_property
    def csr(self) -> sp.csr_array:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_array((data, self.indices, self.indptr), shape=(self.num_nodes, self.num_nodes))

    def check_invariants(self) -> None:
        """Full scan: sorted unique rows, no self-loops, symmetric adjacency."""
        for u in range(self.num_nodes):
            row = self.adj(u)
            if len(row) and (np.any(np.diff(row) <= 0) or np.any(row == u)):
                raise DataError(f"adjacency of node {u} is unsorted, duplicated or has a self-loop")
        csr = self.csr
        if (csr != csr.T).nnz:
            raise DataError("adjacency is not symmetric")
        if len(self.indices) % 2:
            raise DataError("odd number of stored directed edges")

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.num_nodes:
            raise IndexError(f"node {u} out of range [0, {self.num_nodes})")


@dataclass(frozen=True)
class QuerySplit:
    query: int
    train_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray
    val_neg: np.ndarray
    test_neg: np.ndarray
    seed: int

    def positive_sizes(self) -> Tuple[int, int, int]:
        return len(self.train_pos), len(self.val_pos), len(self.test_pos)

    def negative_sizes(self) -> Tuple[int, int, int]:
        return len(self.train_neg), len(self.val_neg), len(self.test_neg)


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: np.ndarray  # num_nodes x dim
    method: str  # "node2vec" or "mf"
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ContractError(f"embedding table must be 2-D, got shape {self.vectors.shape}")
        if not np.isfinite(self.vectors).all():
            raise DataError("embedding table contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_nodes(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class WalkCorpus:
    walks: List[np.ndarray]
    walk_length: int  # r, steps per walk
    walks_per_node: int
    p: float
    q: float
    window: int
    seed: int


@dataclass(frozen=True, eq=False)
class EnclosingSubgraph:
    """
    K-hop subgraph around a candidate pair. Local node 0 is u, local node 1 is v;
    the (u, v) edge is never present in `adjacency`.
    """

    nodes: np.ndarray  # graph node ids, local order
    adjacency: sp.csr_array
    dist_u: np.ndarray  # hop distance to u inside the subgraph, inf if unreachable
    dist_v: np.ndarray
    hops: int

    u_index = 0
    v_index = 1

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def pair(self) -> Tuple[int, int]:
        return int(self.nodes[0]), int(self.nodes[1])


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # one row per subgraph node
    mode: str  # drnl_only, drnl_plus_embed or drnl_plus_attr
    drnl_width: int

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RankedList:
    """Candidates of one query, best score first; ties go to the smaller candidate id."""

    query: int
    candidates: np.ndarray
    scores: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_scores(cls, query: int, candidates, scores, labels) -> "RankedList":
        candidates = np.asarray(candidates, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if not (len(candidates) == len(scores) == len(labels)):
            raise ContractError("candidates, scores and labels must have equal lengths")
        order = np.lexsort((candidates, -scores))
        return cls(query=query, candidates=candidates[order], scores=scores[order], labels=labels[order])

    @property
    def num_positives(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True)
class EvalReport:
    per_query: pd.DataFrame  # columns: query, ap, rr, num_pos, num_neg
    map: float
    mrr: float
    skipped: int

    @property
    def queries(self) -> set:
        return set(self.per_query["query"].tolist())


@dataclass(frozen=True)
class GainReport:
    rows: pd.DataFrame  # columns: query, ap_ours, ap_baseline, gain; sorted by gain, descending
    positive_fraction: float


@dataclass(frozen=True)
class GraphStats:
    dataset: str
    num_nodes: int
    num_edges: int
    diameter: int
    num_queries: int
    avg_degree: float
