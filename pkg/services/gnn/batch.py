"""
Many subgraphs as one block-diagonal graph, so a forward pass is a handful of
sparse products instead of one per pair.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from exceptions import ContractError, ShapeError
from models import EnclosingSubgraph, FeatureMatrix


@dataclass(frozen=True, eq=False)
class SubgraphBatch:
    adjacency: sp.csr_array  # block diagonal, total_nodes x total_nodes
    features: np.ndarray  # total_nodes x width
    offsets: np.ndarray  # first row of each subgraph; u is at offset, v at offset + 1
    sizes: np.ndarray

    @classmethod
    def from_pairs(cls, items: Sequence[Tuple[EnclosingSubgraph, FeatureMatrix]]) -> "SubgraphBatch":
        if not items:
            raise ContractError("a batch needs at least one subgraph")
        widths = {feats.width for _, feats in items}
        if len(widths) != 1:
            raise ShapeError("batch", *((w,) for w in sorted(widths)))
        for sub, feats in items:
            if feats.values.shape[0] != sub.num_nodes:
                raise ShapeError("batch", (sub.num_nodes,), feats.values.shape)

        sizes = np.array([sub.num_nodes for sub, _ in items], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        adjacency = sp.csr_array(sp.block_diag([sub.adjacency for sub, _ in items], format="csr"))
        features = np.concatenate([feats.values for _, feats in items], axis=0)
        return cls(adjacency=adjacency, features=features, offsets=offsets, sizes=sizes)

    def __len__(self):
        return len(self.offsets)

    @property
    def total_nodes(self) -> int:
        return int(self.sizes.sum())

    @property
    def width(self) -> int:
        return self.features.shape[1]


# ==================== GRAPH OPERATORS ====================

def gcn_operator(adjacency) -> sp.csr_array:
    """D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I."""
    n = adjacency.shape[0]
    a_hat = sp.csr_array(adjacency) + sp.eye_array(n, format="csr")
    inv_sqrt = 1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).reshape(-1))
    scaling = sp.diags_array(inv_sqrt)
    return sp.csr_array(scaling @ a_hat @ scaling)


def mean_operator(adjacency) -> sp.csr_array:
    """Row-normalized A; rows of isolated nodes stay zero."""
    adjacency = sp.csr_array(adjacency, dtype=np.float64)
    degree = np.asarray(adjacency.sum(axis=1)).reshape(-1)
    inv = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
    return sp.csr_array(sp.diags_array(inv) @ adjacency)


def gin_operator(adjacency, epsilon: float = 0.0) -> sp.csr_array:
    """(1 + eps) I + A: own features plus the sum over neighbors."""
    n = adjacency.shape[0]
    return sp.csr_array(sp.csr_array(adjacency, dtype=np.float64) + (1.0 + epsilon) * sp.eye_array(n, format="csr"))


def random_walk_operator(adjacency) -> sp.csr_array:
    """D^-1 (A + I), the propagation rule of the sort-pooling model."""
    n = adjacency.shape[0]
    a_hat = sp.csr_array(adjacency, dtype=np.float64) + sp.eye_array(n, format="csr")
    degree = np.asarray(a_hat.sum(axis=1)).reshape(-1)
    return sp.csr_array(sp.diags_array(1.0 / degree) @ a_hat)
