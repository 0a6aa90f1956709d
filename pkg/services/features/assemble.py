"""
Node feature rows for an enclosing subgraph: onehot(min(label, max_label))
followed by an optional side vector (embedding row or raw attributes).
"""

from typing import Optional

import numpy as np

from exceptions import ContractError
from models import EnclosingSubgraph, FeatureMatrix

DRNL_ONLY = "drnl_only"
DRNL_PLUS_EMBED = "drnl_plus_embed"
DRNL_PLUS_ATTR = "drnl_plus_attr"


def drnl_onehot(labels: np.ndarray, max_label: int) -> np.ndarray:
    labels = np.minimum(np.asarray(labels, dtype=np.int64), max_label)
    onehot = np.zeros((len(labels), max_label + 1))
    onehot[np.arange(len(labels)), labels] = 1.0
    return onehot


def assemble_features(
    sub: EnclosingSubgraph,
    labels: np.ndarray,
    side: Optional[np.ndarray] = None,
    max_label: int = 10,
    mode: Optional[str] = None,
) -> FeatureMatrix:
    """
    Build the feature matrix of one subgraph.

    Args:
        sub: Enclosing subgraph
        labels: DRNL label per subgraph node
        side: Per-graph-node vectors (num_graph_nodes x d); NaN rows mean "missing"
        max_label: Label cap; the one-hot block has max_label + 1 columns
        mode: Mode tag; defaults to drnl_only without side vectors, drnl_plus_embed with

    Raises:
        ContractError: a subgraph node has no side vector
    """
    if len(labels) != sub.num_nodes:
        raise ContractError(f"{len(labels)} labels for a subgraph of {sub.num_nodes} nodes")
    block = drnl_onehot(labels, max_label)
    if side is None:
        return FeatureMatrix(values=block, mode=mode or DRNL_ONLY, drnl_width=max_label + 1)

    beyond = sub.nodes[sub.nodes >= len(side)]
    if len(beyond):
        raise ContractError(f"no side vector for node {int(beyond[0])}")
    rows = side[sub.nodes]
    missing = ~np.isfinite(rows).all(axis=1)
    if missing.any():
        raise ContractError(f"no side vector for node {int(sub.nodes[np.argmax(missing)])}")
    return FeatureMatrix(
        values=np.concatenate([block, rows], axis=1),
        mode=mode or DRNL_PLUS_EMBED,
        drnl_width=max_label + 1,
    )
