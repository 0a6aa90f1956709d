"""
Per-query train/validation/test splits.

Each query node's neighbors and non-neighbors are shuffled independently and cut
70/10/20 with largest-remainder rounding. The message-passing graph used for
training drops every edge that appears as a validation or test positive of any
query, so an edge held out for one endpoint cannot leak through the other.
"""

from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from exceptions import ContractError
from models import Graph, QuerySplit
from services.graph.queries import is_query_node, non_neighbors, query_nodes

SPLIT_WEIGHTS = (7, 1, 2)  # tenths: train, validation, test


def largest_remainder(n: int, weights: Sequence[int] = SPLIT_WEIGHTS) -> Tuple[int, ...]:
    """
    Split n items by integer weights; leftover items go to the largest
    remainders, earlier parts first on ties.
    """
    total = sum(weights)
    base = [n * w // total for w in weights]
    remainders = [n * w % total for w in weights]
    left = n - sum(base)
    for i in sorted(range(len(weights)), key=lambda i: (-remainders[i], i))[:left]:
        base[i] += 1
    return tuple(base)


def _cut(items: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    shuffled = rng.permutation(items)
    n_train, n_val, _ = largest_remainder(len(shuffled))
    return (
        np.sort(shuffled[:n_train]),
        np.sort(shuffled[n_train:n_train + n_val]),
        np.sort(shuffled[n_train + n_val:]),
    )


def split_per_query(g: Graph, q: int, seed: int) -> QuerySplit:
    """
    Split nbr(q) and non-nbr(q) of one query node.

    Deterministic in (g, q, seed): the generator is seeded with [seed, q].
    """
    if not is_query_node(g, q):
        raise ContractError(f"node {q} is not a query node (it is on no triangle)")
    rng = np.random.default_rng([seed, q])
    train_pos, val_pos, test_pos = _cut(g.adj(q), rng)
    train_neg, val_neg, test_neg = _cut(non_neighbors(g, q), rng)
    return QuerySplit(
        query=q,
        train_pos=train_pos, val_pos=val_pos, test_pos=test_pos,
        train_neg=train_neg, val_neg=val_neg, test_neg=test_neg,
        seed=seed,
    )


def split_all(g: Graph, seed: int) -> List[QuerySplit]:
    splits = [split_per_query(g, int(q), seed) for q in query_nodes(g)]
    logger.info(f"[SPLIT] {g.name}: {len(splits)} query nodes split with seed {seed}")
    return splits


def held_out_edges(splits: Sequence[QuerySplit]) -> np.ndarray:
    """Every (query, node) pair assigned to a validation or test positive list."""
    pairs = [
        np.stack([np.full(len(nodes), s.query), nodes], axis=1)
        for s in splits
        for nodes in (s.val_pos, s.test_pos)
        if len(nodes)
    ]
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs).astype(np.int64)


def training_graph(g: Graph, splits: Sequence[QuerySplit]) -> Graph:
    """Message-passing graph with all held-out positive edges removed."""
    held = held_out_edges(splits)
    train = g.without_edges(held)
    logger.info(f"[SPLIT] {g.name}: removed {g.num_edges - train.num_edges} held-out edges from the training graph")
    return train
