"""
Training objectives.

    bce      sum over pairs of softplus(s * (1 - 2y))   (= -log sigma(s) for y=1, -log(1 - sigma(s)) for y=0)
    ranking  sum over queries, over (negative w, positive v) pairs, of ReLU(s_w - s_v + delta)
"""

from typing import Sequence, Tuple

import numpy as np

from exceptions import ContractError
from services.autodiff.tensor import (
    Tensor, add, as_tensor, concat, embedding_lookup, hadamard, reduce_sum, relu, softplus, sub,
)


def bce_loss(scores, labels) -> Tensor:
    scores = as_tensor(scores)
    labels = np.asarray(labels, dtype=np.float64).reshape(scores.shape)
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ContractError("bce labels must be 0 or 1")
    return reduce_sum(softplus(hadamard(scores, Tensor(1.0 - 2.0 * labels))))


def ranking_loss_indexed(scores: Tensor, groups: Sequence[Tuple[np.ndarray, np.ndarray]], delta: float) -> Tensor:
    """
    Hinge ranking loss over positions of a single score vector.

    Args:
        scores: 1-D scores of every sampled pair
        groups: One (positive positions, negative positions) per query
        delta: Margin

    A group with no positive or no negative contributes 0.
    """
    pos_index, neg_index = [], []
    for pos, neg in groups:
        pos, neg = np.asarray(pos, dtype=np.int64), np.asarray(neg, dtype=np.int64)
        if not len(pos) or not len(neg):
            continue
        pos_index.append(np.repeat(pos, len(neg)))
        neg_index.append(np.tile(neg, len(pos)))
    if not pos_index:
        return Tensor(0.0)
    s_pos = embedding_lookup(scores, np.concatenate(pos_index))
    s_neg = embedding_lookup(scores, np.concatenate(neg_index))
    return reduce_sum(relu(add(sub(s_neg, s_pos), Tensor(float(delta)))))


def ranking_loss(pos_scores_by_query, neg_scores_by_query, delta: float) -> Tensor:
    """Hinge ranking loss from per-query positive and negative score lists."""
    if len(pos_scores_by_query) != len(neg_scores_by_query):
        raise ContractError("need one positive and one negative score list per query")
    parts, groups, start = [], [], 0
    for pos, neg in zip(pos_scores_by_query, neg_scores_by_query):
        pos, neg = as_tensor(pos), as_tensor(neg)
        parts += [pos, neg]
        n_pos, n_neg = pos.values.size, neg.values.size
        groups.append((np.arange(start, start + n_pos), np.arange(start + n_pos, start + n_pos + n_neg)))
        start += n_pos + n_neg
    if not start:
        return Tensor(0.0)
    return ranking_loss_indexed(concat(parts, axis=0), groups, delta)
