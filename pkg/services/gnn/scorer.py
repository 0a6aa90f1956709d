"""
Pair scores.

gcn / gin / sage: a 2-layer perceptron over [e_u * e_v | |e_u - e_v|], which is
symmetric in (u, v) by construction.

dgcnn: sort pooling. Each subgraph's node rows are sorted by the last channel
(descending), ties by the channels before it going backwards, then by local
index; the top k rows are kept (zero rows appended when the subgraph is
smaller), passed through a node-wise convolution, flattened and scored by a
dense head.
"""

import math
from typing import Sequence

import numpy as np

from config import Architecture, GnnConfig
from models import EnclosingSubgraph
from services.autodiff.tensor import (
    Tensor, absolute, add, concat, embedding_lookup, hadamard, matmul, relu, reshape, sub,
)
from services.gnn.batch import SubgraphBatch
from services.gnn.layers import embed_batch
from services.gnn.params import DGCNN_CONV_CHANNELS, ModelParams


def default_sortpool_k(sizes: Sequence[int], fraction: float = 0.6) -> int:
    """Smallest k that is at least as large as `fraction` of the subgraph sizes (minimum 2)."""
    sizes = np.sort(np.asarray(sizes, dtype=np.int64))
    if not len(sizes):
        return 2
    index = max(math.ceil(fraction * len(sizes)) - 1, 0)
    return max(2, int(sizes[index]))


def _mlp_head(params: ModelParams, pair: Tensor) -> Tensor:
    hidden = relu(add(matmul(pair, params["scorer.hidden.weight"]), params["scorer.hidden.bias"]))
    out = add(matmul(hidden, params["scorer.out.weight"]), params["scorer.out.bias"])
    return reshape(out, (pair.shape[0],))


def pair_features(emb_u: Tensor, emb_v: Tensor) -> Tensor:
    return concat([hadamard(emb_u, emb_v), absolute(sub(emb_u, emb_v))], axis=1)


def score_pair(params: ModelParams, cfg: GnnConfig, emb_u: Tensor, emb_v: Tensor) -> Tensor:
    """Scalar score of one pair from its two node embeddings."""
    width = emb_u.shape[-1]
    eu = reshape(emb_u, (1, width))
    ev = reshape(emb_v, (1, width))
    return reshape(_mlp_head(params, pair_features(eu, ev)), ())


def sortpool_order(embeddings: np.ndarray) -> np.ndarray:
    """Local row order: last channel descending, then earlier channels backwards, then index."""
    keys = [np.arange(len(embeddings))] + [-embeddings[:, c] for c in range(embeddings.shape[1])]
    return np.lexsort(keys)


def sortpool_index(embeddings: np.ndarray, offsets: np.ndarray, sizes: np.ndarray, k: int) -> np.ndarray:
    """
    Rows of the embedding matrix to gather, k per subgraph. Index len(embeddings)
    points at the zero row appended for padding.
    """
    pad = len(embeddings)
    index = np.full((len(offsets), k), pad, dtype=np.int64)
    for i, (start, size) in enumerate(zip(offsets, sizes)):
        order = sortpool_order(embeddings[start:start + size])[:k]
        index[i, :len(order)] = start + order
    return index.reshape(-1)


def _sortpool_head(params: ModelParams, embeddings: Tensor, batch: SubgraphBatch) -> Tensor:
    k = params.cfg.sortpool_k
    channels = embeddings.shape[1]
    padded = concat([embeddings, Tensor(np.zeros((1, channels)))], axis=0)
    index = sortpool_index(embeddings.values, batch.offsets, batch.sizes, k)
    pooled = embedding_lookup(padded, index)

    conv = relu(add(matmul(pooled, params["readout.conv.weight"]), params["readout.conv.bias"]))
    flat = reshape(conv, (len(batch), k * DGCNN_CONV_CHANNELS))
    hidden = relu(add(matmul(flat, params["readout.dense.weight"]), params["readout.dense.bias"]))
    out = add(matmul(hidden, params["readout.out.weight"]), params["readout.out.bias"])
    return reshape(out, (len(batch),))


def score_pair_dgcnn(params: ModelParams, cfg: GnnConfig, sub_graph: EnclosingSubgraph, embeddings: Tensor) -> Tensor:
    """Scalar sort-pooling score of one subgraph from its node embeddings."""
    batch = SubgraphBatch(
        adjacency=sub_graph.adjacency,
        features=np.zeros((sub_graph.num_nodes, 0)),
        offsets=np.array([0]),
        sizes=np.array([sub_graph.num_nodes]),
    )
    if cfg != params.cfg:
        params = ModelParams(cfg=cfg, feature_width=params.feature_width, tensors=params.tensors)
    return reshape(_sortpool_head(params, embeddings, batch), ())


def score_batch(params: ModelParams, batch: SubgraphBatch) -> Tensor:
    """Scores of every subgraph in the batch, shape (len(batch),)."""
    embeddings = embed_batch(params, batch)
    if params.cfg.architecture == Architecture.DGCNN:
        return _sortpool_head(params, embeddings, batch)
    eu = embedding_lookup(embeddings, batch.offsets)
    ev = embedding_lookup(embeddings, batch.offsets + 1)
    return _mlp_head(params, pair_features(eu, ev))
