"""
Node2Vec embeddings.

Objective (negated log-likelihood over the walk context multiset):
    loss = sum over context pairs (u, v) of [ log sum_w exp(z_u.z_w) - z_u.z_v ]

Two optimizers:
  - negative sampling (default): gensim skip-gram with k negatives per pair
    drawn from the unigram^0.75 node distribution, started from our own
    initialization; the input vectors become the table;
  - exact: full-batch descent on the objective itself with a bold-driver step
    (accepted steps never increase the loss); only for graphs of <= 64 nodes.
"""

from typing import List, Optional

import numpy as np
from gensim.models import Word2Vec
from loguru import logger

from config import Node2VecConfig
from exceptions import ContractError, NumericError
from models import EmbeddingTable, Graph, WalkCorpus
from services.autodiff.tensor import (
    Tape, Tensor, backward, hadamard, logsumexp, matmul, reduce_sum, sub, transpose,
)
from services.embeddings.walks import context_pairs, default_walk_length, sample_walks

EXACT_MAX_NODES = 64


def _context_counts(corpus: WalkCorpus, num_nodes: int) -> np.ndarray:
    pairs = context_pairs(corpus)
    counts = np.zeros((num_nodes, num_nodes))
    np.add.at(counts, (pairs[:, 0], pairs[:, 1]), 1.0)
    return counts


def _exact_loss(z: Tensor, counts: np.ndarray) -> Tensor:
    scores = matmul(z, transpose(z))
    partition = reduce_sum(hadamard(logsumexp(scores, axis=1), Tensor(counts.sum(axis=1))))
    data = reduce_sum(hadamard(scores, Tensor(counts)))
    return sub(partition, data)


def node2vec_loss_exact(z, corpus: WalkCorpus) -> Tensor:
    """
    Exact full-softmax loss; the denominator runs over every node, u included.

    Args:
        z: EmbeddingTable, or a Tensor of shape (num_nodes, dim) to differentiate through
        corpus: Walk corpus defining the context pairs

    Returns:
        Scalar tensor
    """
    if isinstance(z, EmbeddingTable):
        z = Tensor(z.vectors)
    return _exact_loss(z, _context_counts(corpus, z.shape[0]))


def init_table(num_nodes: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(num_nodes, dim))


def use_exact(cfg: Node2VecConfig, num_nodes: int) -> bool:
    if cfg.exact == "true":
        if num_nodes > EXACT_MAX_NODES:
            raise ContractError(f"exact node2vec is limited to {EXACT_MAX_NODES} nodes, graph has {num_nodes}")
        return True
    return cfg.exact == "auto" and num_nodes <= EXACT_MAX_NODES


def train_node2vec(
    g: Graph,
    cfg: Node2VecConfig = Node2VecConfig(),
    seed: int = 0,
    corpus: Optional[WalkCorpus] = None,
    trace: Optional[List[float]] = None,
) -> EmbeddingTable:
    """
    Train a Node2Vec table.

    Args:
        g: Graph to embed
        cfg: Hyperparameters; walk_length None means max(2, round(0.05 |V|))
        seed: Seeds the walks, the initialization and the sampler
        corpus: Pre-sampled walks (sampled from cfg when omitted)
        trace: If given, receives the exact loss after every accepted step (exact mode)

    Returns:
        EmbeddingTable with one row per node
    """
    r = cfg.walk_length or default_walk_length(g.num_nodes)
    z = init_table(g.num_nodes, cfg.dim, seed)
    provenance = {
        "method": "node2vec", "dim": str(cfg.dim), "p": repr(cfg.p), "q": repr(cfg.q),
        "walk_length": str(r), "walks_per_node": str(cfg.walks_per_node),
        "window": str(cfg.window), "seed": str(seed),
    }
    if cfg.epochs == 0:
        return EmbeddingTable(vectors=z, method="node2vec", provenance=provenance)

    if corpus is None:
        corpus = sample_walks(g, cfg.p, cfg.q, r, cfg.walks_per_node, seed, cfg.window)

    if use_exact(cfg, g.num_nodes):
        logger.info(f"[EMBED] node2vec exact softmax on {g.name}: {cfg.exact_steps} steps")
        z = _train_exact(z, _context_counts(corpus, g.num_nodes), cfg.exact_steps, trace)
        provenance["optimizer"] = "exact"
    else:
        logger.info(f"[EMBED] node2vec negative sampling on {g.name}: r={r}, {len(corpus.walks)} walks")
        z = _train_negative_sampling(z, corpus, cfg, seed)
        provenance["optimizer"] = "negative_sampling"
    return EmbeddingTable(vectors=z, method="node2vec", provenance=provenance)


def _train_exact(z: np.ndarray, counts: np.ndarray, steps: int, trace: Optional[List[float]]) -> np.ndarray:
    scale = 1.0 / max(counts.sum(), 1.0)
    step = 1.0

    def evaluate(values):
        param = Tensor(values, requires_grad=True)
        with Tape() as tape:
            loss = _exact_loss(param, counts)
        (grad,) = backward(tape, loss, [param])
        return loss.item(), grad

    loss, grad = evaluate(z)
    if trace is not None:
        trace.append(loss)
    for _ in range(steps):
        candidate = z - step * scale * grad
        new_loss, new_grad = evaluate(candidate)
        if new_loss <= loss:
            z, loss, grad = candidate, new_loss, new_grad
            step *= 1.1
            if trace is not None:
                trace.append(loss)
        else:
            step *= 0.5
    return z


def _train_negative_sampling(z: np.ndarray, corpus: WalkCorpus, cfg: Node2VecConfig, seed: int) -> np.ndarray:
    sentences = [[str(node) for node in walk] for walk in corpus.walks]
    if not any(len(walk) > 1 for walk in sentences):
        return z

    # sample=0 keeps every occurrence on small vocabularies; fixed windows match context_pairs
    model = Word2Vec(
        vector_size=z.shape[1], window=corpus.window, min_count=1, sg=1, hs=0,
        negative=cfg.negatives, ns_exponent=0.75, sample=0, shrink_windows=False,
        alpha=cfg.lr, min_alpha=cfg.lr * 1e-4, workers=1, seed=seed,
    )
    model.build_vocab(sentences)
    rows = np.array([int(key) for key in model.wv.index_to_key])
    model.wv.vectors[:] = z[rows]
    model.train(sentences, total_examples=model.corpus_count, epochs=cfg.epochs)

    trained = z.copy()
    trained[rows] = model.wv.vectors.astype(np.float64)
    if not np.isfinite(trained).all():
        raise NumericError(f"node2vec negative sampling diverged; try a smaller n2v_lr (now {cfg.lr})")
    return trained
