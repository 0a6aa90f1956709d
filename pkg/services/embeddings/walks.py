"""
Second-order biased random walks.

From current node v reached from t, the unnormalized weight of stepping to a
neighbor x is 1/p if x == t, 1 if x is adjacent to t, and 1/q otherwise. The
first step of a walk is uniform over adj(source).
"""

from typing import Tuple

import numpy as np

from exceptions import ContractError
from models import Graph, WalkCorpus


def default_walk_length(num_nodes: int) -> int:
    """r = 0.05 |V|, at least 2."""
    return max(2, int(np.floor(0.05 * num_nodes + 0.5)))


def transition_weights(g: Graph, prev: int, cur: int, p: float, q: float) -> Tuple[np.ndarray, np.ndarray]:
    """Candidates adj(cur) and their unnormalized weights given the previous node."""
    candidates = g.adj(cur)
    prev_nbrs = g.adj(prev)
    if len(prev_nbrs):
        pos = np.minimum(np.searchsorted(prev_nbrs, candidates), len(prev_nbrs) - 1)
        adjacent = prev_nbrs[pos] == candidates
    else:
        adjacent = np.zeros(len(candidates), dtype=bool)
    weights = np.where(candidates == prev, 1.0 / p, np.where(adjacent, 1.0, 1.0 / q))
    return candidates, weights


def transition_probabilities(g: Graph, prev: int, cur: int, p: float, q: float) -> dict:
    candidates, weights = transition_weights(g, prev, cur, p, q)
    probs = weights / weights.sum()
    return {int(c): float(w) for c, w in zip(candidates, probs)}


def walk_from(g: Graph, source: int, steps: int, p: float, q: float, rng: np.random.Generator) -> np.ndarray:
    walk = [source]
    if g.degree(source) == 0:
        return np.asarray(walk, dtype=np.int64)

    prev, cur = -1, source
    for _ in range(steps):
        if prev < 0:
            candidates = g.adj(cur)
            nxt = candidates[rng.integers(len(candidates))]
        else:
            candidates, weights = transition_weights(g, prev, cur, p, q)
            cumulative = np.cumsum(weights)
            i = np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right")
            nxt = candidates[min(i, len(candidates) - 1)]
        walk.append(int(nxt))
        prev, cur = cur, int(nxt)
    return np.asarray(walk, dtype=np.int64)


def sample_walks(
    g: Graph,
    p: float = 1.0,
    q: float = 1.0,
    r: int = 10,
    walks_per_node: int = 10,
    seed: int = 0,
    window: int = 5,
) -> WalkCorpus:
    """
    Sample `walks_per_node` walks of r steps from every node.

    Each walk draws from its own generator seeded with [seed, source, i], so the
    corpus does not depend on the order walks are produced in.
    """
    if p <= 0 or q <= 0:
        raise ContractError(f"p and q must be positive, got p={p}, q={q}")
    if r < 1:
        raise ContractError(f"walk length must be >= 1, got {r}")

    walks = []
    for i in range(walks_per_node):
        for source in range(g.num_nodes):
            rng = np.random.default_rng([seed, source, i])
            walks.append(walk_from(g, source, r, p, q, rng))
    return WalkCorpus(walks=walks, walk_length=r, walks_per_node=walks_per_node, p=p, q=q, window=window, seed=seed)


def context_pairs(corpus: WalkCorpus) -> np.ndarray:
    """(center, context) multiset: every ordered pair within `window` positions of a walk."""
    chunks = []
    for walk in corpus.walks:
        for offset in range(1, min(corpus.window, len(walk) - 1) + 1):
            left, right = walk[:-offset], walk[offset:]
            chunks.append(np.stack([left, right], axis=1))
            chunks.append(np.stack([right, left], axis=1))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks)
