"""
Training loop for the inductive link predictors.

One epoch:
  1. sample training pairs (BCE: every training positive plus neg_per_pos
     sampled negatives from the same query's pool; ranking: up to rank_sample
     positives and negatives per query)
  2. shuffle with the run's seeded generator and step Adam per batch
  3. score the validation candidates and compute validation MAP

Training stops at max_epochs or after `patience` epochs without a strict
improvement of validation MAP; the parameters of the best epoch are returned.
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from config import Architecture, GnnConfig, LossKind, TrainConfig
from exceptions import ContractError
from models import QuerySplit
from services.autodiff.tensor import Tape, backward
from services.evaluation.metrics import evaluate_queries
from services.features.featurizer import PairFeaturizer
from services.gnn.batch import SubgraphBatch
from services.gnn.params import ModelParams, init_params
from services.gnn.scorer import default_sortpool_k, score_batch
from services.training.losses import bce_loss, ranking_loss_indexed
from services.training.optimizer import Adam

TRACE_COLUMNS = ["epoch", "train_loss", "val_map", "val_mrr", "elapsed_ms"]
SCORE_BATCH = 256


class EarlyStopping:
    """
    Tracks the best validation score; an epoch counts as an improvement only if
    it is strictly better than every earlier one.

    Usage:
        stopper = EarlyStopping(patience=6)
        for epoch in range(1, max_epochs + 1):
            if stopper.update(val_map, epoch):
                save_checkpoint()
            if stopper.should_stop:
                break
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ContractError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_score = -np.inf
        self.best_epoch = 0
        self.since_improvement = 0

    def update(self, score: float, epoch: int) -> bool:
        if score > self.best_score:
            self.best_score = score
            self.best_epoch = epoch
            self.since_improvement = 0
            return True
        self.since_improvement += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.since_improvement >= self.patience


@dataclass
class TrainResult:
    params: ModelParams
    trace: pd.DataFrame
    best_epoch: int
    best_val_map: float
    delta: Optional[float] = None

    @property
    def epochs_run(self) -> int:
        return len(self.trace)


def score_pairs(params: ModelParams, featurizer: PairFeaturizer, pairs: np.ndarray, batch_size: int = SCORE_BATCH) -> np.ndarray:
    """Scores of (u, v) pairs with frozen parameters (nothing is recorded)."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    scores = np.empty(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        batch = SubgraphBatch.from_pairs(featurizer.featurize_many(chunk))
        scores[start:start + len(chunk)] = score_batch(params, batch).values
    return scores


def validation_candidates(splits: Sequence[QuerySplit]):
    return [_candidates(s.query, s.val_pos, s.val_neg) for s in splits]


def evaluation_candidates(splits: Sequence[QuerySplit], neg_cap: Optional[int] = None, seed: int = 0):
    """Test positives and negatives per query; negatives optionally capped by a seeded draw."""
    items = []
    for s in splits:
        negatives = s.test_neg
        if neg_cap is not None and len(negatives) > neg_cap:
            rng = np.random.default_rng([seed, s.query, 2])
            negatives = np.sort(rng.choice(negatives, size=neg_cap, replace=False))
        items.append(_candidates(s.query, s.test_pos, negatives))
    return items


def _candidates(query: int, positives: np.ndarray, negatives: np.ndarray):
    candidates = np.concatenate([positives, negatives]).astype(np.int64)
    labels = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))]).astype(np.int64)
    return query, candidates, labels


def resolve_sortpool_k(cfg: GnnConfig, splits: Sequence[QuerySplit], featurizer: PairFeaturizer) -> GnnConfig:
    if cfg.architecture != Architecture.DGCNN or cfg.sortpool_k is not None:
        return cfg
    sizes = [featurizer.cache.get(s.query, v).num_nodes for s in splits for v in s.train_pos]
    k = default_sortpool_k(sizes)
    logger.info(f"[TRAIN] sortpool_k={k} from {len(sizes)} training subgraphs")
    return cfg.model_copy(update={"sortpool_k": k})


class _Epochs:
    """Per-epoch sampling of training pairs."""

    def __init__(self, splits: Sequence[QuerySplit], tcfg: TrainConfig, rng: np.random.Generator):
        self.splits = splits
        self.tcfg = tcfg
        self.rng = rng

    def bce_batches(self):
        pairs, labels = [], []
        for s in self.splits:
            for v in s.train_pos:
                pairs.append((s.query, v))
                labels.append(1)
                if len(s.train_neg):
                    for w in self.rng.choice(s.train_neg, size=self.tcfg.neg_per_pos):
                        pairs.append((s.query, w))
                        labels.append(0)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        labels = np.asarray(labels, dtype=np.float64)
        order = self.rng.permutation(len(pairs))
        for start in range(0, len(order), self.tcfg.batch_size):
            idx = order[start:start + self.tcfg.batch_size]
            yield pairs[idx], labels[idx]

    def rank_batches(self):
        queries = [s for s in self.splits if len(s.train_pos) and len(s.train_neg)]
        order = self.rng.permutation(len(queries))
        pairs, groups = [], []
        for i in order:
            s = queries[i]
            pos = self._draw(s.train_pos)
            neg = self._draw(s.train_neg)
            start = len(pairs)
            pairs += [(s.query, v) for v in pos] + [(s.query, w) for w in neg]
            groups.append((np.arange(start, start + len(pos)), np.arange(start + len(pos), len(pairs))))
            if len(pairs) >= self.tcfg.batch_size:
                yield np.asarray(pairs, dtype=np.int64), groups
                pairs, groups = [], []
        if pairs:
            yield np.asarray(pairs, dtype=np.int64), groups

    def _draw(self, pool: np.ndarray) -> np.ndarray:
        if len(pool) <= self.tcfg.rank_sample:
            return pool
        return np.sort(self.rng.choice(pool, size=self.tcfg.rank_sample, replace=False))


def train_model(
    splits: Sequence[QuerySplit],
    featurizer: PairFeaturizer,
    cfg: GnnConfig,
    tcfg: TrainConfig,
    delta: Optional[float] = None,
) -> TrainResult:
    """
    Train one model with early stopping on validation MAP.

    Args:
        splits: Per-query splits
        featurizer: Builds subgraph features on the training message graph
        cfg: Architecture hyperparameters (dgcnn sortpool_k is derived when unset)
        tcfg: Loss, optimizer and stopping settings
        delta: Margin of the ranking loss (defaults to tcfg.delta, else the first grid value)

    Returns:
        TrainResult with the best epoch's parameters and the per-epoch trace
    """
    if not splits:
        raise ContractError("no query nodes to train on")
    if tcfg.loss == LossKind.RANK and delta is None:
        delta = tcfg.delta if tcfg.delta is not None else min(tcfg.margin_grid)

    cfg = resolve_sortpool_k(cfg, splits, featurizer)
    params = init_params(cfg, featurizer.width, seed=tcfg.seed)
    optimizer = Adam(lr=tcfg.lr)
    sampler = _Epochs(splits, tcfg, np.random.default_rng([tcfg.seed, 1]))
    stopper = EarlyStopping(tcfg.patience)
    val_items = validation_candidates(splits)
    has_validation = any(len(s.val_pos) for s in splits)
    if not has_validation:
        logger.warning("[TRAIN] no query has validation positives; monitoring -train_loss instead of MAP")

    rows: List[tuple] = []
    best = params.snapshot()
    clock = time.perf_counter()
    for epoch in range(1, tcfg.max_epochs + 1):
        total, count = 0.0, 0
        batches = sampler.bce_batches() if tcfg.loss == LossKind.BCE else sampler.rank_batches()
        for batch_pairs, target in batches:
            batch = SubgraphBatch.from_pairs(featurizer.featurize_many(batch_pairs))
            with Tape() as tape:
                scores = score_batch(params, batch)
                if tcfg.loss == LossKind.BCE:
                    loss = bce_loss(scores, target)
                else:
                    loss = ranking_loss_indexed(scores, target, delta)
            grads = backward(tape, loss, list(params))
            optimizer.step(params, dict(zip(params.names(), grads)))
            total += loss.item()
            count += len(batch_pairs)
        train_loss = total / max(count, 1)

        if has_validation:
            report = evaluate_queries(val_items, lambda p: score_pairs(params, featurizer, p))
            val_map, val_mrr = report.map, report.mrr
        else:
            val_map, val_mrr = -train_loss, float("nan")

        elapsed = int((time.perf_counter() - clock) * 1000)
        rows.append((epoch, train_loss, val_map, val_mrr, elapsed))
        if stopper.update(val_map, epoch):
            best = params.snapshot()
        logger.debug(f"[TRAIN] epoch {epoch}: loss={train_loss:.4f} val_map={val_map:.4f}")
        if stopper.should_stop:
            logger.info(f"[TRAIN] early stop after epoch {epoch}; best epoch {stopper.best_epoch}")
            break

    params.restore(best)
    featurizer.cache.save()
    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return TrainResult(
        params=params,
        trace=trace,
        best_epoch=stopper.best_epoch,
        best_val_map=float(stopper.best_score),
        delta=delta,
    )
