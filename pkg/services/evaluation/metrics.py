"""
Per-query ranking metrics.

    AP = (1 / #pos) * sum over positive ranks i of (#pos in top i) / i
    RR = 1 / rank of the best-ranked positive
    MAP, MRR = means over queries with at least one positive
"""

from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from exceptions import ContractError
from models import EvalReport, GainReport, RankedList

PER_QUERY_COLUMNS = ["query", "ap", "rr", "num_pos", "num_neg"]


def average_precision(ranked: RankedList) -> Optional[float]:
    """AP of one ranked list; None when it holds no positive."""
    labels = ranked.labels
    hits = np.flatnonzero(labels == 1)
    if not len(hits):
        return None
    precision_at_hits = np.arange(1, len(hits) + 1) / (hits + 1)
    return float(precision_at_hits.mean())


def reciprocal_rank(ranked: RankedList) -> Optional[float]:
    hits = np.flatnonzero(ranked.labels == 1)
    if not len(hits):
        return None
    return 1.0 / (hits[0] + 1)


def aggregate(lists: Iterable[RankedList]) -> EvalReport:
    """
    Per-query AP/RR and their means. Lists without positives are skipped and counted.

    Raises:
        ContractError: no list was evaluable
    """
    rows, skipped = [], 0
    for ranked in lists:
        ap = average_precision(ranked)
        if ap is None:
            skipped += 1
            continue
        rows.append((ranked.query, ap, reciprocal_rank(ranked), ranked.num_positives,
                     len(ranked.labels) - ranked.num_positives))
    if not rows:
        raise ContractError(f"no query has a positive candidate ({skipped} skipped)")
    if skipped:
        logger.info(f"[EVAL] skipped {skipped} queries without positives")

    per_query = pd.DataFrame(rows, columns=PER_QUERY_COLUMNS).sort_values("query", kind="stable")
    per_query = per_query.reset_index(drop=True)
    return EvalReport(
        per_query=per_query,
        map=float(per_query["ap"].mean()),
        mrr=float(per_query["rr"].mean()),
        skipped=skipped,
    )


def evaluate_queries(
    candidates: Sequence[Tuple[int, np.ndarray, np.ndarray]],
    score_pairs: Callable[[np.ndarray], np.ndarray],
) -> EvalReport:
    """
    Score every (query, candidate) pair and rank per query.

    Args:
        candidates: (query, candidate ids, 0/1 labels) per query
        score_pairs: Maps an (m, 2) array of (query, candidate) pairs to m scores

    Returns:
        EvalReport over the queries with at least one positive
    """
    evaluable = [(q, c, l) for q, c, l in candidates if np.asarray(l).sum() > 0]
    skipped = len(candidates) - len(evaluable)
    pairs = [np.stack([np.full(len(c), q), c], axis=1) for q, c, _ in evaluable]
    scores = score_pairs(np.concatenate(pairs).astype(np.int64)) if pairs else np.empty(0)

    lists, start = [], 0
    for q, c, l in evaluable:
        lists.append(RankedList.from_scores(q, c, scores[start:start + len(c)], l))
        start += len(c)
    report = aggregate(lists)
    return EvalReport(per_query=report.per_query, map=report.map, mrr=report.mrr, skipped=report.skipped + skipped)


def gain_report(ours: EvalReport, baseline: EvalReport) -> GainReport:
    """
    Per-query AP gain of `ours` over `baseline`, largest gain first.

    Raises:
        ContractError: the two reports cover different queries
    """
    if ours.queries != baseline.queries:
        only_ours = sorted(ours.queries - baseline.queries)
        only_base = sorted(baseline.queries - ours.queries)
        raise ContractError(f"query sets differ: only in ours {only_ours[:10]}, only in baseline {only_base[:10]}")

    merged = ours.per_query[["query", "ap"]].merge(
        baseline.per_query[["query", "ap"]], on="query", suffixes=("_ours", "_baseline")
    )
    merged["gain"] = merged["ap_ours"] - merged["ap_baseline"]
    merged = merged.sort_values(["gain", "query"], ascending=[False, True], kind="stable").reset_index(drop=True)
    positive = float((merged["gain"] > 0).mean()) if len(merged) else 0.0
    return GainReport(rows=merged, positive_fraction=positive)
