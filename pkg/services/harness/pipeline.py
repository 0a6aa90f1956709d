"""
Experiment pipeline.

Per cell:
1. Split: per-query 70/10/20 splits and the training message graph
2. Embed: transductive table on the training graph (enhanced modes only)
3. Featurize: enclosing subgraphs + DRNL (+ side vectors)
4. Train: early-stopped GNN (margin cross-validation for the ranking loss)
5. Eval: per-query AP/RR on the test split
6. Report: per-cell reports, traces and model checkpoints, then summaries and gains
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from config import EmbedMethod, ExperimentConfig, FeatureMode, LossKind, Settings
from exceptions import ConfigError
from models import EmbeddingTable, EvalReport, Graph, QuerySplit
from services.embeddings.mf import train_mf
from services.embeddings.node2vec import train_node2vec
from services.embeddings.store import load_embeddings
from services.evaluation.metrics import evaluate_queries, gain_report
from services.evaluation.reports import write_gain_csv, write_plot_data, write_report_csv, write_table_csv, write_trace_csv
from services.features.assemble import DRNL_ONLY, DRNL_PLUS_ATTR, DRNL_PLUS_EMBED
from services.features.featurizer import PairFeaturizer
from services.gnn.checkpoint import save_checkpoint
from services.gnn.params import ModelParams
from services.graph.fixtures import resolve_dataset
from services.graph.loader import graph_hash, load_attributes
from services.graph.splits import split_all, training_graph
from services.harness.grid import Cell, expand_grid, run_parallel, stable_seed
from services.harness.log_setup import configure_logging
from services.training.margin import cross_validate_margin
from services.training.trainer import evaluation_candidates, score_pairs, train_model

_METHOD_TAGS = {EmbedMethod.N2V: "node2vec", EmbedMethod.MF: "mf"}


@dataclass
class DatasetContext:
    graph: Graph
    master_seed: int
    splits: List[QuerySplit]
    train_graph: Graph
    attributes: Optional[np.ndarray] = None
    tables: Dict[EmbedMethod, EmbeddingTable] = field(default_factory=dict)


@dataclass
class CellResult:
    cell: Cell
    report: EvalReport
    delta: Optional[float]
    best_epoch: int
    trace: pd.DataFrame
    params: ModelParams


class ExperimentPipeline:
    """
    Runs the experiment grid of one configuration.

    Usage:
        pipeline = ExperimentPipeline(ExperimentConfig.from_file("grid.env"))
        results = pipeline.run(jobs=4)
    """

    def __init__(self, config: ExperimentConfig, settings: Optional[Settings] = None):
        self.config = config
        self.settings = settings or Settings()
        self.out_dir = Path(config.out_dir)
        self._graphs: Dict[int, Graph] = {}
        self._contexts: Dict[Tuple[int, int], DatasetContext] = {}

    # ==================== SPLIT ====================

    def graph(self, index: int) -> Graph:
        if index not in self._graphs:
            self._graphs[index] = resolve_dataset(self.config.datasets[index])
        return self._graphs[index]

    def dataset_names(self) -> List[str]:
        return [self.graph(i).name for i in range(len(self.config.datasets))]

    def context(self, index: int, master_seed: int) -> DatasetContext:
        key = (index, master_seed)
        if key not in self._contexts:
            g = self.graph(index)
            splits = split_all(g, master_seed)
            self._contexts[key] = DatasetContext(
                graph=g, master_seed=master_seed, splits=splits, train_graph=training_graph(g, splits)
            )
        return self._contexts[key]

    # ==================== EMBED ====================

    def train_embedding(self, ctx: DatasetContext, method: EmbedMethod) -> EmbeddingTable:
        """Train a table on the training graph; held-out edges never reach it."""
        seed = stable_seed(f"{ctx.graph.name}:{method.value}", ctx.master_seed)
        if method == EmbedMethod.N2V:
            table = train_node2vec(ctx.train_graph, self.config.node2vec_config(), seed=seed)
        else:
            table = train_mf(ctx.train_graph, self.config.mf_config(), seed=seed)
        table.provenance["graph_hash"] = graph_hash(ctx.train_graph)
        table.provenance["master_seed"] = str(ctx.master_seed)
        return table

    def embedding_table(self, ctx: DatasetContext, index: int, method: EmbedMethod) -> EmbeddingTable:
        if method in ctx.tables:
            return ctx.tables[method]

        supplied = self.config.embeddings[index] if self.config.embeddings else ""
        if supplied:
            table = load_embeddings(supplied, ctx.graph)
            if table.method == _METHOD_TAGS[method]:
                expected = graph_hash(ctx.train_graph)
                if table.provenance.get("graph_hash") == expected:
                    logger.info(f"[EMBED] using supplied {table.method} table {supplied}")
                    ctx.tables[method] = table
                    return table
                logger.warning(
                    f"[EMBED] {supplied} was trained on graph {table.provenance.get('graph_hash', '?')}, "
                    f"not the training graph {expected} of seed {ctx.master_seed}; retraining"
                )

        ctx.tables[method] = self.train_embedding(ctx, method)
        return ctx.tables[method]

    def attributes(self, ctx: DatasetContext, index: int) -> np.ndarray:
        if ctx.attributes is None:
            path = self.config.attributes[index] if self.config.attributes else ""
            if not path:
                raise ConfigError(f"drnl_plus_attr needs an attribute file for dataset {ctx.graph.name}")
            ctx.attributes = load_attributes(path, ctx.graph)
        return ctx.attributes

    # ==================== FEATURIZE ====================

    def featurizer(self, ctx: DatasetContext, index: int, mode: FeatureMode) -> PairFeaturizer:
        side, tag = None, DRNL_ONLY
        if mode == FeatureMode.DRNL_PLUS_ATTR:
            side, tag = self.attributes(ctx, index), DRNL_PLUS_ATTR
        elif mode.embed_method is not None:
            side, tag = self.embedding_table(ctx, index, mode.embed_method).vectors, DRNL_PLUS_EMBED
        logger.info(f"[FEATURIZE] {ctx.graph.name}: mode {mode.value}, hops={self.config.hops}")
        return PairFeaturizer(
            ctx.train_graph,
            hops=self.config.hops,
            max_label=self.config.max_label,
            side=side,
            mode=tag,
            cache_dir=self.settings.cache_dir,
        )

    # ==================== TRAIN / EVAL ====================

    def run_cell(self, cell: Cell) -> CellResult:
        ctx = self.context(cell.dataset_index, cell.master_seed)
        featurizer = self.featurizer(ctx, cell.dataset_index, cell.mode)
        cfg = self.config.gnn_config(cell.architecture)
        tcfg = self.config.train_config(cell.loss, cell.seed)

        logger.info(f"[TRAIN] {cell.name}: {len(ctx.splits)} queries")
        if cell.loss == LossKind.RANK:
            delta, result = cross_validate_margin(ctx.splits, featurizer, cfg, tcfg)
        else:
            delta, result = None, train_model(ctx.splits, featurizer, cfg, tcfg)

        items = evaluation_candidates(ctx.splits, self.config.test_neg_cap, cell.seed)
        report = evaluate_queries(items, lambda pairs: score_pairs(result.params, featurizer, pairs))
        report = _with_original_ids(report, ctx.graph)
        logger.info(f"[EVAL] {cell.name}: MAP={report.map:.4f} MRR={report.mrr:.4f} ({report.skipped} skipped)")
        return CellResult(
            cell=cell, report=report, delta=delta, best_epoch=result.best_epoch,
            trace=result.trace, params=result.params,
        )

    # ==================== REPORTS ====================

    def write_cell(self, result: CellResult) -> None:
        write_report_csv(result.report, self.out_dir / "reports" / f"{result.cell.name}.csv")
        write_trace_csv(result.trace, self.out_dir / "traces" / f"{result.cell.name}.csv")
        save_checkpoint(
            result.params,
            self.out_dir / "checkpoints" / f"{result.cell.name}.npz",
            extra={"cell": result.cell.name, "delta": result.delta, "best_epoch": int(result.best_epoch)},
        )

    def write_summaries(self, results: List[CellResult]) -> List[Path]:
        paths = []
        for loss in self.config.losses:
            rows = [r for r in results if r.cell.loss == loss]
            for metric in ("map", "mrr"):
                table = summary_table(rows, metric, self.config)
                paths.append(write_table_csv(table, self.out_dir / f"summary_{metric}_{loss.value}.csv"))
        return paths

    def write_gains(self, results: List[CellResult]) -> List[Path]:
        baselines = {
            (r.cell.dataset, r.cell.architecture, r.cell.loss, r.cell.master_seed): r
            for r in results if r.cell.mode == FeatureMode.DRNL_ONLY
        }
        paths = []
        for r in results:
            base = baselines.get((r.cell.dataset, r.cell.architecture, r.cell.loss, r.cell.master_seed))
            if r.cell.mode == FeatureMode.DRNL_ONLY or base is None:
                continue
            gain = gain_report(r.report, base.report)
            stem = self.out_dir / "gains" / r.cell.name
            paths.append(write_gain_csv(gain, stem.with_suffix(".csv")))
            write_plot_data(gain, stem.with_suffix(".dat"))
            logger.info(f"[EVAL] {r.cell.name}: positive gain on {gain.positive_fraction:.0%} of queries")
        return paths

    def run(self, jobs: int = 1) -> List[CellResult]:
        """Run every cell, then write per-cell reports, summaries and gain reports."""
        cells = expand_grid(self.config, self.dataset_names())
        logger.info(f"Running {len(cells)} cells with {jobs} worker(s)")
        if jobs <= 1:
            results = [self.run_cell(cell) for cell in cells]
        else:
            results = run_parallel(
                _run_cell_in_worker, cells, jobs,
                initializer=_init_worker, initargs=(self.config.to_text(), self.settings),
            )
        for result in results:
            self.write_cell(result)
        self.write_summaries(results)
        self.write_gains(results)
        logger.info(f"Results written to {self.out_dir}")
        return results


def summary_table(results: List[CellResult], metric: str, config: ExperimentConfig) -> pd.DataFrame:
    """Rows are datasets, columns architecture/mode, values the seed-averaged metric."""
    records = [
        (r.cell.dataset, f"{r.cell.architecture.value}/{r.cell.mode.value}", getattr(r.report, metric))
        for r in results
    ]
    frame = pd.DataFrame(records, columns=["dataset", "column", metric])
    table = frame.groupby(["dataset", "column"], sort=False)[metric].mean().unstack("column")
    columns = [f"{a.value}/{m.value}" for a in config.architectures for m in config.modes]
    return table.reindex(columns=columns)


def _with_original_ids(report: EvalReport, graph: Graph) -> EvalReport:
    per_query = report.per_query.copy()
    per_query["query"] = graph.node_ids[per_query["query"].to_numpy()]
    per_query = per_query.sort_values("query", kind="stable").reset_index(drop=True)
    return EvalReport(per_query=per_query, map=report.map, mrr=report.mrr, skipped=report.skipped)


# One pipeline per worker process, so datasets, splits and embeddings are
# prepared once per worker rather than once per cell.
_WORKER_PIPELINE: Optional[ExperimentPipeline] = None


def _init_worker(config_text: str, settings: Settings) -> None:
    global _WORKER_PIPELINE
    configure_logging(settings.log_level)
    _WORKER_PIPELINE = ExperimentPipeline(ExperimentConfig.from_text(config_text), settings)


def _run_cell_in_worker(cell: Cell) -> CellResult:
    return _WORKER_PIPELINE.run_cell(cell)
