"""
Subcommand implementations. Each returns the paths it wrote (or a frame) and
leaves argument parsing and exit codes to the CLI.
"""

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from config import ExperimentConfig, FeatureMode, Settings
from services.embeddings.store import write_embeddings_csv, write_embeddings_npz
from services.evaluation.metrics import gain_report
from services.evaluation.reports import read_report_csv, write_gain_csv, write_plot_data
from services.graph.fixtures import path as path_graph
from services.graph.fixtures import planted_partition, resolve_dataset, triangle, write_edge_list
from services.graph.queries import graph_stats
from services.harness.pipeline import ExperimentPipeline

STATS_COLUMNS = ["dataset", "num_nodes", "num_edges", "diameter", "num_queries", "avg_degree"]


def cmd_stats(datasets: Sequence[str], out_dir: Optional[str | Path] = None) -> pd.DataFrame:
    """One row of |V|, |E|, diameter, |Q| (and 2|E|/|V|) per dataset."""
    rows = []
    for spec in datasets:
        stats = graph_stats(resolve_dataset(spec))
        rows.append((stats.dataset, stats.num_nodes, stats.num_edges, stats.diameter,
                     stats.num_queries, stats.avg_degree))
    frame = pd.DataFrame(rows, columns=STATS_COLUMNS)
    if out_dir is not None:
        path = Path(out_dir) / "stats.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Stats written to {path}")
    return frame


def cmd_embed(
    config: ExperimentConfig, seed: int, out_dir: str | Path, settings: Optional[Settings] = None
) -> List[Path]:
    """
    Train the configured transductive model on every dataset's training graph
    for master seed `seed` and write <out>/embeddings/<dataset>_<method>.csv
    plus a .npz cache. `run` with the same seed accepts these tables as is.
    """
    pipeline = ExperimentPipeline(config, settings)
    written = []
    for index in range(len(config.datasets)):
        ctx = pipeline.context(index, seed)
        table = pipeline.train_embedding(ctx, config.embed_method)
        table.provenance["dataset"] = ctx.graph.name
        stem = Path(out_dir) / "embeddings" / f"{ctx.graph.name}_{table.method}"
        written.append(write_embeddings_csv(table, ctx.graph, stem.with_suffix(".csv")))
        write_embeddings_npz(table, ctx.graph, stem.with_suffix(".npz"))
    return written


def cmd_run(config: ExperimentConfig, jobs: int = 1, settings: Optional[Settings] = None) -> Path:
    """Run the whole grid; returns the output directory."""
    ExperimentPipeline(config, settings).run(jobs=jobs)
    return Path(config.out_dir)


def walk_length_for(fraction: float, num_nodes: int) -> int:
    return max(1, int(np.floor(fraction * num_nodes + 0.5)))


def cmd_sweep_walklength(
    config: ExperimentConfig,
    jobs: int = 1,
    settings: Optional[Settings] = None,
    walk_lengths: Optional[Sequence[int]] = None,
) -> pd.DataFrame:
    """
    Re-run the node2vec-enhanced grid once per walk length and write
    <out>/sweep_walklength.csv with the seed-averaged MAP and MRR per length.

    Args:
        walk_lengths: Absolute lengths; by default each configured walk fraction times |V|
    """
    out_dir = Path(config.out_dir)
    records = []
    for index, spec in enumerate(config.datasets):
        g = resolve_dataset(spec)
        if walk_lengths is not None:
            lengths = [(float("nan"), int(r)) for r in walk_lengths]
        else:
            lengths = [(f, walk_length_for(f, g.num_nodes)) for f in config.walk_fractions]
        for fraction, r in lengths:
            sub_config = config.with_overrides(
                datasets=[spec],
                attributes=[config.attributes[index]] if config.attributes else [],
                embeddings=[],
                modes=[FeatureMode.DRNL_PLUS_N2V],
                n2v_walk_length=r,
                out_dir=str(out_dir / "sweep" / f"{g.name}_r{r}"),
            )
            logger.info(f"[EMBED] sweep {g.name}: walk length {r}")
            results = ExperimentPipeline(sub_config, settings).run(jobs=jobs)
            for result in results:
                records.append((g.name, result.cell.architecture.value, result.cell.loss.value,
                                fraction, r, result.cell.master_seed, result.report.map, result.report.mrr))

    frame = pd.DataFrame(records, columns=["dataset", "architecture", "loss", "fraction", "walk_length",
                                           "seed", "map", "mrr"])
    summary = (
        frame.groupby(["dataset", "architecture", "loss", "walk_length"], sort=False)
        .agg(fraction=("fraction", "first"), map=("map", "mean"), mrr=("mrr", "mean"))
        .reset_index()
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    summary.to_csv(out_dir / "sweep_walklength.csv", index=False, float_format="%.17g", lineterminator="\n")
    return summary


def cmd_gain(report_a: str | Path, report_b: str | Path, out_dir: str | Path) -> List[Path]:
    """Gain of report A over report B per query: sorted CSV plus plot data."""
    gain = gain_report(read_report_csv(report_a), read_report_csv(report_b))
    stem = Path(out_dir) / f"gain_{Path(report_a).stem}_vs_{Path(report_b).stem}"
    paths = [write_gain_csv(gain, stem.with_suffix(".csv")), write_plot_data(gain, stem.with_suffix(".dat"))]
    logger.info(f"[EVAL] positive gain on {gain.positive_fraction:.1%} of {len(gain.rows)} queries")
    return paths


def cmd_fixtures(out_dir: str | Path, seed: int = 0) -> List[Path]:
    """Write the bundled synthetic graphs as edge lists."""
    out_dir = Path(out_dir)
    graphs = [triangle(), path_graph(4), planted_partition(n=200, seed=seed)]
    return [write_edge_list(g, out_dir / f"{g.name}.edges") for g in graphs]

