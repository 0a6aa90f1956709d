"""
Edge-list and node-attribute readers.

Edge list: one "u v" pair per line, whitespace separated, '#' comments.
Attribute file: one "id f1 f2 ... fd" row per node.
"""

import hashlib
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from exceptions import ConfigError, DataError
from models import Graph


def load_edge_list(path: str | Path, name: Optional[str] = None) -> Graph:
    """
    Read an undirected edge list.

    Duplicate and reversed lines are merged, self-loop lines are dropped (and
    counted), and node ids are compacted to 0..n-1; the original ids stay in
    `Graph.node_ids`.

    Args:
        path: Edge-list file
        name: Dataset name (default: file stem)

    Returns:
        Graph
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"edge list not found: {path}")

    pairs = []
    self_loops = 0
    try:
        with path.open(encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                fields = text.split()
                if len(fields) != 2:
                    raise DataError(f"expected two node ids, got {len(fields)} field(s)", line=lineno)
                try:
                    u, v = int(fields[0]), int(fields[1])
                except ValueError:
                    raise DataError(f"node ids must be integers: {text!r}", line=lineno) from None
                if u < 0 or v < 0:
                    raise DataError(f"node ids must be non-negative: {text!r}", line=lineno)
                if u == v:
                    self_loops += 1
                    continue
                pairs.append((u, v))
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {path}: {e}") from e

    if self_loops:
        logger.warning(f"[LOAD] {path.name}: dropped {self_loops} self-loop line(s)")
    if not pairs:
        raise DataError(f"{path} contains no edges")

    raw = np.asarray(pairs, dtype=np.int64)
    node_ids, compact = np.unique(raw, return_inverse=True)
    graph = Graph.from_edges(len(node_ids), compact.reshape(-1, 2), node_ids=node_ids, name=name or path.stem)
    logger.info(f"[LOAD] {graph.name}: {graph.num_nodes} nodes, {graph.num_edges} edges")
    return graph


def load_attributes(path: str | Path, graph: Graph) -> np.ndarray:
    """
    Read raw node attributes aligned to the graph's compacted ids.

    Returns:
        num_nodes x d array; rows of nodes absent from the file are NaN so that
        feature assembly can report them.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"attribute file not found: {path}")
    try:
        frame = pd.read_csv(path, sep=r"\s+", header=None, comment="#", engine="python")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse attribute file {path}: {e}") from e
    if frame.shape[1] < 2:
        raise DataError(f"attribute file {path} needs an id column and at least one feature")
    if frame.isna().any().any():
        raise DataError(f"attribute file {path} has rows of unequal width")

    ids = frame.iloc[:, 0].to_numpy(dtype=np.int64)
    values = frame.iloc[:, 1:].to_numpy(dtype=np.float64)
    out = np.full((graph.num_nodes, values.shape[1]), np.nan)
    pos = np.searchsorted(graph.node_ids, ids)
    known = (pos < graph.num_nodes) & (graph.node_ids[np.minimum(pos, graph.num_nodes - 1)] == ids)
    out[pos[known]] = values[known]

    missing = int(np.isnan(out).any(axis=1).sum())
    if missing:
        logger.warning(f"[LOAD] {path.name}: {missing} graph node(s) have no attribute row")
    return out


def graph_hash(graph: Graph) -> str:
    """Stable content hash of the compacted adjacency."""
    digest = hashlib.sha256()
    digest.update(graph.indptr.tobytes())
    digest.update(graph.indices.tobytes())
    digest.update(graph.node_ids.tobytes())
    return digest.hexdigest()[:16]
