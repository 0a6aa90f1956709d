"""
Embedding table files.

CSV layout (the interchange format):
    # method=node2vec
    # dim=128
    # ...                      one "# key=value" line per provenance entry
    node_id,v1,...,vdim        node_id is the original id from the edge list
    17,0.0123,...

The .npz cache holds the same table as arrays: vectors, node_ids, and the
provenance as a JSON string.
"""

import json
from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd
from loguru import logger

from exceptions import ConfigError, DataError
from models import EmbeddingTable, Graph


def write_embeddings_csv(table: EmbeddingTable, graph: Graph, path: str | Path) -> Path:
    if table.num_nodes != graph.num_nodes:
        raise DataError(f"table has {table.num_nodes} rows, graph {graph.name} has {graph.num_nodes} nodes")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    frame = pd.DataFrame(table.vectors, columns=[f"v{i + 1}" for i in range(table.dim)])
    frame.insert(0, "node_id", graph.node_ids)
    header = "".join(f"# {key}={value}\n" for key, value in sorted(table.provenance.items()))
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    path.write_text(header + body, encoding="utf-8")
    logger.info(f"[EMBED] wrote {table.num_nodes}x{table.dim} {table.method} table to {path}")
    return path


def read_provenance(path: str | Path) -> Dict[str, str]:
    provenance = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            provenance[key.strip()] = value.strip()
    return provenance


def read_embeddings_csv(path: str | Path, graph: Graph) -> EmbeddingTable:
    """
    Load a CSV table and align its rows to the graph's compacted node ids.

    Raises:
        ConfigError: file does not exist
        DataError: malformed file, or a graph node has no row
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"embedding file not found: {path}")
    provenance = read_provenance(path)
    try:
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse embedding file {path}: {e}") from e
    if "node_id" not in frame.columns or frame.shape[1] < 2:
        raise DataError(f"{path}: expected columns node_id,v1,...,vdim")

    ids = frame["node_id"].to_numpy(dtype=np.int64)
    vectors = frame.drop(columns="node_id").to_numpy(dtype=np.float64)
    method = provenance.get("method", "node2vec")
    return EmbeddingTable(vectors=_align(ids, vectors, graph, path), method=method, provenance=provenance)


def write_embeddings_npz(table: EmbeddingTable, graph: Graph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        np.savez(
            handle,
            vectors=table.vectors,
            node_ids=graph.node_ids,
            provenance=np.asarray(json.dumps({"method": table.method, **table.provenance}, sort_keys=True)),
        )
    return path


def read_embeddings_npz(path: str | Path, graph: Graph) -> EmbeddingTable:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"embedding file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            vectors = data["vectors"]
            ids = data["node_ids"]
            provenance = json.loads(str(data["provenance"]))
    except (KeyError, ValueError, OSError) as e:
        raise DataError(f"cannot read embedding cache {path}: {e}") from e
    method = provenance.pop("method", "node2vec")
    return EmbeddingTable(vectors=_align(ids, vectors, graph, path), method=method, provenance=provenance)


def load_embeddings(path: str | Path, graph: Graph) -> EmbeddingTable:
    """CSV or .npz, chosen by suffix."""
    if Path(path).suffix == ".npz":
        return read_embeddings_npz(path, graph)
    return read_embeddings_csv(path, graph)


def _align(ids: np.ndarray, vectors: np.ndarray, graph: Graph, path) -> np.ndarray:
    lookup = pd.Series(np.arange(len(ids)), index=ids)
    if lookup.index.has_duplicates:
        raise DataError(f"{path}: duplicate node ids")
    missing = np.setdiff1d(graph.node_ids, ids)
    if len(missing):
        raise DataError(f"{path}: no embedding for {len(missing)} node(s), e.g. {missing[:5].tolist()}")
    return vectors[lookup.loc[graph.node_ids].to_numpy()]

