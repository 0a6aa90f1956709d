"""
Subgraph cache keyed by (graph hash, K, pair).

In memory it is a dict. When a directory is given, `save()` spills every cached
subgraph of one (graph, K) to `<directory>/subgraphs_<graph_hash>_k<K>.npz`
and the next cache built with the same key loads it back. The file is
replaced atomically; an unreadable one counts as empty. File layout, m pairs:

    pairs      int64 (m, 2)     candidate pair (u, v) in graph ids
    node_ptr   int64 (m + 1,)   nodes of pair i are nodes[node_ptr[i]:node_ptr[i+1]]
    nodes      int64            graph ids in local order
    dist_u     float64          aligned with nodes; inf = unreachable
    dist_v     float64
    edge_ptr   int64 (m + 1,)   local edges of pair i are edge_ptr[i]:edge_ptr[i+1]
    edge_rows  int64            local row index (both directions stored)
    edge_cols  int64
"""

import os
import tempfile
from pathlib import Path
from typing import Dict, Optional, Tuple
from zipfile import BadZipFile

import numpy as np
import scipy.sparse as sp
from loguru import logger

from models import EnclosingSubgraph, Graph
from services.features.subgraph import extract_enclosing_subgraph
from services.graph.loader import graph_hash


class SubgraphCache:
    """
    Memoizes extract_enclosing_subgraph for one message graph and hop radius.

    Usage:
        cache = SubgraphCache(train_graph, hops=1, directory="cache/")
        sub = cache.get(3, 17)
        cache.save()
    """

    def __init__(self, graph: Graph, hops: int = 1, directory: Optional[str | Path] = None):
        self.graph = graph
        self.hops = hops
        self.key = graph_hash(graph)
        self.directory = Path(directory) if directory else None
        self.hits = 0
        self.misses = 0
        self._items: Dict[Tuple[int, int], EnclosingSubgraph] = {}
        self._dirty = False
        if self.path is not None and self.path.is_file():
            try:
                self._items = _read(self.path, hops)
            except (BadZipFile, EOFError, KeyError, ValueError) as e:
                logger.warning(f"[FEATURIZE] unreadable cache {self.path}, rebuilding: {e}")
            else:
                logger.debug(f"[FEATURIZE] loaded {len(self._items)} cached subgraphs from {self.path}")

    @property
    def path(self) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"subgraphs_{self.key}_k{self.hops}.npz"

    def get(self, u: int, v: int) -> EnclosingSubgraph:
        pair = (int(u), int(v))
        sub = self._items.get(pair)
        if sub is not None:
            self.hits += 1
            return sub
        self.misses += 1
        sub = extract_enclosing_subgraph(self.graph, pair[0], pair[1], self.hops)
        self._items[pair] = sub
        self._dirty = True
        return sub

    def __len__(self):
        return len(self._items)

    def save(self) -> Optional[Path]:
        if self.path is None or not self._dirty:
            return None
        self.directory.mkdir(parents=True, exist_ok=True)
        _write(self.path, self._items)
        self._dirty = False
        logger.debug(f"[FEATURIZE] spilled {len(self._items)} subgraphs to {self.path}")
        return self.path


def _write(path: Path, items: Dict[Tuple[int, int], EnclosingSubgraph]) -> None:
    pairs = sorted(items)
    subs = [items[p] for p in pairs]
    coos = [sp.coo_array(s.adjacency) for s in subs]
    node_ptr = np.concatenate([[0], np.cumsum([s.num_nodes for s in subs])])
    edge_ptr = np.concatenate([[0], np.cumsum([c.nnz for c in coos])])

    def joined(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.empty(0, dtype=dtype)

    # readers in other worker processes only ever see a complete file
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            np.savez(
                handle,
                pairs=np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                node_ptr=node_ptr.astype(np.int64),
                nodes=joined([s.nodes for s in subs], np.int64),
                dist_u=joined([s.dist_u for s in subs], np.float64),
                dist_v=joined([s.dist_v for s in subs], np.float64),
                edge_ptr=edge_ptr.astype(np.int64),
                edge_rows=joined([c.row for c in coos], np.int64),
                edge_cols=joined([c.col for c in coos], np.int64),
            )
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read(path: Path, hops: int) -> Dict[Tuple[int, int], EnclosingSubgraph]:
    items = {}
    with np.load(path, allow_pickle=False) as data:
        arrays = {name: data[name] for name in data.files}
    node_ptr, edge_ptr = arrays["node_ptr"], arrays["edge_ptr"]
    for i, (u, v) in enumerate(arrays["pairs"]):
        a, b = node_ptr[i], node_ptr[i + 1]
        e, f = edge_ptr[i], edge_ptr[i + 1]
        n = b - a
        adjacency = sp.csr_array(
            (np.ones(f - e), (arrays["edge_rows"][e:f], arrays["edge_cols"][e:f])), shape=(n, n)
        )
        adjacency.sort_indices()
        items[(int(u), int(v))] = EnclosingSubgraph(
            nodes=arrays["nodes"][a:b],
            adjacency=adjacency,
            dist_u=arrays["dist_u"][a:b],
            dist_v=arrays["dist_v"][a:b],
            hops=hops,
        )
    return items
