from typing import Optional, Sequence, Tuple

import numpy as np

from models import EnclosingSubgraph, FeatureMatrix, Graph
from services.features.assemble import DRNL_ONLY, assemble_features
from services.features.cache import SubgraphCache
from services.features.drnl import drnl_label


class PairFeaturizer:
    """
    Subgraph + DRNL + side features for candidate pairs of one message graph.

    Every FeatureMatrix it returns has the same width.
    """

    def __init__(
        self,
        graph: Graph,
        hops: int = 1,
        max_label: int = 10,
        side: Optional[np.ndarray] = None,
        mode: str = DRNL_ONLY,
        cache_dir: Optional[str] = None,
    ):
        self.graph = graph
        self.max_label = max_label
        self.side = side
        self.mode = mode
        self.cache = SubgraphCache(graph, hops=hops, directory=cache_dir)

    @property
    def width(self) -> int:
        side_width = 0 if self.side is None else self.side.shape[1]
        return self.max_label + 1 + side_width

    def featurize(self, u: int, v: int) -> Tuple[EnclosingSubgraph, FeatureMatrix]:
        sub = self.cache.get(u, v)
        labels = drnl_label(sub)
        return sub, assemble_features(sub, labels, self.side, self.max_label, self.mode)

    def featurize_many(self, pairs: Sequence[Tuple[int, int]]):
        return [self.featurize(int(u), int(v)) for u, v in pairs]
