"""
Double-radius node labels.

    f(x) = 1 + min(du, dv) + (d // 2) * (d // 2 + d % 2 - 1),   d = du + dv

u and v get label 1; a node that cannot reach u or v gets 0.
"""

import numpy as np

from models import EnclosingSubgraph


def drnl_from_distances(dist_u, dist_v) -> np.ndarray:
    dist_u = np.asarray(dist_u, dtype=np.float64)
    dist_v = np.asarray(dist_v, dtype=np.float64)
    reachable = np.isfinite(dist_u) & np.isfinite(dist_v)

    du = np.where(reachable, dist_u, 0).astype(np.int64)
    dv = np.where(reachable, dist_v, 0).astype(np.int64)
    d = du + dv
    half, parity = d // 2, d % 2
    labels = 1 + np.minimum(du, dv) + half * (half + parity - 1)
    return np.where(reachable, labels, 0)


def drnl_label(sub: EnclosingSubgraph) -> np.ndarray:
    labels = drnl_from_distances(sub.dist_u, sub.dist_v)
    labels[[sub.u_index, sub.v_index]] = 1
    return labels
