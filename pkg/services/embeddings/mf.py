"""
Matrix-factorization embeddings.

    loss(Z) = || Y - Z Z^T ||_F^2 + lam * || Z ||_F^2

Y is the closed-neighborhood indicator: y_uv = 1 iff v is adjacent to u, with
y_uu = 1 unless include_self is off.
"""

from typing import List, Optional

import numpy as np
from loguru import logger

from config import MFConfig
from exceptions import NumericError
from models import EmbeddingTable, Graph
from services.autodiff.tensor import Tensor, add, hadamard, matmul, reduce_sum, scale, sub, transpose

MAX_HALVINGS = 50


def target_matrix(g: Graph, include_self: bool = True) -> np.ndarray:
    y = g.csr.toarray().astype(np.float64)
    if include_self:
        y += np.eye(g.num_nodes)
    return y


def mf_loss(z, g: Graph, lam: float, include_self: bool = True) -> Tensor:
    """
    Exact double-sum loss on the tape.

    Args:
        z: EmbeddingTable or a (num_nodes, dim) Tensor
        g: Graph defining Y
        lam: L2 regularizer
        include_self: Whether y_uu = 1

    Returns:
        Scalar tensor
    """
    if isinstance(z, EmbeddingTable):
        z = Tensor(z.vectors)
    residual = sub(Tensor(target_matrix(g, include_self)), matmul(z, transpose(z)))
    fit = reduce_sum(hadamard(residual, residual))
    return add(fit, scale(reduce_sum(hadamard(z, z)), lam))


def _loss_and_gradient(z: np.ndarray, y: np.ndarray, lam: float):
    residual = y - z @ z.T
    loss = float(np.sum(residual * residual) + lam * np.sum(z * z))
    grad = -4.0 * residual @ z + 2.0 * lam * z
    return loss, grad


def mf_gradient(z: np.ndarray, g: Graph, lam: float, include_self: bool = True) -> np.ndarray:
    """Closed-form gradient -4 (Y - Z Z^T) Z + 2 lam Z (Y is symmetric)."""
    return _loss_and_gradient(z, target_matrix(g, include_self), lam)[1]


def train_mf(
    g: Graph,
    cfg: MFConfig = MFConfig(),
    seed: int = 0,
    trace: Optional[List[float]] = None,
) -> EmbeddingTable:
    """
    Full-batch gradient descent on the MF loss.

    With line_search on, a step that would raise the loss is halved until it
    does not (and the halved lr carries over); without it, a non-finite loss
    aborts the run.

    Returns:
        The table with the lowest loss seen
    """
    y = target_matrix(g, cfg.include_self)
    rng = np.random.default_rng(seed)
    z = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(g.num_nodes, cfg.dim))
    provenance = {
        "method": "mf", "dim": str(cfg.dim), "lambda": repr(cfg.lam),
        "include_self": str(cfg.include_self).lower(), "seed": str(seed),
    }

    loss, grad = _loss_and_gradient(z, y, cfg.lam)
    best_loss, best_z = loss, z
    if trace is not None:
        trace.append(loss)

    lr = cfg.lr
    rejected = 0
    for epoch in range(cfg.epochs):
        if cfg.line_search:
            for _ in range(MAX_HALVINGS):
                candidate = z - lr * grad
                with np.errstate(over="ignore", invalid="ignore"):
                    new_loss, new_grad = _loss_and_gradient(candidate, y, cfg.lam)
                if np.isfinite(new_loss) and new_loss <= loss:
                    break
                lr *= 0.5
                rejected += 1
            else:
                logger.debug(f"[EMBED] mf line search exhausted at epoch {epoch}")
                break
        else:
            candidate = z - lr * grad
            with np.errstate(over="ignore", invalid="ignore"):
                new_loss, new_grad = _loss_and_gradient(candidate, y, cfg.lam)
            if not np.isfinite(new_loss):
                raise NumericError(
                    f"matrix factorization diverged at epoch {epoch} (lr={cfg.lr}); use a smaller mf_lr"
                )

        z, loss, grad = candidate, new_loss, new_grad
        if trace is not None:
            trace.append(loss)
        if loss < best_loss:
            best_loss, best_z = loss, z

    if rejected:
        logger.debug(f"[EMBED] mf line search rejected {rejected} steps, final lr={lr:g}")
    logger.info(f"[EMBED] mf on {g.name}: dim={cfg.dim}, best loss {best_loss:.4f}")
    return EmbeddingTable(vectors=best_z, method="mf", provenance=provenance)

