from typing import Optional, Sequence, Tuple

from loguru import logger

from config import GnnConfig, LossKind, TrainConfig
from exceptions import ContractError
from models import QuerySplit
from services.features.featurizer import PairFeaturizer
from services.training.trainer import TrainResult, train_model


def cross_validate_margin(
    splits: Sequence[QuerySplit],
    featurizer: PairFeaturizer,
    cfg: GnnConfig,
    tcfg: TrainConfig,
    grid: Optional[Sequence[float]] = None,
) -> Tuple[float, TrainResult]:
    """
    Train one ranking model per margin and keep the one with the best validation MAP.

    Margins are tried in ascending order and only a strictly better MAP replaces
    the incumbent, so ties go to the smaller margin.
    """
    if tcfg.loss != LossKind.RANK:
        raise ContractError("margin cross-validation needs the ranking loss")
    grid = sorted(grid if grid is not None else tcfg.margin_grid)
    if not grid:
        raise ContractError("margin grid is empty")

    best_delta, best_result = None, None
    for delta in grid:
        result = train_model(splits, featurizer, cfg, tcfg, delta=delta)
        logger.info(f"[TRAIN] margin {delta:g}: best validation MAP {result.best_val_map:.4f}")
        if best_result is None or result.best_val_map > best_result.best_val_map:
            best_delta, best_result = delta, result
    logger.info(f"[TRAIN] selected margin {best_delta:g}")
    return best_delta, best_result
