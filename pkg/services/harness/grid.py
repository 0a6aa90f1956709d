"""
Experiment grid: one cell per (dataset, architecture, mode, loss, master seed).

Each cell trains with its own seed, derived from the cell name and the master
seed by hashing, so adding or removing cells never changes another cell's run.
"""

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, TypeVar

from config import Architecture, ExperimentConfig, FeatureMode, LossKind

T = TypeVar("T")


def stable_seed(name: str, master_seed: int) -> int:
    digest = hashlib.sha256(f"{name}|{master_seed}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


@dataclass(frozen=True)
class Cell:
    dataset_index: int
    dataset: str  # display name of the graph
    architecture: Architecture
    mode: FeatureMode
    loss: LossKind
    master_seed: int

    @property
    def name(self) -> str:
        return f"{self.dataset}__{self.architecture.value}__{self.mode.value}__{self.loss.value}__s{self.master_seed}"

    @property
    def seed(self) -> int:
        return stable_seed(self.name, self.master_seed)


def expand_grid(config: ExperimentConfig, dataset_names: Sequence[str]) -> List[Cell]:
    cells = []
    for index, dataset in enumerate(dataset_names):
        for seed in config.seeds:
            for loss in config.losses:
                for architecture in config.architectures:
                    for mode in config.modes:
                        cells.append(Cell(index, dataset, architecture, mode, loss, seed))
    return cells


def run_parallel(fn: Callable[..., T], items: Sequence, jobs: int = 1, initializer=None, initargs=()) -> List[T]:
    """Map `fn` over items, in a process pool when jobs > 1; results keep input order."""
    if jobs <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(fn, items))
