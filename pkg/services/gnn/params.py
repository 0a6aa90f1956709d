"""
Trainable parameters of one inductive link predictor.

Names follow "<block>.<layer>.<kind>", e.g. "conv1.weight", "scorer.out.bias".
Shapes depend only on (GnnConfig, feature width), never on the graph.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from config import Architecture, GnnConfig
from exceptions import ContractError
from services.autodiff.tensor import Tensor

DGCNN_CONV_CHANNELS = 16


@dataclass
class ModelParams:
    cfg: GnnConfig
    feature_width: int
    tensors: Dict[str, Tensor]

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def names(self) -> List[str]:
        return list(self.tensors)

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: t.values.copy() for name, t in self.tensors.items()}

    def restore(self, values: Dict[str, np.ndarray]) -> None:
        for name, array in values.items():
            self.tensors[name].values = array.copy()

    def num_parameters(self) -> int:
        return int(sum(t.values.size for t in self.tensors.values()))


def embedding_width(cfg: GnnConfig) -> int:
    """Per-node width after the concatenating readout."""
    width = cfg.layers * cfg.hidden
    if cfg.architecture == Architecture.DGCNN:
        width += 1
    return width


def parameter_shapes(cfg: GnnConfig, feature_width: int) -> List[Tuple[str, Tuple[int, ...]]]:
    shapes = []
    width = feature_width
    for k in range(1, cfg.layers + 1):
        if cfg.architecture == Architecture.GCN:
            shapes += [(f"conv{k}.weight", (width, cfg.hidden)), (f"conv{k}.bias", (cfg.hidden,))]
        elif cfg.architecture == Architecture.SAGE:
            shapes += [(f"conv{k}.weight", (2 * width, cfg.hidden)), (f"conv{k}.bias", (cfg.hidden,))]
        elif cfg.architecture == Architecture.GIN:
            shapes += [
                (f"conv{k}.mlp1.weight", (width, cfg.hidden)),
                (f"conv{k}.mlp1.bias", (cfg.hidden,)),
                (f"conv{k}.mlp2.weight", (cfg.hidden, cfg.hidden)),
                (f"conv{k}.mlp2.bias", (cfg.hidden,)),
            ]
        else:
            shapes += [(f"conv{k}.weight", (width, cfg.hidden))]
        width = cfg.hidden

    if cfg.architecture == Architecture.DGCNN:
        if cfg.sortpool_k is None:
            raise ContractError("dgcnn parameters need a resolved sortpool_k")
        channels = embedding_width(cfg)
        shapes += [
            (f"conv{cfg.layers + 1}.weight", (cfg.hidden, 1)),
            ("readout.conv.weight", (channels, DGCNN_CONV_CHANNELS)),
            ("readout.conv.bias", (DGCNN_CONV_CHANNELS,)),
            ("readout.dense.weight", (cfg.sortpool_k * DGCNN_CONV_CHANNELS, cfg.scorer_hidden)),
            ("readout.dense.bias", (cfg.scorer_hidden,)),
            ("readout.out.weight", (cfg.scorer_hidden, 1)),
            ("readout.out.bias", (1,)),
        ]
    else:
        pair_width = 2 * embedding_width(cfg)
        shapes += [
            ("scorer.hidden.weight", (pair_width, cfg.scorer_hidden)),
            ("scorer.hidden.bias", (cfg.scorer_hidden,)),
            ("scorer.out.weight", (cfg.scorer_hidden, 1)),
            ("scorer.out.bias", (1,)),
        ]
    return shapes


def init_params(cfg: GnnConfig, feature_width: int, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in parameter_shapes(cfg, feature_width):
        if name.endswith(".bias"):
            values = np.zeros(shape)
        else:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            values = rng.uniform(-limit, limit, size=shape)
        tensors[name] = Tensor(values, requires_grad=True, name=name)
    return ModelParams(cfg=cfg, feature_width=feature_width, tensors=tensors)
