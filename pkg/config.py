import io
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from exceptions import ConfigError


class Settings(BaseSettings):
    log_level: str = "INFO"
    jobs: int = 1
    out_dir: str = "results"
    cache_dir: Optional[str] = None


    class Config:
        env_prefix = "LINKPRED_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


class Architecture(str, Enum):
    GCN = "gcn"
    GIN = "gin"
    SAGE = "sage"
    DGCNN = "dgcnn"


class LossKind(str, Enum):
    BCE = "bce"
    RANK = "rank"


class FeatureMode(str, Enum):
    DRNL_ONLY = "drnl_only"
    DRNL_PLUS_N2V = "drnl_plus_n2v"
    DRNL_PLUS_MF = "drnl_plus_mf"
    DRNL_PLUS_ATTR = "drnl_plus_attr"

    @property
    def embed_method(self) -> Optional["EmbedMethod"]:
        return {
            FeatureMode.DRNL_PLUS_N2V: EmbedMethod.N2V,
            FeatureMode.DRNL_PLUS_MF: EmbedMethod.MF,
        }.get(self)


class EmbedMethod(str, Enum):
    N2V = "n2v"
    MF = "mf"


class GnnConfig(BaseModel):
    """Hyperparameters of one inductive model (layer rule, depth, widths)."""

    model_config = ConfigDict(frozen=True)

    architecture: Architecture = Architecture.GCN
    layers: int = Field(default=2, ge=1, le=3)  # message-passing hops, K <= 3
    hidden: int = Field(default=32, ge=1)
    gin_epsilon: float = 0.0
    sortpool_k: Optional[int] = None  # None: derived from training subgraph sizes
    scorer_hidden: int = Field(default=32, ge=1)

    @model_validator(mode="after")
    def _check_sortpool(self):
        if self.architecture == Architecture.DGCNN and self.sortpool_k is not None and self.sortpool_k < 2:
            raise ValueError("sortpool_k must be >= 2 for dgcnn")
        return self


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    loss: LossKind = LossKind.BCE
    lr: float = Field(default=1e-3, gt=0)
    patience: int = Field(default=6, ge=1)
    margin_grid: List[float] = [0.1, 1.0, 10.0]
    delta: Optional[float] = None  # margin of a single ranking run
    max_epochs: int = Field(default=200, ge=0)
    neg_per_pos: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    rank_sample: int = Field(default=20, ge=1)  # pos and neg drawn per query per epoch
    seed: int = 0

    @model_validator(mode="after")
    def _check_margins(self):
        if self.loss == LossKind.RANK and not self.margin_grid and self.delta is None:
            raise ValueError("margin_grid must be non-empty for the ranking loss")
        return self


class Node2VecConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default=128, ge=1)
    p: float = Field(default=1.0, gt=0)
    q: float = Field(default=1.0, gt=0)
    walk_length: Optional[int] = Field(default=None, ge=1)
    walks_per_node: int = Field(default=10, ge=1)
    window: int = Field(default=5, ge=1)
    epochs: int = Field(default=5, ge=0)
    negatives: int = Field(default=5, ge=1)
    lr: float = Field(default=0.025, gt=0)
    exact: Literal["auto", "true", "false"] = "auto"
    exact_steps: int = Field(default=200, ge=0)  # full-batch steps of the exact-softmax optimizer


class MFConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default=128, ge=1)
    lam: float = Field(default=0.01, ge=0)
    epochs: int = Field(default=500, ge=0)
    lr: float = Field(default=0.01, gt=0)
    include_self: bool = True
    line_search: bool = True


_LIST_FIELDS = (
    "datasets", "attributes", "embeddings", "modes", "architectures",
    "losses", "seeds", "margin_grid", "walk_fractions",
)
_OPTIONAL_FIELDS = ("test_neg_cap", "sortpool_k", "n2v_walk_length")


class ExperimentConfig(BaseModel):
    """
    Everything one experiment grid needs, as a flat key=value file.

    Example file:
        datasets=data/pb.edges,data/cora.edges
        modes=drnl_only,drnl_plus_n2v
        architectures=gcn,gin,sage,dgcnn
        losses=bce
        seeds=0,1,2
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # data
    datasets: List[str] = ["fixture:planted"]
    attributes: List[str] = []
    embeddings: List[str] = []
    out_dir: str = "results"

    # grid
    modes: List[FeatureMode] = [FeatureMode.DRNL_ONLY, FeatureMode.DRNL_PLUS_N2V]
    architectures: List[Architecture] = [Architecture.GCN]
    losses: List[LossKind] = [LossKind.BCE]
    seeds: List[int] = [0]

    # features
    hops: int = Field(default=1, ge=1, le=3)
    max_label: int = Field(default=10, ge=1)
    test_neg_cap: Optional[int] = Field(default=None, ge=1)

    # inductive model
    layers: int = Field(default=2, ge=1, le=3)
    hidden: int = Field(default=32, ge=1)
    gin_epsilon: float = 0.0
    sortpool_k: Optional[int] = Field(default=None, ge=2)
    scorer_hidden: int = Field(default=32, ge=1)

    # training
    lr: float = Field(default=1e-3, gt=0)
    patience: int = Field(default=6, ge=1)
    margin_grid: List[float] = [0.1, 1.0, 10.0]
    max_epochs: int = Field(default=200, ge=0)
    neg_per_pos: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    rank_sample: int = Field(default=20, ge=1)

    # transductive models
    embed_method: EmbedMethod = EmbedMethod.N2V
    n2v_dim: int = Field(default=128, ge=1)
    n2v_p: float = Field(default=1.0, gt=0)
    n2v_q: float = Field(default=1.0, gt=0)
    n2v_walk_length: Optional[int] = Field(default=None, ge=1)
    n2v_walks_per_node: int = Field(default=10, ge=1)
    n2v_window: int = Field(default=5, ge=1)
    n2v_epochs: int = Field(default=5, ge=0)
    n2v_negatives: int = Field(default=5, ge=1)
    n2v_lr: float = Field(default=0.025, gt=0)
    n2v_exact: Literal["auto", "true", "false"] = "auto"
    n2v_exact_steps: int = Field(default=200, ge=0)
    mf_dim: int = Field(default=128, ge=1)
    mf_lambda: float = Field(default=0.01, ge=0)
    mf_epochs: int = Field(default=500, ge=0)
    mf_lr: float = Field(default=0.01, gt=0)
    mf_include_self: bool = True
    mf_line_search: bool = True

    # walk-length sweep, as fractions of |V|
    walk_fractions: List[float] = [0.02, 0.05]

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            value = value.strip()
            return [item.strip() for item in value.split(",")] if value else []
        return value

    @field_validator(*_OPTIONAL_FIELDS, mode="before")
    @classmethod
    def _empty_is_none(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value

    @model_validator(mode="after")
    def _check_aligned(self):
        for name in ("attributes", "embeddings"):
            files = getattr(self, name)
            if files and len(files) != len(self.datasets):
                raise ValueError(f"{name} must list one entry per dataset ({len(self.datasets)})")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        return self

    # ==================== PARSE / SERIALIZE ====================

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = dotenv_values(stream=io.StringIO(text))
        unknown = sorted(set(raw) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = {key: ("" if value is None else value) for key, value in raw.items()}
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = []
        for name in self.model_fields:
            lines.append(f"{name}={_format_value(getattr(self, name))}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **changes) -> "ExperimentConfig":
        """Return a validated copy with some fields replaced."""
        try:
            return type(self)(**{**self.model_dump(), **changes})
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    # ==================== DERIVED VIEWS ====================

    def gnn_config(self, architecture: Architecture) -> GnnConfig:
        return GnnConfig(
            architecture=architecture,
            layers=self.layers,
            hidden=self.hidden,
            gin_epsilon=self.gin_epsilon,
            sortpool_k=self.sortpool_k,
            scorer_hidden=self.scorer_hidden,
        )

    def train_config(self, loss: LossKind, seed: int) -> TrainConfig:
        return TrainConfig(
            loss=loss,
            lr=self.lr,
            patience=self.patience,
            margin_grid=self.margin_grid,
            max_epochs=self.max_epochs,
            neg_per_pos=self.neg_per_pos,
            batch_size=self.batch_size,
            rank_sample=self.rank_sample,
            seed=seed,
        )

    def node2vec_config(self) -> Node2VecConfig:
        return Node2VecConfig(
            dim=self.n2v_dim,
            p=self.n2v_p,
            q=self.n2v_q,
            walk_length=self.n2v_walk_length,
            walks_per_node=self.n2v_walks_per_node,
            window=self.n2v_window,
            epochs=self.n2v_epochs,
            negatives=self.n2v_negatives,
            lr=self.n2v_lr,
            exact=self.n2v_exact,
            exact_steps=self.n2v_exact_steps,
        )

    def mf_config(self) -> MFConfig:
        return MFConfig(
            dim=self.mf_dim,
            lam=self.mf_lambda,
            epochs=self.mf_epochs,
            lr=self.mf_lr,
            include_self=self.mf_include_self,
            line_search=self.mf_line_search,
        )


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
