import pytest
from pydantic import ValidationError

from config import (
    Architecture, ExperimentConfig, FeatureMode, GnnConfig, LossKind, Settings, TrainConfig,
)
from exceptions import ConfigError


def test_defaults_round_trip():
    config = ExperimentConfig()
    assert ExperimentConfig.from_text(config.to_text()) == config


def test_non_defaults_round_trip():
    config = ExperimentConfig().with_overrides(
        datasets=["fixture:planted:30", "data/pb.edges"],
        seeds=[3, 4],
        architectures=[Architecture.DGCNN, Architecture.SAGE],
        losses=[LossKind.RANK],
        sortpool_k=5,
        test_neg_cap=10,
        mf_include_self=False,
        margin_grid=[0.5, 2.0],
    )
    text = config.to_text()
    assert "architectures=dgcnn,sage\n" in text
    assert "mf_include_self=false\n" in text
    assert ExperimentConfig.from_text(text) == config


def test_file_parsing(tmp_path):
    path = tmp_path / "grid.env"
    path.write_text(
        "# small grid\n"
        "datasets=fixture:triangle, fixture:path:5\n"
        "modes=drnl_only\n"
        "seeds=1,2\n"
        "test_neg_cap=\n"
        "n2v_exact=false\n",
        encoding="utf-8",
    )
    config = ExperimentConfig.from_file(path)
    assert config.datasets == ["fixture:triangle", "fixture:path:5"]
    assert config.modes == [FeatureMode.DRNL_ONLY]
    assert config.seeds == [1, 2]
    assert config.test_neg_cap is None
    assert config.node2vec_config().exact == "false"


def test_unknown_key():
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_text("bogus=1\n")


@pytest.mark.parametrize("text", ["hops=9\n", "architectures=gcn,mlp\n", "seeds=\n", "lr=-1\n"])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_attribute_files_must_align():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("datasets=a.edges,b.edges\nattributes=a.attr\n")
    config = ExperimentConfig.from_text("datasets=a.edges,b.edges\nattributes=a.attr,b.attr\n")
    assert config.attributes == ["a.attr", "b.attr"]


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "nope.env")


def test_overrides_are_validated():
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(max_label=0)


def test_derived_views():
    config = ExperimentConfig.from_text("hidden=16\nsortpool_k=7\nmax_epochs=3\nmf_lambda=0.5\n")
    gnn = config.gnn_config(Architecture.DGCNN)
    assert (gnn.architecture, gnn.hidden, gnn.sortpool_k) == (Architecture.DGCNN, 16, 7)
    train = config.train_config(LossKind.RANK, seed=11)
    assert (train.loss, train.max_epochs, train.seed) == (LossKind.RANK, 3, 11)
    assert config.mf_config().lam == 0.5


def test_model_configs_validate():
    with pytest.raises(ValidationError):
        TrainConfig(loss=LossKind.RANK, margin_grid=[])
    assert TrainConfig(loss=LossKind.RANK, margin_grid=[], delta=1.0).delta == 1.0
    with pytest.raises(ValidationError):
        GnnConfig(architecture=Architecture.DGCNN, sortpool_k=1)
    with pytest.raises(ValidationError):
        GnnConfig(layers=4)


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("LINKPRED_JOBS", "3")
    monkeypatch.setenv("LINKPRED_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.jobs == 3
    assert settings.log_level == "DEBUG"
    assert settings.cache_dir is None
