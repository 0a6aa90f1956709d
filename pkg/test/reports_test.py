import numpy as np
import pandas as pd
import pytest

from exceptions import DataError
from models import EvalReport
from services.evaluation.metrics import PER_QUERY_COLUMNS, gain_report
from services.evaluation.reports import (
    read_plot_data, read_report_csv, write_gain_csv, write_plot_data, write_report_csv, write_trace_csv,
)
from services.harness.commands import cmd_gain


@pytest.fixture
def report():
    per_query = pd.DataFrame(
        [(3, 0.5, 1.0, 2, 5), (10, 1.0 / 3.0, 0.5, 1, 4), (42, 1.0, 1.0, 1, 1)],
        columns=PER_QUERY_COLUMNS,
    )
    return EvalReport(per_query=per_query, map=float(per_query["ap"].mean()),
                      mrr=float(per_query["rr"].mean()), skipped=2)


@pytest.fixture
def baseline(report):
    per_query = report.per_query.assign(ap=[0.25, 0.5, 1.0])
    return EvalReport(per_query=per_query, map=float(per_query["ap"].mean()),
                      mrr=float(per_query["rr"].mean()), skipped=2)


def test_report_layout(tmp_path, report):
    lines = write_report_csv(report, tmp_path / "r.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# skipped=2"
    assert lines[1] == ",".join(PER_QUERY_COLUMNS)
    assert [line.split(",")[0] for line in lines[2:5]] == ["3", "10", "42"]
    assert lines[-1].startswith("mean,")
    assert float(lines[-1].split(",")[1]) == report.map


def test_report_round_trip(tmp_path, report):
    loaded = read_report_csv(write_report_csv(report, tmp_path / "r.csv"))
    assert loaded.skipped == 2
    assert loaded.map == report.map and loaded.mrr == report.mrr
    pd.testing.assert_frame_equal(loaded.per_query, report.per_query, check_dtype=False)


def test_report_scores_keep_every_bit(tmp_path, rng):
    aps, rrs = rng.uniform(size=50), rng.uniform(size=50)
    per_query = pd.DataFrame({"query": np.arange(50), "ap": aps, "rr": rrs, "num_pos": 1, "num_neg": 3})
    report = EvalReport(per_query=per_query, map=float(aps.mean()), mrr=float(rrs.mean()), skipped=0)
    loaded = read_report_csv(write_report_csv(report, tmp_path / "bits.csv"))
    assert loaded.per_query["ap"].to_numpy().tobytes() == aps.tobytes()
    assert loaded.per_query["rr"].to_numpy().tobytes() == rrs.tobytes()


def test_unreadable_reports(tmp_path):
    with pytest.raises(DataError):
        read_report_csv(tmp_path / "missing.csv")
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_report_csv(wrong)


def test_gain_csv_header(tmp_path, report, baseline):
    path = write_gain_csv(gain_report(report, baseline), tmp_path / "g.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# positive_fraction={1 / 3!r}"
    assert lines[1] == "query,ap_ours,ap_baseline,gain"
    assert lines[2].startswith("3,")


def test_plot_data_is_non_increasing(tmp_path, report, baseline):
    data = read_plot_data(write_plot_data(gain_report(report, baseline), tmp_path / "g.dat"))
    assert data[:, 0].tolist() == [1.0, 2.0, 3.0]
    assert np.all(np.diff(data[:, 1]) <= 0)
    assert data[0, 1] == pytest.approx(0.25)


def test_gain_of_a_report_against_itself(tmp_path, report):
    path = write_report_csv(report, tmp_path / "a.csv")
    csv_path, dat_path = cmd_gain(path, path, tmp_path / "out")
    assert csv_path.name == "gain_a_vs_a.csv"
    assert not read_plot_data(dat_path)[:, 1].any()


def test_trace_csv(tmp_path):
    trace = pd.DataFrame([(1, 0.5, 0.25, 0.5, 12)], columns=["epoch", "train_loss", "val_map", "val_mrr", "elapsed_ms"])
    text = write_trace_csv(trace, tmp_path / "t.csv").read_text(encoding="utf-8")
    assert text == "epoch,train_loss,val_map,val_mrr,elapsed_ms\n1,0.5,0.25,0.5,12\n"
