"""
Report files.

Evaluation report (CSV):
    # skipped=<queries without test positives>
    query,ap,rr,num_pos,num_neg
    ...one row per evaluated query, ascending query id (original ids)...
    mean,<MAP>,<MRR>,,

Gain report (CSV):
    # positive_fraction=<share of queries with gain > 0>
    query,ap_ours,ap_baseline,gain        largest gain first

Plot data (.dat): "x y" per line, x = 1-based position in the sorted gain
list, y = gain; lines starting with "#" are comments.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from exceptions import DataError
from models import EvalReport, GainReport
from services.evaluation.metrics import PER_QUERY_COLUMNS

FLOAT_FORMAT = "%.17g"
SUMMARY_LABEL = "mean"


def _comment_values(path: Path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            values[key.strip()] = value.strip()
    return values


def write_report_csv(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = pd.DataFrame([[SUMMARY_LABEL, report.map, report.mrr, None, None]], columns=PER_QUERY_COLUMNS)
    frame = pd.concat([report.per_query.astype({"query": str}), summary], ignore_index=True)
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path.write_text(f"# skipped={report.skipped}\n" + body, encoding="utf-8")
    return path


def read_report_csv(path: str | Path) -> EvalReport:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"report not found: {path}")
    meta = _comment_values(path)
    try:
        frame = pd.read_csv(path, comment="#", dtype={"query": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot parse report {path}: {e}") from e
    if list(frame.columns) != PER_QUERY_COLUMNS:
        raise DataError(f"{path}: expected columns {','.join(PER_QUERY_COLUMNS)}")

    per_query = frame[frame["query"] != SUMMARY_LABEL].copy()
    per_query["query"] = per_query["query"].astype(np.int64)
    per_query = per_query.astype({"num_pos": np.int64, "num_neg": np.int64}).reset_index(drop=True)
    if per_query.empty:
        raise DataError(f"{path}: report has no query rows")
    return EvalReport(
        per_query=per_query,
        map=float(per_query["ap"].mean()),
        mrr=float(per_query["rr"].mean()),
        skipped=int(meta.get("skipped", 0)),
    )


def write_gain_csv(gain: GainReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = gain.rows.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path.write_text(f"# positive_fraction={gain.positive_fraction!r}\n" + body, encoding="utf-8")
    return path


def write_plot_data(gain: GainReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# x=query position (sorted by gain, descending) y=AP gain"]
    lines += [f"{i} {float(value)!r}" for i, value in enumerate(gain.rows["gain"], start=1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_plot_data(path: str | Path) -> np.ndarray:
    """(n, 2) array of the x y pairs."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            x, y = line.split()
            rows.append((float(x), float(y)))
    return np.asarray(rows, dtype=np.float64).reshape(-1, 2)


def write_trace_csv(trace: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_table_csv(table: pd.DataFrame, path: str | Path) -> Path:
    """Summary tables: first column is the row label (dataset)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path
