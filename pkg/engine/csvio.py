"""
CSV Engine — Reading samples and writing every result table.

Headers are always written, floats use the shortest round-trip repr and
are read back with pandas' round_trip parser, so regression comparisons
are lossless.
"""

from pathlib import Path

import numpy as np
import pandas as pd

SAMPLE_COLUMNS = (("u1", "u2"), ("x1", "x2"))
AGGREGATE_COLUMNS = ["alpha", "m", "mode", "ai_mean", "ai_std", "mle_mean", "mle_std", "coverage"]
INTERVAL_COLUMNS = ["sample_id", "lower", "upper", "level", "contains_truth"]


class CsvFormatError(ValueError):
    """The input file is not a usable two-column sample."""


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return np.nan


def read_sample(path):
    """Read a `u1,u2` or `x1,x2` CSV into an (m, 2) float array."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise CsvFormatError(f"{path}: cannot parse CSV ({e})") from e

    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    for pair in SAMPLE_COLUMNS:
        if set(pair) <= set(columns):
            break
    else:
        raise CsvFormatError(
            f"{path}: expected columns u1,u2 or x1,x2, found {','.join(columns) or 'none'}"
        )
    if len(frame) == 0:
        raise CsvFormatError(f"{path}: no data rows")

    # float() parses the shortest repr back to the identical double
    values = np.column_stack([frame[c].map(_parse_float).to_numpy(dtype=float) for c in pair])
    bad = ~np.isfinite(values).all(axis=1)
    if bad.any():
        rows = [str(i + 1) for i in np.flatnonzero(bad)[:10]]
        more = " ..." if bad.sum() > 10 else ""
        raise CsvFormatError(f"{path}: non-numeric or non-finite values in data rows {', '.join(rows)}{more}")
    return values


def write_frame(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def read_frame(path):
    return pd.read_csv(path, float_precision="round_trip")


def write_sample(points, path, columns=("u1", "u2")):
    points = np.asarray(points, dtype=float)
    return write_frame(pd.DataFrame({columns[0]: points[:, 0], columns[1]: points[:, 1]}), path)


def write_pseudo(pseudo, path):
    return write_frame(pd.DataFrame({"i": np.arange(1, pseudo.m + 1), "t": pseudo.t}), path)


def interval_frame(intervals, true_alpha=None, sample_ids=None):
    """Rows `sample_id,lower,upper,level,contains_truth` (truth empty when unknown)."""
    intervals = list(intervals)
    sample_ids = list(sample_ids) if sample_ids is not None else list(range(len(intervals)))
    return pd.DataFrame({
        "sample_id": sample_ids,
        "lower": [iv.lower for iv in intervals],
        "upper": [iv.upper for iv in intervals],
        "level": [iv.level for iv in intervals],
        "contains_truth": [
            iv.contains(true_alpha) if true_alpha is not None else None for iv in intervals
        ],
    }, columns=INTERVAL_COLUMNS)


def aggregate_frame(cells):
    return pd.DataFrame([
        {
            "alpha": c.alpha,
            "m": c.m,
            "mode": c.mode,
            "ai_mean": c.ai_mean,
            "ai_std": c.ai_std,
            "mle_mean": c.mle_mean,
            "mle_std": c.mle_std,
            "coverage": c.coverage,
        }
        for c in cells
    ], columns=AGGREGATE_COLUMNS)


def detail_frame(cells):
    """One row per sample, failed samples included with their error."""
    rows = []
    for c in cells:
        for r in c.records:
            iv = r.interval
            rows.append({
                "alpha": c.alpha,
                "m": c.m,
                "mode": c.mode,
                "sample_id": r.sample_id,
                "ai_estimate": r.ai_estimate,
                "mle_estimate": r.mle_estimate,
                "mle_at_boundary": r.mle_at_boundary,
                "lower": iv.lower if iv is not None else None,
                "upper": iv.upper if iv is not None else None,
                "contains_truth": iv.contains(c.alpha) if iv is not None else None,
                "rejected_replicas": r.rejected,
                "error": r.error or "",
            })
    return pd.DataFrame(rows)


def cell_interval_frame(cells):
    frames = []
    for c in cells:
        if not c.intervals:
            continue
        sample_ids = [r.sample_id for r in c.valid_records][:len(c.intervals)]
        frame = interval_frame(c.intervals, c.alpha, sample_ids)
        frame.insert(0, "m", c.m)
        frame.insert(0, "alpha", c.alpha)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["alpha", "m"] + INTERVAL_COLUMNS)
    return pd.concat(frames, ignore_index=True)
