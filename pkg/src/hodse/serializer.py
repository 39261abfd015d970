# src/hodse/serializer.py
"""
Deterministic output files: JSON reports with sorted keys and no
timestamps, and CSV tables written through pandas.
"""

from __future__ import annotations

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from .estimator import EstimateResult
from .simlab import ExperimentReport

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def clean(obj: Any) -> Any:
    """JSON-ready copy: enums by value, numpy scalars as Python, NaN/inf as None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(clean(obj), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_json(obj: Any, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj), encoding="utf-8")
    logger.debug("wrote %s", p)
    return p


def estimate_record(result: EstimateResult, *, functional: str, data: Optional[str] = None,
                    n: Optional[int] = None, d: Optional[int] = None) -> Dict[str, Any]:
    record = result.as_dict()
    record.update({"functional": functional, "data": data, "n": n, "d": d})
    return record


class ReportSerializer:
    """Writes an ExperimentReport as a JSON summary plus per-replication CSV."""

    def __init__(self, report: ExperimentReport):
        self.report = report

    def to_dict(self) -> Dict[str, Any]:
        return clean(self.report.as_dict())

    def to_json(self) -> str:
        return dumps(self.report.as_dict())

    def frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.report.records)
        if "replication" in df.columns:
            df = df.sort_values("replication", kind="stable").reset_index(drop=True)
        return df

    def write(self, json_path=None, csv_path=None) -> Dict[str, Path]:
        out = {}
        if json_path:
            out["json"] = write_json(self.report.as_dict(), json_path)
        if csv_path:
            p = Path(csv_path)
            p.parent.mkdir(parents=True, exist_ok=True)
            self.frame().to_csv(p, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
            out["csv"] = p
        return out

    def summary_lines(self):
        """One line per estimator, for the console."""
        for name, s in sorted(self.report.estimators.items()):
            yield (f"{name:>9}: bias={s.bias:+.4e}  var={s.variance:.4e}  "
                   f"mse={s.mse:.4e} (se {s.mse_se:.1e})  R={s.replications}")


def write_kernel_table(frame: pd.DataFrame, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(p, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="NaN", lineterminator="\n")
    return p
