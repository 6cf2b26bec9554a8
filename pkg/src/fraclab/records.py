"""Report records shared by the verification harnesses and the CLI."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["EstimateReport", "RegimeReport", "Timer", "clean_json", "REPORT_SCHEMA"]

# JSON schema of one entry of the CLI summary
REPORT_SCHEMA = {
    "type": "object",
    "required": ["check_id", "paper_ref", "status", "empirical_C", "threshold_detected",
                 "threshold_predicted", "runtime_ms"],
    "properties": {
        "check_id": {"type": "string"},
        "paper_ref": {"type": "string"},
        "status": {"enum": ["pass", "fail", "nonconverged"]},
        "empirical_C": {"type": ["number", "null"]},
        "threshold_detected": {"type": ["number", "null"]},
        "threshold_predicted": {"type": ["number", "null"]},
        "runtime_ms": {"type": "number"},
        "details": {"type": "object"},
    },
}


def clean_json(obj):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


@dataclass
class EstimateReport:
    """Outcome of one verification check.

    ``paper_ref`` carries a short label of the statement being checked.
    """

    check_id: str
    paper_ref: str
    status: str
    empirical_C: float | None = None
    threshold_detected: float | None = None
    threshold_predicted: float | None = None
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self, include_runtime: bool = True) -> dict:
        d = {
            "check_id": self.check_id,
            "paper_ref": self.paper_ref,
            "status": self.status,
            "empirical_C": self.empirical_C,
            "threshold_detected": self.threshold_detected,
            "threshold_predicted": self.threshold_predicted,
            "runtime_ms": round(self.runtime_ms, 3) if include_runtime else 0.0,
            "details": self.details,
        }
        return clean_json(d)


@dataclass
class RegimeReport:
    """Regime classification of a one-parameter family of integrals."""

    regime_label: str
    fitted_exponent: float
    fit_r2: float
    empirical_C: float
    sample_meta: dict = field(default_factory=dict)
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.regime_label not in ("bounded", "logarithmic", "power"):
            raise ValueError("unknown regime label")


class Timer:
    """Wall-clock timer in milliseconds."""

    def __init__(self):
        self.start = time.perf_counter()

    @property
    def ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0
