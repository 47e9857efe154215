"""Misfit measures between data sets."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError


def relative_misfit(a, b) -> float:
    """``sqrt(sum_k ||A_k - B_k||_F^2 / sum_k ||B_k||_F^2)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    den = float(np.sum(b * b))
    num = float(np.sum((a - b) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(np.sqrt(num / den))


def scattered_misfit(a, born, reference) -> float:
    """Misfit normalized by the scattered part ``born - reference``."""
    a, born, reference = (np.asarray(x, dtype=float) for x in (a, born, reference))
    return float(np.linalg.norm(a - born) / np.linalg.norm(born - reference))


@dataclass(frozen=True)
class MisfitReport:
    per_k: list
    aggregate: float
    max_entry_error: float
    tail_mass: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "relative_misfit"])
            for k, v in enumerate(self.per_k):
                w.writerow([k, repr(v)])


def misfit_report(a, b, tail_mass: float | None = None) -> MisfitReport:
    """Compare ``a`` against the reference ``b``.

    Per-k values are relative Frobenius errors; where ``B_k`` vanishes the
    absolute error is reported instead so every entry stays finite.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    err = np.linalg.norm(a - b, axis=(1, 2))
    ref = np.linalg.norm(b, axis=(1, 2))
    per_k = np.where(ref > 0, err / np.where(ref > 0, ref, 1.0), err)
    agg = relative_misfit(a, b)
    if not np.isfinite(agg):
        agg = float(np.linalg.norm(a - b))
    return MisfitReport(
        [float(v) for v in per_k],
        agg,
        float(np.abs(a - b).max()) if a.size else 0.0,
        tail_mass,
    )
