"""Array data container and the ADF1 binary format.

ADF1 layout (little endian)::

    b"ADF1" | u32 m | u32 twice_n | f64 tau | u8 physics | f64[twice_n, m, m]

The payload is k-major, row-major inside each m x m matrix.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ShapeError

MAGIC = b"ADF1"
_HEADER = struct.Struct("<4sIIdB")

PHYSICS_CODES = {"acoustic": 0, "elastic": 1, "unknown": 255}
PHYSICS_NAMES = {v: k for k, v in PHYSICS_CODES.items()}


@dataclass(frozen=True)
class ArrayDataSet:
    """Data matrices ``D[k]`` (k = 0..2n-1) sampled every ``tau``."""

    D: np.ndarray
    tau: float
    physics: str = "unknown"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.asarray(self.D, dtype=float)
        if d.ndim != 3 or d.shape[1] != d.shape[2]:
            raise ShapeError(f"data must have shape (2n, m, m), got {d.shape}")
        if self.tau <= 0:
            raise ShapeError("sampling interval tau must be positive")
        if self.physics not in PHYSICS_CODES:
            raise ShapeError(f"unknown physics tag {self.physics!r}")
        object.__setattr__(self, "D", d)

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def twice_n(self) -> int:
        return self.D.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[0] // 2

    def symmetrized(self) -> "ArrayDataSet":
        return replace(self, D=0.5 * (self.D + self.D.transpose(0, 2, 1)))

    def with_data(self, d: np.ndarray, **meta) -> "ArrayDataSet":
        return replace(self, D=d, meta={**self.meta, **meta})

    def asymmetry(self) -> float:
        """max |D_k - D_k^T| relative to max |D|."""
        scale = np.abs(self.D).max() or 1.0
        return float(np.abs(self.D - self.D.transpose(0, 2, 1)).max() / scale)

    def compatible_with(self, other: "ArrayDataSet") -> bool:
        return self.D.shape == other.D.shape and np.isclose(self.tau, other.tau, rtol=1e-12)

    def payload_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.D, dtype="<f8").tobytes()).hexdigest()


def write_adf(path, data: ArrayDataSet) -> None:
    path = Path(path)
    header = _HEADER.pack(MAGIC, data.m, data.twice_n, float(data.tau), PHYSICS_CODES[data.physics])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data.D, dtype="<f8").tobytes())


def read_adf(path) -> ArrayDataSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ShapeError(f"{path}: file too short for an ADF1 header")
    magic, m, twice_n, tau, code = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ShapeError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * twice_n * m * m
    if len(raw) != expected:
        raise ShapeError(f"{path}: expected {expected} bytes, found {len(raw)}")
    d = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(twice_n, m, m)
    return ArrayDataSet(d.astype(float), tau, PHYSICS_NAMES.get(code, "unknown"))
