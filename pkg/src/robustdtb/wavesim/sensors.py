"""Sensor geometry and the localized source/receiver functions ``b^(s)``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeometryError
from .operators import DiscreteWaveOperator

TRUNCATION_WIDTHS = 4.0


@dataclass(frozen=True)
class SensorGeometry:
    """Sensor x-positions on the surface ``z = 0`` (km), Gaussian width ``w``, channels per location."""

    positions: np.ndarray
    width: float
    channels: int = 1

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 1 or pos.size == 0:
            raise GeometryError("need at least one sensor position")
        if self.width <= 0:
            raise GeometryError("sensor width must be positive")
        if self.channels not in (1, 2):
            raise GeometryError("channels must be 1 (acoustic) or 2 (elastic)")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def uniform(cls, num: int, spacing: float, start: float, width: float | None = None, channels: int = 1):
        """``num`` sensors ``spacing`` apart; default width equals the spacing."""
        if num <= 0 or spacing <= 0:
            raise GeometryError("num and spacing must be positive")
        w = spacing if width is None else width
        return cls(start + spacing * np.arange(num), w, channels)

    @property
    def m_a(self) -> int:
        return self.positions.size

    @property
    def m(self) -> int:
        return self.channels * self.m_a

    @property
    def aperture(self) -> float:
        return float(self.positions.max() - self.positions.min())

    @property
    def support_radius(self) -> float:
        return TRUNCATION_WIDTHS * self.width

    def shifted(self, dx: float) -> "SensorGeometry":
        return SensorGeometry(self.positions + dx, self.width, self.channels)


@dataclass(frozen=True)
class SensorBasis:
    """Geometry plus the discrete sensor functions as columns of ``b``.

    Channel ``p`` of sensor ``l`` is column ``channels * l + p``; for elastic
    media ``p = 0`` is the horizontal and ``p = 1`` the vertical polarization.
    """

    geometry: SensorGeometry
    b: np.ndarray = field(repr=False)
    cell_area: float

    @property
    def m(self) -> int:
        return self.b.shape[1]

    def gram(self) -> np.ndarray:
        """Quadrature ``∫ b^(r) b^(s) dx``."""
        return self.cell_area * (self.b.T @ self.b)

    def measure(self, fields: np.ndarray) -> np.ndarray:
        """Quadrature of ``b^(r)`` against each column of ``fields``."""
        return self.cell_area * (self.b.T @ fields)


def _bump(x, z, xs, w):
    r2 = (x - xs) ** 2 + z**2
    g = np.exp(-r2 / (2.0 * w * w))
    g[r2 > (TRUNCATION_WIDTHS * w) ** 2] = 0.0
    return g


def build_sensor_basis(geometry: SensorGeometry, op: DiscreteWaveOperator, extent_x: float) -> SensorBasis:
    """Normalized Gaussian bumps centred on the surface at each sensor position.

    ``extent_x`` is the physical width of the grid behind ``op``.
    """
    hmax = np.sqrt(op.cell_area)
    pos = geometry.positions
    if np.any(pos < 0) or np.any(pos > extent_x):
        raise GeometryError(f"sensor positions must lie in [0, {extent_x:g}] km")
    if geometry.width < hmax * (1 - 1e-9):
        raise GeometryError(f"sensor width {geometry.width:g} is below one grid cell ({hmax:g})")
    if op.physics == "elastic" and geometry.channels != 2:
        raise GeometryError("elastic media need two polarization channels per sensor")
    if op.physics == "acoustic" and geometry.channels != 1:
        raise GeometryError("acoustic media use a single channel per sensor")

    b = np.zeros((op.num_primary, geometry.m))
    for l, xs in enumerate(pos):
        for p in range(geometry.channels):
            x, z, sl = op.primary_points[p]
            col = np.zeros(op.num_primary)
            col[sl] = _bump(x, z, xs, geometry.width)
            norm2 = op.cell_area * float(col @ col)
            if norm2 == 0:
                raise GeometryError(f"sensor {l} has empty support on the grid")
            b[:, geometry.channels * l + p] = col / np.sqrt(norm2)
    return SensorBasis(geometry, b, op.cell_area)
