"""Built-in desk-scale experiment geometries (km, s).

Sensors sit on the surface at the Nyquist spacing ``h = c tau`` (the shear
speed for elastic media).  The grid resolves ``h`` with
``cells_per_spacing`` cells.  Inclusions are thin horizontal layers of
raised impedance; wave speeds stay constant so the reference medium is
known exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .wavesim.media import AcousticMedium, ElasticMedium, Medium
from .wavesim.sensors import SensorGeometry

DEFAULT_TAU = 0.034


@dataclass(frozen=True)
class Experiment:
    medium: Medium
    geometry: SensorGeometry
    tau: float
    n: int

    @property
    def physics(self) -> str:
        return self.medium.physics

    def with_medium(self, medium: Medium) -> "Experiment":
        return replace(self, medium=medium)


# (depth km, left fraction, right fraction) of the model width
TWO_INCLUSIONS = ((0.4, 0.25, 0.65), (0.7, 0.4, 0.85))
ELASTIC_INCLUSIONS = ((0.15, 0.2, 0.6), (0.3, 0.4, 0.8))


def _layers(shape, dx, layers, contrast, thickness):
    nz, nx = shape
    q = np.zeros(shape)
    x = (np.arange(nx) + 0.5) * dx
    width = nx * dx
    for depth, lo, hi in layers:
        j = int(depth / dx)
        if j + thickness > nz:
            raise ConfigurationError(f"inclusion at depth {depth} km lies below the model")
        q[j:j + thickness, (x > lo * width) & (x < hi * width)] = np.log(contrast)
    return q


def _check(m_a, n, tau):
    if m_a <= 0 or n <= 0 or tau <= 0:
        raise ConfigurationError("m_a, n and tau must be positive")


def acoustic_two_inclusions(
    m_a: int = 16,
    n: int = 40,
    tau: float = DEFAULT_TAU,
    c: float = 1.5,
    contrast: float = 2.0,
    depth: float = 1.1,
    cells_per_spacing: int = 3,
    thickness: int = 3,
    inclusions=TWO_INCLUSIONS,
) -> Experiment:
    _check(m_a, n, tau)
    h = c * tau
    dx = h / cells_per_spacing
    shape = (int(round(depth / dx)), (m_a + 1) * cells_per_spacing)
    q = _layers(shape, dx, inclusions, contrast, thickness)
    medium = AcousticMedium.from_reflectivity(np.full(shape, c), q, dx)
    return Experiment(medium, SensorGeometry.uniform(m_a, h, start=h, width=h), tau, n)


def acoustic_homogeneous(m_a: int = 4, n: int = 16, tau: float = DEFAULT_TAU, c: float = 1.5, **kw) -> Experiment:
    return acoustic_two_inclusions(m_a, n, tau, c, inclusions=(), **kw)


def elastic_two_inclusions(
    m_a: int = 8,
    n: int = 24,
    tau: float = DEFAULT_TAU,
    cs: float = 1.0,
    cp: float = 2.0,
    contrast: float = 2.0,
    depth: float = 0.45,
    cells_per_spacing: int = 3,
    thickness: int = 3,
    width_factor: float = 1.5,
    inclusions=ELASTIC_INCLUSIONS,
) -> Experiment:
    """Constant ``cp = 2 cs`` so ``sigma_s = sigma_p / 2``; sensors at the shear Nyquist spacing.

    The pulses are ``width_factor`` spacings wide: at one spacing the P
    components still carry energy above the temporal Nyquist frequency.
    """
    _check(m_a, n, tau)
    h = cs * tau
    dx = h / cells_per_spacing
    shape = (int(round(depth / dx)), (m_a + 1) * cells_per_spacing)
    q = _layers(shape, dx, inclusions, contrast, thickness)
    medium = ElasticMedium.from_reflectivity(np.full(shape, cp), cs, q, dx)
    return Experiment(medium, SensorGeometry.uniform(m_a, h, start=h, width=width_factor * h, channels=2), tau, n)


PRESETS = {
    "acoustic-two-inclusions": acoustic_two_inclusions,
    "acoustic-homogeneous": acoustic_homogeneous,
    "elastic-two-inclusions": elastic_two_inclusions,
}


def load_preset(name: str, **overrides) -> Experiment:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
    return factory(**{k: v for k, v in overrides.items() if v is not None})
