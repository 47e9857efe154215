"""Gridded acoustic and elastic media.

Fields are stored as ``(nz, nx)`` arrays of cell-centre values; row 0 is
the cell touching the accessible surface ``z = 0`` and ``x`` runs from 0
to ``nx * hx``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from ..errors import ConfigurationError


def _field(a, shape=None) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2:
        raise ConfigurationError(f"medium fields must be 2D arrays, got ndim={a.ndim}")
    if shape is not None and a.shape != shape:
        raise ConfigurationError(f"field shape {a.shape} does not match grid {shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError("medium fields must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AcousticMedium:
    """Wave speed ``c`` and impedance ``sigma``; reflectivity is ``ln(sigma / sigma_ref)``."""

    c: np.ndarray
    sigma: np.ndarray
    hx: float
    hz: float
    sigma_ref: float = 1.0

    physics = "acoustic"

    def __post_init__(self):
        c = _field(self.c)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sigma", _field(self.sigma, c.shape))
        if np.any(c <= 0) or np.any(self.sigma <= 0):
            raise ConfigurationError("wave speed and impedance must be positive")
        if self.hx <= 0 or self.hz <= 0 or self.sigma_ref <= 0:
            raise ConfigurationError("grid spacings and sigma_ref must be positive")

    @classmethod
    def from_reflectivity(cls, c, q, hx, hz=None, sigma_ref=1.0):
        c = np.asarray(c, dtype=float)
        q = np.broadcast_to(np.asarray(q, dtype=float), c.shape)
        return cls(c, sigma_ref * np.exp(q), hx, hz if hz is not None else hx, sigma_ref)

    @property
    def shape(self) -> tuple[int, int]:
        return self.c.shape

    @property
    def q(self) -> np.ndarray:
        return np.log(self.sigma / self.sigma_ref)

    @property
    def max_speed(self) -> float:
        return float(self.c.max())

    def with_reflectivity(self, q) -> "AcousticMedium":
        q = np.broadcast_to(np.asarray(q, dtype=float), self.shape)
        return replace(self, sigma=self.sigma_ref * np.exp(q))

    def scaled(self, eps: float) -> "AcousticMedium":
        """Same speeds, reflectivity multiplied by ``eps``."""
        return self.with_reflectivity(eps * self.q)

    def reference(self) -> "AcousticMedium":
        return self.with_reflectivity(0.0)

    def padded(self, left: int, right: int, bottom: int) -> "AcousticMedium":
        pad = ((0, bottom), (left, right))
        return replace(self, c=np.pad(self.c, pad, mode="edge"), sigma=np.pad(self.sigma, pad, mode="edge"))

    def fields(self) -> dict[str, np.ndarray]:
        return {"c": self.c, "sigma": self.sigma}


@dataclass(frozen=True)
class ElasticMedium:
    """P and S speeds plus P impedance; reflectivity is ``ln(sigma_p / sigma_ref)``."""

    cp: np.ndarray
    cs: np.ndarray
    sigma_p: np.ndarray
    hx: float
    hz: float
    sigma_ref: float = 1.0

    physics = "elastic"

    def __post_init__(self):
        cp = _field(self.cp)
        object.__setattr__(self, "cp", cp)
        object.__setattr__(self, "cs", _field(self.cs, cp.shape))
        object.__setattr__(self, "sigma_p", _field(self.sigma_p, cp.shape))
        if np.any(cp <= 0) or np.any(self.cs <= 0) or np.any(self.sigma_p <= 0):
            raise ConfigurationError("speeds and impedance must be positive")
        if np.any(self.cs >= cp):
            raise ConfigurationError("shear speed must be below the pressure speed (0 < gamma < 1)")
        if self.hx <= 0 or self.hz <= 0 or self.sigma_ref <= 0:
            raise ConfigurationError("grid spacings and sigma_ref must be positive")

    @classmethod
    def from_reflectivity(cls, cp, cs, q, hx, hz=None, sigma_ref=1.0):
        cp = np.asarray(cp, dtype=float)
        cs = np.broadcast_to(np.asarray(cs, dtype=float), cp.shape)
        q = np.broadcast_to(np.asarray(q, dtype=float), cp.shape)
        return cls(cp, cs, sigma_ref * np.exp(q), hx, hz if hz is not None else hx, sigma_ref)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cp.shape

    @property
    def gamma(self) -> np.ndarray:
        return (self.cs / self.cp) ** 2

    @property
    def sigma_s(self) -> np.ndarray:
        return self.sigma_p * self.cs / self.cp

    @property
    def q(self) -> np.ndarray:
        return np.log(self.sigma_p / self.sigma_ref)

    @property
    def max_speed(self) -> float:
        return float(self.cp.max())

    def with_reflectivity(self, q) -> "ElasticMedium":
        q = np.broadcast_to(np.asarray(q, dtype=float), self.shape)
        return replace(self, sigma_p=self.sigma_ref * np.exp(q))

    def scaled(self, eps: float) -> "ElasticMedium":
        return self.with_reflectivity(eps * self.q)

    def reference(self) -> "ElasticMedium":
        return self.with_reflectivity(0.0)

    def padded(self, left: int, right: int, bottom: int) -> "ElasticMedium":
        pad = ((0, bottom), (left, right))
        return replace(
            self,
            cp=np.pad(self.cp, pad, mode="edge"),
            cs=np.pad(self.cs, pad, mode="edge"),
            sigma_p=np.pad(self.sigma_p, pad, mode="edge"),
        )

    def fields(self) -> dict[str, np.ndarray]:
        return {"cp": self.cp, "cs": self.cs, "sigma_p": self.sigma_p}


Medium = Union[AcousticMedium, ElasticMedium]
