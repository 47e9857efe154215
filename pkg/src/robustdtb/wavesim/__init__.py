"""Finite-difference forward modelling for acoustic and elastic array data."""

from .media import AcousticMedium, ElasticMedium, Medium
from .operators import DiscreteWaveOperator, assemble_operators
from .sensors import SensorBasis, SensorGeometry, build_sensor_basis
from .solver import (
    FineSnapshotMatrix,
    Padding,
    add_noise,
    born_oracle,
    default_substeps,
    required_padding,
    simulate,
)

__all__ = [
    "AcousticMedium",
    "ElasticMedium",
    "Medium",
    "DiscreteWaveOperator",
    "assemble_operators",
    "SensorBasis",
    "SensorGeometry",
    "build_sensor_basis",
    "FineSnapshotMatrix",
    "Padding",
    "add_noise",
    "born_oracle",
    "default_substeps",
    "required_padding",
    "simulate",
]
