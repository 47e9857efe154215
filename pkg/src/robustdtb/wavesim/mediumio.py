"""Medium files: a short text header followed by raw little-endian float64 fields.

Header lines (ASCII, ``key value``), terminated by a line ``end``::

    MEDIUM1
    physics acoustic
    nx 120
    nz 60
    hx 0.017
    hz 0.017
    sigma_ref 1.0
    fields c sigma
    end

Then one ``(nz, nx)`` row-major block per listed field, in order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from .media import AcousticMedium, ElasticMedium, Medium

MAGIC = "MEDIUM1"
FIELDS = {"acoustic": ("c", "sigma"), "elastic": ("cp", "cs", "sigma_p")}


def write_medium(path, medium: Medium) -> None:
    nz, nx = medium.shape
    names = FIELDS[medium.physics]
    header = [
        MAGIC,
        f"physics {medium.physics}",
        f"nx {nx}",
        f"nz {nz}",
        f"hx {medium.hx!r}",
        f"hz {medium.hz!r}",
        f"sigma_ref {medium.sigma_ref!r}",
        "fields " + " ".join(names),
        "end",
    ]
    fields = medium.fields()
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        for name in names:
            fh.write(np.ascontiguousarray(fields[name], dtype="<f8").tobytes())


def read_medium(path) -> Medium:
    raw = Path(path).read_bytes()
    meta: dict[str, str] = {}
    pos = 0
    first = True
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise ConfigurationError(f"{path}: unterminated medium header")
        line = raw[pos:nl].decode("ascii", errors="replace").strip()
        pos = nl + 1
        if first:
            if line != MAGIC:
                raise ConfigurationError(f"{path}: not a {MAGIC} medium file")
            first = False
            continue
        if line == "end":
            break
        if line:
            key, _, value = line.partition(" ")
            meta[key] = value.strip()
    try:
        physics = meta["physics"]
        nx, nz = int(meta["nx"]), int(meta["nz"])
        hx, hz = float(meta["hx"]), float(meta["hz"])
        sigma_ref = float(meta.get("sigma_ref", "1.0"))
        names = meta["fields"].split()
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"{path}: bad medium header ({exc})") from exc
    if physics not in FIELDS or sorted(names) != sorted(FIELDS[physics]):
        raise ConfigurationError(f"{path}: physics {physics!r} needs fields {FIELDS.get(physics)}")
    block = nx * nz * 8
    if len(raw) - pos != block * len(names):
        raise ConfigurationError(f"{path}: expected {block * len(names)} payload bytes, found {len(raw) - pos}")
    fields = {
        name: np.frombuffer(raw, dtype="<f8", count=nx * nz, offset=pos + i * block).reshape(nz, nx).astype(float)
        for i, name in enumerate(names)
    }
    if physics == "acoustic":
        return AcousticMedium(fields["c"], fields["sigma"], hx, hz, sigma_ref)
    return ElasticMedium(fields["cp"], fields["cs"], fields["sigma_p"], hx, hz, sigma_ref)
