"""On-disk formats shared by the CLI, the harness, and external tooling.

FIELD snapshot: one ASCII header line "FIELD <name> <nx> <ny> <h> <t>\n",
optionally followed by comment lines starting with "#", then nx*ny
little-endian float64 values in row-major ([ix, iy]) order.

MASK dump: header line "MASK <nx> <ny> <h>\n" followed by nx*ny raw bytes
(1 = fluid, 0 = solid) in row-major order.

CSV tables use RFC-4180 quoting (csv module defaults).
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

Array = np.ndarray


@dataclass(frozen=True)
class FieldSnapshot:
    name: str
    h: float
    t: float
    values: Array
    comments: tuple[str, ...] = ()


def write_field(path: str | Path, snap: FieldSnapshot) -> None:
    values = np.asarray(snap.values, dtype="<f8")
    if values.ndim != 2:
        raise ConfigError("FIELD payload must be a 2-D array")
    nx, ny = values.shape
    if any(c.strip() != c or "\n" in c for c in snap.comments):
        raise ConfigError("FIELD comments must be single stripped lines")
    name = snap.name
    if not name or any(ch.isspace() for ch in name):
        raise ConfigError("FIELD name must be nonempty without whitespace")
    with open(path, "wb") as f:
        f.write(f"FIELD {name} {nx} {ny} {snap.h!r} {snap.t!r}\n".encode("ascii"))
        for c in snap.comments:
            f.write(f"# {c}\n".encode("ascii"))
        f.write(values.tobytes(order="C"))


def read_field(path: str | Path) -> FieldSnapshot:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").rstrip("\n")
        parts = header.split()
        if len(parts) != 6 or parts[0] != "FIELD":
            raise ConfigError(f"{path}: not a FIELD file (header {header!r})")
        name, nx, ny, h, t = parts[1], int(parts[2]), int(parts[3]), float(parts[4]), float(parts[5])
        comments = []
        while True:
            pos = f.tell()
            line = f.readline()
            if line.startswith(b"#"):
                comments.append(line.decode("ascii").lstrip("# ").rstrip("\n"))
            else:
                f.seek(pos)
                break
        payload = f.read()
    expected = nx * ny * 8
    if len(payload) != expected:
        raise ConfigError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(nx, ny)
    return FieldSnapshot(name=name, h=h, t=t, values=values.copy(), comments=tuple(comments))


def write_mask(path: str | Path, fluid: Array, h: float) -> None:
    fluid = np.asarray(fluid)
    if fluid.ndim != 2 or fluid.dtype != bool:
        raise ConfigError("MASK payload must be a 2-D boolean array")
    nx, ny = fluid.shape
    with open(path, "wb") as f:
        f.write(f"MASK {nx} {ny} {h!r}\n".encode("ascii"))
        f.write(fluid.astype(np.uint8).tobytes(order="C"))


def read_mask(path: str | Path) -> tuple[Array, float]:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").rstrip("\n")
        parts = header.split()
        if len(parts) != 4 or parts[0] != "MASK":
            raise ConfigError(f"{path}: not a MASK file (header {header!r})")
        nx, ny, h = int(parts[1]), int(parts[2]), float(parts[3])
        payload = f.read()
    if len(payload) != nx * ny:
        raise ConfigError(f"{path}: payload is {len(payload)} bytes, header implies {nx * ny}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(nx, ny).astype(bool), h


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        r = csv.reader(f)
        rows = list(r)
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def config_hash(text: str) -> str:
    """Git-style blob hash of the raw config text."""
    blob = f"blob {len(text.encode())}\0".encode() + text.encode()
    return hashlib.sha1(blob).hexdigest()


def write_manifest(
    out_dir: str | Path,
    config_text: str,
    command: str,
    timings: dict[str, float],
    extra: dict | None = None,
) -> Path:
    from . import __version__

    manifest = {
        "command": command,
        "config_hash": config_hash(config_text),
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "timings_seconds": {k: round(v, 6) for k, v in timings.items()},
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
