#!/usr/bin/env python3
"""Standalone figure renderer for simulation outputs.

Consumes only the documented on-disk formats (RFC-4180 CSV tables and
FIELD binary snapshots) — it never imports the solver package, so the
simulation code runs and tests fully without this script.

Usage:
    python plots/render.py --spec plot.yaml

The spec file is a YAML mapping:

    kind: convergence | energy | field | constitutive
    input: path/to/data.csv (or .field for kind: field)
    output: path/to/figure.png
    title: optional title string
    logx: true|false        (convergence only; default true)
    logy: true|false        (convergence only; default true)

Rendering is read-only and deterministic: fixed style, no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib
import numpy as np
import yaml

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
})

_SAVE_KW = {"metadata": {"Software": None}}


class ParseError(ValueError):
    pass


def read_csv_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ParseError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    if not body:
        raise ParseError(f"{path}: no data rows")
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {n} has {len(row)} fields, expected {len(header)}")
    return header, body


def column(header, body, name, path) -> np.ndarray:
    try:
        k = header.index(name)
    except ValueError:
        raise ParseError(f"{path}: missing column {name!r} (has {header})") from None
    try:
        return np.array([float(r[k]) for r in body])
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric value in column {name!r}: {exc}") from None


def read_field(path: Path):
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").rstrip("\n")
        parts = header.split()
        if len(parts) != 6 or parts[0] != "FIELD":
            raise ParseError(f"{path}: not a FIELD file (header {header!r})")
        name, nx, ny = parts[1], int(parts[2]), int(parts[3])
        h, t = float(parts[4]), float(parts[5])
        while True:
            pos = f.tell()
            line = f.readline()
            if not line.startswith(b"#"):
                f.seek(pos)
                break
        payload = f.read()
    expected = nx * ny * 8
    if len(payload) != expected:
        raise ParseError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    return name, nx, ny, h, t, np.frombuffer(payload, dtype="<f8").reshape(nx, ny)


def render_convergence(spec: dict, path: Path, out: Path) -> None:
    header, body = read_csv_table(path)
    eps = column(header, body, "eps", path)
    fig, ax = plt.subplots(figsize=(5, 4))
    for col, style in (("e_rho", "o-"), ("darcy_residual", "s--")):
        if col in header:
            ax.plot(eps, column(header, body, col, path), style, label=col)
    if spec.get("logx", True):
        ax.set_xscale("log")
    if spec.get("logy", True):
        ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("error")
    ax.legend()
    ax.set_title(spec.get("title", "convergence"))
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)


def render_energy(spec: dict, path: Path, out: Path) -> None:
    header, body = read_csv_table(path)
    t = column(header, body, "t", path)
    parts = ["E_fluid_fluid", "E_fluid_solid", "E_bulk"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.5, 6), sharex=True)
    total = np.zeros_like(t)
    for col in parts:
        vals = column(header, body, col, path)
        total += vals
        ax1.plot(t, vals, label=col)
    ax1.plot(t, total, "k-", lw=2, label="E total")
    ax1.set_ylabel("energy")
    ax1.legend(fontsize=8)
    ax1.set_title(spec.get("title", "energy decay"))
    ax2.plot(t, column(header, body, "D", path), label="dissipation D")
    if "D_numerical" in header:
        ax2.plot(t, column(header, body, "D_numerical", path), label="numerical dissipation")
    ax2.plot(t, np.abs(column(header, body, "residual", path)), label="|balance residual|")
    ax2.set_yscale("log")
    ax2.set_xlabel("t")
    ax2.set_ylabel("rate")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)


def render_field(spec: dict, path: Path, out: Path) -> None:
    name, nx, ny, h, t, values = read_field(path)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    extent = (0, nx * h, 0, ny * h)
    im = ax.imshow(values.T, origin="lower", extent=extent, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(spec.get("title", f"{name} at t={t:g}"))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)


def render_constitutive(spec: dict, path: Path, out: Path) -> None:
    header, body = read_csv_table(path)
    rho = column(header, body, "rho", path)
    fig, ax = plt.subplots(figsize=(5, 4))
    for col, style in (("p", "-"), ("P", "--"), ("W", ":")):
        ax.plot(rho, column(header, body, col, path), style, label=col)
    ax.set_xlabel("rho")
    ax.legend()
    ax.set_title(spec.get("title", "pressure and energy"))
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)


_KINDS = {
    "convergence": render_convergence,
    "energy": render_energy,
    "field": render_field,
    "constitutive": render_constitutive,
}


def render(spec: dict) -> Path:
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise ParseError(f"unknown plot kind {kind!r} (choose from {sorted(_KINDS)})")
    for key in ("input", "output"):
        if key not in spec:
            raise ParseError(f"plot spec is missing {key!r}")
    path = Path(spec["input"])
    if not path.exists():
        raise ParseError(f"input file not found: {path}")
    out = Path(spec["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    _KINDS[kind](spec, path, out)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, help="YAML plot specification")
    args = parser.parse_args(argv)
    try:
        with open(args.spec) as f:
            spec = yaml.safe_load(f)
        if not isinstance(spec, dict):
            raise ParseError("plot spec must be a YAML mapping")
        out = render(spec)
    except (ParseError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
