"""Flat binary export of gridded fields with text sidecar headers.

Grids are little-endian 64-bit reals, row-major.  The sidecar header
(`<name>.hdr`) is "key = value" text carrying the geometry and
generation parameters needed to reconstruct the object.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .turbulence import PhaseScreen


def _write_atomic(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save_grid(grid: np.ndarray, path, header: dict | None = None):
    """Write a real 2-d grid as <path> (binary) plus <path>.hdr (text)."""
    path = Path(path)
    grid = np.ascontiguousarray(grid, dtype="<f8")
    _write_atomic(path, grid.tobytes())
    fields = {"rows": grid.shape[0], "cols": grid.shape[1],
              "dtype": "<f8", "order": "row-major"}
    fields.update(header or {})
    text = "".join(f"{k} = {v}\n" for k, v in fields.items())
    _write_atomic(path.with_suffix(path.suffix + ".hdr"), text.encode())


def read_header(path) -> dict[str, str]:
    path = Path(path)
    out = {}
    for line in path.read_text().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def load_grid(path) -> tuple[np.ndarray, dict[str, str]]:
    """Read a grid written by save_grid; returns (grid, header dict)."""
    path = Path(path)
    header = read_header(path.with_suffix(path.suffix + ".hdr"))
    rows, cols = int(header["rows"]), int(header["cols"])
    grid = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(rows, cols)
    return grid.copy(), header


def save_screen(screen: PhaseScreen, path):
    """Export a phase screen with its generation parameters in the header."""
    save_grid(screen.phase, path, header={
        "pixel_pitch_m": repr(screen.pixel_pitch),
        "r0_m": repr(screen.r0),
        "wavelength_m": repr(screen.wavelength_ref),
        "outer_scale_m": repr(screen.outer_scale),
        "seed": screen.seed,
        "offset_x_m": repr(screen.offset[0]),
        "offset_y_m": repr(screen.offset[1]),
    })


def load_screen(path) -> PhaseScreen:
    grid, h = load_grid(path)
    return PhaseScreen(
        grid, float(h["pixel_pitch_m"]), float(h["r0_m"]),
        float(h["wavelength_m"]), float(h["outer_scale_m"]),
        int(h["seed"]),
        (float(h["offset_x_m"]), float(h["offset_y_m"])),
    )


def save_field(field: np.ndarray, path):
    """Export a complex field as <stem>_re / <stem>_im grid pairs."""
    path = Path(path)
    save_grid(field.real, path.with_name(path.stem + "_re" + path.suffix))
    save_grid(field.imag, path.with_name(path.stem + "_im" + path.suffix))


def load_field(path) -> np.ndarray:
    path = Path(path)
    re, _ = load_grid(path.with_name(path.stem + "_re" + path.suffix))
    im, _ = load_grid(path.with_name(path.stem + "_im" + path.suffix))
    return re + 1j * im
