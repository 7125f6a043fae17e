"""Readers for the simulator's on-disk formats.

This package never imports the simulator.  Everything here is written
against the documented layouts (see docs/formats.md in the simulator repo):
delimited text with a mandatory header, a flat binary checkpoint with a
5-byte magic, and a JSON manifest.  The readers are deliberately tolerant
about column ORDER and extra columns; each figure declares the columns it
needs and the missing ones are reported by name.
"""

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"PFSI1"
_HEADER_STRUCT = struct.Struct("<IIddd")

DIAGNOSTICS_FILE = "diagnostics.csv"
CONTACT_FILE = "contact_terms.csv"
LEMMA_FILE = "lemma_report.csv"
SWEEP_FILE = "sweep_summary.csv"
MANIFEST_FILE = "manifest.json"
CHECKPOINT_DIR = "checkpoints"


class FormatError(ValueError):
    """A file does not conform to its documented layout."""


class MissingColumnError(FormatError):
    def __init__(self, column, path):
        self.column = column
        self.path = Path(path)
        super().__init__(f"{self.path}: required column '{column}' not in header")


# ---------------------------------------------------------------------------
# delimited tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Table:
    """A parsed CSV: raw string cells per column, numeric views on demand."""

    path: Path
    columns: tuple
    cells: dict

    def __len__(self):
        return len(self.cells[self.columns[0]]) if self.columns else 0

    @property
    def empty(self):
        return len(self) == 0

    def require(self, *names):
        for name in names:
            if name not in self.cells:
                raise MissingColumnError(name, self.path)

    def floats(self, name):
        self.require(name)
        return np.array([float(v) for v in self.cells[name]], dtype=float)

    def strings(self, name):
        self.require(name)
        return list(self.cells[name])


def read_table(path):
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: no header row") from None
        columns = tuple(header)
        cells = {name: [] for name in columns}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(columns):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}"
                )
            for name, value in zip(columns, row):
                cells[name].append(value)
    return Table(path=path, columns=columns, cells=cells)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Checkpoint:
    t: float
    length_L: float
    height_M: float
    rho: np.ndarray
    u1: np.ndarray
    u3: np.ndarray
    eta: np.ndarray
    eta_t: np.ndarray

    @property
    def x_centers(self):
        nx = self.eta.shape[0]
        return (np.arange(nx) + 0.5) * (self.length_L / nx)


def read_checkpoint(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic, not a checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    nx, nz, length_L, height_M, t = _HEADER_STRUCT.unpack_from(raw, offset)
    offset += _HEADER_STRUCT.size
    expected = offset + 8 * (3 * nx * nz + 2 * nx)
    if len(raw) != expected:
        raise FormatError(f"{path}: wrong size, expected {expected} bytes, got {len(raw)}")

    def block(count, shape):
        nonlocal offset
        flat = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).copy()
        offset += 8 * count
        return flat.reshape(shape)

    rho = block(nx * nz, (nx, nz))
    u1 = block(nx * nz, (nx, nz))
    u3 = block(nx * nz, (nx, nz))
    eta = block(nx, (nx,))
    eta_t = block(nx, (nx,))
    return Checkpoint(
        t=t, length_L=length_L, height_M=height_M,
        rho=rho, u1=u1, u3=u3, eta=eta, eta_t=eta_t,
    )


def read_checkpoint_series(run_dir):
    """All checkpoints under run_dir/checkpoints, ordered by time."""
    folder = Path(run_dir) / CHECKPOINT_DIR
    if not folder.is_dir():
        return []
    series = [read_checkpoint(p) for p in sorted(folder.glob("*.bin"))]
    series.sort(key=lambda ck: ck.t)
    return series


# ---------------------------------------------------------------------------
# manifest and config echo
# ---------------------------------------------------------------------------

def read_manifest(run_dir):
    path = Path(run_dir) / MANIFEST_FILE
    if not path.is_file():
        return None
    with path.open() as handle:
        return json.load(handle)


def config_value(config_text, section, key):
    """Pull one `key = value` string out of a canonical config echo."""
    current = None
    for line in config_text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            continue
        name, _, value = line.partition("=")
        if current == section and name.strip() == key:
            return value.strip()
    return None
