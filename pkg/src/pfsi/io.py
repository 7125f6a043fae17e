"""Persistence: diagnostics CSV, binary checkpoints, report CSVs, manifests.

Formats (documented in docs/formats.md):

  diagnostics.csv    one row per recorded time, columns exactly CSV_COLUMNS,
                     decimal text at 17 significant digits (bit-exact float
                     round trip), mandatory header row.
  contact_terms.csv  the contact-inequality breakdown re-evaluated at every
                     stored checkpoint time, plus the running tolerance.
  lemma_report.csv   one row per lemma trial (id, descriptors JSON, sides,
                     constant, margin, pass flag).
  sweep_summary.csv  one row per sweep value: where it ran and what happened.
  checkpoints        flat binary, magic "PFSI1", little-endian: uint32 nx,
                     uint32 nz, float64 length_L, height_M, t, then float64
                     row-major rho, u1, u3 (nx*nz each), eta, eta_t (nx each).
  manifest.json      config echo, code version, platform fingerprint, wall
                     times, exit status, sha256 inventory of emitted files;
                     written atomically (temp file + rename).

The environment variable PFSI_OUTPUT_DIR, when set, is prepended to every
relative output directory, so callers can redirect a whole batch without
touching configs.
"""

import csv
import hashlib
import json
import os
import platform
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pfsi import __version__
from pfsi.core import BeamState, FluidState
from pfsi.diagnostics import (
    CSV_COLUMNS,
    ContactLedger,
    DiagnosticsRecord,
    contact_tolerance,
)

_FLOAT_FMT = ".17g"

CHECKPOINT_MAGIC = b"PFSI1"

CONTACT_COLUMNS = (
    "t",
    "force_work",
    "pressure_over_eta",
    "vertical_over_eta",
    "neg_log_end",
    "lhs_total",
    "convective_time",
    "convective_x",
    "convective_y",
    "shear_x",
    "shear_y",
    "horizontal",
    "log_initial",
    "boundary",
    "bending_weight",
    "rhs_total",
    "residual",
    "tolerance",
    "floor_activations",
)

LEMMA_COLUMNS = ("lemma_id", "descriptors", "lhs", "rhs", "constant", "margin", "passed")

SWEEP_COLUMNS = (
    "key",
    "value",
    "directory",
    "status",
    "final_time",
    "min_eta_final",
    "detach_time_min",
    "detach_time_point",
)


def resolve_output_dir(directory):
    """Apply the PFSI_OUTPUT_DIR root override to a relative directory."""
    path = Path(directory)
    root = os.environ.get("PFSI_OUTPUT_DIR")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------

def _fmt(value):
    return format(float(value), _FLOAT_FMT)


def emit_diagnostics(records, path):
    """Write diagnostics rows to path; header always present, even when empty."""
    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(getattr(rec, name)) for name in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_diagnostics(path):
    """Read a diagnostics CSV back into DiagnosticsRecord rows (bit-exact)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or mismatched diagnostics header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(
                f"{path}: line {lineno} has {len(parts)} fields, expected {len(CSV_COLUMNS)}"
            )
        records.append(DiagnosticsRecord(*(float(p) for p in parts)))
    return records


# ---------------------------------------------------------------------------
# contact-term and lemma reports
# ---------------------------------------------------------------------------

def emit_contact_terms(trajectory, path):
    """Re-evaluate the contact breakdown at every checkpoint and write rows."""
    cfg = trajectory.config
    ledger = ContactLedger(cfg.grid, cfg.phys, cfg.scheme)
    lines = [",".join(CONTACT_COLUMNS)]
    for cp in trajectory.checkpoints:
        ledger.observe(cp.t, cp.fluid, cp.beam, cp.force)
        b = ledger.breakdown()
        tol = contact_tolerance(cfg.grid, cfg.scheme, cp.t)
        values = [_fmt(getattr(b, name)) for name in CONTACT_COLUMNS[:-2]]
        values.append(_fmt(tol))
        values.append(str(b.floor_activations))
        lines.append(",".join(values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_lemma_report(trials, path):
    """Write lemma trial rows; the descriptors column is JSON, hence quoted."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEMMA_COLUMNS)
        for trial in trials:
            writer.writerow(trial.csv_row())


def emit_sweep_summary(rows, path):
    """Write one summary row per sweep value (dicts keyed by SWEEP_COLUMNS)."""
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        parts = []
        for name in SWEEP_COLUMNS:
            value = row[name]
            if isinstance(value, float):
                parts.append(_fmt(value))
            elif value is None:
                parts.append("nan")
            else:
                parts.append(str(value))
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

@dataclass
class CheckpointData:
    """One decoded checkpoint: time, box dimensions, and both states."""

    t: float
    length_L: float
    height_M: float
    beam: BeamState
    fluid: FluidState


def write_checkpoint(path, t, beam, fluid, grid):
    nx, nz = grid.nx, grid.nz
    header = CHECKPOINT_MAGIC + struct.pack(
        "<IIddd", nx, nz, grid.length_L, grid.height_M, t
    )
    fields = (fluid.rho, fluid.u1, fluid.u3, beam.eta, beam.eta_t)
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in fields
    )
    Path(path).write_bytes(header + payload)


def read_checkpoint(path):
    data = Path(path).read_bytes()
    n_magic = len(CHECKPOINT_MAGIC)
    if data[:n_magic] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    nx, nz, length_L, height_M, t = struct.unpack_from("<IIddd", data, n_magic)
    offset = n_magic + struct.calcsize("<IIddd")
    expected = offset + 8 * (3 * nx * nz + 2 * nx)
    if len(data) != expected:
        raise ValueError(
            f"{path}: wrong size ({len(data)} bytes, expected {expected} for "
            f"nx={nx}, nz={nz})"
        )

    def take(count, shape):
        nonlocal offset
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        return arr.reshape(shape).copy()

    fluid = FluidState(
        take(nx * nz, (nx, nz)), take(nx * nz, (nx, nz)), take(nx * nz, (nx, nz))
    )
    beam = BeamState(take(nx, (nx,)), take(nx, (nx,)))
    return CheckpointData(t=t, length_L=length_L, height_M=height_M, beam=beam, fluid=fluid)


def write_run_outputs(trajectory, out_dir):
    """Persist a trajectory: diagnostics, contact terms, checkpoint files.

    Checkpoints are written at the diagnostics cadence (every recorded time),
    named by window index.  Returns the relative paths written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_diagnostics(trajectory.records, out_dir / "diagnostics.csv")
    emit_contact_terms(trajectory, out_dir / "contact_terms.csv")
    written = ["diagnostics.csv", "contact_terms.csv"]

    dt = trajectory.config.scheme.dt_window
    recorded = {int(round(rec.t / dt)) for rec in trajectory.records}
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    for cp in trajectory.checkpoints:
        n = int(round(cp.t / dt))
        if n not in recorded:
            continue
        name = f"ckpt_{n:06d}.bin"
        write_checkpoint(ckpt_dir / name, cp.t, cp.beam, cp.fluid, trajectory.config.grid)
        written.append(f"checkpoints/{name}")
    return written


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def _inventory(out_dir, include_subdirs):
    out_dir = Path(out_dir)
    entries = {}
    paths = out_dir.rglob("*") if include_subdirs else out_dir.glob("*")
    for p in sorted(paths):
        if not p.is_file() or p.name == "manifest.json":
            continue
        data = p.read_bytes()
        entries[p.relative_to(out_dir).as_posix()] = {
            "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data),
        }
    return entries


def write_manifest(
    out_dir,
    config_text,
    exit_status,
    exit_code,
    started_at,
    finished_at,
    wall_seconds,
    include_subdirs=True,
):
    """Write manifest.json atomically: config echo, fingerprint, inventory."""
    out_dir = Path(out_dir)
    manifest = {
        "format": "pfsi-manifest-1",
        "config": config_text,
        "code_version": __version__,
        "platform": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "system": platform.platform(),
            "machine": platform.machine(),
        },
        "started_at": started_at,
        "finished_at": finished_at,
        "wall_seconds": wall_seconds,
        "exit_status": exit_status,
        "exit_code": exit_code,
        "files": _inventory(out_dir, include_subdirs),
    }
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, out_dir / "manifest.json")
    return manifest


def read_manifest(out_dir):
    return json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8"))


def verify_manifest(out_dir):
    """Recompute the inventory checksums; returns a list of mismatch messages."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    problems = []
    for rel, entry in manifest["files"].items():
        path = out_dir / rel
        if not path.is_file():
            problems.append(f"{rel}: listed in manifest but missing")
            continue
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != entry["sha256"]:
            problems.append(f"{rel}: checksum mismatch")
        elif len(data) != entry["bytes"]:
            problems.append(f"{rel}: size mismatch")
    return problems
