"""Report assembly: pick figures for a directory, render, write an index.

A run directory (diagnostics.csv, contact_terms.csv, checkpoints/) gets the
per-run panels.  A sweep directory (sweep_summary.csv plus one subdirectory
per swept value) gets the sweep panel at the top level and a full per-run
set for every subdirectory.  Inputs are never written to; output goes to a
separate directory, by default a sibling named `<input>.report`.

Rendering is deterministic: fixed style parameters, no timestamps in the
image metadata or the index page, so re-rendering the same inputs gives
byte-identical files.
"""

import html
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

from . import figures
from .formats import (
    CHECKPOINT_DIR,
    CONTACT_FILE,
    DIAGNOSTICS_FILE,
    LEMMA_FILE,
    SWEEP_FILE,
    config_value,
    read_checkpoint_series,
    read_manifest,
    read_table,
)

DELTA_DEFAULT = 0.01

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "svg.hashsalt": "pfsi-reports",
    "path.simplify": False,
}

_SAVE_METADATA = {
    "png": {"Software": None},
    "svg": {"Date": None},
}


class ReportError(ValueError):
    """The request cannot be satisfied by the directory's contents."""


@dataclass(frozen=True)
class ReportSpec:
    """What to render: input directory, figure subset, image format."""

    input_dir: Path
    figures: tuple = None          # None = everything the directory supports
    image_format: str = "png"
    out_dir: Path = None           # None = sibling '<input>.report'

    def __post_init__(self):
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        if self.out_dir is not None:
            object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.figures is not None:
            object.__setattr__(self, "figures", tuple(self.figures))
            unknown = [f for f in self.figures if f not in JOBS]
            if unknown:
                raise ReportError(
                    f"unknown figure(s) {unknown}; known: {sorted(JOBS)}"
                )
        if self.image_format not in _SAVE_METADATA:
            raise ReportError(
                f"unknown image format '{self.image_format}'; known: png, svg"
            )


@dataclass
class ReportResult:
    index: Path
    written: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# figure registry: name -> input file plus required columns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Job:
    source: str
    columns: tuple


JOBS = {
    "eta_heatmap": _Job(CHECKPOINT_DIR, ()),
    "gap_history": _Job(DIAGNOSTICS_FILE, ("t", "min_eta", "max_eta")),
    "energy_budget": _Job(
        DIAGNOSTICS_FILE,
        ("t", "fluid_kinetic", "internal", "beam_kinetic", "bending",
         "dissipation_cum", "work_cum", "energy_residual"),
    ),
    "contact_breakdown": _Job(
        CONTACT_FILE,
        ("t", "lhs_total", "rhs_total", "residual", "tolerance")
        + figures.LHS_GROUPS + figures.RHS_GROUPS,
    ),
    "lemma_margins": _Job(LEMMA_FILE, ("lemma_id", "margin", "passed")),
    "sweep_detachment": _Job(
        SWEEP_FILE,
        ("key", "value", "directory", "detach_time_min", "detach_time_point"),
    ),
}


def _available(run_dir, name):
    source = Path(run_dir) / JOBS[name].source
    if name == "eta_heatmap":
        return source.is_dir() and any(source.glob("*.bin"))
    return source.is_file()


def _delta_threshold(run_dir, warnings):
    manifest = read_manifest(run_dir)
    if manifest is not None:
        value = config_value(manifest.get("config", ""), "scheme", "delta")
        if value is not None:
            return float(value)
    warnings.append(
        f"{run_dir}: no manifest with a scheme delta; "
        f"using default threshold {DELTA_DEFAULT}"
    )
    return DELTA_DEFAULT


def _build_figure(name, run_dir, warnings):
    """Build one panel; header-only inputs yield a placeholder plus warning."""
    job = JOBS[name]
    if name == "eta_heatmap":
        series = read_checkpoint_series(run_dir)
        if not series:
            warnings.append(f"{run_dir}: no checkpoints, placeholder for {name}")
            return figures.placeholder(name, "checkpoint directory carries no states")
        return figures.eta_heatmap(series)
    table = read_table(Path(run_dir) / job.source)
    table.require(*job.columns)
    if table.empty:
        warnings.append(f"{run_dir}: {job.source} has no rows, placeholder for {name}")
        return figures.placeholder(name, f"{job.source} has a header but no rows")
    if name == "gap_history":
        return figures.gap_history(table, _delta_threshold(run_dir, warnings))
    if name == "energy_budget":
        return figures.energy_budget(table)
    if name == "contact_breakdown":
        return figures.contact_breakdown(table)
    if name == "lemma_margins":
        return figures.lemma_margins(table)
    if name == "sweep_detachment":
        return figures.sweep_detachment(table)
    raise AssertionError(name)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _render_dir(run_dir, out_dir, spec, result, rendered_names):
    wanted = spec.figures if spec.figures is not None else tuple(sorted(JOBS))
    entries = []
    for name in wanted:
        if not _available(run_dir, name):
            continue
        fig = _build_figure(name, run_dir, result.warnings)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{name}.{spec.image_format}"
        fig.savefig(target, format=spec.image_format,
                    metadata=_SAVE_METADATA[spec.image_format])
        result.written.append(target)
        rendered_names.add(name)
        entries.append((name, target))
    return entries


def _subrun_dirs(input_dir):
    """Sweep subdirectories, in the order the summary lists them."""
    table = read_table(input_dir / SWEEP_FILE)
    table.require("directory")
    dirs = []
    for sub in table.strings("directory"):
        candidate = input_dir / sub
        if candidate.is_dir():
            dirs.append((sub, candidate))
    return dirs


def render_report(spec):
    input_dir = spec.input_dir
    if not input_dir.is_dir():
        raise ReportError(f"input directory not found: {input_dir}")
    out_dir = spec.out_dir
    if out_dir is None:
        out_dir = input_dir.parent / (input_dir.name + ".report")
    out_res, in_res = out_dir.resolve(), input_dir.resolve()
    if out_res == in_res or in_res in out_res.parents:
        raise ReportError(
            f"output directory {out_dir} lies inside the input; inputs are read-only"
        )

    result = ReportResult(index=out_dir / "index.html")
    rendered = set()
    sections = []
    with matplotlib.rc_context(_STYLE):
        entries = _render_dir(input_dir, out_dir, spec, result, rendered)
        sections.append(("", input_dir, entries))
        if (input_dir / SWEEP_FILE).is_file():
            for sub_name, sub_dir in _subrun_dirs(input_dir):
                sub_entries = _render_dir(
                    sub_dir, out_dir / sub_name, spec, result, rendered
                )
                sections.append((sub_name, sub_dir, sub_entries))

    if spec.figures is not None:
        never = [f for f in spec.figures if f not in rendered]
        if never:
            missing = {f: JOBS[f].source for f in never}
            raise ReportError(
                f"requested figure(s) with no input anywhere: {missing}"
            )
    if not result.written:
        raise ReportError(
            f"{input_dir}: nothing to render (no recognized data files)"
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    result.index.write_text(_index_page(input_dir, out_dir, sections, result))
    return result


# ---------------------------------------------------------------------------
# index page
# ---------------------------------------------------------------------------

_PAGE_STYLE = (
    "body{font-family:sans-serif;max-width:60em;margin:1em auto;padding:0 1em}"
    "figure{margin:1em 0}img{max-width:100%;border:1px solid #ccc}"
    "table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:2px 8px;"
    "font-size:0.85em}h2{border-bottom:1px solid #ccc}.warn{color:#a33}"
)

_MANIFEST_KEYS = ("code_version", "exit_status", "exit_code",
                  "started_at", "finished_at", "wall_seconds")


def _manifest_block(run_dir):
    manifest = read_manifest(run_dir)
    if manifest is None:
        return "<p>no manifest</p>"
    rows = "".join(
        f"<tr><th>{html.escape(key)}</th>"
        f"<td>{html.escape(str(manifest.get(key, '')))}</td></tr>"
        for key in _MANIFEST_KEYS
    )
    files = len(manifest.get("files", {}))
    rows += f"<tr><th>files</th><td>{files} checksummed</td></tr>"
    return f"<table>{rows}</table>"


def _index_page(input_dir, out_dir, sections, result):
    parts = [
        "<!DOCTYPE html><html><head><meta charset='utf-8'>",
        f"<title>run report: {html.escape(input_dir.name)}</title>",
        f"<style>{_PAGE_STYLE}</style></head><body>",
        f"<h1>run report: {html.escape(input_dir.name)}</h1>",
        f"<p>source directory: <code>{html.escape(str(input_dir))}</code></p>",
    ]
    for sub_name, run_dir, entries in sections:
        if sub_name:
            parts.append(f"<h2>{html.escape(sub_name)}</h2>")
        parts.append(_manifest_block(run_dir))
        for name, target in entries:
            rel = target.relative_to(out_dir).as_posix()
            parts.append(
                f"<figure><img src='{rel}' alt='{html.escape(name)}'>"
                f"<figcaption>{html.escape(name)}</figcaption></figure>"
            )
        if not entries:
            parts.append("<p class='warn'>no figures for this directory</p>")
    if result.warnings:
        parts.append("<h2>warnings</h2><ul>")
        parts.extend(f"<li class='warn'>{html.escape(w)}</li>" for w in result.warnings)
        parts.append("</ul>")
    parts.append("</body></html>")
    return "".join(parts) + "\n"
