"""Post-hoc figure rendering for simulator run directories.

Reads only the documented on-disk formats (CSV tables, flat binary
checkpoints, JSON manifests); the simulator package itself is never
imported.
"""

__version__ = "0.1.0"

from .report import ReportSpec, render_report

__all__ = ["ReportSpec", "render_report", "__version__"]
