"""Window-by-window coupled driver.

One outer window advances the beam first (structure sub-problem, driven by
the previous window's fluid trace path) and then the fluid (fluid
sub-problem, masked and dragged toward the fresh beam motion).  The exchange
at the window boundary is the per-inner-step trace path, so the coupling is
a plain one-window time shift; window zero uses the initial beam velocity as
its trace, matching a fluid path that never existed by the only data
available at t = 0.

run_simulation never raises on numerical failure: a blow-up, a CFL abort, or
the beam running out of mask headroom ends the run early and the partial
trajectory is returned with the abort reason attached, so everything
computed up to the failure can still be dumped and inspected.
"""

from dataclasses import dataclass, field

import numpy as np

from pfsi import scenarios
from pfsi.beam import BeamForcing, step_ssp
from pfsi.core import BeamState, FluidState, StabilityError, beam_derivatives, integrate_field
from pfsi.diagnostics import ContactLedger, DiagnosticsRecord
from pfsi.fluid import fluid_kinetic_internal, step_fsp

# ---------------------------------------------------------------------------
# configuration and trajectory containers
# ---------------------------------------------------------------------------

@dataclass
class SimulationConfig:
    """Everything a run needs; immutable once built.

    total_time must be an integer number of coupling windows.  output_every
    records diagnostics every that many windows (initial and final states are
    always recorded).  The stop rule ends a run early once the probed graph
    quantity clears stop_threshold: probe "min" watches min_x eta, probe
    "point" watches eta at stop_x0 (default mid-domain).  seed only feeds the
    randomized lemma trials; the solver itself draws nothing.  output_dir is
    carried for the persistence layer and ignored by the stepping.
    """

    grid: object
    phys: object
    scheme: object
    scenario_id: str
    scenario_params: dict = field(default_factory=dict)
    total_time: float = 1.0
    output_every: int = 1
    seed: int = 0
    stop_threshold: float = 0.0     # 0 disables the stop rule
    stop_probe: str = "min"
    stop_x0: float = None
    output_dir: str = "pfsi_out"

    def __post_init__(self):
        if self.total_time < 0:
            raise ValueError("total_time must be non-negative")
        windows = self.total_time / self.scheme.dt_window
        if abs(windows - round(windows)) > 1e-9 * max(1.0, windows):
            raise ValueError(
                f"total_time = {self.total_time} is not an integer multiple of "
                f"dt_window = {self.scheme.dt_window}"
            )
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")
        if self.stop_probe not in ("min", "point"):
            raise ValueError(f"stop_probe must be 'min' or 'point', got {self.stop_probe!r}")
        if self.stop_x0 is None:
            self.stop_x0 = self.grid.length_L / 2.0

    @property
    def n_windows(self):
        return int(round(self.total_time / self.scheme.dt_window))


@dataclass
class WindowCheckpoint:
    """Full state at one window boundary plus the reports that produced it."""

    t: float
    beam: BeamState
    fluid: FluidState
    force: np.ndarray          # outer force profile at this time
    ssp: object = None         # None at t = 0
    fsp: object = None


@dataclass
class WindowReports:
    ssp: object
    fsp: object
    trace_path: np.ndarray     # (steps, nx) vertical trace after each inner step


@dataclass
class Trajectory:
    """Recorded run: per-window checkpoints plus cadenced diagnostics rows."""

    config: SimulationConfig
    scenario_info: dict
    checkpoints: list = field(default_factory=list)
    records: list = field(default_factory=list)
    aborted: str = None        # abort reason, or None for a clean run
    stopped_reason: str = None # early-stop reason, or None

    @property
    def final_time(self):
        return self.checkpoints[-1].t

    def final_state(self):
        last = self.checkpoints[-1]
        return last.beam, last.fluid


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def run_window(n, fluid, beam, lagged_trace, config, scenario=None):
    """Advance one coupling window: structure first, then fluid.

    lagged_trace is the previous window's per-inner-step trace path (or a
    frozen (nx,) profile; window zero passes the initial beam velocity).
    Returns the advanced states and the window reports, whose trace_path
    feeds the next window.
    """
    if scenario is None:
        scenario = scenarios.resolve(
            config.scenario_id, config.scenario_params, config.grid, config.phys,
            config.scheme,
        )
    scheme, phys, grid = config.scheme, config.phys, config.grid
    t_start = n * scheme.dt_window
    forcing = BeamForcing(
        outer_F=np.asarray(scenario.force(t_start), dtype=float),
        lagged_trace_v3=lagged_trace,
    )
    beam_out, ssp_report, motion = step_ssp(
        beam, forcing, phys, scheme, scheme.window_steps, grid
    )
    if ssp_report.max_penalty < 0.0 or ssp_report.contact_dissipation < -1e-12:
        raise StabilityError(
            f"window {n}: contact penalty lost its sign "
            f"(max penalty {ssp_report.max_penalty:.3g}, dissipation "
            f"{ssp_report.contact_dissipation:.3g})"
        )
    fluid_out, fsp_report, trace_path = step_fsp(
        fluid, motion, scheme, phys, grid, scheme.window_steps
    )
    fsp_report.work_F = ssp_report.f_work
    return fluid_out, beam_out, WindowReports(ssp_report, fsp_report, trace_path)


class _CumulativeSums:
    """Running totals feeding the diagnostics columns."""

    def __init__(self):
        self.dissipation = 0.0
        self.work = 0.0
        self.coupling = 0.0
        self.clipped_mass = 0.0
        self.penalty_impulse = 0.0

    def fold(self, reports):
        ssp, fsp = reports.ssp, reports.fsp
        self.dissipation += (
            ssp.visco + ssp.contact_dissipation + ssp.pen_mismatch
            + fsp.visc_diss + fsp.pen_mismatch
        )
        self.work += ssp.f_work
        self.coupling += fsp.coupling_residual_int
        self.clipped_mass += fsp.clipped_mass
        self.penalty_impulse += ssp.contact_impulse


def _beam_parts(beam, grid):
    kinetic = 0.5 * float(np.sum(beam.eta_t**2)) * grid.dx
    bending = 0.5 * float(np.sum(beam_derivatives(beam.eta, grid, 2) ** 2)) * grid.dx
    return kinetic, bending


def _make_record(t, fluid, beam, config, ledger, sums, e_scheme_0):
    grid, phys, scheme = config.grid, config.phys, config.scheme
    fluid_kin, internal = fluid_kinetic_internal(fluid, phys, scheme, grid)
    beam_kin, bending = _beam_parts(beam, grid)
    e_scheme = fluid_kin + internal + (1.0 - scheme.eps) * beam_kin + bending
    if e_scheme_0 is None:
        e_scheme_0 = e_scheme
    breakdown = ledger.breakdown()
    eta_floored = np.maximum(beam.eta, scheme.eta_floor)
    record = DiagnosticsRecord(
        t=t,
        mass=integrate_field(fluid.rho, grid, "full"),
        fluid_kinetic=fluid_kin,
        internal=internal,
        beam_kinetic=beam_kin,
        bending=bending,
        dissipation_cum=sums.dissipation,
        work_cum=sums.work,
        ln_eta=float(np.sum(np.log(eta_floored))) * grid.dx,
        press_over_eta_cum=ledger.cum["press"],
        vert_kin_over_eta_cum=ledger.cum["vkin"],
        min_eta=float(np.min(beam.eta)),
        max_eta=float(np.max(beam.eta)),
        coupling_residual=sums.coupling,
        clipped_mass_cum=sums.clipped_mass,
        penalty_impulse_cum=sums.penalty_impulse,
        energy_residual=(e_scheme + sums.dissipation) - (e_scheme_0 + sums.work),
        contact_residual=breakdown.residual,
    )
    return record, e_scheme_0


def _stop_rule_met(config, beam):
    if config.stop_threshold <= 0.0:
        return False
    if config.stop_probe == "min":
        probe = float(np.min(beam.eta))
    else:
        ix = int(round(config.stop_x0 / config.grid.dx - 0.5)) % config.grid.nx
        probe = float(beam.eta[ix])
    return probe > config.stop_threshold


def run_simulation(config):
    """Run the configured scenario to total_time (or abort/stop earlier).

    The returned Trajectory always holds at least the initial checkpoint and
    record; total_time = 0 returns exactly that.  Reruns of the same config
    are bit-identical (nothing here draws randomness or reads the clock).
    """
    grid, phys, scheme = config.grid, config.phys, config.scheme
    scenario = scenarios.resolve(
        config.scenario_id, config.scenario_params, grid, phys, scheme
    )
    beam = BeamState(scenario.beam0.eta.copy(), scenario.beam0.eta_t.copy())
    fluid = FluidState(
        scenario.fluid0.rho.copy(), scenario.fluid0.u1.copy(), scenario.fluid0.u3.copy()
    )
    beam.validate(grid, tol_penalty=scheme.tol_penalty)
    fluid.validate(grid)

    trajectory = Trajectory(
        config=config,
        scenario_info={
            "id": scenario.scenario_id,
            "target": scenario.target,
            "guarantee": scenario.guarantee,
            "params": dict(scenario.params),
        },
    )
    ledger = ContactLedger(grid, phys, scheme)
    sums = _CumulativeSums()

    force0 = np.asarray(scenario.force(0.0), dtype=float)
    ledger.observe(0.0, fluid, beam, force0)
    trajectory.checkpoints.append(WindowCheckpoint(0.0, beam, fluid, force0))
    record, e_scheme_0 = _make_record(0.0, fluid, beam, config, ledger, sums, None)
    trajectory.records.append(record)

    trace_path = np.tile(beam.eta_t, (scheme.window_steps, 1))
    n_windows = config.n_windows
    for n in range(n_windows):
        try:
            fluid, beam, reports = run_window(n, fluid, beam, trace_path, config, scenario)
        except StabilityError as exc:
            trajectory.aborted = f"window {n}: {exc}"
            break
        trace_path = reports.trace_path
        t_now = (n + 1) * scheme.dt_window
        sums.fold(reports)
        force_now = np.asarray(scenario.force(t_now), dtype=float)
        ledger.observe(t_now, fluid, beam, force_now)
        trajectory.checkpoints.append(
            WindowCheckpoint(t_now, beam, fluid, force_now, reports.ssp, reports.fsp)
        )

        headroom = grid.height_M / 2.0
        out_of_room = float(np.max(beam.eta)) > headroom
        stopping = _stop_rule_met(config, beam)
        if (
            (n + 1) % config.output_every == 0
            or n + 1 == n_windows
            or out_of_room
            or stopping
        ):
            record, e_scheme_0 = _make_record(
                t_now, fluid, beam, config, ledger, sums, e_scheme_0
            )
            trajectory.records.append(record)

        if out_of_room:
            trajectory.aborted = (
                f"window {n}: beam reached max eta = {float(np.max(beam.eta)):.6g}, "
                f"above half the box height ({headroom:.6g}); the mask needs "
                "headroom above the graph, rerun with a larger height_M"
            )
            break
        if stopping:
            trajectory.stopped_reason = (
                f"stop rule met at t = {t_now:.6g}: {config.stop_probe} probe "
                f"cleared {config.stop_threshold:.6g}"
            )
            break

    return trajectory


def window_ledger_defects(trajectory):
    """Per-window one-sided energy defects (structure, fluid) from the reports.

    Each defect is (tracked end energy + dissipation) minus (start energy +
    sources); the scheme makes both non-positive up to round-off, and the
    trajectory-level energy residual telescopes to their sum plus the
    penalty-pipeline boundary terms.
    """
    defects = []
    for cp in trajectory.checkpoints[1:]:
        s, f = cp.ssp, cp.fsp
        ds = (s.e_end + s.pen_eta + s.pen_mismatch + s.visco + s.contact_dissipation) - (
            s.e_start + s.pen_source + s.f_work
        )
        df = (f.e_end + f.visc_diss + f.pen_v + f.pen_mismatch) - (
            f.e_start + f.pen_source
        )
        defects.append((ds, df))
    return defects
