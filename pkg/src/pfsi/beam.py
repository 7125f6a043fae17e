"""Structure sub-problem: beam dynamics over one splitting window.

Semi-discrete equation advanced here, with w the lagged fluid trace (a
per-inner-step path time-shifted from the previous window, or a frozen
profile) and F the outer force (frozen over the window):

    (1 - eps) eta_tt + (eps/dt_window) (eta_t - w) - eps d_x^2 eta_t
        + d_x^4 eta = contact_penalty + F

Inner stepping is backward-Euler-like: the stiff bending term (through the
position update eta += dt*v) and the viscoelastic term are solved implicitly
in the new velocity; the coupling and outer force stay explicit.  The periodic
constant-coefficient system diagonalizes in Fourier space, so each step is one
rfft/irfft pair; the spectral symbol of the fourth derivative is the square of
the 3-point second-difference symbol, i.e. the solve inverts exactly the same
circulant operator the difference stencils define.

The contact penalty (1/kappa) chi_{eta<delta} (eta_t)^- is applied as a
pointwise implicit substep after the linear solve.  Solving the penalty
relation in the new velocity keeps the step stable for arbitrarily stiff
kappa (the explicit form blows up once dt_inner/kappa ~ 1) without changing
the force law; the activation indicator also looks one predicted position
ahead so that a node cannot cross the delta floor in a single unpenalized
step.  With that, the undershoot below delta is bounded pointwise by
kappa * (accumulated penalty impulse), the bound recorded in the report.
"""

from dataclasses import dataclass

import numpy as np

from pfsi.core import BeamMotion, BeamState, StabilityError, beam_derivatives


@dataclass
class BeamForcing:
    """Forcing for one structure window.

    outer_F is frozen over the window.  lagged_trace_v3 is the vertical fluid
    trace from the previous window, either frozen (shape (nx,)) or given per
    inner step (shape (steps, nx)); the per-step form realizes the coupling
    operator as a plain one-window time shift of the trace path.
    """

    outer_F: np.ndarray
    lagged_trace_v3: np.ndarray

    def validate(self, grid):
        if self.outer_F.shape != (grid.nx,):
            raise ValueError(
                f"forcing: outer_F has shape {self.outer_F.shape}, expected ({grid.nx},)"
            )
        trace = self.lagged_trace_v3
        if trace.ndim not in (1, 2) or trace.shape[-1] != grid.nx:
            raise ValueError(
                f"forcing: lagged_trace_v3 has shape {trace.shape}, expected "
                f"({grid.nx},) or (steps, {grid.nx})"
            )
        for name in ("outer_F", "lagged_trace_v3"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"forcing: {name} contains non-finite entries")
        return self


@dataclass
class SspWindowReport:
    """Energy-ledger entries accumulated over one structure window.

    Energies use E_str = (1-eps)/2 int |eta_t|^2 + 1/2 int |d_x^2 eta|^2.
    All *_cum entries are already multiplied by dt_inner (time integrals over
    the window); pen_* carry the eps/(2 dt_window) prefactor.
    """

    eps: float
    dt_window: float
    dt_inner: float
    steps: int = 0
    e_start: float = 0.0
    e_end: float = 0.0
    kinetic_end: float = 0.0
    bending_end: float = 0.0
    pen_eta: float = 0.0        # (eps/2dt) int int |eta_t|^2
    pen_mismatch: float = 0.0   # (eps/2dt) int int |eta_t - w|^2
    pen_source: float = 0.0     # (eps/2dt) int int |w|^2
    visco: float = 0.0          # eps int int |d_x eta_t|^2
    f_work: float = 0.0         # int int F eta_t
    contact_dissipation: float = 0.0   # -int int penalty * eta_t  (>= 0)
    contact_impulse: float = 0.0       # int int penalty           (>= 0)
    max_penalty: float = 0.0
    min_eta: float = float("inf")
    undershoot_bound: float = 0.0      # rigorous floor for min eta this window
    min_eta_start: float = 0.0


def contact_penalty(eta, eta_t, delta, kappa):
    """Contact force (1/kappa) * indicator(eta < delta) * (eta_t)^-, >= 0.

    Purely dissipative: nonzero only where the beam is below the delta floor
    and still moving down, in which case it pushes up.
    """
    if kappa <= 0:
        raise ValueError("contact penalty: kappa must be positive")
    eta = np.asarray(eta, dtype=float)
    eta_t = np.asarray(eta_t, dtype=float)
    return np.where(eta < delta, np.maximum(-eta_t, 0.0) / kappa, 0.0)


def beam_energy(beam, grid, eps):
    """Structure energy (1-eps)/2 int |eta_t|^2 + 1/2 int |d_x^2 eta|^2."""
    dx = grid.dx
    kinetic = 0.5 * (1.0 - eps) * float(np.sum(beam.eta_t**2)) * dx
    d2 = beam_derivatives(beam.eta, grid, 2)
    bending = 0.5 * float(np.sum(d2**2)) * dx
    return kinetic + bending


def _second_difference_symbol(nx, dx):
    k = np.arange(nx // 2 + 1)
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * k / nx)) / dx**2


def step_ssp(beam, forcing, phys, scheme, window_steps, grid):
    """Advance the beam over one window.

    Returns (BeamState, SspWindowReport, BeamMotion); the motion carries the
    per-inner-step path the fluid window consumes.  phys is accepted for
    signature uniformity; the beam constants (density, bending stiffness) are
    normalized to one in this model.
    """
    del phys  # the beam equation carries no fluid constants
    if window_steps != scheme.window_steps:
        raise ValueError(
            f"window_steps {window_steps} inconsistent with "
            f"dt_window/dt_inner = {scheme.window_steps}"
        )
    forcing.validate(grid)
    # entry floor: never stricter than the state we were handed (a weak-kappa
    # predecessor window may legitimately sit kappa*impulse below zero)
    entry_tol = max(scheme.tol_penalty, scheme.tol_penalty - float(beam.eta.min()))
    beam.validate(grid, entry_tol)

    dx = grid.dx
    dt = scheme.dt_inner
    eps = scheme.eps
    big_dt = scheme.dt_window
    kappa = scheme.kappa_contact
    delta = scheme.delta
    w_path = np.atleast_2d(forcing.lagged_trace_v3)
    if w_path.shape[0] == 1:
        w_path = np.broadcast_to(w_path, (window_steps, grid.nx))
    elif w_path.shape[0] != window_steps:
        raise ValueError(
            f"forcing: lagged trace path has {w_path.shape[0]} rows, "
            f"window has {window_steps} inner steps"
        )
    outer = forcing.outer_F

    eta = beam.eta.copy()
    v = beam.eta_t.copy()

    s2 = _second_difference_symbol(grid.nx, dx)
    solve_symbol = (1.0 - eps) / dt + eps * s2 + dt * s2**2
    shrink = 1.0 + dt / (kappa * (1.0 - eps))  # implicit contact divisor

    report = SspWindowReport(eps=eps, dt_window=big_dt, dt_inner=dt)
    report.e_start = beam_energy(beam, grid, eps)
    report.min_eta = float(eta.min())
    report.min_eta_start = float(eta.min())
    pen_coef = eps / (2.0 * big_dt)
    impulse_pointwise = np.zeros_like(eta)
    eta_path = np.empty((window_steps, grid.nx))
    eta_t_path = np.empty((window_steps, grid.nx))

    for k in range(window_steps):
        w = w_path[k]
        rhs = (
            (1.0 - eps) / dt * v
            - (eps / big_dt) * (v - w)
            - beam_derivatives(eta, grid, 4)
            + outer
        )
        v_star = np.fft.irfft(np.fft.rfft(rhs) / solve_symbol, n=grid.nx)
        if not np.all(np.isfinite(v_star)):
            raise StabilityError(
                "beam window blew up: non-finite velocity after the implicit "
                f"solve (dt_inner={dt:.3e}, max|rhs|={np.abs(rhs).max():.3e})"
            )

        # Pointwise implicit contact substep on the predicted position.
        active = (eta < delta) | (eta + dt * v_star < delta)
        descending = active & (v_star < 0.0)
        v_new = np.where(descending, v_star / shrink, v_star)
        penalty = (1.0 - eps) * (v_new - v_star) / dt  # == (v_new)^- / kappa

        eta += dt * v_new
        eta_path[k] = eta
        eta_t_path[k] = v_new

        # pen_eta pairs the realized eta_t (post-shrink), so the next fluid
        # window's penalty source telescopes against it exactly; the shrink
        # only ever lowers |v|, keeping the window check one-sided.
        report.pen_eta += dt * pen_coef * float(np.sum(v_new**2)) * dx
        report.pen_mismatch += dt * pen_coef * float(np.sum((v_star - w) ** 2)) * dx
        report.pen_source += dt * pen_coef * float(np.sum(w**2)) * dx
        grad_v = (np.roll(v_star, -1) - v_star) / dx
        report.visco += dt * eps * float(np.sum(grad_v**2)) * dx
        report.f_work += dt * float(np.sum(outer * v_star)) * dx
        report.contact_dissipation += -dt * float(np.sum(penalty * v_new)) * dx
        report.contact_impulse += dt * float(np.sum(penalty)) * dx
        impulse_pointwise += dt * penalty
        if penalty.size:
            report.max_penalty = max(report.max_penalty, float(penalty.max()))
        report.min_eta = min(report.min_eta, float(eta.min()))
        report.steps += 1
        v = v_new

    report.undershoot_bound = (
        min(report.min_eta_start, delta) - kappa * float(impulse_pointwise.max())
    )
    out = BeamState(eta, v)
    # exit floor: the proven pointwise bound, plus round-off slack
    exit_tol = max(scheme.tol_penalty, scheme.tol_penalty - report.undershoot_bound)
    out.validate(grid, exit_tol)
    report.e_end = beam_energy(out, grid, eps)
    report.kinetic_end = 0.5 * (1.0 - eps) * float(np.sum(v**2)) * dx
    report.bending_end = report.e_end - report.kinetic_end
    return out, report, BeamMotion(eta_path, eta_t_path)


def check_ssp_energy(report, tol):
    """Window energy inequality: end energy plus dissipation must not exceed
    start energy plus the lagged-trace source and the outer-force work, up to
    tol.  Returns (passed, residual)."""
    lhs = (
        report.e_end
        + report.pen_eta
        + report.pen_mismatch
        + report.visco
        + report.contact_dissipation
    )
    rhs = report.e_start + report.pen_source + report.f_work
    residual = lhs - rhs
    return residual <= tol, residual
