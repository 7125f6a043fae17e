"""Fluid sub-problem: masked compressible Navier-Stokes on the extended box.

Scheme notes
------------
State is (rho, u1, u3) at cell centers.  One inner step is a Lie pair:

* continuity_step: conservative donor-cell advection of rho plus explicit
  density diffusion a*Lap(rho), no-flux walls, periodic x.  Velocity is held
  frozen, so the diffusion's momentum bookkeeping (the a grad(rho).grad(u)
  correction of the momentum equation) is realized structurally: density moves
  at frozen velocity, which is exactly the velocity-form dynamics in which the
  a-terms cancel from the kinetic-energy budget.
* momentum_step: velocity-form update.  Donor-cell upwinding for (u.grad)u
  (keeps velocities bounded through the vacuum band where dividing momentum
  increments by rho would blow up), central pressure gradient -grad(rho^gamma
  + b rho^beta), central divergence of the masked stress chi*S(grad u), and
  the interface coupling penalty.

The penalty is deposited per column onto the one or two cells around
z = eta(x_i) with linear hat weights that integrate to one over the cell
height (the transpose of the interface interpolation), and is solved
pointwise-implicitly: relaxation of u toward (0, eta_t) is unconditionally
stable and exactly dissipative in the discrete ledger, so light cells just
above the graph simply ride with the beam instead of going stiff.

Two per-cell stabilizers guard explicit stepping near vacuum, both logged and
both inactive in the bulk at default parameters: the masked viscosity is
clamped so the local diffusion number stays below VISC_COURANT_CAP, and the
pressure acceleration of a near-massless cell is capped at the global maximum
sound speed per step (the physical escape-speed scale).

Boundary conditions: no-slip floor (velocity row j=0 pinned to zero, odd ghost
reflection), free-slip lid (even u1 / odd u3 ghosts), periodic in x.  Cells
with rho below VACUUM_RHO are dry: their velocity is zeroed each step.
"""

from dataclasses import dataclass

import numpy as np

from pfsi.core import BeamMotion, BeamState, FluidState, StabilityError, trace_velocity

VACUUM_RHO = 1e-12
CFL_ABORT = 0.98
VISC_COURANT_CAP = 0.25
PRESSURE_SPEED_CAP = 2.0


@dataclass
class ViscosityMask:
    """Masked-viscosity field chi in [eps, 1]: 1 below the graph, eps above."""

    chi: np.ndarray

    def validate(self, eps):
        if np.any(self.chi < eps - 1e-15) or np.any(self.chi > 1.0 + 1e-15):
            raise ValueError("mask: chi must lie in [eps, 1]")
        if np.any(np.diff(self.chi, axis=1) > 1e-15):
            raise ValueError("mask: chi must be non-increasing in z")
        return self


@dataclass
class FspWindowReport:
    """Energy-ledger entries accumulated over one fluid window.

    Energies are over the full extended rectangle; pen_* entries carry
    eps/(2 dt_window) and are time-integrated with dt_inner, as are the
    dissipation entries.  work_F mirrors the outer-force work of the matching
    structure window (filled by the driver; the fluid itself never sees F).
    """

    eps: float
    dt_window: float
    dt_inner: float
    steps: int = 0
    e_start: float = 0.0
    e_end: float = 0.0
    kinetic_end: float = 0.0
    internal_end: float = 0.0
    visc_diss: float = 0.0      # int int chi S(grad u) : grad u
    pen_v: float = 0.0          # (eps/2dt) int int |v|^2 on the graph
    pen_mismatch: float = 0.0   # (eps/2dt) int int |v - eta_t e_z|^2
    pen_source: float = 0.0     # (eps/2dt) int int |eta_t|^2
    work_F: float = 0.0
    clipped_mass: float = 0.0
    coupling_residual_int: float = 0.0  # int int |trace u - eta_t e_z|^2 dx dt
    mass_start: float = 0.0
    mass_end: float = 0.0
    visc_clamp_cells: int = 0
    pressure_cap_cells: int = 0
    max_cfl: float = 0.0


def build_mask(eta, eps, grid):
    """Viscosity mask: 1 below z=eta, linear ramp to eps on [eta, eta+eps],
    eps above, sampled at cell centers."""
    eta = np.asarray(eta, dtype=float)
    z = grid.z_centers()
    ramp = np.clip((z[None, :] - eta[:, None]) / eps, 0.0, 1.0)
    chi = np.where(ramp >= 1.0, eps, 1.0 + (eps - 1.0) * ramp)
    return ViscosityMask(chi)


def stress_tensor(u_grad, phys):
    """Newtonian stress mu(G + G^T - (2/3) tr(G) I) + lam tr(G) I.

    u_grad has shape (..., 2, 2); the 3D deviatoric factor 2/3 is kept in 2D
    so the contact-inequality coefficient (4 mu/3 + lam) carries over.
    """
    grad = np.asarray(u_grad, dtype=float)
    div = grad[..., 0, 0] + grad[..., 1, 1]
    stress = phys.mu * (grad + np.swapaxes(grad, -1, -2))
    trace_part = (phys.lam - 2.0 * phys.mu / 3.0) * div
    stress[..., 0, 0] += trace_part
    stress[..., 1, 1] += trace_part
    return stress


def pressure_of(rho, phys, scheme):
    p = rho**phys.gamma
    if scheme.b_reg > 0:
        p = p + scheme.b_reg * rho**scheme.beta_reg
    return p


def sound_speed(rho, phys, scheme):
    c2 = phys.gamma * rho ** (phys.gamma - 1.0)
    if scheme.b_reg > 0:
        c2 = c2 + scheme.b_reg * scheme.beta_reg * rho ** (scheme.beta_reg - 1.0)
    return np.sqrt(c2)


def _padded_velocity(fluid, grid):
    """Two ghost layers in z: odd reflection at the no-slip floor, even u1 /
    odd u3 at the free-slip lid."""
    u1, u3 = fluid.u1, fluid.u3
    nz = grid.nz
    u1p = np.concatenate([-u1[:, [1, 0]], u1, u1[:, [nz - 1, nz - 2]]], axis=1)
    u3p = np.concatenate([-u3[:, [1, 0]], u3, -u3[:, [nz - 1, nz - 2]]], axis=1)
    return u1p, u3p


def velocity_gradient_tensor(fluid, grid, ring=0):
    """Central-difference gradient G[..., a, b] = d_b u_a at cell centers.

    ring=1 extends the result one ghost layer beyond the walls (used to form
    the stress divergence); x is periodic throughout.
    """
    u1p, u3p = _padded_velocity(fluid, grid)
    dx, dz = grid.dx, grid.dz
    lo, hi = 2 - ring, 2 + grid.nz + ring
    sl = slice(lo, hi)
    g = np.empty((grid.nx, grid.nz + 2 * ring, 2, 2))
    g[..., 0, 0] = (np.roll(u1p, -1, axis=0) - np.roll(u1p, 1, axis=0))[:, sl] / (2 * dx)
    g[..., 1, 0] = (np.roll(u3p, -1, axis=0) - np.roll(u3p, 1, axis=0))[:, sl] / (2 * dx)
    g[..., 0, 1] = (u1p[:, lo + 1 : hi + 1] - u1p[:, lo - 1 : hi - 1]) / (2 * dz)
    g[..., 1, 1] = (u3p[:, lo + 1 : hi + 1] - u3p[:, lo - 1 : hi - 1]) / (2 * dz)
    return g


def _masked_stress_force(fluid, mask, phys, grid, dt):
    """Force density div(chi_eff S(grad u)) in conservative face-flux form.

    The face gradient couples the compact normal difference with the average
    of the adjacent cells' tangential derivatives.  Face viscosity is clamped
    so the diffusion number measured against the lighter neighbor stays below
    VISC_COURANT_CAP, which bounds the induced velocity increment cell by
    cell even across the vacuum front (a cell-centered clamp cannot: the
    divergence at a light cell is driven by its wet neighbor's stress).

    Returns (f1, f3, work, clamped_faces) with work = sum u . f dA, so that
    -dt*work is exactly the kinetic energy this force removes at frozen
    density (the summation-by-parts pairing of flux form).
    """
    u1, u3, rho = fluid.u1, fluid.u3, fluid.rho
    dx, dz = grid.dx, grid.dz
    mu, lam = phys.mu, phys.lam
    coef = lam - 2.0 * mu / 3.0
    rho_safe = np.maximum(rho, VACUUM_RHO)
    chi = mask.chi
    nu_bound = 4.0 * mu / 3.0 + lam + mu
    cap = VISC_COURANT_CAP / (dt * nu_bound * (1.0 / dx**2 + 1.0 / dz**2))

    u1p, u3p = _padded_velocity(fluid, grid)
    dzu1_c = (u1p[:, 3:-1] - u1p[:, 1:-3]) / (2 * dz)
    dzu3_c = (u3p[:, 3:-1] - u3p[:, 1:-3]) / (2 * dz)
    dxu1_c = (np.roll(u1, -1, axis=0) - np.roll(u1, 1, axis=0)) / (2 * dx)
    dxu3_c = (np.roll(u3, -1, axis=0) - np.roll(u3, 1, axis=0)) / (2 * dx)

    def right(f):
        return np.roll(f, -1, axis=0)

    # x faces (i+1/2, j), periodic.
    g00 = (right(u1) - u1) / dx
    g10 = (right(u3) - u3) / dx
    g01 = 0.5 * (dzu1_c + right(dzu1_c))
    g11 = 0.5 * (dzu3_c + right(dzu3_c))
    chi_x = np.minimum(0.5 * (chi + right(chi)), cap * np.minimum(rho_safe, right(rho_safe)))
    clamped = int(np.count_nonzero(chi_x < 0.5 * (chi + right(chi)) - 1e-300))
    tr = g00 + g11
    flux1_x = chi_x * (2.0 * mu * g00 + coef * tr)
    flux3_x = chi_x * (mu * (g10 + g01))
    f1 = (flux1_x - np.roll(flux1_x, 1, axis=0)) / dx
    f3 = (flux3_x - np.roll(flux3_x, 1, axis=0)) / dx

    # Interior z faces (i, j+1/2), j = 0..nz-2.
    g01z = (u1[:, 1:] - u1[:, :-1]) / dz
    g11z = (u3[:, 1:] - u3[:, :-1]) / dz
    g00z = 0.5 * (dxu1_c[:, 1:] + dxu1_c[:, :-1])
    g10z = 0.5 * (dxu3_c[:, 1:] + dxu3_c[:, :-1])
    chi_zf = 0.5 * (chi[:, 1:] + chi[:, :-1])
    chi_z = np.minimum(chi_zf, cap * np.minimum(rho_safe[:, 1:], rho_safe[:, :-1]))
    clamped += int(np.count_nonzero(chi_z < chi_zf - 1e-300))
    trz = g00z + g11z
    t01 = chi_z * (mu * (g01z + g10z))
    t11 = chi_z * (2.0 * mu * g11z + coef * trz)

    # Wall faces: no-slip floor (odd ghosts for both components), free-slip
    # lid (even u1 gives zero tangential stress, odd u3).
    chi_b = np.minimum(chi[:, 0], cap * rho_safe[:, 0])
    g01b = 2.0 * u1[:, 0] / dz
    g11b = 2.0 * u3[:, 0] / dz
    t01b = chi_b * (mu * (g01b + dxu3_c[:, 0]))
    t11b = chi_b * (2.0 * mu * g11b + coef * (dxu1_c[:, 0] + g11b))
    chi_t = np.minimum(chi[:, -1], cap * rho_safe[:, -1])
    g11t = -2.0 * u3[:, -1] / dz
    t01t = np.zeros(grid.nx)
    t11t = chi_t * (2.0 * mu * g11t + coef * (dxu1_c[:, -1] + g11t))

    z1 = np.concatenate([t01b[:, None], t01, t01t[:, None]], axis=1)
    z3 = np.concatenate([t11b[:, None], t11, t11t[:, None]], axis=1)
    f1 += (z1[:, 1:] - z1[:, :-1]) / dz
    f3 += (z3[:, 1:] - z3[:, :-1]) / dz

    work = float(np.sum(u1 * f1 + u3 * f3)) * grid.cell_area
    return f1, f3, work, clamped


def _advective_cfl(fluid, scheme, grid, dt):
    adv = dt * (
        np.abs(fluid.u1).max() / grid.dx + np.abs(fluid.u3).max() / grid.dz
    )
    diff = dt * 2.0 * scheme.a_diff * (1.0 / grid.dx**2 + 1.0 / grid.dz**2)
    return adv + diff


def _donor_face_flux(q, vel_face, axis, grid):
    """Donor-cell face flux of quantity q at the face velocity, per direction.

    Returns the divergence contribution (flux out minus flux in)/h over the
    real cells.  x faces wrap periodically; z wall faces carry zero flux.
    """
    if axis == 0:
        q_r = np.roll(q, -1, axis=0)
        flux = vel_face * np.where(vel_face > 0, q, q_r)  # face i+1/2
        return (flux - np.roll(flux, 1, axis=0)) / grid.dx
    q_l, q_r = q[:, :-1], q[:, 1:]
    flux = vel_face * np.where(vel_face > 0, q_l, q_r)  # interior faces only
    div = np.zeros_like(q)
    div[:, :-1] += flux / grid.dz
    div[:, 1:] -= flux / grid.dz
    return div


def continuity_step(fluid, scheme, grid, dt):
    """Advance d_t rho + div(rho u) = a Lap(rho) one step at frozen velocity.

    Conservative donor-cell advection plus explicit diffusion; no-flux walls.
    Returns (new state, clipped mass): negative densities are clipped to zero
    and the added mass is reported, never silently absorbed.
    """
    cfl = _advective_cfl(fluid, scheme, grid, dt)
    if cfl > CFL_ABORT:
        raise StabilityError(
            f"continuity CFL violated: advective+diffusive number {cfl:.3f} > "
            f"{CFL_ABORT} (max|u1|={np.abs(fluid.u1).max():.3e}, "
            f"max|u3|={np.abs(fluid.u3).max():.3e}, dt={dt:.3e})"
        )
    rho, u1, u3 = fluid.rho, fluid.u1, fluid.u3
    face_u1 = 0.5 * (u1 + np.roll(u1, -1, axis=0))
    face_u3 = 0.5 * (u3[:, :-1] + u3[:, 1:])
    div = _donor_face_flux(rho, face_u1, 0, grid)
    div += _donor_face_flux(rho, face_u3, 1, grid)

    if scheme.a_diff > 0:
        a = scheme.a_diff
        lap = (np.roll(rho, -1, axis=0) - 2 * rho + np.roll(rho, 1, axis=0)) / grid.dx**2
        dzz = np.zeros_like(rho)
        dzz[:, :-1] += (rho[:, 1:] - rho[:, :-1]) / grid.dz**2
        dzz[:, 1:] -= (rho[:, 1:] - rho[:, :-1]) / grid.dz**2
        lap = lap + dzz
        div -= a * lap

    rho_new = rho - dt * div
    clipped = -float(np.sum(np.minimum(rho_new, 0.0))) * grid.cell_area
    np.maximum(rho_new, 0.0, out=rho_new)
    return FluidState(rho_new, u1.copy(), u3.copy()), clipped


def _penalty_weights(eta, grid):
    """Hat deposition weights of the graph line, shape (nx, nz); each column
    sums to 1/dz (times cell area = dx, the line measure) except where part of
    the hat is absorbed by the floor."""
    nz = grid.nz
    omega = np.zeros((eta.size, nz))
    s = np.clip(eta, 0.0, grid.height_M) / grid.dz - 0.5
    jl = np.floor(s).astype(int)
    theta = s - jl
    cols = np.arange(eta.size)
    lo_ok = jl >= 0
    np.add.at(
        omega,
        (cols[lo_ok], np.clip(jl[lo_ok], 0, nz - 1)),
        (1.0 - theta[lo_ok]) / grid.dz,
    )
    np.add.at(omega, (cols, np.clip(jl + 1, 0, nz - 1)), theta / grid.dz)
    return omega


def momentum_step(fluid, mask, beam, scheme, phys, grid, dt):
    """One velocity update: upwind transport, pressure, masked stress
    divergence and the implicit interface-coupling penalty.

    Returns (new state, info dict) where info carries the step's dissipation
    ledger entries and stabilizer counters.
    """
    rho, u1, u3 = fluid.rho, fluid.u1, fluid.u3
    dx, dz = grid.dx, grid.dz
    area = grid.cell_area
    rho_safe = np.maximum(rho, VACUUM_RHO)
    cmax = float(sound_speed(rho.max(), phys, scheme))

    cfl = _advective_cfl(fluid, scheme, grid, dt) + dt * cmax * (1.0 / dx + 1.0 / dz)
    if cfl > CFL_ABORT:
        raise StabilityError(
            f"momentum CFL violated: advective+acoustic number {cfl:.3f} > "
            f"{CFL_ABORT} (max|u|={max(np.abs(u1).max(), np.abs(u3).max()):.3e}, "
            f"c_max={cmax:.3e}, dt={dt:.3e})"
        )

    # Donor-cell (u . grad) u, velocity form: bounded through the vacuum band.
    # Wall-normal one-sided differences use the ghost reflections (no-slip
    # floor, free-slip lid), consistent with the stress gradients.
    u1p, u3p = _padded_velocity(fluid, grid)

    def upwind_x(f, w):
        back = (f - np.roll(f, 1, axis=0)) / dx
        fwd = (np.roll(f, -1, axis=0) - f) / dx
        return np.where(w > 0, back, fwd)

    def upwind_z(fp, w):
        back = (fp[:, 2:-2] - fp[:, 1:-3]) / dz
        fwd = (fp[:, 3:-1] - fp[:, 2:-2]) / dz
        return np.where(w > 0, back, fwd)

    adv1 = u1 * upwind_x(u1, u1) + u3 * upwind_z(u1p, u3)
    adv3 = u1 * upwind_x(u3, u1) + u3 * upwind_z(u3p, u3)

    # Pressure gradient, central inside, one-sided at the walls.
    p = pressure_of(rho, phys, scheme)
    dp1 = (np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)) / (2 * dx)
    dp3 = np.zeros_like(p)
    dp3[:, 1:-1] = (p[:, 2:] - p[:, :-2]) / (2 * dz)
    dp3[:, 0] = (p[:, 1] - p[:, 0]) / dz
    dp3[:, -1] = (p[:, -1] - p[:, -2]) / dz
    du_p1 = -dt * dp1 / rho_safe
    du_p3 = -dt * dp3 / rho_safe

    fv1, fv3, visc_work, visc_clamp_cells = _masked_stress_force(
        fluid, mask, phys, grid, dt
    )
    visc_diss = -dt * visc_work

    u1_star = u1 + dt * (-adv1 + fv1 / rho_safe)
    u3_star = u3 + dt * (-adv3 + fv3 / rho_safe)

    # Escape-speed limiter: pressure release cannot accelerate a cell past
    # PRESSURE_SPEED_CAP times the maximum sound speed (the Bernoulli scale),
    # which stops the per-step ratchet of near-massless front cells where
    # grad(p)/rho is unbounded.  Inactive in the bulk.
    vmax = PRESSURE_SPEED_CAP * cmax
    before = np.hypot(u1_star, u3_star)
    after = np.hypot(u1_star + du_p1, u3_star + du_p3)
    allowed = np.maximum(before, vmax)
    over = after > allowed
    pressure_cap_cells = int(np.count_nonzero(over))
    if pressure_cap_cells:
        gap = np.maximum(after - before, 1e-300)
        scale = np.where(over, np.maximum(allowed - before, 0.0) / gap, 1.0)
        du_p1 = du_p1 * scale
        du_p3 = du_p3 * scale
    u1_star = u1_star + du_p1
    u3_star = u3_star + du_p3

    # Interface coupling penalty, pointwise implicit: relax toward (0, eta_t)
    # with the hat deposition weights of the graph line.
    eps = scheme.eps
    pen_coef = eps / (2.0 * scheme.dt_window)
    omega = _penalty_weights(beam.eta, grid)
    w = beam.eta_t[:, None]
    beta = dt * (eps / scheme.dt_window) * omega / rho_safe
    denom = 1.0 + beta
    u1_new = u1_star / denom
    u3_new = (u3_star + beta * w) / denom

    pen_v = dt * pen_coef * float(np.sum(omega * (u1_new**2 + u3_new**2))) * area
    pen_mismatch = (
        dt * pen_coef * float(np.sum(omega * (u1_new**2 + (u3_new - w) ** 2))) * area
    )
    pen_source = dt * pen_coef * float(np.sum(omega * w**2)) * area

    dry = rho < VACUUM_RHO
    u1_new[dry] = 0.0
    u3_new[dry] = 0.0
    u1_new[:, 0] = 0.0
    u3_new[:, 0] = 0.0

    if not (np.all(np.isfinite(u1_new)) and np.all(np.isfinite(u3_new))):
        raise StabilityError(
            "momentum step produced non-finite velocities "
            f"(dt={dt:.3e}, max|u| before step="
            f"{max(np.abs(u1).max(), np.abs(u3).max()):.3e})"
        )

    info = {
        "visc_diss": visc_diss,
        "pen_v": pen_v,
        "pen_mismatch": pen_mismatch,
        "pen_source": pen_source,
        "visc_clamp_cells": visc_clamp_cells,
        "pressure_cap_cells": pressure_cap_cells,
        "max_cfl": cfl,
    }
    return FluidState(rho.copy(), u1_new, u3_new), info


def fluid_energy(fluid, phys, scheme, grid):
    """E_fl = int 1/2 rho |u|^2 + rho^gamma/(gamma-1) + b/(beta-1) rho^beta
    over the full extended rectangle."""
    kinetic = 0.5 * np.sum(fluid.rho * (fluid.u1**2 + fluid.u3**2))
    internal = np.sum(fluid.rho**phys.gamma) / (phys.gamma - 1.0)
    if scheme.b_reg > 0:
        internal += scheme.b_reg / (scheme.beta_reg - 1.0) * np.sum(
            fluid.rho**scheme.beta_reg
        )
    return float(kinetic + internal) * grid.cell_area


def fluid_kinetic_internal(fluid, phys, scheme, grid):
    kinetic = 0.5 * float(np.sum(fluid.rho * (fluid.u1**2 + fluid.u3**2))) * grid.cell_area
    internal = float(np.sum(fluid.rho**phys.gamma)) / (phys.gamma - 1.0) * grid.cell_area
    if scheme.b_reg > 0:
        internal += (
            scheme.b_reg
            / (scheme.beta_reg - 1.0)
            * float(np.sum(fluid.rho**scheme.beta_reg))
            * grid.cell_area
        )
    return kinetic, internal


def step_fsp(fluid, motion, scheme, phys, grid, window_steps):
    """Advance the fluid over one window along the beam path.

    motion is the BeamMotion the structure window produced (a frozen
    BeamState is first lifted via BeamMotion.from_state); mask and penalty
    target track its rows in inner time.  Returns (FluidState,
    FspWindowReport, trace_path) where trace_path[k] is the vertical fluid
    trace on the graph after inner step k, the lagged coupling path for the
    next structure window.
    """
    if window_steps != scheme.window_steps:
        raise ValueError(
            f"window_steps {window_steps} inconsistent with "
            f"dt_window/dt_inner = {scheme.window_steps}"
        )
    if isinstance(motion, BeamState):
        motion = BeamMotion.from_state(motion, window_steps)
    motion.validate(grid)
    if motion.steps != window_steps:
        raise ValueError(
            f"beam motion has {motion.steps} rows, window has {window_steps} inner steps"
        )
    dt = scheme.dt_inner
    report = FspWindowReport(eps=scheme.eps, dt_window=scheme.dt_window, dt_inner=dt)
    report.e_start = fluid_energy(fluid, phys, scheme, grid)
    report.mass_start = float(np.sum(fluid.rho)) * grid.cell_area
    trace_path = np.empty((window_steps, grid.nx))

    state = fluid
    for k in range(window_steps):
        beam_row = BeamState(motion.eta[k], motion.eta_t[k])
        mask = build_mask(beam_row.eta, scheme.eps, grid)
        state, clipped = continuity_step(state, scheme, grid, dt)
        report.clipped_mass += clipped
        state, info = momentum_step(state, mask, beam_row, scheme, phys, grid, dt)
        report.visc_diss += info["visc_diss"]
        report.pen_v += info["pen_v"]
        report.pen_mismatch += info["pen_mismatch"]
        report.pen_source += info["pen_source"]
        report.visc_clamp_cells = max(report.visc_clamp_cells, info["visc_clamp_cells"])
        report.pressure_cap_cells = max(
            report.pressure_cap_cells, info["pressure_cap_cells"]
        )
        report.max_cfl = max(report.max_cfl, info["max_cfl"])
        tr1, tr3 = trace_velocity(state, beam_row, grid)
        trace_path[k] = tr3
        report.coupling_residual_int += (
            dt * float(np.sum(tr1**2 + (tr3 - beam_row.eta_t) ** 2)) * grid.dx
        )
        report.steps += 1

    report.e_end = fluid_energy(state, phys, scheme, grid)
    report.kinetic_end, report.internal_end = fluid_kinetic_internal(
        state, phys, scheme, grid
    )
    report.mass_end = float(np.sum(state.rho)) * grid.cell_area
    return state, report, trace_path


def check_fsp_energy(report, tol):
    """Window energy inequality for the fluid: end energy plus dissipation
    must not exceed start energy plus the beam-path penalty source, up to
    tol.  The outer-force work never enters: the fluid only sees the beam.
    Returns (passed, residual)."""
    lhs = report.e_end + report.visc_diss + report.pen_v + report.pen_mismatch
    rhs = report.e_start + report.pen_source
    residual = lhs - rhs
    return residual <= tol, residual
