"""Field containers and discrete calculus shared by the solvers and diagnostics.

Geometry and array layout
-------------------------
The fluid lives on a fixed rectangle: periodic in x with circumference
``length_L``, rigid no-slip floor at z = 0, and an artificial free-slip lid at
z = ``height_M``.  The elastic beam is the graph z = eta(x); the region below
the graph is the physical fluid, the band above it is fictitious and carries
only a small residual viscosity.

All 2D fields are cell-centered arrays of shape (nx, nz), indexed [i, j] with
x_i = (i + 1/2) dx and z_j = (j + 1/2) dz.  Beam fields have shape (nx,) on the
same x nodes, so fluid columns and beam nodes line up one to one.
"""

from dataclasses import dataclass

import numpy as np


class StabilityError(RuntimeError):
    """Raised when a stepper detects a blow-up or a violated CFL bound."""


def _as_float_array(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        raise ValueError(f"{name} must be an array, got a scalar")
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh of the extended rectangle (periodic x) x (0, height_M)."""

    length_L: float
    height_M: float
    nx: int
    nz: int

    def __post_init__(self):
        if self.length_L <= 0 or self.height_M <= 0:
            raise ValueError("grid: length_L and height_M must be positive")
        if self.nx < 8 or self.nz < 8:
            raise ValueError("grid: nx and nz must both be at least 8")

    @property
    def dx(self):
        return self.length_L / self.nx

    @property
    def dz(self):
        return self.height_M / self.nz

    @property
    def cell_area(self):
        return self.dx * self.dz

    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    def z_centers(self):
        return (np.arange(self.nz) + 0.5) * self.dz


@dataclass
class FluidState:
    """Density and velocity sampled at cell centers; plain value object."""

    rho: np.ndarray
    u1: np.ndarray
    u3: np.ndarray

    def validate(self, grid):
        shape = (grid.nx, grid.nz)
        for name in ("rho", "u1", "u3"):
            field = getattr(self, name)
            if field.shape != shape:
                raise ValueError(f"fluid: {name} has shape {field.shape}, expected {shape}")
            if not np.all(np.isfinite(field)):
                raise ValueError(f"fluid: {name} contains non-finite entries")
        if np.any(self.rho < 0):
            raise ValueError("fluid: rho must be non-negative everywhere")
        if np.any(self.u1[:, 0] != 0.0) or np.any(self.u3[:, 0] != 0.0):
            raise ValueError("fluid: velocity must vanish on the bottom row (no-slip wall)")
        return self

    def copy(self):
        return FluidState(self.rho.copy(), self.u1.copy(), self.u3.copy())


@dataclass
class BeamState:
    """Beam displacement and velocity on the periodic x mesh."""

    eta: np.ndarray
    eta_t: np.ndarray

    def validate(self, grid, tol_penalty=1e-6):
        for name in ("eta", "eta_t"):
            field = getattr(self, name)
            if field.shape != (grid.nx,):
                raise ValueError(f"beam: {name} has shape {field.shape}, expected ({grid.nx},)")
            if not np.all(np.isfinite(field)):
                raise ValueError(f"beam: {name} contains non-finite entries")
        if np.any(self.eta < -tol_penalty):
            raise ValueError(
                f"beam: eta dips below -tol_penalty (min {self.eta.min():.3e}, "
                f"tol {tol_penalty:.3e})"
            )
        return self

    def copy(self):
        return BeamState(self.eta.copy(), self.eta_t.copy())


@dataclass
class BeamMotion:
    """Per-inner-step beam path over one window.

    Row k holds the graph position at the end of inner step k and the
    velocity that moved it there.  The fluid window consumes this path so
    that its mask and penalty target track the structure in inner time; the
    vertical fluid trace recorded against the same rows becomes the lagged
    coupling path of the next structure window.
    """

    eta: np.ndarray      # (steps, nx)
    eta_t: np.ndarray    # (steps, nx)

    @classmethod
    def from_state(cls, beam, steps):
        """Constant-in-time path of a frozen beam state (tests, equilibria)."""
        return cls(
            np.tile(beam.eta, (steps, 1)),
            np.tile(beam.eta_t, (steps, 1)),
        )

    def validate(self, grid):
        for name in ("eta", "eta_t"):
            field = getattr(self, name)
            if field.ndim != 2 or field.shape[1] != grid.nx:
                raise ValueError(
                    f"beam motion: {name} has shape {field.shape}, expected (steps, {grid.nx})"
                )
            if not np.all(np.isfinite(field)):
                raise ValueError(f"beam motion: {name} contains non-finite entries")
        if self.eta.shape != self.eta_t.shape:
            raise ValueError("beam motion: eta and eta_t shapes differ")
        return self

    @property
    def steps(self):
        return self.eta.shape[0]

    def end_state(self):
        return BeamState(self.eta[-1].copy(), self.eta_t[-1].copy())


@dataclass(frozen=True)
class PhysParams:
    """Physical constants: shear/bulk viscosity and the adiabatic exponent."""

    mu: float
    lam: float
    gamma: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("physics: mu must be positive")
        if self.lam < 0:
            raise ValueError("physics: lambda must be non-negative")
        if self.gamma <= 2:
            raise ValueError("gamma must exceed 2 (2D/1D regime)")


@dataclass(frozen=True)
class SchemeParams:
    """Approximation parameters of the splitting scheme.

    eps controls both the coupling-penalty strength (eps/dt_window) and the
    residual viscosity of the fictitious region; delta is the artificial
    contact floor; kappa_contact the contact-penalty stiffness; a_diff and
    b_reg/beta_reg the density-diffusion and pressure regularizations;
    eta_floor guards 1/eta and ln(eta) in diagnostics; tol_penalty bounds the
    admissible transient undershoot of eta below zero.
    """

    eps: float
    delta: float
    dt_window: float
    dt_inner: float
    kappa_contact: float
    a_diff: float = 0.0
    b_reg: float = 0.0
    beta_reg: float = 4.0
    eta_floor: float = 1e-12
    tol_penalty: float = 1e-6

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise ValueError("scheme: eps must lie in (0, 1/2)")
        if not 0 < self.delta < 0.5:
            raise ValueError("scheme: delta must lie in (0, 1/2)")
        if self.dt_inner <= 0:
            raise ValueError("scheme: dt_inner must be positive")
        steps = round(self.dt_window / self.dt_inner)
        if steps < 1 or abs(steps * self.dt_inner - self.dt_window) > 1e-9 * self.dt_window:
            raise ValueError("dt_window must be an integer multiple of dt_inner")
        if self.kappa_contact <= 0:
            raise ValueError("scheme: kappa_contact must be positive")
        if self.a_diff < 0:
            raise ValueError("scheme: a_diff must be non-negative")
        if self.b_reg < 0:
            raise ValueError("scheme: b_reg must be non-negative")
        if self.b_reg > 0 and self.beta_reg < 4:
            raise ValueError("scheme: beta_reg must be at least 4 when b_reg > 0")
        if self.eta_floor <= 0:
            raise ValueError("scheme: eta_floor must be positive")

    @property
    def window_steps(self):
        return round(self.dt_window / self.dt_inner)


def graph_cell_weights(eta, grid):
    """Fraction of each cell lying below the graph z = eta(x), shape (nx, nz).

    Cells cut by the graph get the fractional area of their part below it;
    negative eta values contribute zero weight.  Rejects graphs leaving the
    rectangle through the lid.
    """
    eta = _as_float_array(eta, "eta")
    if np.any(eta > grid.height_M):
        raise ValueError(
            f"eta exceeds the extended-domain height (max {eta.max():.6g} > "
            f"M = {grid.height_M:.6g}); graph is out of domain"
        )
    z_lower = np.arange(grid.nz) * grid.dz
    return np.clip((eta[:, None] - z_lower[None, :]) / grid.dz, 0.0, 1.0)


def integrate_field(field, grid, region="full", eta=None):
    """Midpoint-rule integral of a cell-centered field over the chosen region.

    region is one of "full", "below_graph", "above_graph"; the graph regions
    need eta and weight cut cells by the fractional area below/above z=eta(x).
    """
    field = _as_float_array(field, "field")
    if field.shape != (grid.nx, grid.nz):
        raise ValueError(f"field has shape {field.shape}, expected ({grid.nx}, {grid.nz})")
    if region == "full":
        return float(np.sum(field)) * grid.cell_area
    if region not in ("below_graph", "above_graph"):
        raise ValueError(f"unknown region {region!r}")
    if eta is None:
        raise ValueError(f"region {region!r} needs eta")
    weights = graph_cell_weights(eta, grid)
    if region == "above_graph":
        weights = 1.0 - weights
    return float(np.sum(field * weights)) * grid.cell_area


def beam_derivatives(field, grid, order):
    """Centered periodic finite-difference derivative of order 1, 2 or 4.

    The fourth derivative is the composition of the 3-point second-difference
    with itself, which keeps the discrete bilaplacian exactly self-adjoint
    against the second difference (needed by the beam energy identity).
    """
    values = getattr(field, "eta", field)
    values = _as_float_array(values, "beam field")
    dx = grid.dx
    if order == 1:
        return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * dx)
    if order == 2:
        return (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / dx**2
    if order == 4:
        d2 = (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / dx**2
        return (np.roll(d2, -1) - 2.0 * d2 + np.roll(d2, 1)) / dx**2
    raise ValueError(f"unsupported derivative order {order}; use 1, 2 or 4")


def trace_velocity(fluid, beam, grid):
    """Sample (u1, u3) on the graph z = eta(x); returns two (nx,) arrays.

    Linear interpolation in z between cell centers (beam nodes sit on the
    fluid columns, so no x interpolation is needed).  Below the first cell
    center the sample blends linearly toward the no-slip wall value 0, so
    eta = 0 returns exactly (0, 0).
    """
    eta = np.asarray(beam.eta, dtype=float)
    if np.any(eta > grid.height_M):
        raise ValueError(
            f"trace: eta exceeds the domain height (max {eta.max():.6g} > "
            f"M = {grid.height_M:.6g})"
        )
    dz = grid.dz
    # Height above the wall, clamped at 0: a transient penalty undershoot
    # samples the wall value.
    z = np.maximum(eta, 0.0)
    # Virtual sample points: wall at 0, centers at (j + 1/2) dz.  Index of the
    # sample interval: s = z/dz - 1/2 in "center units", clipped to the column.
    s = z / dz - 0.5
    nz = grid.nz
    cols = np.arange(grid.nx)

    tr = []
    for u in (fluid.u1, fluid.u3):
        below = s < 0.0
        jlo = np.clip(np.floor(s).astype(int), 0, nz - 2)
        theta = np.clip(s - jlo, 0.0, 1.0)
        interior = (1.0 - theta) * u[cols, jlo] + theta * u[cols, jlo + 1]
        # Wall blend on z in [0, dz/2): linear between 0 at the wall and the
        # first cell-center value.
        wall = u[cols, 0] * (z / (0.5 * dz))
        tr.append(np.where(below, wall, interior))
    return tr[0], tr[1]
