"""Fluid window: mask, stress, transport steps and the energy ledger."""

import dataclasses

import numpy as np
import pytest

from pfsi.core import (
    BeamState,
    FluidState,
    GridSpec,
    PhysParams,
    SchemeParams,
    StabilityError,
    graph_cell_weights,
)
from pfsi.fluid import (
    VACUUM_RHO,
    build_mask,
    check_fsp_energy,
    continuity_step,
    fluid_energy,
    momentum_step,
    sound_speed,
    step_fsp,
    stress_tensor,
    velocity_gradient_tensor,
)

GRID = GridSpec(length_L=1.0, height_M=1.0, nx=64, nz=32)
PHYS = PhysParams(mu=2e-3, lam=0.0, gamma=3.0)


def _scheme(**kw):
    base = dict(eps=0.01, delta=0.01, dt_window=0.01, dt_inner=1e-4,
                kappa_contact=1e-4, a_diff=2e-3)
    base.update(kw)
    return SchemeParams(**base)


def _uniform_fluid(grid=GRID, rho=1.0):
    r = np.full((grid.nx, grid.nz), float(rho))
    return FluidState(r, np.zeros_like(r), np.zeros_like(r))


def _flat_beam(height, grid=GRID, w=0.0):
    return BeamState(np.full(grid.nx, height), np.full(grid.nx, w))


# ---------------------------------------------------------------------------
# viscosity mask
# ---------------------------------------------------------------------------

def test_mask_is_one_below_and_eps_above():
    eps = 0.05
    eta = np.full(GRID.nx, 0.5)
    mask = build_mask(eta, eps, GRID).validate(eps)
    z = GRID.z_centers()
    below = z < 0.5
    above = z > 0.5 + eps
    assert np.all(mask.chi[:, below] == 1.0)
    assert np.all(mask.chi[:, above] == eps)


def test_mask_ramp_is_linear():
    eps = 0.25
    eta = np.full(GRID.nx, 0.25)
    mask = build_mask(eta, eps, GRID)
    z = GRID.z_centers()
    j = np.searchsorted(z, 0.30)
    expected = 1.0 + (eps - 1.0) * (z[j] - 0.25) / eps
    assert mask.chi[0, j] == pytest.approx(expected)


def test_mask_validation_rejects_increase_in_z():
    eps = 0.05
    mask = build_mask(np.full(GRID.nx, 0.5), eps, GRID)
    mask.chi[0, -1] = 1.0  # bump above the ramp
    with pytest.raises(ValueError, match="non-increasing"):
        mask.validate(eps)


# ---------------------------------------------------------------------------
# stress tensor
# ---------------------------------------------------------------------------

def test_stress_pure_shear():
    c = 0.7
    grad = np.array([[0.0, c], [0.0, 0.0]])
    s = stress_tensor(grad, PHYS)
    assert s[0, 1] == pytest.approx(PHYS.mu * c)
    assert s[1, 0] == pytest.approx(PHYS.mu * c)
    assert s[0, 0] == 0.0 and s[1, 1] == 0.0
    assert np.sum(s * grad) == pytest.approx(PHYS.mu * c**2)


def test_stress_pure_dilation():
    c = 0.3
    grad = c * np.eye(2)
    s = stress_tensor(grad, PHYS)
    # mu(2c) - (2mu/3)(2c) = (2/3) mu c on the diagonal for lam = 0
    assert s[0, 0] == pytest.approx(2.0 * PHYS.mu * c / 3.0)
    assert s[1, 1] == pytest.approx(2.0 * PHYS.mu * c / 3.0)
    assert np.sum(s * grad) == pytest.approx(4.0 * PHYS.mu * c**2 / 3.0)


def test_stress_contraction_nonnegative_pointwise():
    rng = np.random.default_rng(19)
    grads = rng.normal(size=(500, 2, 2))
    s = stress_tensor(grads, PHYS)
    q = np.einsum("nab,nab->n", s, grads)
    assert np.all(q >= -1e-15)


def test_gradient_of_linear_shear_is_exact():
    f = _uniform_fluid()
    z = GRID.z_centers()
    f.u1[:] = 2.0 * z[None, :]
    f.u1[:, 0] = 0.0
    g = velocity_gradient_tensor(f, GRID)
    interior = g[:, 2:-2]
    assert np.abs(interior[..., 0, 1] - 2.0).max() < 1e-12
    assert np.abs(interior[..., 0, 0]).max() < 1e-12


# ---------------------------------------------------------------------------
# continuity step
# ---------------------------------------------------------------------------

def test_continuity_rest_fluid_unchanged():
    scheme = _scheme(a_diff=0.0)
    rng = np.random.default_rng(2)
    f = _uniform_fluid()
    f.rho[:] = 1.0 + 0.3 * rng.random(f.rho.shape)
    out, clipped = continuity_step(f, scheme, GRID, scheme.dt_inner)
    assert np.array_equal(out.rho, f.rho)
    assert clipped == 0.0


def test_continuity_uniform_state_with_horizontal_wind():
    scheme = _scheme(a_diff=0.0)
    f = _uniform_fluid(rho=0.8)
    f.u1[:, 1:] = 0.4
    out, clipped = continuity_step(f, scheme, GRID, scheme.dt_inner)
    assert np.abs(out.rho - 0.8).max() < 1e-15
    assert clipped == 0.0


def test_continuity_conserves_mass_exactly():
    scheme = _scheme()
    rng = np.random.default_rng(8)
    f = _uniform_fluid()
    f.rho[:] = np.abs(1.0 + 0.5 * rng.normal(size=f.rho.shape))
    f.u1[:, 1:] = 0.3 * rng.normal(size=(GRID.nx, GRID.nz - 1))
    f.u3[:, 1:] = 0.3 * rng.normal(size=(GRID.nx, GRID.nz - 1))
    mass0 = f.rho.sum() * GRID.cell_area
    out, clipped = continuity_step(f, scheme, GRID, scheme.dt_inner)
    mass1 = out.rho.sum() * GRID.cell_area
    assert abs(mass1 - clipped - mass0) <= 1e-12 * mass0
    assert np.all(out.rho >= 0.0)


def test_continuity_aborts_on_cfl_violation():
    scheme = _scheme()
    f = _uniform_fluid()
    f.u1[:, 1:] = 500.0
    with pytest.raises(StabilityError, match="CFL"):
        continuity_step(f, scheme, GRID, scheme.dt_inner)


def test_diffusion_spreads_mass_without_sign_change():
    scheme = _scheme(a_diff=5e-3)
    f = _uniform_fluid(rho=0.0)
    f.rho[30:34, 14:18] = 1.0
    out = f
    for _ in range(50):
        out, clipped = continuity_step(out, scheme, GRID, scheme.dt_inner)
        assert clipped == 0.0
    assert np.all(out.rho >= 0.0)
    assert out.rho.max() < 1.0
    assert abs(out.rho.sum() - f.rho.sum()) < 1e-12 * f.rho.sum()


# ---------------------------------------------------------------------------
# momentum step
# ---------------------------------------------------------------------------

def test_momentum_equilibrium_fixed_point():
    scheme = _scheme()
    f = _uniform_fluid(rho=0.9)
    beam = _flat_beam(0.5)
    mask = build_mask(beam.eta, scheme.eps, GRID)
    out, info = momentum_step(f, mask, beam, scheme, PHYS, GRID, scheme.dt_inner)
    assert np.all(out.u1 == 0.0) and np.all(out.u3 == 0.0)
    assert info["visc_diss"] == 0.0
    assert info["pen_v"] == 0.0


def test_momentum_recovers_central_pressure_gradient():
    # u=0 and a graph far above: the only force is -grad(rho^gamma), and the
    # discrete update matches the central difference exactly away from walls
    scheme = _scheme()
    f = _uniform_fluid()
    x = GRID.x_centers()
    f.rho[:] = (1.0 + 0.5 * np.sin(2 * np.pi * x))[:, None] ** 2 + 0.25
    beam = _flat_beam(0.95)
    mask = build_mask(beam.eta, scheme.eps, GRID)
    dt = scheme.dt_inner
    out, info = momentum_step(f, mask, beam, scheme, PHYS, GRID, dt)
    assert info["pressure_cap_cells"] == 0
    j = GRID.nz // 3
    p = f.rho[:, j] ** PHYS.gamma
    central = (np.roll(p, -1) - np.roll(p, 1)) / (2 * GRID.dx)
    got = f.rho[:, j] * out.u1[:, j] / dt
    assert np.abs(got + central).max() <= 1e-10 * np.abs(central).max()


def test_momentum_pressure_matches_analytic_second_order():
    errs = []
    for nx in (32, 64, 128):
        g = GridSpec(length_L=1.0, height_M=1.0, nx=nx, nz=16)
        scheme = _scheme()
        x = g.x_centers()
        rho = np.broadcast_to((1.2 + 0.2 * np.sin(2 * np.pi * x))[:, None],
                              (g.nx, g.nz)).copy()
        f = FluidState(rho, np.zeros_like(rho), np.zeros_like(rho))
        beam = _flat_beam(0.95, grid=g)
        mask = build_mask(beam.eta, scheme.eps, g)
        out, _ = momentum_step(f, mask, beam, scheme, PHYS, g, scheme.dt_inner)
        j = g.nz // 2
        got = rho[:, j] * out.u1[:, j] / scheme.dt_inner
        exact = -(
            PHYS.gamma
            * (1.2 + 0.2 * np.sin(2 * np.pi * x)) ** (PHYS.gamma - 1.0)
            * 0.2 * 2 * np.pi * np.cos(2 * np.pi * x)
        )
        errs.append(np.abs(got - exact).max())
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_momentum_penalty_pushes_with_the_beam():
    scheme = _scheme()
    f = _uniform_fluid()
    beam = _flat_beam(0.5, w=1.0)
    mask = build_mask(beam.eta, scheme.eps, GRID)
    out, info = momentum_step(f, mask, beam, scheme, PHYS, GRID, scheme.dt_inner)
    j = int(0.5 / GRID.dz - 0.5)
    assert np.all(out.u3[:, j] > 0.0)
    assert info["pen_source"] > 0.0
    far = np.ones(GRID.nz, dtype=bool)
    far[j - 1 : j + 2] = False
    assert np.abs(out.u3[:, far]).max() == 0.0


def test_momentum_aborts_on_nonsense_speeds():
    scheme = _scheme()
    f = _uniform_fluid()
    f.u3[:, 1:] = 400.0
    beam = _flat_beam(0.5)
    mask = build_mask(beam.eta, scheme.eps, GRID)
    with pytest.raises(StabilityError, match="CFL"):
        momentum_step(f, mask, beam, scheme, PHYS, GRID, scheme.dt_inner)


def test_dry_cells_stay_at_rest():
    scheme = _scheme()
    eta = 0.3 + 0.05 * np.cos(2 * np.pi * GRID.x_centers())
    rho = 1.0 * graph_cell_weights(eta, GRID)
    f = FluidState(rho, np.zeros_like(rho), np.zeros_like(rho))
    beam = BeamState(eta, np.zeros(GRID.nx))
    mask = build_mask(eta, scheme.eps, GRID)
    out, _ = momentum_step(f, mask, beam, scheme, PHYS, GRID, scheme.dt_inner)
    dry = rho < VACUUM_RHO
    assert np.abs(out.u1[dry]).max() == 0.0
    assert np.abs(out.u3[dry]).max() == 0.0
    assert np.all(np.isfinite(out.u3))


# ---------------------------------------------------------------------------
# fluid window and energy ledger
# ---------------------------------------------------------------------------

def test_window_equilibrium_is_exact():
    scheme = _scheme()
    f = _uniform_fluid(rho=0.8)
    beam = _flat_beam(0.5)
    out, report, _ = step_fsp(f, beam, scheme, PHYS, GRID, scheme.window_steps)
    assert np.array_equal(out.rho, f.rho)
    assert np.abs(out.u1).max() == 0.0
    ok, residual = check_fsp_energy(report, 1e-14)
    assert ok and residual == 0.0
    assert report.coupling_residual_int == 0.0
    assert report.mass_end == report.mass_start


def test_window_steps_must_match_scheme():
    scheme = _scheme()
    f = _uniform_fluid()
    with pytest.raises(ValueError, match="window_steps"):
        step_fsp(f, _flat_beam(0.5), scheme, PHYS, GRID, 3)


def _shear_decay_window(mu=5e-3, amp=0.05):
    """Uniform density + horizontal shear: divergence-free by construction,
    so viscous decay (plus the graph penalty) is the only active channel."""
    phys = PhysParams(mu=mu, lam=0.0, gamma=3.0)
    scheme = _scheme(a_diff=0.0)
    f = _uniform_fluid()
    z = GRID.z_centers()
    f.u1[:] = amp * np.sin(np.pi * z / GRID.height_M)[None, :]
    f.u1[:, 0] = 0.0
    beam = _flat_beam(0.9)
    out, report, _ = step_fsp(f, beam, scheme, phys, GRID, scheme.window_steps)
    return out, report


def test_shear_decay_ledger_closes_tightly():
    out, report = _shear_decay_window()
    assert report.visc_diss > 0.0
    assert np.abs(out.rho - 1.0).max() < 1e-12
    ok, residual = check_fsp_energy(report, 0.5 * report.visc_diss)
    assert ok
    assert abs(residual) < 0.05 * report.visc_diss


def test_tampered_ledger_fails_the_check():
    _, report = _shear_decay_window()
    tol = 0.5 * report.visc_diss
    # energy out of nowhere
    bad = dataclasses.replace(report, e_end=report.e_end + 4 * report.visc_diss)
    ok, _ = check_fsp_energy(bad, tol)
    assert not ok
    # understated initial energy: same violation from the other side
    bad = dataclasses.replace(report, e_start=report.e_start - 4 * report.visc_diss)
    ok, _ = check_fsp_energy(bad, tol)
    assert not ok


def test_dynamic_window_reports_sane_ledger():
    scheme = _scheme()
    eta = 0.35 + 0.1 * np.cos(2 * np.pi * GRID.x_centers())
    rho = 1.0 * graph_cell_weights(eta, GRID)
    f = FluidState(rho, np.zeros_like(rho), np.zeros_like(rho))
    beam = BeamState(eta, np.full(GRID.nx, 0.05))
    out, report, _ = step_fsp(f, beam, scheme, PHYS, GRID, scheme.window_steps)
    assert report.pen_v >= 0.0
    assert report.pen_mismatch >= 0.0
    assert report.pen_source >= 0.0
    assert report.visc_diss >= 0.0
    assert report.coupling_residual_int >= 0.0
    drift = report.mass_end - report.mass_start - report.clipped_mass
    assert abs(drift) <= 1e-10 * report.mass_start
    ok, residual = check_fsp_energy(report, 1e-12)
    assert ok, f"fluid ledger violated: residual={residual:.3e}"


def test_fluid_energy_uniform_state():
    scheme = _scheme()
    f = _uniform_fluid(rho=2.0)
    expected = 2.0**PHYS.gamma / (PHYS.gamma - 1.0)
    assert fluid_energy(f, PHYS, scheme, GRID) == pytest.approx(expected)


def test_sound_speed_vanishes_at_vacuum():
    scheme = _scheme()
    assert sound_speed(np.array(0.0), PHYS, scheme) == 0.0
    c = sound_speed(np.array(1.0), PHYS, scheme)
    assert c == pytest.approx(np.sqrt(3.0))
