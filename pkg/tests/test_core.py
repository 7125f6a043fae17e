"""Grid, state containers, quadrature and difference operators."""

import numpy as np
import pytest

from pfsi.core import (
    BeamState,
    FluidState,
    GridSpec,
    PhysParams,
    SchemeParams,
    beam_derivatives,
    graph_cell_weights,
    integrate_field,
    trace_velocity,
)

GRID = GridSpec(length_L=1.0, height_M=1.0, nx=64, nz=32)


def _uniform_fluid(grid, rho=1.0):
    r = np.full((grid.nx, grid.nz), rho)
    return FluidState(r, np.zeros_like(r), np.zeros_like(r))


# ---------------------------------------------------------------------------
# grid and parameter validation
# ---------------------------------------------------------------------------

def test_grid_spacing_and_centers():
    g = GridSpec(length_L=2.0, height_M=0.5, nx=10, nz=8)
    assert g.dx == pytest.approx(0.2)
    assert g.dz == pytest.approx(0.0625)
    assert g.x_centers()[0] == pytest.approx(0.1)
    assert g.z_centers()[-1] == pytest.approx(0.5 - 0.03125)
    assert g.cell_area == pytest.approx(0.2 * 0.0625)


def test_grid_rejects_tiny_resolution():
    with pytest.raises(ValueError):
        GridSpec(length_L=1.0, height_M=1.0, nx=4, nz=32)


def test_gamma_must_exceed_two():
    with pytest.raises(ValueError, match="gamma must exceed 2"):
        PhysParams(mu=1e-3, lam=0.0, gamma=2.0)


def test_dt_window_multiple_of_inner():
    with pytest.raises(ValueError, match="integer multiple"):
        SchemeParams(eps=0.01, delta=0.01, dt_window=0.01, dt_inner=3e-4,
                     kappa_contact=1e-4)


def test_window_steps_count():
    s = SchemeParams(eps=0.01, delta=0.01, dt_window=0.01, dt_inner=1e-4,
                     kappa_contact=1e-4)
    assert s.window_steps == 100


def test_scheme_rejects_bad_eps():
    for eps in (0.0, 0.5, -0.1):
        with pytest.raises(ValueError):
            SchemeParams(eps=eps, delta=0.01, dt_window=0.01, dt_inner=1e-4,
                         kappa_contact=1e-4)


def test_fluid_state_validation():
    f = _uniform_fluid(GRID)
    f.validate(GRID)
    bad = f.copy()
    bad.rho[3, 5] = -1e-3
    with pytest.raises(ValueError, match="non-negative"):
        bad.validate(GRID)
    bad = f.copy()
    bad.u1[0, 0] = 0.1
    with pytest.raises(ValueError, match="bottom row"):
        bad.validate(GRID)
    bad = f.copy()
    bad.u3[2, 7] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        bad.validate(GRID)


def test_beam_state_validation():
    b = BeamState(np.full(GRID.nx, 0.5), np.zeros(GRID.nx))
    b.validate(GRID)
    bad = b.copy()
    bad.eta[4] = -1e-3
    with pytest.raises(ValueError):
        bad.validate(GRID)
    # a penalty-scale undershoot is tolerated
    ok = b.copy()
    ok.eta[4] = -1e-9
    ok.validate(GRID)


# ---------------------------------------------------------------------------
# quadrature with cut cells
# ---------------------------------------------------------------------------

def test_integrate_unit_field_full():
    ones = np.ones((GRID.nx, GRID.nz))
    assert integrate_field(ones, GRID) == pytest.approx(1.0, abs=1e-14)


def test_integrate_below_flat_graph_is_exact_on_face():
    # eta = 0.5 lies on a cell face for nz=32, so the cut weights are 0/1
    ones = np.ones((GRID.nx, GRID.nz))
    eta = np.full(GRID.nx, 0.5)
    below = integrate_field(ones, GRID, region="below_graph", eta=eta)
    assert below == pytest.approx(0.5, abs=1e-14)


def test_integrate_cut_cell_fraction():
    # eta in the middle of a cell row: fractional weight
    g = GRID
    eta_val = 0.5 + 0.25 * g.dz
    ones = np.ones((g.nx, g.nz))
    below = integrate_field(ones, g, region="below_graph", eta=np.full(g.nx, eta_val))
    assert below == pytest.approx(eta_val, abs=1e-14)


def test_below_plus_above_is_full():
    rng = np.random.default_rng(7)
    field = rng.normal(size=(GRID.nx, GRID.nz))
    eta = 0.4 + 0.2 * np.cos(2 * np.pi * GRID.x_centers())
    below = integrate_field(field, GRID, region="below_graph", eta=eta)
    above = integrate_field(field, GRID, region="above_graph", eta=eta)
    full = integrate_field(field, GRID)
    assert below + above == pytest.approx(full, abs=1e-13)


def test_integrate_linear_profile_second_order():
    # midpoint quadrature is exact on full cells; the single cut cell carries
    # the whole error, bounded by w(1-w)/2 * dz^2 <= dz^2/8 per column
    for nz in (16, 32, 64):
        g = GridSpec(length_L=1.0, height_M=1.0, nx=16, nz=nz)
        z = g.z_centers()
        field = np.broadcast_to(z, (g.nx, g.nz)).copy()
        eta = np.full(g.nx, 0.37)
        got = integrate_field(field, g, region="below_graph", eta=eta)
        assert abs(got - 0.5 * 0.37**2) <= 0.125 * g.dz**2 + 1e-14


def test_integrate_rejects_graph_above_lid():
    ones = np.ones((GRID.nx, GRID.nz))
    eta = np.full(GRID.nx, 1.5)
    with pytest.raises(ValueError):
        integrate_field(ones, GRID, region="below_graph", eta=eta)


def test_graph_cell_weights_column():
    g = GRID
    eta = np.full(g.nx, 0.5 + 0.25 * g.dz)
    w = graph_cell_weights(eta, g)
    assert np.all(w[:, :16] == 1.0)
    assert np.all(w[:, 17:] == 0.0)
    assert w[0, 16] == pytest.approx(0.25)


# ---------------------------------------------------------------------------
# periodic difference operators
# ---------------------------------------------------------------------------

def test_first_derivative_converges_second_order():
    errs = []
    for nx in (32, 64, 128):
        g = GridSpec(length_L=1.0, height_M=1.0, nx=nx, nz=8)
        x = g.x_centers()
        d = beam_derivatives(np.sin(2 * np.pi * x), g, 1)
        errs.append(np.abs(d - 2 * np.pi * np.cos(2 * np.pi * x)).max())
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_second_derivative_converges_second_order():
    errs = []
    for nx in (32, 64, 128):
        g = GridSpec(length_L=1.0, height_M=1.0, nx=nx, nz=8)
        x = g.x_centers()
        d = beam_derivatives(np.sin(2 * np.pi * x), g, 2)
        errs.append(np.abs(d + (2 * np.pi) ** 2 * np.sin(2 * np.pi * x)).max())
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_fourth_derivative_is_square_of_second():
    rng = np.random.default_rng(3)
    field = rng.normal(size=GRID.nx)
    once = beam_derivatives(beam_derivatives(field, GRID, 2), GRID, 2)
    twice = beam_derivatives(field, GRID, 4)
    assert np.array_equal(once, twice)


def test_derivatives_accept_beam_state():
    x = GRID.x_centers()
    beam = BeamState(0.4 + 0.1 * np.sin(2 * np.pi * x), np.zeros(GRID.nx))
    d = beam_derivatives(beam, GRID, 1)
    assert d.shape == (GRID.nx,)


def test_second_difference_is_self_adjoint():
    # integer-valued fields keep the float arithmetic exact
    rng = np.random.default_rng(11)
    a = rng.integers(-8, 8, size=GRID.nx).astype(float)
    b = rng.integers(-8, 8, size=GRID.nx).astype(float)
    lhs = np.sum(a * beam_derivatives(b, GRID, 2)) * GRID.dx**3
    rhs = np.sum(b * beam_derivatives(a, GRID, 2)) * GRID.dx**3
    assert lhs == rhs


def test_fourth_derivative_integrates_to_zero():
    rng = np.random.default_rng(5)
    field = rng.normal(size=GRID.nx)
    total = np.sum(beam_derivatives(field, GRID, 4)) * GRID.dx
    assert abs(total) <= 1e-9 * np.abs(field).max() / GRID.dx**3


# ---------------------------------------------------------------------------
# interface trace
# ---------------------------------------------------------------------------

def test_trace_of_uniform_horizontal_flow():
    f = _uniform_fluid(GRID)
    f.u1[:, 1:] = 0.7  # keep the no-slip row
    beam = BeamState(np.full(GRID.nx, 0.5), np.zeros(GRID.nx))
    tr1, tr3 = trace_velocity(f, beam, GRID)
    assert tr1 == pytest.approx(np.full(GRID.nx, 0.7))
    assert tr3 == pytest.approx(np.zeros(GRID.nx), abs=1e-14)


def test_trace_interpolates_linear_profile_exactly():
    g = GRID
    f = _uniform_fluid(g)
    z = g.z_centers()
    f.u3[:] = 2.0 * z[None, :]
    f.u3[:, 0] = 0.0  # no-slip row (profile value there is 2*dz/2, off by design)
    eta = np.full(g.nx, 0.43)
    tr1, tr3 = trace_velocity(f, BeamState(eta, np.zeros(g.nx)), g)
    assert tr3 == pytest.approx(np.full(g.nx, 2.0 * 0.43), abs=1e-12)


def test_trace_blends_to_zero_at_the_floor():
    f = _uniform_fluid(GRID)
    f.u3[:, 1:] = 1.0
    f.u3[:, 0] = 0.5
    eta = np.zeros(GRID.nx)
    _, tr3 = trace_velocity(f, BeamState(eta, np.zeros(GRID.nx)), GRID)
    assert np.all(tr3 == 0.0)


def test_trace_rejects_graph_above_lid():
    f = _uniform_fluid(GRID)
    beam = BeamState(np.full(GRID.nx, 1.2), np.zeros(GRID.nx))
    with pytest.raises(ValueError):
        trace_velocity(f, beam, GRID)
