"""Structure window: stepping, contact penalty and the energy ledger."""

import dataclasses

import numpy as np
import pytest

from pfsi.core import BeamState, GridSpec, PhysParams, SchemeParams
from pfsi.beam import (
    BeamForcing,
    beam_energy,
    check_ssp_energy,
    contact_penalty,
    step_ssp,
)

GRID = GridSpec(length_L=1.0, height_M=1.0, nx=64, nz=16)
PHYS = PhysParams(mu=1e-3, lam=0.0, gamma=3.0)


def _scheme(**kw):
    base = dict(eps=0.01, delta=0.01, dt_window=0.01, dt_inner=1e-4,
                kappa_contact=1e-4)
    base.update(kw)
    return SchemeParams(**base)


def _no_forcing():
    return BeamForcing(np.zeros(GRID.nx), np.zeros(GRID.nx))


def _run_window(beam, forcing, scheme):
    out, report, _motion = step_ssp(beam, forcing, PHYS, scheme, scheme.window_steps, GRID)
    return out, report


# ---------------------------------------------------------------------------
# contact penalty force law
# ---------------------------------------------------------------------------

def test_penalty_zero_above_floor():
    p = contact_penalty(np.array([0.02]), np.array([-3.0]), 0.01, 1e-3)
    assert p[0] == 0.0


def test_penalty_zero_when_rising():
    p = contact_penalty(np.array([0.005]), np.array([1.0]), 0.01, 1e-3)
    assert p[0] == 0.0


def test_penalty_value_when_descending():
    p = contact_penalty(np.array([0.005]), np.array([-2.0]), 0.01, 1e-3)
    assert p[0] == 2000.0


def test_penalty_rejects_bad_kappa():
    with pytest.raises(ValueError):
        contact_penalty(np.zeros(4), np.zeros(4), 0.01, 0.0)


# ---------------------------------------------------------------------------
# window stepping
# ---------------------------------------------------------------------------

def test_flat_resting_beam_is_a_fixed_point():
    beam = BeamState(np.full(GRID.nx, 0.5), np.zeros(GRID.nx))
    out, report = _run_window(beam, _no_forcing(), _scheme())
    assert np.array_equal(out.eta, beam.eta)
    assert np.array_equal(out.eta_t, beam.eta_t)
    ok, residual = check_ssp_energy(report, 1e-14)
    assert ok and residual == 0.0


def test_uniform_force_gives_parabolic_rise():
    # with near-zero eps and a spatially uniform force the stiffness terms
    # vanish and eta(t) = eta0 + c t^2 / 2 up to O(dt)
    c = 0.25
    scheme = _scheme(eps=1e-6)
    beam = BeamState(np.full(GRID.nx, 0.3), np.zeros(GRID.nx))
    forcing = BeamForcing(np.full(GRID.nx, c), np.zeros(GRID.nx))
    t = 0.0
    for _ in range(10):
        beam, _ = _run_window(beam, forcing, scheme)
        t += scheme.dt_window
    expected = 0.3 + 0.5 * c * t**2
    assert np.abs(beam.eta - expected).max() < 5 * c * t * scheme.dt_inner


def test_window_steps_must_match_scheme():
    beam = BeamState(np.full(GRID.nx, 0.5), np.zeros(GRID.nx))
    with pytest.raises(ValueError, match="window_steps"):
        step_ssp(beam, _no_forcing(), PHYS, _scheme(), 7, GRID)


def test_stiff_mode_decays_without_blowup():
    # mode-32 bending has symbol ~ (2/dx)^4 = 2.8e9: hopeless for an explicit
    # step, routine for the implicit solve
    x = GRID.x_centers()
    eta = 0.5 + 1e-3 * np.cos(2 * np.pi * 32 * x)
    beam = BeamState(eta, np.zeros(GRID.nx))
    out, report = _run_window(beam, _no_forcing(), _scheme())
    assert np.all(np.isfinite(out.eta))
    e0 = beam_energy(beam, GRID, 0.01)
    e1 = beam_energy(out, GRID, 0.01)
    assert e1 <= e0


# ---------------------------------------------------------------------------
# energy ledger
# ---------------------------------------------------------------------------

def test_free_oscillation_ledger_closes():
    x = GRID.x_centers()
    beam = BeamState(0.5 + 0.05 * np.cos(2 * np.pi * x), np.zeros(GRID.nx))
    scheme = _scheme()
    _, report = _run_window(beam, _no_forcing(), scheme)
    ok, residual = check_ssp_energy(report, 1e-12)
    # backward Euler only dissipates: residual is negative, and small
    assert ok
    assert -0.05 * report.e_start <= residual <= 1e-12


def test_ledger_entries_are_nonnegative():
    x = GRID.x_centers()
    beam = BeamState(0.5 + 0.05 * np.cos(2 * np.pi * x),
                     -0.2 * np.ones(GRID.nx))
    forcing = BeamForcing(np.full(GRID.nx, 0.1), 0.05 * np.ones(GRID.nx))
    _, report = _run_window(beam, forcing, _scheme())
    assert report.pen_eta >= 0.0
    assert report.pen_mismatch >= 0.0
    assert report.pen_source >= 0.0
    assert report.visco >= 0.0
    assert report.contact_dissipation >= 0.0
    assert report.contact_impulse >= 0.0


def test_tampered_ledger_fails_the_check():
    x = GRID.x_centers()
    beam = BeamState(0.5 + 0.05 * np.cos(2 * np.pi * x), np.zeros(GRID.nx))
    _, report = _run_window(beam, _no_forcing(), _scheme())
    bad = dataclasses.replace(report, e_end=report.e_end + 1.0)
    ok, residual = check_ssp_energy(bad, 1e-6)
    assert not ok and residual > 0.9


def test_near_conservation_at_tiny_eps():
    # with eps ~ 0 the only loss channels are the backward-Euler defects,
    # O(dt_inner) over a window
    x = GRID.x_centers()
    scheme = _scheme(eps=1e-10)
    beam = BeamState(0.5 + 0.02 * np.cos(2 * np.pi * x), np.zeros(GRID.nx))
    _, report = _run_window(beam, _no_forcing(), scheme)
    drop = report.e_start - report.e_end
    assert 0.0 <= drop <= 150.0 * scheme.dt_inner * report.e_start


def test_random_windows_close_the_ledger():
    rng = np.random.default_rng(42)
    x = GRID.x_centers()
    scheme = _scheme()
    for _ in range(8):
        modes = rng.normal(size=3) * [0.05, 0.02, 0.01]
        eta = 0.4 + sum(
            m * np.cos(2 * np.pi * (k + 1) * x + rng.uniform(0, 2 * np.pi))
            for k, m in enumerate(modes)
        )
        eta_t = rng.normal(scale=0.1, size=GRID.nx)
        forcing = BeamForcing(rng.normal(scale=0.2, size=GRID.nx),
                              rng.normal(scale=0.1, size=GRID.nx))
        beam = BeamState(eta, eta_t)
        out, report = _run_window(beam, forcing, scheme)
        ok, residual = check_ssp_energy(report, 1e-12)
        assert ok, f"ledger violated: residual={residual:.3e}"
        assert out.eta.min() >= report.undershoot_bound - 1e-12


# ---------------------------------------------------------------------------
# contact
# ---------------------------------------------------------------------------

def test_contact_decelerates_a_falling_beam():
    scheme = _scheme()
    beam = BeamState(np.full(GRID.nx, 0.005), np.full(GRID.nx, -1.0))
    out, report = _run_window(beam, _no_forcing(), scheme)
    assert report.max_penalty > 0.0
    assert report.contact_dissipation > 0.0
    assert out.eta.min() >= report.undershoot_bound - 1e-12
    # the penalty must have killed essentially all downward motion
    assert out.eta.min() > -scheme.kappa_contact


def test_undershoot_shrinks_with_kappa():
    undershoots = []
    for kappa in (1e-2, 1e-3, 1e-4):
        scheme = _scheme(kappa_contact=kappa)
        beam = BeamState(np.full(GRID.nx, 0.012), np.full(GRID.nx, -2.0))
        out, report = _run_window(beam, _no_forcing(), scheme)
        undershoots.append(max(scheme.delta - out.eta.min(), 0.0))
        assert out.eta.min() >= report.undershoot_bound - 1e-12
    assert undershoots[2] <= undershoots[1] <= undershoots[0]
    assert undershoots[2] <= 1e-3


def test_hard_impact_stays_above_penalty_scale_floor():
    # fast impact: the floor is resolved by the penalty, never crossed by
    # more than the kappa * impulse margin
    scheme = _scheme(kappa_contact=1e-5)
    beam = BeamState(np.full(GRID.nx, 0.03), np.full(GRID.nx, -5.0))
    out, report = _run_window(beam, _no_forcing(), scheme)
    assert out.eta.min() >= report.undershoot_bound - 1e-12
    assert out.eta.min() >= -1e-4
