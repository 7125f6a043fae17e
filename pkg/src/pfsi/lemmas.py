"""Randomized numerical verification of the analytic toolbox inequalities.

Every inequality the estimates lean on (Korn-type dissipation control,
weighted traces, gradient-log interpolation, max-min control by curvature,
lower semicontinuity of the log functional) is exercised on synthetic fields:
band-limited Fourier profiles for the interface and mapped band-limited
velocities below its graph.  All derivatives are closed-form, so a failed
trial means the inequality margin is violated, not that a finite-difference
stencil was too coarse.

Constants the analysis leaves implicit are fixed empirically: maximize the
LHS/RHS ratio over a large seeded trial battery at fine resolution, multiply
by 1.5, freeze.  The frozen values below carry their calibration provenance.
Constants that are exactly 1 (the weighted trace pair) are asserted at 1.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BeamProfile",
    "VelocityField",
    "LemmaTrial",
    "check_korn",
    "check_weighted_trace",
    "check_grad_log",
    "check_max_min",
    "check_ln_semicontinuity",
    "korn_identity_gap",
    "sample_profile",
    "sample_velocity",
    "run_lemma_suite",
    "calibrate_constant",
]

# ---------------------------------------------------------------------------
# trial resolution and frozen constants
# ---------------------------------------------------------------------------

#: default tensor resolution for trial quadrature: nx midpoints across the
#: period, ns midpoints across the mapped layer coordinate s = z/eta in (0,1)
TRIAL_NX = 128
TRIAL_NS = 96

#: wavenumber ceiling for trial fields; quadrature at the default resolution
#: leaves >= 12 points per wavelength so quadrature error stays subordinate
#: to inequality margins
MAX_MODE = 8

# Frozen calibration artifacts.  Protocol: seeded maximization of LHS/RHS
# over 2000 trials of the same family the suite samples, at resolution
# 192x128, then multiplied by 1.5.  Re-calibration with a different seed must
# land within 20% (test_lemmas exercises this).  Values from seed 2025;
# cross-seed spread at 2000 trials was under 1% for the four constants.
# The measured grad-log maxima sit exactly at the degenerate-pinch limits
# (pi/2 for s=1, 3 for s=2) and the mu-scaled Korn ratio under its analytic
# ceiling 1, so the frozen values carry the intended 50% headroom.
KORN_CONSTANT_MU = 1.02          # measured 0.6745
GRAD_LOG_CONSTANTS = {1: 2.36, 2: 4.50}   # measured 1.5699, 2.9986
MAX_MIN_CONSTANT = 0.108         # measured 0.071645 (pure lowest-mode sine)
# Diagnostic ceilings for the L4/H1 ratios, normalized by the
# (1+|eta|_inf, ||eta''||_L2) envelope the embedding constants carry.  These
# are not calibrated by empirical maximization: the family's extremal
# configuration (a single lowest mode over a flat profile of height pi/2)
# is essentially never sampled, which makes a sampled max seed-unstable.
# The closed-form extremal ratio is about 0.55 for the domain norm and 0.63
# for the graph trace; the ceiling 1.0 states the clean invariant that the
# L4 norms never exceed the H1 norm times the envelope.
IMBED_RATIO_CEILING = 1.0
TRACE_RATIO_CEILING = 1.0


# ---------------------------------------------------------------------------
# synthetic fields with closed-form derivatives
# ---------------------------------------------------------------------------

class BeamProfile:
    """Positive band-limited periodic profile with analytic derivatives.

    eta(x) = base + sum_k a_k cos(2 pi k x / L) + b_k sin(2 pi k x / L).
    """

    def __init__(self, base, cos_amps, sin_amps, length):
        self.base = float(base)
        self.cos_amps = np.asarray(cos_amps, dtype=float)
        self.sin_amps = np.asarray(sin_amps, dtype=float)
        if self.cos_amps.shape != self.sin_amps.shape:
            raise ValueError("cos and sin amplitude arrays must align")
        self.length = float(length)
        if self.base - np.sum(np.abs(self.cos_amps)) - np.sum(np.abs(self.sin_amps)) <= 0:
            # not a hard guarantee of positivity violation, so check finely
            if self.min_value() <= 0.0:
                raise ValueError("profile must stay strictly positive")

    def evaluate(self, x, order=0):
        """Value of the order-th derivative at points x."""
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.base if order == 0 else 0.0)
        for k in range(1, self.cos_amps.size + 1):
            w = 2.0 * math.pi * k / self.length
            a = self.cos_amps[k - 1]
            b = self.sin_amps[k - 1]
            phase = w * x
            if order % 4 == 0:
                ca, sa = a, b
            elif order % 4 == 1:
                ca, sa = b, -a
            elif order % 4 == 2:
                ca, sa = -a, -b
            else:
                ca, sa = -b, a
            out += w ** order * (ca * np.cos(phase) + sa * np.sin(phase))
        return out

    def min_value(self, samples=4096):
        x = (np.arange(samples) + 0.5) * (self.length / samples)
        return float(np.min(self.evaluate(x)))

    def max_value(self, samples=4096):
        x = (np.arange(samples) + 0.5) * (self.length / samples)
        return float(np.max(self.evaluate(x)))

    def descriptor(self):
        return {
            "base": self.base,
            "cos": [round(float(a), 12) for a in self.cos_amps],
            "sin": [round(float(b), 12) for b in self.sin_amps],
        }


class VelocityField:
    """One velocity component below the graph, in mapped coordinates.

    u(x, z) = sum_m amp_m * X_m(x) * sigma_m(z / eta(x)) where X_m is a
    cosine or sine of wavenumber kx_m and sigma_m a half- or full-wave sine
    in the layer coordinate.  kind "clamped" uses sigma = sin(pi ks s),
    vanishing on floor and graph (the class whose tangential component the
    Korn identity needs); kind "floor_zero" uses sigma = sin((ks - 1/2) pi s),
    vanishing on the floor only, so the graph trace is free.
    """

    def __init__(self, modes, kind, length):
        # modes: sequence of (amp, kx, use_sin, ks)
        self.modes = [(float(a), int(kx), bool(us), int(ks)) for a, kx, us, ks in modes]
        if kind not in ("clamped", "floor_zero"):
            raise ValueError(f"unknown velocity kind {kind!r}")
        self.kind = kind
        self.length = float(length)

    def _sigma(self, ks, s, derivative=False):
        if self.kind == "clamped":
            w = math.pi * ks
        else:
            w = math.pi * (ks - 0.5)
        if derivative:
            return w * np.cos(w * s)
        return np.sin(w * s)

    def _xfactor(self, amp, kx, use_sin, x, derivative=False):
        w = 2.0 * math.pi * kx / self.length
        phase = w * x
        if not derivative:
            return amp * (np.sin(phase) if use_sin else np.cos(phase))
        if use_sin:
            return amp * w * np.cos(phase)
        return -amp * w * np.sin(phase)

    def tensor_values(self, x, s, eta, deta):
        """Value, d/dx and d/dz on the tensor grid (len(x), len(s)).

        x-derivative at fixed physical z picks up the chain-rule term through
        s = z / eta(x): d/dx|_z = d/dx|_s - (s eta'/eta) d/ds.
        """
        nx, ns = x.size, s.size
        u = np.zeros((nx, ns))
        ux = np.zeros((nx, ns))
        uz = np.zeros((nx, ns))
        s_row = s[None, :]
        chain = (s_row * (deta / eta)[:, None])
        inv_eta = (1.0 / eta)[:, None]
        for amp, kx, use_sin, ks in self.modes:
            X = self._xfactor(amp, kx, use_sin, x)[:, None]
            dX = self._xfactor(amp, kx, use_sin, x, derivative=True)[:, None]
            S = self._sigma(ks, s_row)
            dS = self._sigma(ks, s_row, derivative=True)
            u += X * S
            ux += dX * S - X * dS * chain
            uz += X * dS * inv_eta
        return u, ux, uz

    def trace_values(self, x):
        """Graph trace u(x, eta(x)); exact from sigma(1)."""
        out = np.zeros_like(np.asarray(x, dtype=float))
        for amp, kx, use_sin, ks in self.modes:
            sigma1 = 0.0 if self.kind == "clamped" else math.sin(math.pi * (ks - 0.5))
            if sigma1 != 0.0:
                out += self._xfactor(amp, kx, use_sin, x) * sigma1
        return out

    def descriptor(self):
        return {"kind": self.kind,
                "modes": [(round(a, 12), kx, int(us), ks) for a, kx, us, ks in self.modes]}


# ---------------------------------------------------------------------------
# quadrature on the mapped strip
# ---------------------------------------------------------------------------

def _trial_grid(length, nx, ns):
    x = (np.arange(nx) + 0.5) * (length / nx)
    s = (np.arange(ns) + 0.5) * (1.0 / ns)
    return x, s, length / nx, 1.0 / ns


def _layer_integral(values, eta, dx, ds):
    """integral over the region below the graph of a tensor-grid field."""
    return float(np.sum(values * eta[:, None]) * dx * ds)


@dataclass
class _FieldData:
    """Evaluated velocity pair on the trial grid."""

    x: np.ndarray
    s: np.ndarray
    dx: float
    ds: float
    eta: np.ndarray
    deta: np.ndarray
    u1: np.ndarray
    u1x: np.ndarray
    u1z: np.ndarray
    u3: np.ndarray
    u3x: np.ndarray
    u3z: np.ndarray


def _evaluate_pair(u_pair, eta_profile, nx, ns):
    u1_field, u3_field = u_pair
    x, s, dx, ds = _trial_grid(eta_profile.length, nx, ns)
    eta = eta_profile.evaluate(x)
    deta = eta_profile.evaluate(x, order=1)
    u1, u1x, u1z = u1_field.tensor_values(x, s, eta, deta)
    u3, u3x, u3z = u3_field.tensor_values(x, s, eta, deta)
    return _FieldData(x, s, dx, ds, eta, deta, u1, u1x, u1z, u3, u3x, u3z)


def _h1_and_dissipation(data, phys):
    """(||u||_H1^2, grad norm^2, int S(grad u):grad u, div norm^2)."""
    sq = data.u1 ** 2 + data.u3 ** 2
    grad_sq = data.u1x ** 2 + data.u1z ** 2 + data.u3x ** 2 + data.u3z ** 2
    div = data.u1x + data.u3z
    shear = (data.u1z + data.u3x) ** 2
    s_contract = (phys.mu * (2.0 * data.u1x ** 2 + 2.0 * data.u3z ** 2 + shear)
                  + (phys.lam - 2.0 * phys.mu / 3.0) * div ** 2)
    l2 = _layer_integral(sq, data.eta, data.dx, data.ds)
    h1 = l2 + _layer_integral(grad_sq, data.eta, data.dx, data.ds)
    grad = _layer_integral(grad_sq, data.eta, data.dx, data.ds)
    diss = _layer_integral(s_contract, data.eta, data.dx, data.ds)
    divn = _layer_integral(div ** 2, data.eta, data.dx, data.ds)
    return h1, grad, diss, divn


# ---------------------------------------------------------------------------
# trial record
# ---------------------------------------------------------------------------

@dataclass
class LemmaTrial:
    """One evaluated inequality: pass iff lhs <= constant * rhs + tol."""

    lemma_id: str
    descriptors: dict = field(repr=False)
    lhs: float
    rhs: float
    constant: float
    tol: float
    passed: bool

    @property
    def margin(self):
        return self.constant * self.rhs + self.tol - self.lhs

    def csv_row(self):
        return (self.lemma_id, json.dumps(self.descriptors, sort_keys=True),
                repr(self.lhs), repr(self.rhs), repr(self.constant),
                repr(self.margin), str(int(self.passed)))


def _finish(lemma_id, desc, lhs, rhs, constant, tol):
    return LemmaTrial(lemma_id=lemma_id, descriptors=desc, lhs=lhs, rhs=rhs,
                      constant=constant, tol=tol,
                      passed=bool(lhs <= constant * rhs + tol))


# ---------------------------------------------------------------------------
# the five checks
# ---------------------------------------------------------------------------

def check_korn(u_pair, eta_profile, phys, nx=TRIAL_NX, ns=TRIAL_NS):
    """Dissipation controls the full H1 norm below the graph.

    Homogeneous reading: ||u||_H1^2 <= C (1 + |eta|_inf)^2 int S(grad u):grad u
    with the frozen mu-scaled constant.  Requires the tangential component to
    vanish on the whole boundary and the vertical one on the floor, which is
    what sample_velocity produces.
    """
    data = _evaluate_pair(u_pair, eta_profile, nx, ns)
    h1, _, diss, _ = _h1_and_dissipation(data, phys)
    eta_max = eta_profile.max_value()
    constant = KORN_CONSTANT_MU / phys.mu
    rhs = (1.0 + eta_max) ** 2 * diss
    tol = (1.0 / ns) * (abs(h1) + abs(constant * rhs)) * 1e-3 + 1e-12
    desc = {"eta": eta_profile.descriptor(),
            "u1": u_pair[0].descriptor(), "u3": u_pair[1].descriptor()}
    return _finish("korn_h1", desc, h1, rhs, constant, tol)


def check_weighted_trace(u_pair, eta_profile, nx=TRIAL_NX, ns=TRIAL_NS):
    """Both weighted inequalities with constant exactly 1.

    Trace form: int |u(x, eta)|^2 / eta dx <= int |d_z u|^2.
    Interior form: int |u|^2 / eta^2 <= int |d_z u|^2.
    The trial passes only if both hold; the trace pair is reported as
    lhs/rhs and the interior pair rides along in the descriptors.
    """
    data = _evaluate_pair(u_pair, eta_profile, nx, ns)
    tr1 = u_pair[0].trace_values(data.x)
    tr3 = u_pair[1].trace_values(data.x)
    lhs_trace = float(np.sum((tr1 ** 2 + tr3 ** 2) / data.eta) * data.dx)
    dz_sq = _layer_integral(data.u1z ** 2 + data.u3z ** 2, data.eta,
                            data.dx, data.ds)
    sq = data.u1 ** 2 + data.u3 ** 2
    lhs_interior = _layer_integral(sq / (data.eta ** 2)[:, None], data.eta,
                                   data.dx, data.ds)
    tol = (1.0 / ns) * (lhs_trace + dz_sq) * 1e-2 + 1e-12
    desc = {"eta": eta_profile.descriptor(),
            "u1": u_pair[0].descriptor(), "u3": u_pair[1].descriptor(),
            "interior_lhs": lhs_interior, "interior_rhs": dz_sq}
    both = (lhs_trace <= dz_sq + tol) and (lhs_interior <= dz_sq + tol)
    trial = _finish("weighted_trace", desc, lhs_trace, dz_sq, 1.0, tol)
    trial.passed = bool(both)
    return trial


def check_grad_log(eta_profile, s, nx=TRIAL_NX):
    """Gradient-log interpolation: int |eta'|^(2s)/eta^s <= C(s) int |eta''|^s.

    The constant is calibrated at s in {1, 2}; other exponents have no frozen
    constant and are rejected.
    """
    s = int(s)
    if s not in GRAD_LOG_CONSTANTS:
        raise ValueError(f"no frozen constant for exponent s = {s}; have {sorted(GRAD_LOG_CONSTANTS)}")
    if eta_profile.min_value() <= 0.0:
        raise ValueError("profile must be strictly positive")
    x, _, dx, _ = _trial_grid(eta_profile.length, nx, 1)
    eta = eta_profile.evaluate(x)
    d1 = eta_profile.evaluate(x, order=1)
    d2 = eta_profile.evaluate(x, order=2)
    lhs = float(np.sum(np.abs(d1) ** (2 * s) / eta ** s) * dx)
    rhs = float(np.sum(np.abs(d2) ** s) * dx)
    constant = GRAD_LOG_CONSTANTS[s]
    tol = 1e-9 * (1.0 + lhs + constant * rhs)
    return _finish(f"grad_log_s{s}", {"eta": eta_profile.descriptor(), "s": s},
                   lhs, rhs, constant, tol)


def check_max_min(eta_profile, nx=TRIAL_NX):
    """Oscillation bound: max eta - min eta <= C ||eta''||_L2."""
    d2 = eta_profile.evaluate(
        (np.arange(nx) + 0.5) * (eta_profile.length / nx), order=2)
    dx = eta_profile.length / nx
    rhs = math.sqrt(float(np.sum(d2 ** 2) * dx))
    lhs = eta_profile.max_value() - eta_profile.min_value()
    tol = 1e-9 * (1.0 + lhs + MAX_MIN_CONSTANT * rhs)
    return _finish("max_min", {"eta": eta_profile.descriptor()},
                   lhs, rhs, MAX_MIN_CONSTANT, tol)


def check_ln_semicontinuity(eta_tail, eta_limit, phi, dx, rel_tol=1e-9):
    """Lower semicontinuity of the signed log functional.

    F(eta) = int min(ln eta, 0) phi dx.  For a tail of profiles converging
    uniformly down to the limit, the liminf inequality F(limit) <= lim F(n)
    is verified with the limit estimated by the smallest tail value.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0.0):
        raise ValueError("weight phi must be non-negative")
    eta_limit = np.asarray(eta_limit, dtype=float)

    def functional(eta):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta < 0.0):
            raise ValueError("profiles must be non-negative")
        safe = np.maximum(eta, 1e-300)
        return float(np.sum(np.minimum(np.log(safe), 0.0) * phi) * dx)

    tail_values = [functional(e) for e in eta_tail]
    if not tail_values:
        raise ValueError("empty tail sequence")
    limit_value = functional(eta_limit)
    scale = max(1.0, abs(limit_value), max(abs(v) for v in tail_values))
    return bool(limit_value <= min(tail_values) + rel_tol * scale)


# ---------------------------------------------------------------------------
# identity probe for the dissipation contraction
# ---------------------------------------------------------------------------

def korn_identity_gap(phys, g_amp=1.0, g_mode=2, height=0.7, length=1.0,
                      nx=TRIAL_NX, ns=TRIAL_NS):
    """Quadrature audit of int S(grad u):grad u for u = (0, z g(x)).

    Returns (identity_gap, quadrature_error): the first is the difference
    between the quadratures of S:grad u and of mu |grad u|^2 +
    (mu/3 + lambda) |div u|^2 (zero up to round-off, the two integrands agree
    pointwise for this field); the second is the gap to the closed form
    (h^3/3) ||g'||^2 mu + ... which shrinks at the midpoint-rule rate when ns
    is doubled.  g = g_amp cos(2 pi g_mode x / L), eta constant = height.
    """
    x, s, dx, ds = _trial_grid(length, nx, ns)
    w = 2.0 * math.pi * g_mode / length
    g = g_amp * np.cos(w * x)
    dg = -g_amp * w * np.sin(w * x)
    z = s[None, :] * height
    u3x = z * dg[:, None]
    u3z = np.broadcast_to(g[:, None], (nx, ns))
    div = u3z
    s_contract = (phys.mu * (2.0 * u3z ** 2 + u3x ** 2)
                  + (phys.lam - 2.0 * phys.mu / 3.0) * div ** 2)
    korn_form = (phys.mu * (u3x ** 2 + u3z ** 2)
                 + (phys.mu / 3.0 + phys.lam) * div ** 2)
    eta = np.full(nx, height)
    quad_s = _layer_integral(s_contract, eta, dx, ds)
    quad_korn = _layer_integral(korn_form, eta, dx, ds)
    norm_g = g_amp ** 2 * length / 2.0
    norm_dg = g_amp ** 2 * w ** 2 * length / 2.0
    closed = (phys.mu * (height ** 3 / 3.0) * norm_dg
              + (4.0 * phys.mu / 3.0 + phys.lam) * height * norm_g)
    return abs(quad_s - quad_korn), abs(quad_s - closed)


# ---------------------------------------------------------------------------
# samplers (shared by the suite and by calibration)
# ---------------------------------------------------------------------------

def sample_profile(rng, length=1.0, touchdown=False):
    """Random positive band-limited profile.

    touchdown=True builds a near-quadratic pinch: a raised-cosine valley with
    its zero placed off any midpoint sample, plus a small positive offset,
    the family the positive-a.e. extension of the gradient-log bound covers.
    """
    if touchdown:
        scale = float(rng.uniform(0.2, 1.0))
        k = int(rng.integers(1, 4))
        x0 = (int(rng.integers(0, 7)) + 0.37) / 7.0 * length
        offset = float(rng.uniform(1e-6, 1e-4))
        base = offset + scale / 2.0
        cos_amps = np.zeros(MAX_MODE)
        sin_amps = np.zeros(MAX_MODE)
        w = 2.0 * math.pi * k / length
        cos_amps[k - 1] = -scale / 2.0 * math.cos(w * x0)
        sin_amps[k - 1] = -scale / 2.0 * math.sin(w * x0)
        return BeamProfile(base, cos_amps, sin_amps, length)
    base = float(rng.uniform(0.3, 1.5))
    n_modes = int(rng.integers(1, MAX_MODE + 1))
    budget = base * float(rng.uniform(0.2, 0.9))
    weights = rng.dirichlet(np.ones(n_modes)) * budget
    ks = rng.choice(np.arange(1, MAX_MODE + 1), size=n_modes, replace=False)
    cos_amps = np.zeros(MAX_MODE)
    sin_amps = np.zeros(MAX_MODE)
    for k, amp in zip(ks, weights):
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        cos_amps[k - 1] = amp * math.cos(theta)
        sin_amps[k - 1] = amp * math.sin(theta)
    return BeamProfile(base, cos_amps, sin_amps, length)


def sample_velocity(rng, length=1.0):
    """Random velocity pair in the boundary classes the lemmas assume."""
    def component(kind):
        n_modes = int(rng.integers(1, MAX_MODE + 1))
        modes = []
        for _ in range(n_modes):
            amp = float(rng.normal(0.0, 1.0))
            kx = int(rng.integers(0, MAX_MODE + 1))
            use_sin = bool(rng.integers(0, 2)) and kx > 0
            ksx = int(rng.integers(1, MAX_MODE // 2 + 1))
            modes.append((amp, kx, use_sin, ksx))
        return VelocityField(modes, kind, length)

    return component("clamped"), component("floor_zero")


# ---------------------------------------------------------------------------
# suite driver and calibration
# ---------------------------------------------------------------------------

def _embedding_envelope(eta_profile, nx):
    """Height-and-curvature factor the embedding constants depend on.

    (1 + |eta|_inf)^(1/4) (1 + (1 + |eta|_inf)^(5/8) ||eta''||_L2): the shape
    the mapped-domain Sobolev chain produces at p = 4.  Dividing the measured
    L4/H1 ratios by it removes the height-tail dependence that makes the raw
    maxima seed-unstable.
    """
    x, _, dx, _ = _trial_grid(eta_profile.length, nx, 1)
    curv = math.sqrt(float(np.sum(eta_profile.evaluate(x, order=2) ** 2) * dx))
    one_plus = 1.0 + eta_profile.max_value()
    return one_plus ** 0.25 * (1.0 + one_plus ** 0.625 * curv)


def _ratio_trials(u_pair, eta_profile, nx, ns):
    """Diagnostic L4/H1 ratios (domain and graph trace) for one sample."""
    data = _evaluate_pair(u_pair, eta_profile, nx, ns)
    h1, _, _, _ = _h1_and_dissipation(data, _UNIT_PHYS)
    h1_norm = math.sqrt(h1)
    envelope = _embedding_envelope(eta_profile, nx)
    l4 = _layer_integral((data.u1 ** 2 + data.u3 ** 2) ** 2, data.eta,
                         data.dx, data.ds) ** 0.25
    tr1 = u_pair[0].trace_values(data.x)
    tr3 = u_pair[1].trace_values(data.x)
    tr_l4 = float(np.sum((tr1 ** 2 + tr3 ** 2) ** 2) * data.dx) ** 0.25
    desc = {"eta": eta_profile.descriptor(),
            "u1": u_pair[0].descriptor(), "u3": u_pair[1].descriptor()}
    rhs = h1_norm * envelope
    tol = 1e-9 * (1.0 + rhs)
    imbed = _finish("imbed_ratio", desc, l4, rhs, IMBED_RATIO_CEILING, tol)
    trace = _finish("trace_ratio", desc, tr_l4, rhs, TRACE_RATIO_CEILING, tol)
    return imbed, trace


class _UnitPhys:
    mu = 1.0
    lam = 0.0


_UNIT_PHYS = _UnitPhys()


def run_lemma_suite(phys, seed=42, trials=200, nx=TRIAL_NX, ns=TRIAL_NS,
                    length=1.0):
    """Full battery: every lemma on `trials` independent samples.

    Every fourth interface sample is a touchdown pinch so the suite covers
    the degenerate end of the positivity range.  Returns the trial records
    in emission order; io.write_lemma_report persists them.
    """
    rng = np.random.default_rng(seed)
    records = []
    for index in range(trials):
        touchdown = index % 4 == 3
        eta = sample_profile(rng, length=length, touchdown=touchdown)
        u_pair = sample_velocity(rng, length=length)
        records.append(check_korn(u_pair, eta, phys, nx=nx, ns=ns))
        records.append(check_weighted_trace(u_pair, eta, nx=nx, ns=ns))
        records.append(check_grad_log(eta, 1, nx=nx))
        records.append(check_grad_log(eta, 2, nx=nx))
        records.append(check_max_min(eta, nx=nx))
        imbed, trace = _ratio_trials(u_pair, eta, nx, ns)
        records.append(imbed)
        records.append(trace)

        x = (np.arange(nx) + 0.5) * (length / nx)
        eta_grid = eta.evaluate(x)
        phi = 1.0 + np.cos(2.0 * math.pi * (x / length) + float(rng.uniform(0, 2 * math.pi)))
        tail = [eta_grid + 1.0 / n for n in (4, 8, 16, 32, 64, 128)]
        ok = check_ln_semicontinuity(tail, eta_grid, phi, length / nx)
        f_tail = [float(np.sum(np.minimum(np.log(np.maximum(e, 1e-300)), 0.0) * phi) * (length / nx))
                  for e in (tail + [eta_grid])]
        records.append(LemmaTrial(
            lemma_id="ln_semicontinuity",
            descriptors={"eta": eta.descriptor(), "tail_n": [4, 8, 16, 32, 64, 128]},
            lhs=f_tail[-1], rhs=min(f_tail[:-1]), constant=1.0,
            tol=1e-9 * max(1.0, abs(f_tail[-1])), passed=ok))
    return records


_CALIBRATABLE = ("korn_h1", "grad_log_s1", "grad_log_s2", "max_min",
                 "imbed_ratio", "trace_ratio")


def calibrate_constant(lemma_id, seed, trials, nx=192, ns=128, length=1.0,
                       phys=_UNIT_PHYS):
    """Maximum LHS/RHS ratio over a fresh trial battery (before the 1.5x).

    For korn_h1 the returned ratio is mu-scaled (multiplied by mu and divided
    by the (1+|eta|_inf)^2 factor's share), matching KORN_CONSTANT_MU.
    """
    if lemma_id not in _CALIBRATABLE:
        raise ValueError(f"{lemma_id!r} has no calibrated constant")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for index in range(trials):
        touchdown = index % 4 == 3
        eta = sample_profile(rng, length=length, touchdown=touchdown)
        if lemma_id in ("grad_log_s1", "grad_log_s2"):
            s = 1 if lemma_id.endswith("1") else 2
            x, _, dx, _ = _trial_grid(length, nx, 1)
            vals = eta.evaluate(x)
            d1 = eta.evaluate(x, order=1)
            d2 = eta.evaluate(x, order=2)
            lhs = float(np.sum(np.abs(d1) ** (2 * s) / vals ** s) * dx)
            rhs = float(np.sum(np.abs(d2) ** s) * dx)
        elif lemma_id == "max_min":
            x, _, dx, _ = _trial_grid(length, nx, 1)
            d2 = eta.evaluate(x, order=2)
            rhs = math.sqrt(float(np.sum(d2 ** 2) * dx))
            lhs = eta.max_value() - eta.min_value()
        else:
            u_pair = sample_velocity(rng, length=length)
            data = _evaluate_pair(u_pair, eta, nx, ns)
            h1, _, diss, _ = _h1_and_dissipation(data, phys)
            if lemma_id == "korn_h1":
                lhs = phys.mu * h1
                rhs = (1.0 + eta.max_value()) ** 2 * diss
            else:
                h1_norm = math.sqrt(h1)
                if lemma_id == "imbed_ratio":
                    lhs = _layer_integral((data.u1 ** 2 + data.u3 ** 2) ** 2,
                                          data.eta, data.dx, data.ds) ** 0.25
                else:
                    tr1 = u_pair[0].trace_values(data.x)
                    tr3 = u_pair[1].trace_values(data.x)
                    lhs = float(np.sum((tr1 ** 2 + tr3 ** 2) ** 2) * data.dx) ** 0.25
                rhs = h1_norm * _embedding_envelope(eta, nx)
        if rhs > 0.0:
            worst = max(worst, lhs / rhs)
    return worst
