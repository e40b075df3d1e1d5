"""Complex vector fields on the circle: generators, bracket, pullback, flows.

A field v = v(z) d/dz is stored through its coordinate function v(z) as a
Laurent series.  The generators are the monomial fields -z^{n+1} d/dz; the
theta coordinate (z = e^{i theta}) is exposed for the quadrature cocycles,
where v = v~(theta) d/dtheta with v~(theta) = -i e^{-i theta} v(e^{i theta}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config
from .deformation import Deformation, make_deformation
from .series import (AnalyticLoop, DegreeBoundError, _next_pow2,
                     loop_from_coeffs, unit_grid)


class BranchError(ValueError):
    """The closed-form flow's branch point is too close to the circle."""


class FlowDomainError(ValueError):
    """The numerical flow left the certified annulus of its field."""


@dataclass(frozen=True)
class VectorField:
    """v(z) d/dz with real-analytic coordinate function on S^1."""

    fn: AnalyticLoop

    @staticmethod
    def from_coeffs(coeffs, config: Config = DEFAULT) -> "VectorField":
        return VectorField(AnalyticLoop.from_coeffs(coeffs, config=config))

    def coeff_dict(self):
        return self.fn.coeff_dict()

    def theta_samples(self, m: int) -> np.ndarray:
        """Coordinate function of v in the theta coordinate, on a grid."""
        z = unit_grid(m)
        return -1j / z * self.fn.refined_samples(m)

    def evaluate(self, points):
        return self.fn.evaluate_raw(points)

    def scale(self, a: complex) -> "VectorField":
        return VectorField(self.fn.scale(a))

    def __add__(self, other):
        return VectorField(self.fn + other.fn)

    def __sub__(self, other):
        return VectorField(self.fn - other.fn)

    def is_zero(self, tol: float = 0.0) -> bool:
        return len(self.fn.coeff_dict()) == 0 or \
            np.abs(self.fn.coeffs).max() <= tol

    def single_mode(self):
        """(n, c) when v = c * l_n exactly, else None."""
        d = self.coeff_dict()
        if len(d) == 1:
            (k, c), = d.items()
            return k - 1, -c
        return None


def generator(n: int, config: Config = DEFAULT) -> VectorField:
    """The Witt generator l_n = -z^{n+1} d/dz."""
    if abs(n) > config.modes - 1:
        raise DegreeBoundError(f"|n| = {abs(n)} exceeds {config.modes - 1}")
    return VectorField.from_coeffs({n + 1: -1.0}, config=config)


def generator_i(n: int, config: Config = DEFAULT) -> VectorField:
    """i l_n."""
    return generator(n, config=config).scale(1j)


def tangential(n: int, config: Config = DEFAULT) -> VectorField:
    """(l_n - l_{-n}) / 2, tangent to S^1."""
    return (generator(n, config) - generator(-n, config)).scale(0.5)


def bracket(v: VectorField, w: VectorField,
            config: Config = DEFAULT) -> VectorField:
    """[v, w] = (v w' - w v') d/dz, exact in coefficients by convolution.

    The derivation-commutator sign; on generators this reproduces
    [l_n, l_m] = (n - m) l_{n+m}.
    """
    dv = {n - 1: n * c for n, c in v.coeff_dict().items() if n != 0}
    dw = {n - 1: n * c for n, c in w.coeff_dict().items() if n != 0}
    out: dict = {}
    for n1, c1 in v.coeff_dict().items():
        for n2, c2 in dw.items():
            out[n1 + n2] = out.get(n1 + n2, 0.0) + c1 * c2
    for n1, c1 in w.coeff_dict().items():
        for n2, c2 in dv.items():
            out[n1 + n2] = out.get(n1 + n2, 0.0) - c1 * c2
    out = {n: c for n, c in out.items() if c != 0}
    return VectorField.from_coeffs(out, config=config)


def pullback(f, v: VectorField, config: Config = DEFAULT) -> VectorField:
    """F* v = v(F(z)) / F'(z) d/dz for a biholomorphism F near S^1."""
    loop = f.loop if isinstance(f, Deformation) else f
    m = _next_pow2(2 * max(loop.grid_size, v.fn.grid_size))
    pts = loop.refined_samples(m)
    r = np.abs(pts)
    lo = v.fn.radii[0] * config.eval_margin
    hi = v.fn.radii[1] / config.eval_margin
    if r.min() < lo or r.max() > hi:
        raise FlowDomainError("field continuation not certified on F(S^1)")
    dvals = loop.derivative().refined_samples(m)
    vals = v.fn.evaluate_raw(pts) / dvals
    fn = AnalyticLoop.from_samples(vals, n_max=config.modes, config=config)
    return VectorField(fn)


# -- flows -------------------------------------------------------------------

def exact_flow(n: int, t: complex, config: Config = DEFAULT) -> Deformation:
    """Closed-form flow of l_n at time t.

    n = 0 gives z -> e^{-t} z; otherwise z (1 + n t z^n)^{-1/n} with the
    principal branch, continued from t = 0.  Imaginary t drives i l_n.
    """
    if n == 0:
        return make_deformation(loop_from_coeffs({1: np.exp(-t)},
                                                  config=config),
                                config=config)
    if t == 0:
        return make_deformation(loop_from_coeffs({1: 1.0}, config=config),
                                config=config)
    margin = abs(n * t) ** (-1.0 / n)
    if (n > 0 and margin < 1.10) or (n < 0 and margin > 1.0 / 1.10):
        raise BranchError(
            f"branch point at |z| = {margin:.4f} too close to S^1")
    m = max(256, _next_pow2(8 * abs(n)))
    z = unit_grid(m)
    w = n * t * z ** n
    vals = z * np.exp(-np.log1p(w) / n)
    loop = AnalyticLoop.from_samples(vals, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def flow_of(v: VectorField, t: float, config: Config = DEFAULT) -> Deformation:
    """Flow of a time-independent field: closed form for generators, RK4 else."""
    mode = v.single_mode()
    if mode is not None:
        n, c = mode
        return exact_flow(n, c * t, config=config)
    steps = max(64, int(abs(t) * 2000))
    return flow_ode(v, t, steps, config=config)


@dataclass(frozen=True)
class TimeField:
    """Piecewise-cubic-in-time interpolated family of vector fields."""

    knots: np.ndarray
    fields: tuple

    def __post_init__(self):
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("time knots must be strictly increasing")

    @staticmethod
    def constant(v: VectorField) -> "TimeField":
        return TimeField(np.array([0.0]), (v,))

    def _basis(self):
        degs = sorted({int(n) for f in self.fields
                       for n in f.coeff_dict()})
        mat = np.zeros((len(self.knots), len(degs)), dtype=complex)
        for i, f in enumerate(self.fields):
            for j, n in enumerate(degs):
                mat[i, j] = f.fn.coeff(n)
        return degs, mat

    def at(self, t: float) -> VectorField:
        if len(self.fields) == 1:
            return self.fields[0]
        from scipy.interpolate import PchipInterpolator
        degs, mat = self._basis()
        lo, hi = self.knots[0], self.knots[-1]
        tc = min(max(t, lo), hi)
        re = PchipInterpolator(self.knots, mat.real, axis=0)(tc)
        im = PchipInterpolator(self.knots, mat.imag, axis=0)(tc)
        return VectorField.from_coeffs(
            {n: complex(a, b) for n, a, b in zip(degs, re, im)})


def _as_timefield(v) -> TimeField:
    return v if isinstance(v, TimeField) else TimeField.constant(v)


def flow_ode(v, t_end: float, steps: int,
             config: Config = DEFAULT) -> Deformation:
    """Left-trivializing flow dPhi/dt = v(t, Phi), RK4 per grid point."""
    tf = _as_timefield(v)
    probe = tf.at(0.0)
    m = max(256, _next_pow2(8 * max(probe.fn.max_degree(), 1)))
    y = unit_grid(m)
    lo = probe.fn.radii[0] * config.eval_margin
    hi = probe.fn.radii[1] / config.eval_margin
    h = t_end / steps
    cached = len(tf.fields) == 1

    def rhs(t, state):
        f = probe if cached else tf.at(t)
        return f.fn.evaluate_raw(state)

    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        r = np.abs(y)
        if r.min() < lo or r.max() > hi:
            raise FlowDomainError(
                f"flow exited certified annulus at t = {t:.4g}")
    loop = AnalyticLoop.from_samples(y, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def _spectral_dz(samples: np.ndarray) -> np.ndarray:
    """d/dz of a circle-sampled analytic function, via Fourier modes."""
    m = len(samples)
    modes = np.fft.fft(samples) / m
    degs = np.fft.fftfreq(m, d=1.0 / m)
    z = unit_grid(m)
    return np.fft.ifft(modes * degs) * m / z


def flow_right(w, t_end: float, steps: int,
               config: Config = DEFAULT) -> Deformation:
    """Right-trivializing flow dPhi/dt = Phi'(z) w(t, z), method of lines.

    The spatial derivative is spectral; the product is dealiased by
    zero-padding to twice the grid before truncating back.
    """
    tf = _as_timefield(w)
    probe = tf.at(0.0)
    m = max(256, _next_pow2(8 * max(probe.fn.max_degree(), 1)))
    m2 = 2 * m
    y = unit_grid(m)
    h = t_end / steps
    cached = len(tf.fields) == 1
    w_samples_cache = probe.fn.refined_samples(m2) if cached else None

    def rhs(t, state):
        modes = np.fft.fft(state) / m
        padded = np.zeros(m2, dtype=complex)
        padded[: m // 2] = modes[: m // 2]
        padded[-m // 2:] = modes[-m // 2:]
        state2 = np.fft.ifft(padded) * m2
        dstate2 = _spectral_dz(state2)
        ws = w_samples_cache if cached else tf.at(t).fn.refined_samples(m2)
        prod = dstate2 * ws
        pm = np.fft.fft(prod) / m2
        out = np.concatenate([pm[: m // 2], pm[-m // 2:]])
        return np.fft.ifft(out) * m
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        # kill round-off seeds before the transport operator amplifies them
        modes = np.fft.fft(y) / m
        floor = np.abs(modes).max() * 1e-13
        modes[np.abs(modes) < floor] = 0.0
        y = np.fft.ifft(modes) * m
    loop = AnalyticLoop.from_samples(y, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def curve_to_field(gamma, t: float, h: float,
                   config: Config = DEFAULT):
    """Both trivializations of a curve of deformations at time t.

    gamma is a callable time -> Deformation.  Central differences with step
    h give gamma-dot; v = gamma-dot o gamma^{-1} (needs invertibility) and
    w = gamma-dot / gamma'.
    """
    from .deformation import invert
    g0 = gamma(t)
    gp = gamma(t + h)
    gm = gamma(t - h)
    m = max(g0.grid_size, gp.grid_size, gm.grid_size, 256)
    dot = (gp.loop.refined_samples(m) - gm.loop.refined_samples(m)) / (2 * h)
    dz = _spectral_dz(g0.loop.refined_samples(m))
    w_fn = AnalyticLoop.from_samples(dot / dz, n_max=config.modes,
                                     config=config)
    dot_loop = AnalyticLoop.from_samples(dot, n_max=config.modes,
                                         config=config, tail="ignore")
    ginv = invert(g0, config=config)
    v_vals = dot_loop.evaluate_raw(ginv.loop.refined_samples(m))
    v_fn = AnalyticLoop.from_samples(v_vals, n_max=config.modes,
                                     config=config)
    return VectorField(v_fn), VectorField(w_fn)


# -- JSON --------------------------------------------------------------------

def field_from_json(obj, config: Config = DEFAULT) -> VectorField:
    """Parse {"coeffs": ...}, {"gen": n}, or {"gen_i": n}."""
    import json as _json
    if isinstance(obj, str):
        obj = _json.loads(obj)
    if "gen" in obj:
        return generator(int(obj["gen"]), config=config)
    if "gen_i" in obj:
        return generator_i(int(obj["gen_i"]), config=config)
    from .series import loop_from_json
    return VectorField(loop_from_json(obj, config=config))


def field_to_json(v: VectorField) -> dict:
    from .series import loop_to_json
    return loop_to_json(v.fn)
