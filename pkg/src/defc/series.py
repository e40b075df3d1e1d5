"""Truncated Laurent series on neighborhoods of the unit circle.

A loop is stored by its coefficients c_n, n in [-N, N], together with a
cached sample vector on the M-th roots of unity (M >= 4N) and an estimated
annulus of analyticity (r_minus, r_plus).  Coefficients and samples are kept
consistent through the discrete Fourier transform; everything downstream
(composition, quadrature, conformal solves) works on these two views.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config

TWO_PI = 2.0 * math.pi


class DegreeBoundError(ValueError):
    """Requested degree exceeds the configured truncation."""


class TruncationError(ValueError):
    """Series content beyond the truncation degree is not negligible."""


class TruncationWarning(UserWarning):
    pass


class EvaluationDomainError(ValueError):
    """Analytic continuation is not certified at the requested point."""


def _next_pow2(n: int) -> int:
    return 1 << max(6, (n - 1).bit_length())


def unit_grid(m: int) -> np.ndarray:
    """The m-th roots of unity, e^{2 pi i k / m}."""
    return np.exp(2j * np.pi * np.arange(m) / m)


def _fit_side(degrees: np.ndarray, mags: np.ndarray, overall: float):
    """Least-squares slope of log|c_n| against |n| for one tail.

    Returns (radius_factor, decaying).  radius_factor is exp(-slope): the
    geometric estimate of how far the side continues; inf when the side looks
    polynomial (too few significant coefficients to fit).  A side whose whole
    content sits below 1e-9 of the loop scale and shows no decay is treated
    as sampling noise: it does not certify continuation, and the returned
    factor only bounds where the noise amplification stays below 1e-9.
    """
    if len(degrees) == 0:
        return math.inf, True
    top = mags.max()
    noise_floor = 1e-8 * overall

    def noise_radius():
        # largest growth factor keeping every junk mode below the floor
        ratios = (mags / noise_floor) ** (1.0 / np.abs(degrees))
        return 1.0 / float(ratios.max())

    # widen from the top decade until at least 3 points support the fit
    thresh = 0.1
    sel = mags >= top * thresh
    while sel.sum() < 3 and thresh > 1e-14:
        thresh *= 0.1
        sel = mags >= top * thresh
    if sel.sum() < 3:
        if top <= noise_floor:
            return noise_radius(), True
        return math.inf, True
    n = np.abs(degrees[sel]).astype(float)
    y = np.log(mags[sel])
    slope = np.polyfit(n, y, 1)[0]
    if slope >= -1e-9:
        if top <= noise_floor:
            return noise_radius(), True
        return 1.0, False  # non-decaying significant tail: side unknown
    return math.exp(-slope), True


@dataclass(frozen=True)
class AnalyticLoop:
    """Truncated Laurent series f(z) = sum c_n z^n near S^1.

    Immutable after construction; all methods are pure, so values are safe
    to share between threads.
    """

    offset: int            # degree of coeffs[0]
    coeffs: np.ndarray     # complex, dense over [offset, offset+len)
    samples: np.ndarray    # values at the len(samples)-th roots of unity
    radii: tuple           # (r_minus, r_plus), certified annulus estimate
    tails_decay: tuple = (True, True)

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_coeffs(coeffs, config: Config = DEFAULT) -> "AnalyticLoop":
        """Build a loop from a degree -> coefficient mapping."""
        if isinstance(coeffs, dict):
            items = [(int(n), complex(c)) for n, c in coeffs.items()]
        else:
            items = [(int(n), complex(c)) for n, c in coeffs]
        items = [(n, c) for n, c in items if c != 0]
        if not items:
            items = [(0, 0.0)]
        n_lo = min(n for n, _ in items)
        n_hi = max(n for n, _ in items)
        n_abs = max(abs(n_lo), abs(n_hi), 1)
        if n_abs > config.modes:
            raise DegreeBoundError(
                f"degree {n_abs} exceeds configured maximum {config.modes}")
        vec = np.zeros(n_hi - n_lo + 1, dtype=complex)
        for n, c in items:
            vec[n - n_lo] = c
        m = _next_pow2(config.samples_per_mode * n_abs)
        samples = _samples_from_coeffs(n_lo, vec, m)
        r_minus, r_plus, flags = _estimate_radii(n_lo, vec)
        return AnalyticLoop(n_lo, vec, samples, (r_minus, r_plus), flags)

    @staticmethod
    def from_samples(samples, n_max=None, config: Config = DEFAULT,
                     tail: str = "warn", tail_tol=None) -> "AnalyticLoop":
        """Expand grid samples into a loop truncated at degree n_max.

        tail: what to do when relative mass beyond n_max exceeds tail_tol,
        one of "error", "warn", "ignore".
        """
        s = np.asarray(samples, dtype=complex)
        m = len(s)
        if n_max is None:
            n_max = config.modes
        if tail_tol is None:
            tail_tol = config.truncation_tol
        c = np.fft.fft(s) / m
        degrees = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        keep = np.abs(degrees) <= min(n_max, m // 2 - 1)
        scale = np.abs(c).max()
        if scale > 0:
            tail_mass = np.abs(c[~keep]).max(initial=0.0) / scale
            if tail_mass > tail_tol:
                msg = (f"series not resolved at degree {n_max}: "
                       f"relative tail {tail_mass:.2e}")
                if tail == "error":
                    raise TruncationError(msg)
                if tail == "warn":
                    warnings.warn(msg, TruncationWarning, stacklevel=2)
        kept = {int(n): c[i] for i, n in enumerate(degrees) if keep[i]}
        # drop numerical dust so radii fits see the true support
        floor = scale * 1e-15
        kept = {n: v for n, v in kept.items() if abs(v) > floor}
        if not kept:
            kept = {0: 0.0}
        return AnalyticLoop.from_coeffs(kept, config=config)

    # -- views ------------------------------------------------------------

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.coeffs))

    @property
    def grid_size(self) -> int:
        return len(self.samples)

    def coeff(self, n: int) -> complex:
        i = n - self.offset
        if 0 <= i < len(self.coeffs):
            return complex(self.coeffs[i])
        return 0.0

    def coeff_dict(self) -> dict:
        return {int(n): complex(c) for n, c in zip(self.degrees, self.coeffs)
                if c != 0}

    def cache_key(self) -> bytes:
        return self.offset.to_bytes(4, "little", signed=True) + \
            self.coeffs.tobytes()

    def max_degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        if len(nz) == 0:
            return 0
        return int(max(abs(self.offset + nz[0]), abs(self.offset + nz[-1])))

    # -- evaluation -------------------------------------------------------

    def evaluate_raw(self, points) -> np.ndarray:
        """Laurent sum at arbitrary nonzero points, no domain checks."""
        z = np.asarray(points, dtype=complex)
        pos = self.degrees >= 0
        out = np.zeros_like(z)
        if pos.any():
            # ascending Horner in z for degrees 0..hi
            hi = self.degrees[pos][-1]
            dense = np.zeros(hi + 1, dtype=complex)
            dense[self.degrees[pos]] = self.coeffs[pos]
            acc = np.zeros_like(z)
            for c in dense[::-1]:
                acc = acc * z + c
            out += acc
        if (~pos).any():
            lo = self.degrees[~pos][0]
            dense = np.zeros(-lo, dtype=complex)  # degrees lo..-1
            dense[self.degrees[~pos] - lo] = self.coeffs[~pos]
            w = 1.0 / z
            acc = np.zeros_like(z)
            for c in dense:
                acc = acc * w + c
            out += acc * w  # trailing 1/z for degree -1
        return out

    def evaluate(self, points, config: Config = DEFAULT):
        """Evaluate inside the certified annulus (with safety margin)."""
        z = np.asarray(points, dtype=complex)
        r = np.abs(z)
        lo = self.radii[0] * config.eval_margin
        hi = self.radii[1] / config.eval_margin
        if np.any(r < lo) or np.any(r > hi):
            raise EvaluationDomainError(
                f"analytic continuation not certified at |z| in "
                f"[{r.min():.4g}, {r.max():.4g}] "
                f"(certified [{lo:.4g}, {hi:.4g}])")
        out = self.evaluate_raw(z)
        return complex(out) if np.isscalar(points) else out

    def tail_bound(self, radius: float) -> float:
        """Geometric truncation-error estimate of the sum at |z| = radius."""
        bound = 0.0
        mags = np.abs(self.coeffs)
        for sign, r_out in ((1, self.radii[1]), (-1, 1.0 / self.radii[0]
                                                 if self.radii[0] > 0 else 0)):
            side = self.degrees * sign > 0
            if not side.any() or r_out == 0:
                continue
            c_last = mags[side][np.abs(self.degrees[side]).argmax()]
            rho = (radius if sign > 0 else 1.0 / radius)
            q = rho / r_out if math.isfinite(r_out) else 0.0
            if 0 < q < 1:
                bound += c_last * q / (1 - q)
        return bound

    def refined_samples(self, m: int) -> np.ndarray:
        """Samples on the m-th roots of unity (m >= grid size), via the DFT."""
        return _samples_from_coeffs(self.offset, self.coeffs, m)

    # -- calculus ---------------------------------------------------------

    def _capacity(self, other=None) -> Config:
        n = self.max_degree() + 1
        if other is not None:
            n = max(n, other.max_degree() + 1)
        return DEFAULT if n <= DEFAULT.modes else DEFAULT.with_modes(n)

    def derivative(self) -> "AnalyticLoop":
        degs = self.degrees
        return AnalyticLoop.from_coeffs(
            {int(n - 1): n * c for n, c in zip(degs, self.coeffs) if n != 0},
            config=self._capacity())

    def antiderivative(self) -> "AnalyticLoop":
        """Term-wise antiderivative; the degree -1 mode must vanish."""
        if abs(self.coeff(-1)) > 0:
            raise ValueError("residue present: no single-valued antiderivative")
        return AnalyticLoop.from_coeffs(
            {int(n + 1): c / (n + 1) for n, c in zip(self.degrees, self.coeffs)
             if c != 0}, config=self._capacity())

    def __add__(self, other):
        d = self.coeff_dict()
        for n, c in other.coeff_dict().items():
            d[n] = d.get(n, 0.0) + c
        return AnalyticLoop.from_coeffs(d, config=self._capacity(other))

    def __sub__(self, other):
        d = self.coeff_dict()
        for n, c in other.coeff_dict().items():
            d[n] = d.get(n, 0.0) - c
        return AnalyticLoop.from_coeffs(d, config=self._capacity(other))

    def scale(self, a: complex) -> "AnalyticLoop":
        return AnalyticLoop.from_coeffs(
            {int(n): a * c for n, c in zip(self.degrees, self.coeffs)},
            config=self._capacity())


def _samples_from_coeffs(offset: int, coeffs: np.ndarray, m: int) -> np.ndarray:
    spec = np.zeros(m, dtype=complex)
    for i, c in enumerate(coeffs):
        spec[(offset + i) % m] += c
    return np.fft.ifft(spec) * m


def _estimate_radii(offset: int, coeffs: np.ndarray):
    degs = np.arange(offset, offset + len(coeffs))
    mags = np.abs(coeffs)
    overall = mags.max()
    sig = mags > (overall * 1e-15 if overall > 0 else 0)
    pos = sig & (degs > 0)
    neg = sig & (degs < 0)
    f_plus, ok_plus = _fit_side(degs[pos], mags[pos], overall)
    f_minus, ok_minus = _fit_side(degs[neg], mags[neg], overall)
    r_plus = f_plus if ok_plus else 1.0 + 1.0 / (4 * max(len(coeffs), 16))
    if not ok_plus:
        r_plus = max(r_plus, 1.0 + 1e-3)
    r_minus = 0.0 if math.isinf(f_minus) else (
        1.0 / f_minus if ok_minus else 1.0 - 1e-3)
    # an accepted loop is analytic on a neighborhood of S^1
    r_plus = max(r_plus, 1.0 + 1e-3)
    r_minus = min(r_minus, 1.0 - 1e-3)
    return r_minus, r_plus, (ok_minus, ok_plus)


# -- module-level operations ----------------------------------------------

def loop_from_coeffs(coeffs, config: Config = DEFAULT) -> AnalyticLoop:
    return AnalyticLoop.from_coeffs(coeffs, config=config)


def identity_loop() -> AnalyticLoop:
    return AnalyticLoop.from_coeffs({1: 1.0})


def inversion_loop() -> AnalyticLoop:
    """The restriction of z -> 1/z to the circle."""
    return AnalyticLoop.from_coeffs({-1: 1.0})


def evaluate(loop: AnalyticLoop, point, config: Config = DEFAULT):
    return loop.evaluate(point, config=config)


def derivative(loop: AnalyticLoop) -> AnalyticLoop:
    return loop.derivative()


def multiply(a: AnalyticLoop, b: AnalyticLoop, n_max=None,
             config: Config = DEFAULT) -> AnalyticLoop:
    """Pointwise product, dealiased by sampling at doubled resolution."""
    m = 2 * _next_pow2(max(a.grid_size, b.grid_size))
    prod = a.refined_samples(m) * b.refined_samples(m)
    return AnalyticLoop.from_samples(prod, n_max=n_max, config=config,
                                     tail="warn", tail_tol=config.product_warn_tol)


def winding_number(loop: AnalyticLoop, about: complex = 0.0,
                   config: Config = DEFAULT, refine: int = 2) -> int:
    """Argument-principle winding of the loop around a point.

    Trapezoid quadrature of loop'/(loop - about) dz / (2 pi i); the grid is
    refined (up to 8x the requested factor) until the residual from the
    nearest integer certifies resolution.
    """
    dloop = loop.derivative()
    residual = math.inf
    w = 0
    for factor in (refine, 2 * refine, 4 * refine, 8 * refine):
        m = factor * loop.grid_size
        vals = loop.refined_samples(m) - about
        if np.abs(vals).min() < config.zero_dist_tol:
            raise ValueError("loop passes through the winding base point")
        z = unit_grid(m)
        integrand = dloop.refined_samples(m) / vals * 1j * z
        total = integrand.sum() * (TWO_PI / m) / (2j * np.pi)
        w = round(total.real)
        residual = abs(total - w)
        if residual <= config.winding_residual_tol:
            return int(w)
    raise ValueError(f"winding under-resolved: residual {residual:.2e}")


def sup_distance(a: AnalyticLoop, b: AnalyticLoop, m: int = 512) -> float:
    """Sup norm of a - b on a common refined circle grid."""
    m = max(m, a.grid_size, b.grid_size)
    return float(np.abs(a.refined_samples(m) - b.refined_samples(m)).max())


# -- JSON wire format -------------------------------------------------------

def loop_to_json(loop: AnalyticLoop) -> dict:
    return {"coeffs": [[int(n), float(c.real), float(c.imag)]
                       for n, c in sorted(loop.coeff_dict().items())]}


def loop_from_json(obj, config: Config = DEFAULT) -> AnalyticLoop:
    """Parse {"coeffs": [[n, re, im], ...]} or a primitive shorthand."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "primitive" in obj:
        kind = obj["primitive"]
        if kind == "rot":
            return AnalyticLoop.from_coeffs(
                {1: complex(math.cos(obj["alpha"]), math.sin(obj["alpha"]))},
                config=config)
        if kind == "scale":
            return AnalyticLoop.from_coeffs(
                {1: math.exp(-TWO_PI * obj["tau"])}, config=config)
        raise ValueError(f"unknown primitive {kind!r}")
    coeffs = {int(n): complex(re, im) for n, re, im in obj["coeffs"]}
    return AnalyticLoop.from_coeffs(coeffs, config=config)
