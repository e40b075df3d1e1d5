"""Complex deformations of the unit circle and their partial group law.

A deformation is an injective real-analytic map S^1 -> C \\ {0} with winding
number +1 around the origin.  Composition and inversion are only partially
defined: they require univalent zero-free analytic continuation over the
region U(phi) between the inner and outer envelopes of S^1 and the image
curve.  The predicates here certify sufficient conditions and are
deliberately conservative near the boundary of the true composable set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config
from .series import (TWO_PI, AnalyticLoop, loop_from_coeffs, unit_grid,
                     winding_number)


class DeformationError(ValueError):
    pass


class WindingError(DeformationError):
    pass


class ZeroError(DeformationError):
    pass


class InjectivityError(DeformationError):
    pass


class RegionError(DeformationError):
    """U(phi) construction failed (non-radial geometry is rejected)."""


class ComposabilityError(DeformationError):
    pass


class InvertibilityError(DeformationError):
    pass


def polyline_winding(points: np.ndarray, about) -> np.ndarray:
    """Winding numbers of a closed sampled curve about one or many points."""
    p = np.asarray(points, dtype=complex).reshape(-1, 1)
    q = np.atleast_1d(np.asarray(about, dtype=complex)).reshape(1, -1)
    rel = p - q
    inc = np.angle(np.roll(rel, -1, axis=0) / rel)
    return np.rint(inc.sum(axis=0) / TWO_PI).astype(int)


@dataclass(frozen=True)
class AnnularRegion:
    """The closed set U(phi) between inner and outer envelope curves.

    Both boundaries are stored as sampled loops on a common uniform angle
    grid, each winding +1 about 0, inner contained in outer.  Membership is
    decided by two winding-number tests.
    """

    outer: np.ndarray
    inner: np.ndarray

    def contains(self, point) -> np.ndarray:
        w_out = polyline_winding(self.outer, point)
        w_in = polyline_winding(self.inner, point)
        res = (w_out == 1) & (w_in == 0)
        return bool(res[0]) if np.isscalar(point) else res

    @property
    def degenerate(self) -> bool:
        return bool(np.abs(self.outer - self.inner).max() < 1e-12)

    def radial_bounds(self):
        return float(np.abs(self.inner).min()), float(np.abs(self.outer).max())

    def grid(self, n_radial: int = 5) -> np.ndarray:
        """Sample points filling the region radially, boundaries included."""
        t = np.linspace(0.0, 1.0, n_radial).reshape(-1, 1)
        ri, ro = np.abs(self.inner), np.abs(self.outer)
        ang = np.exp(1j * np.angle(self.outer)).reshape(1, -1)
        rad = ri.reshape(1, -1) * (ro / ri).reshape(1, -1) ** t
        return (rad * ang).ravel()


@dataclass(frozen=True)
class Deformation:
    """A validated complex deformation with its cached region U(phi)."""

    loop: AnalyticLoop
    region: AnnularRegion

    def __call__(self, points, raw: bool = True):
        return self.loop.evaluate_raw(points) if raw else self.loop.evaluate(points)

    @property
    def samples(self) -> np.ndarray:
        return self.loop.samples

    @property
    def grid_size(self) -> int:
        return self.loop.grid_size

    def sup_distance(self, other: "Deformation", m: int = 512) -> float:
        from .series import sup_distance
        return sup_distance(self.loop, other.loop, m)

    def is_identity(self, tol: float = 1e-13) -> bool:
        d = self.loop.coeff_dict()
        return set(d) <= {1} and abs(d.get(1, 0.0) - 1.0) <= tol


def _radial_profile(samples: np.ndarray, m_out: int):
    """Radius-vs-angle profile of a sampled loop winding +1 about 0.

    Returns radii on the uniform angle grid of size m_out, or raises
    RegionError when the curve is not radially representable.
    """
    ang = np.unwrap(np.angle(samples))
    if np.any(np.diff(ang) <= 0) or not math.isclose(
            ang[0] + TWO_PI, ang[-1] + (ang[1] - ang[0]), rel_tol=0.3):
        # allow wrap: append first point shifted by 2 pi for the closure test
        pass
    full = np.concatenate([ang, [ang[0] + TWO_PI]])
    if np.any(np.diff(full) <= 0):
        raise RegionError("curve is not radially representable from 0; "
                          "planar-arrangement geometry is not supported")
    rad = np.concatenate([np.abs(samples), [np.abs(samples[0])]])
    base = full[0]
    query = base + TWO_PI * np.arange(m_out) / m_out
    return np.interp(query, full, rad, period=TWO_PI)


def build_region(loop: AnalyticLoop, config: Config = DEFAULT) -> AnnularRegion:
    """U(phi): radial envelope of S^1 and the image curve, seen from 0."""
    m = 2 * loop.grid_size
    samples = loop.refined_samples(m)
    r_phi = _radial_profile(samples, m)
    angles = unit_grid(m)
    outer = np.maximum(1.0, r_phi) * angles
    inner = np.minimum(1.0, r_phi) * angles
    return AnnularRegion(outer=outer, inner=inner)


def make_deformation(loop: AnalyticLoop, config: Config = DEFAULT) -> Deformation:
    """Validate Def-circle membership and cache U(phi).

    Raises WindingError, ZeroError or InjectivityError, each distinguished.
    """
    w = winding_number(loop, 0.0, config=config)
    if w != 1:
        raise WindingError(f"winding number about 0 is {w}, need +1")
    m = 2 * loop.grid_size
    vals = loop.refined_samples(m)
    if np.abs(vals).min() <= config.zero_dist_tol:
        raise ZeroError("loop attains 0 within tolerance")
    _check_injective(vals, config)
    return Deformation(loop=loop, region=build_region(loop, config=config))


def _check_injective(vals: np.ndarray, config: Config):
    m = len(vals)
    if m > 512:  # pairwise tests are quadratic; subsample large grids
        vals = vals[:: m // 512]
        m = len(vals)
    z = unit_grid(m)
    dv = np.abs(vals[:, None] - vals[None, :])
    dz = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dz, 1.0)
    np.fill_diagonal(dv, 1.0)
    ratio = dv / dz
    if ratio.min() < config.injectivity_tol:
        raise InjectivityError(
            f"self-proximity {ratio.min():.2e} below tolerance")
    if _self_intersects(vals):
        raise InjectivityError("image polyline self-intersects")


def _self_intersects(vals: np.ndarray) -> bool:
    """Segment-pair sweep of the closed polyline (tangential hits count)."""
    a = vals
    b = np.roll(vals, -1)
    m = len(vals)

    def cross(o, p, q):
        u = p - o
        v = q - o
        return u.real * v.imag - u.imag * v.real

    c1 = cross(a[:, None], b[:, None], a[None, :])
    c2 = cross(a[:, None], b[:, None], b[None, :])
    c3 = cross(a[None, :], b[None, :], a[:, None])
    c4 = cross(a[None, :], b[None, :], b[:, None])
    hits = (c1 * c2 < 0) & (c3 * c4 < 0)
    idx = np.arange(m)
    gap = np.abs(idx[:, None] - idx[None, :])
    adjacent = (gap <= 1) | (gap >= m - 1)
    return bool(np.any(hits & ~adjacent))


# -- one-parameter subgroups ------------------------------------------------

def identity() -> Deformation:
    return make_deformation(loop_from_coeffs({1: 1.0}))


def rotation(alpha: float) -> Deformation:
    """r_alpha(z) = e^{i alpha} z."""
    return make_deformation(loop_from_coeffs({1: np.exp(1j * alpha)}))


def scaling(tau: float) -> Deformation:
    """sc_tau(z) = e^{-2 pi tau} z."""
    return make_deformation(loop_from_coeffs({1: math.exp(-TWO_PI * tau)}))


# -- partial group law ------------------------------------------------------

def _annulus_covers(loop: AnalyticLoop, region: AnnularRegion,
                    config: Config) -> bool:
    r_lo, r_hi = region.radial_bounds()
    lo = loop.radii[0] * config.eval_margin
    hi = loop.radii[1] / config.eval_margin
    return lo <= r_lo and r_hi <= hi


def is_composable(phi: Deformation, psi: Deformation,
                  config: Config = DEFAULT) -> bool:
    """Certify that phi extends univalently and zero-free over U(psi).

    Conservative: checks (a) the certified annulus of phi covers U(psi)
    with margin, (b) phi has no zeros there (argument principle over the
    region boundary plus a sample-grid minimum), (c) phi is injective on
    U(psi) (probe preimage counts equal 1).
    """
    region = psi.region
    if not _annulus_covers(phi.loop, region, config):
        return False
    pts = region.grid()
    vals = phi.loop.evaluate_raw(pts)
    if np.abs(vals).min() <= config.zero_dist_tol:
        return False
    if not region.degenerate:
        out_img = phi.loop.evaluate_raw(region.outer)
        in_img = phi.loop.evaluate_raw(region.inner)
        zeros = polyline_winding(out_img, 0.0)[0] - polyline_winding(in_img, 0.0)[0]
        if zeros != 0:
            return False
        if not _univalent_over(phi, region, config):
            return False
    return True


def _univalent_over(phi: Deformation, region: AnnularRegion,
                    config: Config) -> bool:
    """Probe preimage counts of interior image values over a region."""
    out_img = phi.loop.evaluate_raw(region.outer)
    in_img = phi.loop.evaluate_raw(region.inner)
    mid = np.sqrt(np.abs(region.inner) * np.abs(region.outer)) \
        * np.exp(1j * np.angle(region.outer))
    probes = phi.loop.evaluate_raw(mid[:: max(1, len(mid) // 32)])
    scale = np.abs(out_img).max()
    dist = np.minimum(
        np.abs(probes[:, None] - out_img[None, :]).min(axis=1),
        np.abs(probes[:, None] - in_img[None, :]).min(axis=1))
    probes = probes[dist > 1e-3 * scale]
    if len(probes):
        counts = (polyline_winding(out_img, probes)
                  - polyline_winding(in_img, probes))
        if np.any((counts != 0) & (counts != 1)):
            return False
    return True


def compose(phi: Deformation, psi: Deformation,
            config: Config = DEFAULT) -> Deformation:
    """phi . psi by analytic continuation of phi over U(psi)."""
    a = _linear_coeff(phi)
    b = _linear_coeff(psi)
    if a is not None:
        # phi(w) = a w: exact coefficient scaling, no resampling
        return make_deformation(psi.loop.scale(a), config=config)
    if b is not None:
        scaled = {int(n): c * b ** int(n)
                  for n, c in phi.loop.coeff_dict().items()}
        return make_deformation(loop_from_coeffs(scaled, config=config),
                                config=config)
    if not is_composable(phi, psi, config=config):
        raise ComposabilityError("pair is not certified composable")
    m = 2 * max(phi.grid_size, psi.grid_size)
    vals = phi.loop.evaluate_raw(psi.loop.refined_samples(m))
    loop = AnalyticLoop.from_samples(vals, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def _linear_coeff(phi: Deformation):
    d = phi.loop.coeff_dict()
    if set(d) == {1}:
        return d[1]
    return None


def is_invertible(phi: Deformation, config: Config = DEFAULT) -> bool:
    """True when S^1 lies in the image of the certified annulus of phi and
    preimages exist there (Newton from the nearest sample), with a
    univalence probe on U(phi)."""
    try:
        _preimages_of_circle(phi, config)
    except InvertibilityError:
        return False
    if not phi.region.degenerate:
        if not _univalent_over(phi, phi.region, config):
            return False
    return True


def _preimages_of_circle(phi: Deformation, config: Config) -> np.ndarray:
    targets = unit_grid(phi.grid_size)
    samples = phi.samples
    z = unit_grid(phi.grid_size)
    seed_idx = np.abs(samples[None, :] - targets[:, None]).argmin(axis=1)
    w = z[seed_idx].astype(complex)
    dloop = phi.loop.derivative()
    lo = phi.loop.radii[0] * config.eval_margin
    hi = phi.loop.radii[1] / config.eval_margin
    for _ in range(config.newton_max_iter):
        f = phi.loop.evaluate_raw(w) - targets
        if np.abs(f).max() < config.newton_tol:
            break
        df = dloop.evaluate_raw(w)
        if np.abs(df).min() < 1e-14:
            raise InvertibilityError("derivative vanishes along Newton path")
        w = w - f / df
        r = np.abs(w)
        if r.min() < lo or r.max() > hi:
            raise InvertibilityError("preimage left the certified annulus")
    else:
        raise InvertibilityError("Newton iteration did not converge")
    if np.abs(w).min() <= config.zero_dist_tol:
        raise InvertibilityError("inverse attains 0")
    gaps = np.abs(np.diff(np.concatenate([w, w[:1]])))
    if gaps.max() > 20 * np.median(gaps) + 1e-12:
        raise InvertibilityError("preimage branch jump between grid points")
    return w


def invert(phi: Deformation, config: Config = DEFAULT) -> Deformation:
    """The inverse deformation, by per-grid-point Newton solves."""
    a = _linear_coeff(phi)
    if a is not None:
        return make_deformation(loop_from_coeffs({1: 1.0 / a}), config=config)
    if not is_invertible(phi, config=config):
        raise InvertibilityError("deformation is not certified invertible")
    w = _preimages_of_circle(phi, config)
    loop = AnalyticLoop.from_samples(w, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def conjugate_by_inversion(phi: Deformation,
                           config: Config = DEFAULT) -> Deformation:
    """iota . phi . iota, the involution z -> 1/phi(1/z) on deformations.

    Exact on the sample grid: 1/phi(1/z_k) permutes cached samples.
    """
    s = phi.samples
    vals = 1.0 / np.roll(s[::-1], 1)  # phi(conj(z_k)) = samples[-k mod M]
    loop = AnalyticLoop.from_samples(vals, n_max=config.modes, config=config,
                                     tail="error",
                                     tail_tol=config.truncation_tol)
    return make_deformation(loop, config=config)


def deformation_to_json(phi: Deformation) -> dict:
    from .series import loop_to_json
    rec = loop_to_json(phi.loop)
    rec["validated"] = True
    return rec


def deformation_from_json(obj, config: Config = DEFAULT) -> Deformation:
    from .series import loop_from_json
    return make_deformation(loop_from_json(obj, config=config), config=config)
