"""Genus-0 surfaces with parametrized boundaries, at desk scale.

A surface is kept in the dressed normal form

    annulus:  region between iota(phi(S^1)) (boundary 1, parametrized by
              iota . phi) and e^{-2 pi tau} psi(S^1) (boundary 2,
              parametrized by sc_tau . psi),
    disk:     region inside iota(phi(S^1)) (boundary parametrized by
              iota . phi),

and every operation re-canonicalizes: the region is uniformized onto the
round annulus (or the disk map is renormalized) and the residual rotation
gauge is fixed by aligning the dressing pair as close as possible to
(id, id).  Surfaces compare equal exactly when their canonical data agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config
from .conformal import (annulus_uniformize, decompose, riemann_map,
                        weld_uniformize)
from .deformation import (Deformation, compose, conjugate_by_inversion,
                          identity, invert, make_deformation,
                          polyline_winding)
from .series import TWO_PI, AnalyticLoop, inversion_loop, unit_grid
from .witt import VectorField, flow_of, pullback


class SurfaceError(ValueError):
    pass


class SewError(SurfaceError):
    pass


@dataclass(frozen=True)
class BSurface:
    """Genus-0 surface with 1 (disk) or 2 (annulus) dressed boundaries."""

    kind: str                    # "annulus" | "disk"
    tau: float | None
    phi: Deformation
    psi: Deformation | None

    @property
    def boundaries(self) -> int:
        return 2 if self.kind == "annulus" else 1

    def outer_samples(self, m: int = 256) -> np.ndarray:
        """Boundary-1 curve iota(phi(S^1)) traced by the parametrization."""
        return 1.0 / self.phi.loop.refined_samples(m)

    def inner_samples(self, m: int = 256) -> np.ndarray:
        if self.kind != "annulus":
            raise SurfaceError("disk has a single boundary")
        return math.exp(-TWO_PI * self.tau) * self.psi.loop.refined_samples(m)


def standard_annulus(tau: float, config: Config = DEFAULT) -> BSurface:
    """A_tau = (e^{-2 pi tau} <= |z| <= 1, iota, e^{-2 pi tau} id)."""
    if tau <= 0:
        raise SurfaceError("annulus modulus must be positive")
    return BSurface("annulus", float(tau), identity(), identity())


def cap_disk(config: Config = DEFAULT) -> BSurface:
    """The closed unit disk with boundary parametrized by the inversion."""
    return BSurface("disk", None, identity(), None)


def _validate_annulus(outer: np.ndarray, inner: np.ndarray):
    gap = np.abs(outer[:, None] - inner[None, :]).min()
    if gap < 1e-9:
        raise SurfaceError("boundary curves touch: degenerate region")
    # iota-parametrized outer curves wind -1: orient before the nesting test
    out_ccw = outer[::-1]
    if not np.all(polyline_winding(out_ccw, inner) == 1):
        raise SurfaceError("inner boundary is not nested inside the outer")
    if np.any(polyline_winding(inner, outer) != 0):
        raise SurfaceError("outer boundary crosses into the inner curve")


def _align_gauge(phi_samples: np.ndarray, psi_samples: np.ndarray):
    """Rotation gauge beta aligning the dressing pair toward (id, id)."""
    m = len(phi_samples)
    z = unit_grid(m)
    a = np.vdot(z, phi_samples)        # sum conj(z) phi
    b = np.vdot(z, psi_samples)
    beta = np.angle(a + np.conj(b))
    return beta


def normal_form(s: BSurface, config: Config = DEFAULT) -> BSurface:
    """Canonical representative: uniformized region, gauge-fixed dressings."""
    if s.kind == "disk":
        inner_map = conjugate_by_inversion(s.phi, config=config)
        if inner_map.is_identity(1e-12):
            return BSurface("disk", None, identity(), None)
        dec = decompose(inner_map, config=config)
        phi_new = conjugate_by_inversion(dec.h, config=config)
        return BSurface("disk", None, phi_new, None)
    m = 256
    outer = s.outer_samples(m)
    inner = s.inner_samples(m)
    _validate_annulus(outer, inner)
    am = annulus_uniformize(outer, inner, config=config)
    tau = am.tau
    f_out = am.map(outer)
    f_in = am.map(inner)
    phi_s = 1.0 / f_out
    psi_s = math.exp(TWO_PI * tau) * f_in
    beta = _align_gauge(phi_s, psi_s)
    phi_s = phi_s * np.exp(-1j * beta)
    psi_s = psi_s * np.exp(1j * beta)
    phi_new = make_deformation(AnalyticLoop.from_samples(
        phi_s, n_max=config.modes, config=config, tail="ignore"),
        config=config)
    psi_new = make_deformation(AnalyticLoop.from_samples(
        psi_s, n_max=config.modes, config=config, tail="ignore"),
        config=config)
    return BSurface("annulus", float(tau), phi_new, psi_new)


def normal_form_data(s: BSurface, max_degree: int = 8) -> np.ndarray:
    """Comparison vector: tau plus low-order dressing Fourier coefficients."""
    rows = [0.0 if s.tau is None else s.tau]
    for d in (s.phi, s.psi):
        if d is None:
            continue
        for n in range(-max_degree, max_degree + 1):
            c = d.loop.coeff(n) - (1.0 if n == 1 else 0.0)
            rows.extend([c.real, c.imag])
    return np.array(rows)


def surface_distance(a: BSurface, b: BSurface,
                     config: Config = DEFAULT) -> float:
    """Normal-form distance between isomorphism-class representatives."""
    if a.kind != b.kind:
        return math.inf
    da = normal_form_data(normal_form(a, config))
    db = normal_form_data(normal_form(b, config))
    return float(np.abs(da - db).max())


# -- boundary action ---------------------------------------------------------

def act_boundary(s: BSurface, j: int, d: Deformation,
                 config: Config = DEFAULT) -> BSurface:
    """Deform the j-th boundary: the dressed parametrization picks up d.

    The extension condition of the parametrization over U(d) is certified
    through the composability machinery; the deformed curves must keep a
    nondegenerate nested region.  The result is re-canonicalized.
    """
    if d.is_identity():
        return s
    if j == 1:
        phi_new = compose(s.phi, d, config=config)
        raw = BSurface(s.kind, s.tau, phi_new, s.psi)
    elif j == 2 and s.kind == "annulus":
        psi_new = compose(s.psi, d, config=config)
        raw = BSurface(s.kind, s.tau, s.phi, psi_new)
    else:
        raise SurfaceError(f"surface has no boundary index {j}")
    if raw.kind == "annulus":
        _validate_annulus(raw.outer_samples(), raw.inner_samples())
    return normal_form(raw, config=config)


# -- sewing ------------------------------------------------------------------

def sew(s1: BSurface, j: int, s2: BSurface, k: int,
        config: Config = DEFAULT) -> BSurface:
    """Glue boundary j of s1 to boundary k of s2 via xi_k . iota . zeta_j^{-1}.

    Supported configurations: annulus-annulus with j = 2 (stacking k = 1,
    seam-to-seam k = 2), and capping by a disk.  Disk-first calls delegate
    to the mirrored order (the result has a single boundary).
    """
    if s1.kind == "disk" and s2.kind == "annulus":
        return sew(s2, k, s1, j, config=config)
    if s1.kind == "disk" and s2.kind == "disk":
        raise SewError("sewing two disks closes the surface (b = 0 is out "
                       "of scope)")
    if s2.kind == "disk":
        if k != 1:
            raise SewError("a disk has a single boundary")
        return _cap_with_disk(s1, j, s2, config=config)
    if j != 2:
        raise SewError("annulus-annulus sewing is supported along boundary "
                       "2 of the first surface")
    if k == 1:
        return _sew_annuli_stack(s1, s2, config=config)
    if k == 2:
        return _sew_annuli_seam(s1, s2, config=config)
    raise SewError(f"unsupported boundary index {k}")


def _seam_pairs(s1: BSurface, s2: BSurface, k: int, m: int):
    """Identified sample pairs (a, b): a on d_2 s1, b on d_k s2."""
    z = unit_grid(m)
    a = math.exp(-TWO_PI * s1.tau) * s1.psi.loop.evaluate_raw(z)
    zc = 1.0 / z
    if k == 1:
        b = 1.0 / s2.phi.loop.evaluate_raw(zc)
    else:
        b = math.exp(-TWO_PI * s2.tau) * s2.psi.loop.evaluate_raw(zc)
    return a, b


def _sew_annuli_stack(s1: BSurface, s2: BSurface,
                      config: Config = DEFAULT) -> BSurface:
    m = 256
    outer1 = s1.outer_samples(m)
    seam1, seam2 = _seam_pairs(s1, s2, 1, m)
    far2 = s2.inner_samples(m)
    w = weld_uniformize(outer1, seam1, seam2, far2, degree2=+1,
                        config=config)
    tau = w.tau
    phi_s = 1.0 / w.map1(outer1)
    psi_s = math.exp(TWO_PI * tau) * w.map2(far2)
    return _surface_from_samples(tau, phi_s, psi_s, config)


def _sew_annuli_seam(s1: BSurface, s2: BSurface,
                     config: Config = DEFAULT) -> BSurface:
    m = 256
    outer1 = s1.outer_samples(m)
    seam1, seam2 = _seam_pairs(s1, s2, 2, m)
    far2 = s2.outer_samples(m)   # becomes the new inner boundary
    w = weld_uniformize(outer1, seam1, seam2, far2, degree2=-1,
                        config=config)
    tau = w.tau
    phi_s = 1.0 / w.map1(outer1)
    psi_s = math.exp(TWO_PI * tau) * w.map2(far2)
    return _surface_from_samples(tau, phi_s, psi_s, config)


def _surface_from_samples(tau, phi_s, psi_s, config) -> BSurface:
    beta = _align_gauge(phi_s, psi_s)
    phi_s = phi_s * np.exp(-1j * beta)
    psi_s = psi_s * np.exp(1j * beta)
    phi = make_deformation(AnalyticLoop.from_samples(
        phi_s, n_max=config.modes, config=config, tail="ignore"),
        config=config)
    psi = make_deformation(AnalyticLoop.from_samples(
        psi_s, n_max=config.modes, config=config, tail="ignore"),
        config=config)
    return BSurface("annulus", float(tau), phi, psi)


def _taylor_only(d: Deformation, tol: float = 1e-9) -> bool:
    neg = [abs(c) for n, c in d.loop.coeff_dict().items() if n < 0]
    scale = max(abs(c) for c in d.loop.coeff_dict().values())
    return not neg or max(neg) <= tol * scale


def _cap_with_disk(s1: BSurface, j: int, disk: BSurface,
                   config: Config = DEFAULT) -> BSurface:
    """Annulus capped by a disk: the seam mismatch is pushed onto the
    annulus side, where it must continue over the cap."""
    mismatch = conjugate_by_inversion(invert(disk.phi, config=config),
                                      config=config)
    if j == 2:
        psi_eff = compose(s1.psi, mismatch, config=config)
        if not _taylor_only(psi_eff):
            raise SewError("cap transition does not continue over the disk "
                           "(general conformal welding is out of scope)")
        return normal_form(BSurface("disk", None, s1.phi, None),
                           config=config)
    if j == 1:
        phi_eff = compose(s1.phi, mismatch, config=config)
        pos = [abs(c) for n, c in phi_eff.loop.coeff_dict().items() if n > 1]
        scale = max(abs(c) for c in phi_eff.loop.coeff_dict().values())
        if pos and max(pos) > 1e-9 * scale:
            raise SewError("cap transition does not continue over the "
                           "outer cap")
        return normal_form(BSurface("disk", None, s1.psi, None),
                           config=config)
    raise SewError(f"unsupported boundary index {j}")


# -- unraveling and the interior action ---------------------------------------

def unravel(s: BSurface, r: float, config: Config = DEFAULT):
    """Cut an annulus along the concentric circle |z| = r.

    Returns (outer piece, inner piece), both in normal form, whose
    seam-to-seam sewing reproduces the surface.
    """
    if s.kind != "annulus":
        raise SurfaceError("only annuli can be unraveled")
    outer = s.outer_samples()
    inner = s.inner_samples()
    if not (np.abs(inner).max() < r < np.abs(outer).min()):
        raise SurfaceError(
            f"cut radius {r:.4g} is not strictly between the boundaries")
    sigma = -math.log(r) / TWO_PI
    outer_piece = BSurface("annulus", sigma, s.phi, identity())
    inner_piece = BSurface("annulus", s.tau - sigma, s.psi, identity())
    return (normal_form(outer_piece, config=config),
            normal_form(inner_piece, config=config))


def act_interior(s: BSurface, r: float, d: Deformation,
                 config: Config = DEFAULT) -> BSurface:
    """Deform along the concentric interior loop theta(z) = r z.

    Unravels at |z| = r, acts on the piece where the seam is negatively
    oriented (the outer one) at its seam boundary, and sews back.
    """
    if d.is_identity():
        return s
    outer_piece, inner_piece = unravel(s, r, config=config)
    acted = act_boundary(outer_piece, 2, d, config=config)
    return sew(acted, 2, inner_piece, 2, config=config)


def act_interior_mirrored(s: BSurface, r: float, d: Deformation,
                          config: Config = DEFAULT) -> BSurface:
    """The same interior action computed from the other side of the cut,
    with iota . d^{-1} . iota acting on the inner piece's seam."""
    mirrored = conjugate_by_inversion(invert(d, config=config), config=config)
    outer_piece, inner_piece = unravel(s, r, config=config)
    acted = act_boundary(inner_piece, 2, mirrored, config=config)
    return sew(outer_piece, 2, acted, 2, config=config)


def modulus(s: BSurface, config: Config = DEFAULT) -> float:
    """Conformal modulus of an annulus surface (re-uniformized)."""
    if s.kind != "annulus":
        raise SurfaceError("modulus is defined for annuli only")
    if s.phi.is_identity() and s.psi.is_identity():
        return float(s.tau)
    am = annulus_uniformize(s.outer_samples(), s.inner_samples(),
                            config=config)
    return float(am.tau)


# -- Virasoro uniformization residuals ----------------------------------------

def _boundary_fields(tau: float, v: VectorField, config: Config):
    """Pullbacks of a holomorphic field through both parametrizations."""
    z1v = pullback(inversion_loop(), v, config=config)
    sc_loop = AnalyticLoop.from_coeffs({1: math.exp(-TWO_PI * tau)})
    z2v = pullback(sc_loop, v, config=config)
    return z1v, z2v


def _fd_tangent(data_fn, h: float) -> np.ndarray:
    """Richardson-extrapolated central difference of a data vector."""
    def central(step):
        return (data_fn(step) - data_fn(-step)) / (2 * step)
    d1 = central(h)
    d2 = central(h / 2)
    return (4 * d2 - d1) / 3


def virasoro_kernel_residual(tau: float, v: VectorField, h: float,
                             config: Config = DEFAULT) -> float:
    """Norm of the moduli-space tangent of the simultaneous boundary action.

    For v holomorphic on a neighborhood of the closed annulus, acting with
    the flows of the two pullbacks zeta_j^* v on both boundaries is a
    constant curve in moduli space; the finite-difference tangent of the
    normal-form data must vanish.
    """
    s = standard_annulus(tau, config=config)
    z1v, z2v = _boundary_fields(tau, v, config)

    def data(t):
        if t == 0:
            return normal_form_data(s)
        s1 = act_boundary(s, 1, flow_of(z1v, t, config=config),
                          config=config)
        s2 = act_boundary(s1, 2, flow_of(z2v, t, config=config),
                          config=config)
        return normal_form_data(s2)

    return float(np.abs(_fd_tangent(data, h)).max())


def _push_by_circle(v: VectorField, r: float) -> VectorField:
    """theta_* v for theta(z) = r z: coefficient a_k -> a_k r^{1-k}."""
    return VectorField.from_coeffs(
        {n: c * r ** (1 - n) for n, c in v.coeff_dict().items()})


def _split_inward_outward(v: VectorField):
    """Laurent split of the coordinate function at the cut circle.

    Modes z^k with k >= 0 extend inward (across the inner component of the
    cut plane), the rest outward; monomial fields are global on C*, so the
    split is unique only up to kernel terms.
    """
    cin = {n: c for n, c in v.coeff_dict().items() if n >= 0}
    cout = {n: c for n, c in v.coeff_dict().items() if n < 0}
    return VectorField.from_coeffs(cin), VectorField.from_coeffs(cout)


def interior_equals_boundary_residual(tau: float, r: float, v: VectorField,
                                      h: float,
                                      config: Config = DEFAULT) -> float:
    """Residual between an interior deformation tangent and its
    boundary-only representation.

    The field is pushed to the cut circle, split into inward/outward
    extending parts building the chart field u_0, and the identity
    d/dt [Sigma <| theta Phi_v] = - sum_j d/dt [Sigma <|_j Phi_{zeta_j^* u_0}]
    is checked on the normal-form data.
    """
    s = standard_annulus(tau, config=config)
    pushed = _push_by_circle(v, r)
    s_in, s_out = _split_inward_outward(pushed)
    u0_outer = s_out                      # value of u_0 on the outer side
    u0_inner = s_in.scale(-1.0)           # and on the inner side
    z1_field = pullback(inversion_loop(), u0_outer, config=config) \
        if not u0_outer.is_zero() else None
    sc_loop = AnalyticLoop.from_coeffs({1: math.exp(-TWO_PI * tau)})
    z2_field = pullback(sc_loop, u0_inner, config=config) \
        if not u0_inner.is_zero() else None

    def interior_data(t):
        if t == 0:
            return normal_form_data(s)
        return normal_form_data(
            act_interior(s, r, flow_of(v, t, config=config), config=config))

    def boundary_data(field, j):
        def data(t):
            if t == 0:
                return normal_form_data(s)
            return normal_form_data(
                act_boundary(s, j, flow_of(field, t, config=config),
                             config=config))
        return data

    total = _fd_tangent(interior_data, h)
    if z1_field is not None:
        total = total + _fd_tangent(boundary_data(z1_field, 1), h)
    if z2_field is not None:
        total = total + _fd_tangent(boundary_data(z2_field, 2), h)
    return float(np.abs(total).max())
