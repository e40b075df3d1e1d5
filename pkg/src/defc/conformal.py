"""Numerical conformal mapping for deformations of the circle.

Three solvers live here:

* ``riemann_map``: the normalized disk map onto the region bounded by an
  analytic loop, found as a boundary correspondence by Gauss-Newton on the
  reparametrization angle (the analyticity of the boundary values is the
  residual, measured through their negative Fourier modes).
* ``annulus_uniformize``: the round-annulus map of a doubly connected region
  in the log-linear form F(z) = z exp(L(z)): one real least-squares solve.
* the decomposition phi = q . h with conformal radius, rotation number, the
  combined invariant RCR, and the group 2-cocycle built from its logarithm
  with explicit lift bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Config
from .deformation import Deformation, compose, make_deformation
from .series import TWO_PI, AnalyticLoop, unit_grid


class ConformalError(RuntimeError):
    pass


class RiemannMapError(ConformalError):
    """The boundary-correspondence iteration did not converge."""

    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = history or []


class UniformizeError(ConformalError):
    pass


# -- disk Riemann map --------------------------------------------------------

@dataclass(frozen=True)
class DiskMap:
    """Power series of the normalized Riemann map q on the closed disk.

    q(0) = 0 and q'(0) > 0; boundary values trace the target loop up to the
    solver residual.
    """

    map: AnalyticLoop
    deriv_at_zero: float
    correspondence: np.ndarray   # u with q(e^{i theta}) = gamma(e^{i u(theta)})
    residual: float

    def boundary_values(self, m: int) -> np.ndarray:
        return self.map.refined_samples(m)


def riemann_map(boundary: AnalyticLoop, config: Config = DEFAULT,
                grid: int | None = None) -> DiskMap:
    """Solve the boundary-correspondence problem for an analytic Jordan loop.

    Finds u(theta) such that g(theta) = boundary(e^{i u(theta)}) extends
    holomorphically into the disk with g's mean value 0 (so q(0) = 0) and
    real positive first mode (q'(0) > 0).  Gauss-Newton in the grid values
    of u; residual is the sup of the forbidden Fourier modes.
    """
    m = grid or max(256, boundary.grid_size)
    theta = TWO_PI * np.arange(m) / m
    u, g, modes, history = _solve_correspondence(boundary, theta.copy(),
                                                 config, m)
    if modes[1].real < 0:
        # the other normalization branch sits half a turn away
        u, g, modes, history = _solve_correspondence(boundary, u + np.pi,
                                                     config, m)
        if modes[1].real < 0:
            raise RiemannMapError("q'(0) > 0 normalization unreachable",
                                  history)
    return _package_diskmap(boundary, u, g, modes, history, config)


def _solve_correspondence(boundary, u0, config, m):
    dloop = boundary.derivative()
    freqs = np.fft.fftfreq(m, d=1.0 / m).astype(int)
    neg = freqs < 0
    dft = np.exp(-2j * np.pi * np.outer(freqs, np.arange(m)) / m) / m
    scale = max(np.abs(boundary.samples).max(), 1e-30)

    def residual_vec(uu):
        g = boundary.evaluate_raw(np.exp(1j * uu))
        modes = np.fft.fft(g) / m
        r = np.concatenate([modes[neg],
                            np.array([modes[0], 1j * modes[1].imag])])
        return g, modes, r

    u = np.asarray(u0, dtype=float)
    history = []
    for _ in range(config.riemann_max_iter):
        g, modes, r = residual_vec(u)
        err = np.abs(r).max() / scale
        history.append(err)
        if err < config.riemann_tol:
            return u, g, modes, history
        d = 1j * np.exp(1j * u) * dloop.evaluate_raw(np.exp(1j * u))
        jac = dft * d[None, :]
        jc = np.concatenate([jac[neg], jac[0:1], 1j * (jac[1:2].imag)],
                            axis=0)
        jr = np.concatenate([jc.real, jc.imag], axis=0)
        rr = np.concatenate([r.real, r.imag])
        step, *_ = np.linalg.lstsq(jr, -rr, rcond=None)
        lam = 1.0
        for _ in range(8):
            _, _, r_new = residual_vec(u + lam * step)
            if np.abs(r_new).max() <= np.abs(r).max():
                break
            lam *= 0.5
        u = u + lam * step
    raise RiemannMapError(
        f"no convergence: residual history {history[-4:]}", history)


def _package_diskmap(boundary, u, g, modes, history, config):
    m = len(u)
    keep = {int(n): modes[i] for i, n in enumerate(
        np.fft.fftfreq(m, d=1.0 / m).astype(int))
        if 0 < n <= m // 2 - 1 and abs(modes[i]) > 1e-16}
    keep[0] = 0.0  # q(0) = 0 enforced to solver tolerance
    q = AnalyticLoop.from_coeffs(keep, config=config.with_modes(
        max(config.modes, m // 2)))
    # principal-brancheable correspondence: store u wrapped to u - theta
    theta = TWO_PI * np.arange(m) / m
    u = theta + _periodize(u - theta)
    return DiskMap(map=q, deriv_at_zero=float(modes[1].real),
                   correspondence=u, residual=history[-1])


def _periodize(d: np.ndarray) -> np.ndarray:
    return d  # displacement is already periodic by construction


# -- lifts -------------------------------------------------------------------

@dataclass(frozen=True)
class Lift:
    """A 2 pi-equivariant lift, stored as x + 2 pi k + d(e^{ix}).

    d is the periodic displacement as a series in e^{ix}; real-valued on the
    real axis for circle-diffeomorphism lifts, complex for the lifts of
    univalent maps (imaginary part -log|q|).  Evaluation extends to complex
    arguments through the series, which keeps the lift usable inside the
    composed-lift bookkeeping.
    """

    displacement: AnalyticLoop
    offset: int = 0

    @staticmethod
    def from_values(x: np.ndarray, values: np.ndarray, offset: int = 0,
                    config: Config = DEFAULT) -> "Lift":
        disp = values - x - TWO_PI * offset
        loop = AnalyticLoop.from_samples(disp, n_max=len(x) // 2 - 1,
                                         config=config.with_modes(len(x)),
                                         tail="ignore")
        return Lift(displacement=loop, offset=offset)

    def __call__(self, x):
        zeta = np.exp(1j * np.asarray(x, dtype=complex))
        out = np.asarray(x, dtype=complex) + TWO_PI * self.offset \
            + self.displacement.evaluate_raw(zeta)
        return out

    def deriv(self, x):
        zeta = np.exp(1j * np.asarray(x, dtype=complex))
        return 1.0 + self.displacement.derivative().evaluate_raw(zeta) \
            * 1j * zeta

    def real_values(self, m: int) -> np.ndarray:
        x = TWO_PI * np.arange(m) / m
        return np.real(self(x))

    def displacement_values(self, m: int) -> np.ndarray:
        x = TWO_PI * np.arange(m) / m
        return np.real(self(x)) - x

    def shifted(self, k: int) -> "Lift":
        return Lift(displacement=self.displacement, offset=self.offset + k)

    def is_increasing(self, m: int = 512) -> bool:
        x = TWO_PI * np.arange(m) / m
        return bool(np.all(np.real(self.deriv(x)) > 0))

    def invert_at(self, targets: np.ndarray, tol: float = 1e-13,
                  max_iter: int = 60) -> np.ndarray:
        """Solve lift(w) = target pointwise by Newton, seeded sequentially."""
        t = np.asarray(targets, dtype=complex)
        w = t - TWO_PI * self.offset - self.displacement.coeff(0)
        for _ in range(max_iter):
            f = self(w) - t
            if np.abs(f).max() < tol:
                return w
            w = w - f / self.deriv(w)
        raise ConformalError("lift inversion did not converge")


def _anchor_branch(values: np.ndarray) -> tuple[np.ndarray, int]:
    """Shift by 2 pi k so the value at x = 0 has real part in (-pi, pi]."""
    k = math.floor((values[0].real + np.pi) / TWO_PI)
    return values - TWO_PI * k, -k


def _complex_log_lift(w: np.ndarray) -> np.ndarray:
    """Values of -i Log w unwrapped along the sample sequence."""
    return np.unwrap(np.angle(w)) - 1j * np.log(np.abs(w))


# -- decomposition -----------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """phi = q . h with conformal radius, rotation number and lift data."""

    q: DiskMap
    h: Deformation
    cr: float
    rot: float
    h_lift: Lift
    q_lift: Lift
    residual: float
    translation: float = 0.0
    translation_error: float = 0.0


def decompose(phi: Deformation, config: Config = DEFAULT) -> Decomposition:
    """Unique splitting into a normalized univalent map and a circle diffeo."""
    dm = riemann_map(phi.loop, config=config)
    m = len(dm.correspondence)
    theta = TWO_PI * np.arange(m) / m
    u_lift = Lift.from_values(theta, dm.correspondence, config=config)
    if not u_lift.is_increasing():
        raise ConformalError("boundary correspondence is not monotone: "
                             "numerical breakdown of the decomposition")
    # h is the inverse of the correspondence diffeomorphism
    v_vals = np.real(u_lift.invert_at(theta.astype(complex)))
    v_vals, _ = _anchor_branch(v_vals)
    h_lift = Lift.from_values(theta, v_vals, config=config)
    h_loop = AnalyticLoop.from_samples(np.exp(1j * v_vals),
                                       n_max=config.modes, config=config,
                                       tail="ignore")
    h = make_deformation(h_loop, config=config)
    # lift of q from its boundary values
    qb = dm.boundary_values(m)
    q_vals, _ = _anchor_branch(_complex_log_lift(qb))
    q_lift = Lift.from_values(theta, q_vals, config=config)
    cr = 1.0 / dm.deriv_at_zero
    t_val, t_err = translation_number(h_lift, config.rot_iters)
    rot = float(np.mod(t_val, TWO_PI))
    return Decomposition(q=dm, h=h, cr=cr, rot=rot, h_lift=h_lift,
                         q_lift=q_lift, residual=dm.residual,
                         translation=t_val, translation_error=t_err)


def conformal_radius(phi: Deformation, config: Config = DEFAULT) -> float:
    """CR(phi) = 1 / q'(0); invariant under right diffeomorphism factors."""
    return 1.0 / riemann_map(phi.loop, config=config).deriv_at_zero


def translation_number(lift: Lift, n_iter: int = 100_000,
                       config: Config = DEFAULT):
    """Asymptotic displacement of the lift orbit from 0.

    Returns (value, certified_error).  Pure translations and lifts whose
    underlying circle map has a fixed point (sign change of the displacement
    against some 2 pi k) are resolved exactly with error 0; otherwise the
    Birkhoff average over n_iter steps carries the rigorous 2 pi / n bound.
    """
    m = max(256, lift.displacement.grid_size)
    disp = lift.displacement_values(m)
    osc = disp.max() - disp.min()
    if osc < 1e-10:  # pure translation up to solver noise
        return float(disp.mean()), float(osc)
    k_lo = math.ceil(disp.min() / TWO_PI)
    k_hi = math.floor(disp.max() / TWO_PI)
    if k_lo <= k_hi:
        # fixed point: displacement crosses 2 pi k
        k = min((k for k in range(k_lo, k_hi + 1)), key=abs)
        return TWO_PI * k, 0.0
    x = 0.0
    zeta_pow = None
    coeffs = lift.displacement.coeff_dict()
    degs = np.array(sorted(coeffs))
    cvec = np.array([coeffs[int(n)] for n in degs])
    off = TWO_PI * lift.offset
    for _ in range(n_iter):
        x = x + off + float(np.real(np.sum(cvec * np.exp(1j * degs * x))))
    return x / n_iter, TWO_PI / n_iter


def rotation_number(phi: Deformation, config: Config = DEFAULT) -> float:
    """Rot(phi) = Rot(h_phi) in [0, 2 pi)."""
    return decompose(phi, config=config).rot


def rcr(phi: Deformation, config: Config = DEFAULT) -> complex:
    """The combined invariant e^{i Rot(phi)} / CR(phi)."""
    dec = decompose(phi, config=config)
    return complex(np.exp(1j * dec.rot) / dec.cr)


# -- the RCR group cocycle ---------------------------------------------------

def composed_lift(dec1: Decomposition, dec2: Decomposition,
                  dec12: Decomposition, m: int = 256,
                  config: Config = DEFAULT) -> Lift:
    """Lift of h_{phi1 . phi2} through the factor lifts.

    Evaluates q12-hat^{-1} . q1-hat . h1-hat . q2-hat . h2-hat on a real
    grid; the factors' integer offsets propagate additively, so translation
    number differences built from this lift are offset independent.
    """
    x = TWO_PI * np.arange(m) / m
    y = np.real(dec2.h_lift(x)).astype(complex)
    y = _branch_checked(dec2.q_lift, y)
    y = dec1.h_lift(y)
    y = _branch_checked(dec1.q_lift, y)
    w = dec12.q_lift.invert_at(y)
    imag = np.abs(w.imag).max()
    if imag > 1e-7:
        raise ConformalError(
            f"composed lift is not real on the circle (imag {imag:.2e})")
    return Lift.from_values(x, w.real, config=config)


def _branch_checked(lift: Lift, y: np.ndarray) -> np.ndarray:
    out = lift(y)
    return out


def omega_rcr(phi1: Deformation, phi2: Deformation,
              config: Config = DEFAULT, cache: dict | None = None) -> complex:
    """The group 2-cocycle from log RCR with translation-number bookkeeping.

    (i/12) log(CR12 / (CR1 CR2)) - (1/12) (T1 + T2 - T12), the composed
    lift built from the factor lifts; independent of the factor offsets.
    """
    phi12 = compose(phi1, phi2, config=config)
    d1 = _cached_decompose(phi1, config, cache)
    d2 = _cached_decompose(phi2, config, cache)
    d12 = _cached_decompose(phi12, config, cache)
    t1, _ = translation_number(d1.h_lift, config.rot_iters)
    t2, _ = translation_number(d2.h_lift, config.rot_iters)
    lift12 = composed_lift(d1, d2, d12, config=config)
    t12, _ = translation_number(lift12, config.rot_iters)
    cr_term = (1j / 12.0) * math.log(d12.cr / (d1.cr * d2.cr))
    return complex(cr_term - (t1 + t2 - t12) / 12.0)


def _cached_decompose(phi: Deformation, config: Config, cache):
    if cache is None:
        return decompose(phi, config=config)
    key = phi.loop.cache_key()
    if key not in cache:
        cache[key] = decompose(phi, config=config)
    return cache[key]


# -- annulus uniformization --------------------------------------------------

@dataclass(frozen=True)
class _RoundStage:
    """One Koebe alternation: a disk Riemann map rounding one boundary.

    Point transport inverts the stored Taylor series by Newton; flip = True
    conjugates by the inversion (the stage rounds the inner boundary).
    """

    q: AnalyticLoop
    dq: AnalyticLoop
    deriv0: complex
    flip: bool

    def apply(self, pts: np.ndarray) -> np.ndarray:
        z = np.asarray(pts, dtype=complex)
        t = 1.0 / z if self.flip else z
        w = t / self.deriv0
        for _ in range(60):
            f = self.q.evaluate_raw(w) - t
            if np.abs(f).max() < 1e-13 * max(np.abs(t).max(), 1.0):
                break
            w = w - f / self.dq.evaluate_raw(w)
        else:
            raise UniformizeError("rounding stage inversion did not converge")
        return 1.0 / w if self.flip else w


@dataclass(frozen=True)
class AnnulusMap:
    """Uniformizer onto a round annulus e^{-2 pi tau} <= |w| <= 1.

    Zero or more Koebe rounding alternations followed by the log-linear
    closer F(z) = z exp(L(z)); the outer curve maps to the unit circle.
    residual is the boundary circularity defect measured between the
    collocation points.
    """

    tau: float
    log_factor: AnalyticLoop
    residual: float
    stages: tuple = ()

    def map(self, z):
        pts = np.asarray(z, dtype=complex)
        for st in self.stages:
            pts = st.apply(pts)
        return pts * np.exp(self.log_factor.evaluate_raw(pts))


def _laurent_block(points: np.ndarray, modes: int) -> np.ndarray:
    """Real design-matrix block for Re L(points), unknowns (Re c, Im c)."""
    n = np.arange(-modes, modes + 1)
    p = points[:, None] ** n[None, :]
    return np.concatenate([p.real, -p.imag], axis=1)


def _equilibrated_lstsq(mat: np.ndarray, rhs: np.ndarray):
    """Column-equilibrated least squares; Laurent powers span huge scales."""
    scale = np.abs(mat).max(axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(mat / scale, rhs, rcond=None)
    sol = sol / scale
    return sol, mat @ sol - rhs


def _laurent_closer(outer: np.ndarray, inner: np.ndarray, k: int,
                    config: Config):
    """One linear solve for L, u in |z e^L| = 1 (outer), e^u (inner)."""
    a_out = _laurent_block(outer, k)
    a_in = _laurent_block(inner, k)
    n_c = a_out.shape[1]
    rows_out = np.concatenate([a_out, np.zeros((len(outer), 1))], axis=1)
    rows_in = np.concatenate([a_in, -np.ones((len(inner), 1))], axis=1)
    gauge = np.zeros((1, n_c + 1))
    gauge[0, (2 * k + 1) + k] = 1.0  # Im c_0 = 0
    mat = np.concatenate([rows_out, rows_in, gauge], axis=0)
    rhs = np.concatenate([-np.log(np.abs(outer)), -np.log(np.abs(inner)),
                          [0.0]])
    sol, resid = _equilibrated_lstsq(mat, rhs)
    u = sol[-1]
    tau = -u / TWO_PI
    c = sol[:2 * k + 1] + 1j * sol[2 * k + 1:n_c]
    loop = AnalyticLoop.from_coeffs(
        {int(n): c[i] for i, n in enumerate(range(-k, k + 1))
         if abs(c[i]) > 1e-15},
        config=config.with_modes(max(config.modes, k)))
    return float(tau), loop, float(np.abs(resid).max())


def _staggered(samples: np.ndarray) -> np.ndarray:
    """Curve points halfway between the given samples (trig interpolation)."""
    loop = AnalyticLoop.from_samples(samples, n_max=len(samples) // 2 - 1,
                                     config=DEFAULT.with_modes(len(samples)),
                                     tail="ignore")
    return loop.refined_samples(2 * len(samples))[1::2]


def _reversed_loop(samples: np.ndarray, config: Config) -> AnalyticLoop:
    """Interpolating loop of the samples traced in reverse order."""
    rev = np.roll(samples[::-1], 1)
    return AnalyticLoop.from_samples(rev, n_max=len(samples) // 2 - 1,
                                     config=config.with_modes(len(samples)),
                                     tail="ignore")


def annulus_uniformize(outer: np.ndarray, inner: np.ndarray,
                       config: Config = DEFAULT,
                       modes: int | None = None,
                       max_alternations: int = 12) -> AnnulusMap:
    """Round-annulus uniformization of the region between two sampled loops.

    The log-linear solve for F = z exp(L) is spectrally exact while the
    Laurent series of L converges on both boundary curves; when the
    boundary circularity defect (measured between collocation points)
    exceeds the tolerance, Koebe alternations round the offending
    boundaries with disk Riemann maps first and the solve closes the
    remainder.  The outer curve is taken with the orientation of an
    iota-composed parametrization (clockwise); the inner counterclockwise.
    """
    cur_out = np.asarray(outer, dtype=complex)
    cur_in = np.asarray(inner, dtype=complex)
    k = modes or config.uniformize_modes
    stages = []
    best = None
    for _ in range(max_alternations // 2 + 1):
        tau, loop, colloc = _laurent_closer(cur_out, cur_in, k, config)
        if tau <= 0:
            raise UniformizeError("non-positive modulus: boundaries touch "
                                  "or are swapped")
        fo = _staggered(cur_out)
        fi = _staggered(cur_in)
        fo = fo * np.exp(loop.evaluate_raw(fo))
        fi = fi * np.exp(loop.evaluate_raw(fi))
        defect = max(np.abs(np.log(np.abs(fo))).max(),
                     np.abs(np.log(np.abs(fi)) + TWO_PI * tau).max(),
                     colloc)
        cand = AnnulusMap(tau=float(tau), log_factor=loop,
                          residual=float(defect), stages=tuple(stages))
        if defect <= config.koebe_tol:
            return cand
        best = cand if best is None or defect < best.residual else best
        if len(stages) + 2 > max_alternations:
            break
        # round the outer boundary, then the inner one
        q1 = riemann_map(_reversed_loop(cur_out, config), config=config)
        st1 = _RoundStage(q=q1.map, dq=q1.map.derivative(),
                          deriv0=q1.deriv_at_zero, flip=False)
        cur_out = st1.apply(cur_out)
        cur_in = st1.apply(cur_in)
        inv_in = 1.0 / np.roll(cur_in[::-1], 1)
        q2 = riemann_map(AnalyticLoop.from_samples(
            inv_in, n_max=len(inv_in) // 2 - 1,
            config=config.with_modes(len(inv_in)), tail="ignore"),
            config=config)
        st2 = _RoundStage(q=q2.map, dq=q2.map.derivative(),
                          deriv0=q2.deriv_at_zero, flip=True)
        cur_out = st2.apply(cur_out)
        cur_in = st2.apply(cur_in)
        stages.extend([st1, st2])
    if best is not None and best.residual <= config.koebe_tol * 10:
        return best
    raise UniformizeError(
        f"uniformization defect {best.residual:.2e} after "
        f"{len(stages)} alternations" if best is not None else
        "uniformization failed")


@dataclass(frozen=True)
class TwoChartMap:
    """Uniformizer of two welded annular charts onto one round annulus.

    Chart 1 carries F1 = z exp(L1); chart 2 carries F2 = z^{d} exp(L2)
    with d = +1 when chart 2 attaches by its outer boundary and d = -1
    when it attaches inside out.
    """

    tau: float
    log1: AnalyticLoop
    log2: AnalyticLoop
    degree2: int
    residual: float

    def map1(self, z):
        z = np.asarray(z, dtype=complex)
        return z * np.exp(self.log1.evaluate_raw(z))

    def map2(self, z):
        z = np.asarray(z, dtype=complex)
        return z ** self.degree2 * np.exp(self.log2.evaluate_raw(z))


def weld_uniformize(outer1: np.ndarray, seam1: np.ndarray, seam2: np.ndarray,
                    far2: np.ndarray, degree2: int,
                    config: Config = DEFAULT,
                    modes: int | None = None) -> TwoChartMap:
    """Uniformize two annular charts glued along identified seam samples.

    seam1[k] (chart-1 plane) is identified with seam2[k] (chart-2 plane).
    |F1| = 1 on outer1, |F2| = rho on far2, F1 = F2 across the seam; all
    conditions are linear in (L1, L2, log rho) after taking logarithms.
    """
    k = modes or config.uniformize_modes
    outer1 = np.asarray(outer1, dtype=complex)
    seam1 = np.asarray(seam1, dtype=complex)
    seam2 = np.asarray(seam2, dtype=complex)
    far2 = np.asarray(far2, dtype=complex)
    nc = 2 * (2 * k + 1)  # real unknowns per chart: (Re c, Im c)

    blk_out = _laurent_block(outer1, k)
    blk_far = _laurent_block(far2, k)
    n = np.arange(-k, k + 1)
    p1 = seam1[:, None] ** n[None, :]
    p2 = seam2[:, None] ** n[None, :]

    # unknown layout: [Re c1, Im c1 | Re c2, Im c2 | u = log rho]
    rows_out = np.concatenate(
        [blk_out, np.zeros((len(outer1), nc + 1))], axis=1)
    rows_far = np.concatenate(
        [np.zeros((len(far2), nc)), blk_far, -np.ones((len(far2), 1))],
        axis=1)
    rhs_out = -np.log(np.abs(outer1))
    rhs_far = -degree2 * np.log(np.abs(far2))

    # seam matching: L1(a) - L2(b) = d log b - log a, complex rows
    log_a = np.log(np.abs(seam1)) + 1j * np.unwrap(np.angle(seam1))
    log_b = np.log(np.abs(seam2)) + 1j * np.unwrap(np.angle(seam2))
    rhs_seam = degree2 * log_b - log_a
    wrap = rhs_seam.imag
    closure = (wrap[-1] - wrap[0]) + (wrap[1] - wrap[0])
    if abs(closure) > np.pi:
        raise UniformizeError("welding phase obstruction across the seam")

    re_rows = np.concatenate([p1.real, -p1.imag, -p2.real, p2.imag,
                              np.zeros((len(p1), 1))], axis=1)
    im_rows = np.concatenate([p1.imag, p1.real, -p2.imag, -p2.real,
                              np.zeros((len(p1), 1))], axis=1)
    gauge = np.zeros((1, 2 * nc + 1))
    gauge[0, 2 * k + 1 + k] = 1.0  # Im c^1_0 = 0

    mat = np.concatenate([rows_out, rows_far, re_rows, im_rows, gauge],
                         axis=0)
    rhs = np.concatenate([rhs_out, rhs_far, rhs_seam.real, rhs_seam.imag,
                          [0.0]])
    sol, resid = _equilibrated_lstsq(mat, rhs)
    residual = float(np.abs(resid).max())
    if residual > config.koebe_tol * 10:
        raise UniformizeError(f"weld uniformization residual {residual:.2e}")
    u = sol[-1]
    tau = -u / TWO_PI
    if tau <= 0:
        raise UniformizeError("non-positive modulus after welding")
    c1 = sol[:2 * k + 1] + 1j * sol[2 * k + 1:nc]
    c2 = sol[nc:nc + 2 * k + 1] + 1j * sol[nc + 2 * k + 1:2 * nc]
    mk = config.with_modes(max(config.modes, k))

    def mk_loop(c):
        return AnalyticLoop.from_coeffs(
            {int(n): c[i] for i, n in enumerate(range(-k, k + 1))
             if abs(c[i]) > 1e-15}, config=mk)

    return TwoChartMap(tau=float(tau), log1=mk_loop(c1), log2=mk_loop(c2),
                       degree2=degree2, residual=residual)
