"""Group and Lie-algebra cochain calculus on deformations of the circle.

The group 2-cocycles (the log-derivative contour cocycle and the
rotation/conformal-radius cocycle) are evaluated on composable pairs; the
algebra cocycles are theta-coordinate quadratures.  The van Est map sends
the former to the latter by an antisymmetrized second finite difference
over closed-form generator flows, which is how the central-charge values
i (n^3 - n)/12 and i n / 12 are reproduced numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULT, Config
from .conformal import omega_rcr
from .deformation import (ComposabilityError, Deformation, compose,
                          is_composable)
from .series import TWO_PI, AnalyticLoop, unit_grid
from .witt import VectorField, bracket, flow_of


class BranchWindingError(ValueError):
    """The log factor winds around 0: the integrand is branch-ambiguous."""


@dataclass(frozen=True)
class GroupCochain2:
    """An evaluation rule on composable pairs of deformations."""

    rule: object
    name: str = ""

    def __call__(self, phi1: Deformation, phi2: Deformation,
                 config: Config = DEFAULT) -> complex:
        return self.rule(phi1, phi2, config)


@dataclass(frozen=True)
class AlgebraCochain:
    """A degree-1 or degree-2 multilinear rule on vector fields."""

    degree: int
    rule: object
    name: str = ""

    def __call__(self, *fields, config: Config = DEFAULT) -> complex:
        if len(fields) != self.degree:
            raise ValueError(f"{self.name or 'cochain'} has degree "
                             f"{self.degree}, got {len(fields)} arguments")
        return self.rule(*fields, config=config)


# -- group cocycles -----------------------------------------------------------

def bott_thurston(phi1: Deformation, phi2: Deformation,
                  config: Config = DEFAULT) -> complex:
    """The contour cocycle (1/24 pi) int log((phi1 . phi2)') d log phi2'.

    Phases are unwrapped along the grid from the principal value at z = 1;
    a nonzero winding of the composed derivative is rejected rather than
    normalized, since then no single-valued branch exists.
    """
    if not is_composable(phi1, phi2, config=config):
        raise ComposabilityError("Bott-Thurston needs a composable pair")
    m = 2 * max(phi1.grid_size, phi2.grid_size, 128)
    z = unit_grid(m)
    p2 = phi2.loop.refined_samples(m)
    dp2 = phi2.loop.derivative().refined_samples(m)
    ddp2 = phi2.loop.derivative().derivative().refined_samples(m)
    dp1_at = phi1.loop.derivative().evaluate_raw(p2)
    comp_deriv = dp1_at * dp2
    closed = np.unwrap(np.angle(np.concatenate([comp_deriv, comp_deriv[:1]])))
    if round((closed[-1] - closed[0]) / TWO_PI) != 0:
        raise BranchWindingError(
            "winding of the composed derivative is nonzero")
    log_vals = np.log(np.abs(comp_deriv)) + 1j * closed[:-1]
    dlog2 = ddp2 / dp2
    integrand = log_vals * dlog2 * 1j * z
    return complex(integrand.sum() * (TWO_PI / m) / (24 * np.pi))


def rcr_cochain(config: Config = DEFAULT, cache=None) -> GroupCochain2:
    store = cache if cache is not None else {}

    def rule(p1, p2, cfg):
        return omega_rcr(p1, p2, config=cfg, cache=store)
    return GroupCochain2(rule=rule, name="rcr")


bt_cochain = GroupCochain2(rule=lambda p1, p2, cfg: bott_thurston(
    p1, p2, config=cfg), name="bt")


# -- algebra cocycles ---------------------------------------------------------

def _theta_quadrature(values: np.ndarray) -> complex:
    return complex(values.sum() * TWO_PI / len(values))


def gelfand_fuks(v: VectorField, w: VectorField,
                 config: Config = DEFAULT) -> complex:
    """(1/24 pi) int v~'(theta) w~''(theta) d theta; i n^3/12 on generators."""
    m = 2 * max(v.fn.grid_size, w.fn.grid_size)
    dv = _theta_derivative(v.theta_samples(m))
    ddw = _theta_derivative(_theta_derivative(w.theta_samples(m)))
    return _theta_quadrature(dv * ddw) / (24 * np.pi)


def omega_rot(v: VectorField, w: VectorField,
              config: Config = DEFAULT) -> complex:
    """(1/24 pi) int v~(theta) w~'(theta) d theta; i n/12 on generators."""
    m = 2 * max(v.fn.grid_size, w.fn.grid_size)
    dw = _theta_derivative(w.theta_samples(m))
    return _theta_quadrature(v.theta_samples(m) * dw) / (24 * np.pi)


def rot_functional(v: VectorField, config: Config = DEFAULT) -> complex:
    """(1/48 pi) int v~(theta) d theta; equals i/24 on the scaling generator."""
    m = 2 * v.fn.grid_size
    return _theta_quadrature(v.theta_samples(m)) / (48 * np.pi)


def _theta_derivative(samples: np.ndarray) -> np.ndarray:
    m = len(samples)
    modes = np.fft.fft(samples) / m
    degs = np.fft.fftfreq(m, d=1.0 / m)
    return np.fft.ifft(1j * degs * modes) * m


gf_cochain = AlgebraCochain(2, lambda v, w, config: gelfand_fuks(
    v, w, config=config), name="gf")
rot_cochain = AlgebraCochain(2, lambda v, w, config: omega_rot(
    v, w, config=config), name="rot")
rot_fun_cochain = AlgebraCochain(1, lambda v, config: rot_functional(
    v, config=config), name="rot1")


# -- differentials -------------------------------------------------------------

def group_differential(omega, g1: Deformation, g2: Deformation,
                       g3: Deformation, config: Config = DEFAULT) -> complex:
    """(D_grp Omega)(g1,g2,g3) over a triple with all consecutive products."""
    g12 = compose(g1, g2, config=config)
    g23 = compose(g2, g3, config=config)
    return (omega(g2, g3, config) - omega(g12, g3, config)
            + omega(g1, g23, config) - omega(g1, g2, config))


def algebra_differential(c: AlgebraCochain, *fields,
                         config: Config = DEFAULT) -> complex:
    """Chevalley-Eilenberg differential with trivial coefficients.

    Degree 1: (D f)(v, w) = f([v, w]); degree 2:
    (D omega)(u, v, w) = omega([u,v], w) - omega([u,w], v) + omega([v,w], u).
    The sign convention is fixed by the requirement that the differential
    of the rot functional reproduce the quadrature cocycle omega_rot on
    generator pairs.
    """
    if c.degree == 1:
        v, w = fields
        return c(bracket(v, w, config=config), config=config)
    if c.degree == 2:
        u, v, w = fields
        return (c(bracket(u, v, config=config), w, config=config)
                - c(bracket(u, w, config=config), v, config=config)
                + c(bracket(v, w, config=config), u, config=config))
    raise ValueError(f"unsupported cochain degree {c.degree}")


# -- the van Est map -----------------------------------------------------------

def van_est(omega, v: VectorField, w: VectorField,
            h: float | None = None, config: Config = DEFAULT,
            with_error: bool = False):
    """Antisymmetrized second mixed derivative of a group 2-cochain at id.

    Central second-order differences of Omega(Phi_v(t), Phi_w(s)) minus the
    transposed evaluation over the 2x2 stencil at +-h, halved; one level of
    Richardson extrapolation over h and h/2 with the difference of levels
    as error estimate.
    """
    if h is None:
        h = config.fd_step

    def mixed(step):
        flows_v = {s: flow_of(v, s * step, config=config) for s in (-1, 1)}
        flows_w = {s: flow_of(w, s * step, config=config) for s in (-1, 1)}

        def g(st, ss):
            a = omega(flows_v[st], flows_w[ss], config)
            b = omega(flows_w[ss], flows_v[st], config)
            return 0.5 * (a - b)

        return (g(1, 1) - g(1, -1) - g(-1, 1) + g(-1, -1)) / (4 * step ** 2)

    d1 = mixed(h)
    d2 = mixed(h / 2)
    out = (4 * d2 - d1) / 3
    if with_error:
        return out, abs(out - d2)
    return out


def cocycle_relation_residuals(n_max: int, config: Config = DEFAULT,
                               fd_step: float | None = None):
    """Residual table of the two van Est relations on generator pairs.

    For n = 1..n_max, compares van_est(Omega_BT) against the difference of
    the two quadrature cocycles and van_est(Omega_RCR) against omega_rot,
    on the pairs (l_n, l_{-n}).  Rows: (relation, n, target, value,
    residual).
    """
    from .witt import generator
    rows = []
    h = fd_step or config.fd_step
    cache: dict = {}
    rcr = rcr_cochain(config=config, cache=cache)
    for n in range(1, n_max + 1):
        v = generator(n, config=config)
        w = generator(-n, config=config)
        target_bt = gelfand_fuks(v, w, config=config) - \
            omega_rot(v, w, config=config)
        val_bt = van_est(bt_cochain, v, w, h=h, config=config)
        rows.append(("bt", n, target_bt, val_bt, abs(val_bt - target_bt)))
        target_rcr = omega_rot(v, w, config=config)
        val_rcr = van_est(rcr, v, w, h=h, config=config)
        rows.append(("rcr", n, target_rcr, val_rcr,
                     abs(val_rcr - target_rcr)))
    return rows


# -- the cohomology-proof recursion --------------------------------------------

def cohomology_recursion(c1, c2, n_max: int):
    """Integer-exact anti-diagonal constants from the two seeds.

    c_{n+1} = ((n + 2) c_n - (2n + 1) c_1) / (n - 1) for n >= 2; the seeds
    (1, 2) and (1, 8) generate the linear and cubic solutions.
    """
    if n_max < 3:
        raise ValueError("need n_max >= 3 to run the recursion")
    seq = [Fraction(c1), Fraction(c2)]
    for n in range(2, n_max):
        nxt = ((n + 2) * seq[n - 1] - (2 * n + 1) * seq[0]) / (n - 1)
        seq.append(nxt)
    return seq
