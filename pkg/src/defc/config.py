"""Global numerical defaults shared across the package."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Config:
    """Resolution and tolerance knobs.

    All operations are pure functions of their inputs and a config; the
    module-level ``DEFAULT`` is never mutated, callers derive variants via
    :meth:`with_modes` or ``dataclasses.replace``.
    """

    modes: int = 64                # truncation degree N of Laurent series
    samples_per_mode: int = 4      # grid size M = samples_per_mode * N
    eval_margin: float = 1.05      # safety factor on certified annuli
    dft_roundtrip_tol: float = 1e-13
    truncation_tol: float = 1e-8   # relative tail mass allowed in compose
    product_warn_tol: float = 1e-10
    winding_residual_tol: float = 1e-6
    zero_dist_tol: float = 1e-9    # min |phi| on S^1 for a valid deformation
    injectivity_tol: float = 1e-6  # min |phi(z)-phi(w)|/|z-w| on refined grid
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    riemann_tol: float = 1e-10     # negative-mode residual of the disk map
    riemann_max_iter: int = 40
    koebe_tol: float = 1e-9        # boundary circularity defect of annulus maps
    uniformize_modes: int = 48
    rot_iters: int = 100_000
    fd_step: float = 1e-3

    @property
    def grid(self) -> int:
        return self.samples_per_mode * self.modes

    def with_modes(self, modes: int) -> "Config":
        return replace(self, modes=modes)


DEFAULT = Config()


def thread_count() -> int:
    """Worker cap for batch sweeps, from DEFC_THREADS (default: serial)."""
    raw = os.environ.get("DEFC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
