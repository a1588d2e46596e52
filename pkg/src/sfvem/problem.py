"""Coefficient bundle for the advection-diffusion-reaction model problem.

The continuous problem is
    -div(K grad u) + beta . grad u + gamma u = f   on the unit square,
    u = 0 on the boundary,
with K a constant SPD tensor, beta a divergence-free polynomial field,
and gamma a nonnegative polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SAMPLE_GRID = None


def _sample_points():
    global _SAMPLE_GRID
    if _SAMPLE_GRID is None:
        t = np.linspace(0.05, 0.95, 7)
        X, Y = np.meshgrid(t, t)
        _SAMPLE_GRID = np.column_stack([X.ravel(), Y.ravel()])
    return _SAMPLE_GRID


@dataclass(frozen=True)
class ProblemSpec:
    """Problem coefficients plus optional exact solution for error studies.

    K is a constant 2x2 SPD array (a position-dependent callable is accepted
    but only constant tensors are exercised here). beta is a pair of Poly2,
    gamma and f are Poly2. theta, R1, R2 record benchmark parameters when
    the coefficients come from the rotated-anisotropy benchmark.
    """

    K: object
    beta: tuple
    gamma: object
    f: object
    exact_u: object = None
    exact_grad_u: tuple = None
    theta: float = None
    R1: float = None
    R2: float = None
    name: str = field(default="custom")

    def __post_init__(self):
        if not callable(self.K):
            K = np.asarray(self.K, dtype=float)
            if K.shape != (2, 2):
                raise ValueError("K must be a 2x2 tensor")
            scale = np.abs(K).max()
            if np.abs(K - K.T).max() > 1e-12 * scale:
                raise ValueError("K must be symmetric")
            if np.linalg.eigvalsh(K).min() <= 0:
                raise ValueError("K must have positive eigenvalues")
            object.__setattr__(self, "K", K)
        pts = _sample_points()
        bx, by = self.beta
        # the divergence check runs on coefficients: high-order stream
        # functions carry coefficients far larger than their values, and
        # mixed-partial rounding is an ulp at coefficient scale
        dxx, dyy = bx.dx(), by.dy()
        div = dxx + dyy
        scale = max(1.0, np.abs(dxx.coeffs).max(), np.abs(dyy.coeffs).max())
        if np.abs(div.coeffs).max() > 1e-12 * scale:
            raise ValueError("beta must be divergence free")
        g = self.gamma(pts)
        if g.min() < -1e-12 * max(1.0, np.abs(g).max()):
            raise ValueError("gamma must be nonnegative on the domain")

    @property
    def constant_K(self) -> np.ndarray:
        if callable(self.K):
            raise ValueError("position-dependent K has no constant value")
        return self.K
