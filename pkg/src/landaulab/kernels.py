"""Coulomb diffusion kernel, its smooth cutoff, and convolved matrices.

Symmetric 3x3 matrices are plain ``(3, 3)`` numpy arrays (or stacks of
them); all functions accept a single vector or an ``(..., 3)`` stack.
"""

from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import AccuracyError, DomainError
from .profile import DEFAULT_PROFILE, CutoffProfile
from .quadrature import QuadratureSpec

__all__ = [
    "AnisoEigen", "CutoffProfile", "DEFAULT_PROFILE", "aniso_eigen", "convolved_matrix",
    "cutoff_matrix", "error_kernel", "estimate_c0", "estimate_c0_capped", "eta", "eta_prime", "is_psd",
    "anisotropy_products", "bracket", "convolved_matrices", "landau_matrix",
]


def _vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise DomainError("expected a 3-vector")
    return v


def _projector(v, r):
    e = v / r[..., None]
    return np.eye(3) - e[..., :, None] * e[..., None, :]


def landau_matrix(v):
    """``|v|^-1 (I - v v^T / |v|^2)``."""
    v = _vec(v)
    r = np.linalg.norm(v, axis=-1)
    if np.any(r == 0):
        raise DomainError("the Coulomb kernel is unbounded at v = 0")
    return _projector(v, r) / r[..., None, None]


def _piece(x, profile):
    breaks = profile.breaks
    return np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, 2)


def _local_t(x, profile, k):
    b = profile.breaks
    return (x - b[k]) / (b[k + 1] - b[k])


def _horner(table, k, t):
    out = np.zeros_like(t)
    for j in range(table.shape[1] - 1, -1, -1):
        out = out * t + table[k, j]
    return out


def eta(x, profile=DEFAULT_PROFILE):
    """Cutoff profile: ``x^3`` on ``[0, 1/2]``, 1 on ``[1, inf)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("eta is defined for x >= 0")
    k = _piece(x, profile)
    bridge = _horner(profile.value_table, k, _local_t(x, profile, k))
    return np.where(x <= 0.5, x ** 3, np.where(x >= 1.0, 1.0, bridge))


def eta_prime(x, profile=DEFAULT_PROFILE):
    x = np.asarray(x, dtype=float)
    k = _piece(x, profile)
    bridge = _horner(profile.slope_table, k, _local_t(x, profile, k))
    return np.where(x <= 0.5, 3 * x * x, np.where(x >= 1.0, 0.0, bridge))


def cutoff_matrix(v, profile=DEFAULT_PROFILE):
    """``eta(|v|) |v|^-1 (I - v v^T / |v|^2)``; the zero matrix at ``v = 0``."""
    v = _vec(v)
    r = np.linalg.norm(v, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    scale = np.where(r > 0, eta(r, profile) / safe, 0.0)
    return _projector(v, safe) * scale[..., None, None]


def error_kernel(v, profile=DEFAULT_PROFILE):
    """``sum_ij d_i d_j of the cutoff matrix`` = ``-2 eta'(|v|) / |v|^2``."""
    v = _vec(v)
    r = np.linalg.norm(v, axis=-1)
    if np.any(r == 0):
        raise DomainError("error kernel evaluated at v = 0")
    # on [0, 1/2] the ratio is exactly -6
    return np.where(r <= 0.5, -6.0, -2.0 * eta_prime(r, profile) / (r * r))


def is_psd(m, rel_tol=1e-12):
    m = np.asarray(m)
    w = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, -1, -2)))
    tr = np.trace(m, axis1=-2, axis2=-1)
    return bool(np.all(w >= -rel_tol * np.maximum(np.abs(tr), 1e-300)[..., None]))


def convolved_matrices(f, points, spec=None, profile=DEFAULT_PROFILE, cutoff=True):
    """Refinement-level stack of ``(kernel * f)(v)`` for each point.

    Returns ``(levels, n, 3, 3)``.  ``cutoff=False`` uses the full kernel.
    """
    spec = spec or QuadratureSpec()
    points = np.atleast_2d(_vec(points))
    out = []
    for k in range(1, spec.refinement_levels + 1):
        rows = engine.mixture_moments(f, points, spec, k, cut=cutoff, profile=profile)
        out.append(engine.to_matrix(rows[:, :6]))
    return np.array(out)


def convolved_matrix(f, v, spec=None, profile=DEFAULT_PROFILE, cutoff=True):
    """``int cutoff_matrix(v - w) f(w) dw`` for a Gaussian-mixture density.

    Raises :class:`AccuracyError` if ``spec.tolerance`` is set and the last two
    refinement levels differ by more than ``tolerance`` (relative to the
    trace of the finest estimate).
    """
    spec = spec or QuadratureSpec()
    stack = convolved_matrices(f, np.asarray(v, dtype=float)[None, :], spec, profile, cutoff)
    fine, coarse = stack[-1, 0], stack[-2, 0]
    if spec.tolerance is not None:
        err = np.abs(fine - coarse).max()
        if err > spec.tolerance * abs(np.trace(fine)):
            raise AccuracyError(f"convolved matrix at {v}: refinements differ by {err:.3e}",
                                coarse=coarse, fine=fine)
    return 0.5 * (fine + fine.T)


@dataclass(frozen=True)
class AnisoEigen:
    radial_eigenvalue: float
    tangential_eigenvalues: tuple
    direction: tuple

    @property
    def tangential_min(self):
        return min(self.tangential_eigenvalues)


def _complement_basis(d):
    a = np.eye(3)[np.argmin(np.abs(d))]
    t1 = np.cross(d, a)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(d, t1)


def aniso_eigen(m, direction):
    """Rayleigh quotient along ``direction`` and eigenvalues of the complement block."""
    d = _vec(direction)
    n = np.linalg.norm(d)
    if n == 0:
        raise DomainError("direction must be non-zero")
    d = d / n
    m = np.asarray(m, dtype=float)
    t1, t2 = _complement_basis(d)
    T = np.stack([t1, t2], axis=1)
    block = T.T @ m @ T
    tang = np.linalg.eigvalsh(0.5 * (block + block.T))
    return AnisoEigen(float(d @ m @ d), (float(tang[0]), float(tang[1])), tuple(d))


def bracket(v):
    v = _vec(v)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def anisotropy_products(f, points, spec=None, profile=DEFAULT_PROFILE):
    """``(radial <v>^3, tangential_min <v>)`` at each point."""
    points = np.atleast_2d(_vec(points))
    mats = convolved_matrices(f, points, spec, profile)[-1]
    out = []
    for p, m in zip(points, mats):
        e = aniso_eigen(m, p)
        b = float(bracket(p))
        out.append((e.radial_eigenvalue * b ** 3, e.tangential_min * b))
    return np.array(out)


def estimate_c0(f, spec, sample_points, profile=DEFAULT_PROFILE):
    """``min`` over samples of ``min(radial <v>^3, tangential_min <v>)``."""
    pts = np.atleast_2d(_vec(sample_points))
    if np.any(np.linalg.norm(pts, axis=1) == 0):
        raise DomainError("sample points must be non-zero")
    return float(anisotropy_products(f, pts, spec, profile).min())


def estimate_c0_capped(f, spec, sample_points, M0, profile=DEFAULT_PROFILE):
    """``(raw, min(raw, M0))``: the estimate and its mass-normalised variant."""
    raw = estimate_c0(f, spec, sample_points, profile)
    return raw, min(raw, float(M0))
