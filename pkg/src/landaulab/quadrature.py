"""Deterministic 3D and 6D quadrature.

Outer integrals use a midpoint tensor grid on the bounding cube of the
truncation ball.  Inner integrals against a kernel with a ``1/|v - w|``
singularity are split with a smooth partition of unity: a spherical rule
centred at the outer node carries the weight ``chi(|v - w|)``, the grid
carries ``1 - chi``.  The grid part vanishes to all orders at ``w = v`` so
no grid node ever sees the singularity, and the spherical part has its
``1/r`` factor cancelled by the ``r^2`` Jacobian.

Every quadrature is repeated at ``refinement_levels`` levels; level ``k``
uses ``2**(k-1)`` times the base node counts.  The reported value is the
finest level and the error estimate is the difference of the last two.
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, DomainError, EvaluationError


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution and truncation parameters shared by all integrals.

    ``nodes_per_axis``, ``radial_nodes`` and ``sphere_nodes`` are the
    level-1 counts; each refinement level doubles the grid nodes per axis,
    the radial nodes and the total number of sphere nodes.  ``radial_nodes`` is per radial piece of the local rule.
    ``sphere_nodes`` is rounded to the product rule size ``2*n**2``.  The
    ``patch_*`` counts drive the star-shaped rules used on bump supports.
    ``prune`` drops grid nodes whose density is below ``prune * max``.
    ``tolerance`` (if set) turns a refinement disagreement into an error.
    """

    truncation_radius: float = 12.0
    nodes_per_axis: int = 32
    singular_ball_radius: float = 1.5
    radial_nodes: int = 16
    sphere_nodes: int = 72
    support_clamp: float = 1e-3
    refinement_levels: int = 2
    patch_radial_nodes: int = 24
    patch_sphere_nodes: int = 128
    prune: float = 1e-18
    tolerance: float | None = None

    def __post_init__(self):
        if not self.truncation_radius > 0:
            raise DomainError("truncation_radius must be positive")
        if not 0 < self.singular_ball_radius < self.truncation_radius:
            raise DomainError("singular_ball_radius must lie in (0, truncation_radius)")
        if not 0 < self.support_clamp <= 0.1:
            raise DomainError("support_clamp must lie in (0, 0.1]")
        if self.refinement_levels < 2:
            raise DomainError("refinement_levels must be at least 2")
        for name in ("nodes_per_axis", "radial_nodes", "sphere_nodes",
                     "patch_radial_nodes", "patch_sphere_nodes"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be a positive integer")

    def level(self, k):
        """Effective node counts at refinement level ``k`` (1-based)."""
        m = 2 ** (k - 1)
        return LevelCounts(
            nodes_per_axis=self.nodes_per_axis * m,
            radial_nodes=self.radial_nodes * m,
            sphere_theta=sphere_theta(self.sphere_nodes * m),
            patch_radial_nodes=self.patch_radial_nodes * m,
            patch_sphere_theta=sphere_theta(self.patch_sphere_nodes * m),
        )

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class LevelCounts:
    nodes_per_axis: int
    radial_nodes: int
    sphere_theta: int
    patch_radial_nodes: int
    patch_sphere_theta: int


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    levels_used: int

    def __float__(self):
        return float(self.value)


def sphere_theta(total):
    """Number of polar nodes of the product rule closest to ``total`` nodes."""
    return max(1, int(round(np.sqrt(total / 2.0))))


def combine(values, spec, what="integral"):
    """Build an :class:`IntegralResult` from per-level values."""
    values = [float(v) for v in values]
    err = abs(values[-1] - values[-2]) if len(values) > 1 else 0.0
    if spec is not None and spec.tolerance is not None:
        scale = max(abs(values[-1]), 1.0)
        if err > spec.tolerance * scale:
            raise AccuracyError(
                f"{what}: refinements differ by {err:.3e}", coarse=values[-2], fine=values[-1]
            )
    return IntegralResult(values[-1], err, len(values))


# ---------------------------------------------------------------------------
# rule builders


@lru_cache(maxsize=32)
def _cube_grid(radius, n):
    h = 2.0 * radius / n
    ax = -radius + h * (np.arange(n) + 0.5)
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    pts = pts[np.einsum("ij,ij->i", pts, pts) <= radius * radius]
    pts.setflags(write=False)
    return pts, h ** 3


def midpoint_grid(radius, n):
    """Midpoint nodes of the ``n**3`` cube grid that fall inside the ball."""
    pts, w = _cube_grid(float(radius), int(n))
    return pts, np.full(len(pts), w)


@lru_cache(maxsize=32)
def sphere_rule(n_theta):
    """Product Gauss-Legendre x trapezoid rule on the unit sphere.

    Returns ``(directions, weights)`` with ``2*n_theta**2`` nodes and weights
    summing to ``4*pi``.
    """
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    n_phi = 2 * n_theta
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    st = np.sqrt(1 - x * x)
    dirs = np.stack(
        [np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(),
         np.repeat(x, n_phi)], axis=1)
    w = np.repeat(wx, n_phi) * (2 * np.pi / n_phi)
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


@lru_cache(maxsize=64)
def radial_rule(breaks, n):
    """Composite Gauss-Legendre rule on the pieces between ``breaks``.

    ``n`` is a node count per piece, or a tuple of counts.  Returns
    ``(r, w)`` for plain ``dr`` integration.
    """
    counts = n if isinstance(n, tuple) else (n,) * (len(breaks) - 1)
    rs, ws = [], []
    for a, b, m in zip(breaks[:-1], breaks[1:], counts):
        x, wx = np.polynomial.legendre.leggauss(m)
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wx)
    r = np.concatenate(rs)
    w = np.concatenate(ws)
    r.setflags(write=False)
    w.setflags(write=False)
    return r, w


def unit_radial_rule(n):
    return radial_rule((0.0, 1.0), n)


# ---------------------------------------------------------------------------
# integrals


def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite integrand at node {pts[i]}", node=pts[i])


def integrate3(fn, spec):
    """Integrate ``fn`` over the truncation ball.

    ``fn`` receives an ``(M, 3)`` array of nodes and returns ``M`` values.
    """
    values = []
    for k in range(1, spec.refinement_levels + 1):
        pts, w = midpoint_grid(spec.truncation_radius, spec.level(k).nodes_per_axis)
        vals = np.asarray(fn(pts), dtype=float)
        _check_finite(vals, pts)
        values.append(np.sum(w * vals))
    return combine(values, spec, "integrate3")


def smooth_cutoff(r, r_in, r_out):
    """Partition weight: 1 on ``[0, r_in]``, 0 beyond ``r_out``, C-infinity between."""
    t = np.clip((r - r_in) / (r_out - r_in), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return 1.0 - a / (a + b)


def integrate6_singular(kernel, spec, chunk=256):
    """Integrate ``kernel(v, w)`` over the product of two truncation balls.

    ``kernel`` must accept broadcastable ``(..., 3)`` arrays and may carry a
    ``1/|v - w|`` singularity.  Pure numpy; intended for generic kernels and
    as a cross-check of the compiled engines.
    """
    r_loc = spec.singular_ball_radius
    values = []
    for k in range(1, spec.refinement_levels + 1):
        cnt = spec.level(k)
        pts, w = midpoint_grid(spec.truncation_radius, cnt.nodes_per_axis)
        rr, rw = radial_rule((0.0, r_loc), cnt.radial_nodes)
        dirs, dw = sphere_rule(cnt.sphere_theta)
        near_w = (rw * rr * rr * smooth_cutoff(rr, 0.0, r_loc))[:, None] * dw[None, :]
        offs = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        near_w = near_w.ravel()
        total = 0.0
        for s in range(0, len(pts), chunk):
            v = pts[s:s + chunk]
            z = v[:, None, :] - pts[None, :, :]
            r = np.sqrt(np.einsum("ijk,ijk->ij", z, z))
            far = np.where(r > 0, 1.0 - smooth_cutoff(r, 0.0, r_loc), 0.0)
            mask = far > 0
            kv = np.zeros_like(r)
            vi, wi = np.nonzero(mask)
            kv[vi, wi] = kernel(v[vi], pts[wi])
            _check_finite(kv[mask], v[vi])
            part = np.sum(kv * far * w[None, :], axis=1)
            wn = v[:, None, :] + offs[None, :, :]
            kn = kernel(v[:, None, :], wn)
            _check_finite(kn.ravel(), np.repeat(v, offs.shape[0], axis=0))
            part = part + kn @ near_w
            total += np.sum(w[s:s + chunk] * part)
        values.append(total)
    return combine(values, spec, "integrate6_singular")


def weighted_norm_result(f, p, q, spec):
    """Weighted norm as an :class:`IntegralResult` (error propagated)."""
    if p < 1:
        raise DomainError("p must be at least 1")

    def integrand(v, val):
        br = 1.0 + np.einsum("ij,ij->i", v, v)
        return np.abs(val) ** p * br ** (-0.5 * p * q)

    res = f.integrate(integrand, spec)
    integral = max(res.value, 0.0)
    value = integral ** (1.0 / p)
    err = value * res.error_estimate / (p * integral) if integral > 0 else 0.0
    return IntegralResult(value, err, res.levels_used)


def weighted_norm(f, p, q, spec):
    """``(int |f|^p <v>^(-p q) dv)^(1/p)`` with ``<v> = sqrt(1 + |v|^2)``."""
    return weighted_norm_result(f, p, q, spec).value
