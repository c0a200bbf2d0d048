"""Annuli, radially compressed ellipsoids, coverings and shell estimates.

The ellipsoid attached to a center ``c`` in the annulus ``A_N`` has semi-axis
``1/N`` along ``c`` and 1 across it, scaled by ``lambda``.  Membership is the
exact quadratic-form test ``N^2 ((x-c).n)^2 + |P_perp(x-c)|^2 <= lambda^2``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _jit, engine
from .densities import Mixture
from .errors import ConstructionError, DomainError
from .profile import DEFAULT_PROFILE
from .quadrature import QuadratureSpec, radial_rule, sphere_rule


def annulus_index(v):
    """``N`` with ``N - 1 < |v| <= N``; the origin belongs to ``A_1``."""
    r = float(np.linalg.norm(np.asarray(v, dtype=float)))
    return max(1, int(math.ceil(r)))


def enlarged_annulus_bounds(N):
    """Radial bounds ``(lo, hi]`` of ``A_{N-1} u A_N u A_{N+1}``."""
    return max(N - 2.0, 0.0), N + 1.0


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple
    N: int
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (3,) or not np.linalg.norm(c) > 0:
            raise DomainError("center must be a non-zero 3-vector")
        if self.N < 1 or self.scale <= 0:
            raise DomainError("need N >= 1 and scale > 0")
        object.__setattr__(self, "center", tuple(c))

    @property
    def normal(self):
        c = np.asarray(self.center)
        return c / np.linalg.norm(c)

    def linear_map(self):
        """``T = I + (N - 1) n n^T``; sends the unit ellipsoid to the unit ball."""
        n = self.normal
        return np.eye(3) + (self.N - 1) * np.outer(n, n)

    def contains(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        dn = d @ self.normal
        q = self.N ** 2 * dn ** 2 + np.einsum("...j,...j->...", d, d) - dn ** 2
        return q <= self.scale ** 2

    @property
    def volume(self):
        return 4.0 * math.pi / 3.0 * self.scale ** 3 / self.N

    def radial_extent(self):
        """Smallest and largest ``|x|`` over the ellipsoid, in closed form."""
        rho = float(np.linalg.norm(self.center))
        s, N = self.scale, self.N
        lo = max(rho - s / N, 0.0) if N > 1 else max(rho - s, 0.0)
        if N == 1:
            return lo, rho + s
        a = min(rho / (N * N - 1.0), s / N)
        hi2 = rho * rho + 2 * rho * a + s * s - (N * N - 1.0) * a * a
        return lo, math.sqrt(hi2)


def ellipsoid_contains(E, x):
    return E.contains(x)


def transform_T0(E, x):
    """``T (x - center)``; maps ``E`` (scale 1) onto the unit ball."""
    d = np.asarray(x, dtype=float) - np.asarray(E.center)
    n = E.normal
    return d + (E.N - 1) * np.einsum("...j,j->...", d, n)[..., None] * n


# ---------------------------------------------------------------------------
# covering


def _sphere_lattice(radius, spacing):
    """Latitude/longitude points on a sphere with neighbour spacing <= ``spacing``."""
    n_lat = max(1, int(math.ceil(math.pi * radius / spacing)))
    pts = []
    for i in range(n_lat):
        theta = math.pi * (i + 0.5) / n_lat
        ring = 2 * math.pi * radius * math.sin(theta)
        n_lon = max(1, int(math.ceil(ring / spacing)))
        phi = 2 * math.pi * (np.arange(n_lon) + 0.5 * (i % 2)) / n_lon
        st = math.sin(theta)
        pts.append(np.stack([st * np.cos(phi), st * np.sin(phi),
                             np.full(n_lon, math.cos(theta))], axis=1))
    return radius * np.concatenate(pts)


def candidate_centers(N, spacing=0.25):
    """Shell lattice on ``A_N``: radial step ``<= spacing/N``, tangential ``<= spacing``.

    For ``N = 1`` the centers lie on the unit sphere.
    """
    if N < 1:
        raise DomainError("N must be a positive integer")
    if N == 1:
        return _sphere_lattice(1.0, spacing)
    n_r = int(math.ceil(N / spacing))
    radii = N - 1 + (np.arange(n_r) + 0.5) / n_r
    return np.concatenate([_sphere_lattice(r, spacing) for r in radii])


@dataclass
class Covering:
    N: int
    centers: np.ndarray
    candidates: int = 0
    verification: dict = field(default_factory=dict)

    @property
    def count(self):
        return len(self.centers)

    @property
    def normals(self):
        return self.centers / np.linalg.norm(self.centers, axis=1, keepdims=True)

    def ellipsoids(self, scale=1.0):
        return [Ellipsoid(tuple(c), self.N, scale) for c in self.centers]

    def multiplicity(self, points):
        return _jit.membership_counts(np.ascontiguousarray(points), self.centers,
                                      np.ascontiguousarray(self.normals), float(self.N),
                                      float(self.N + 2))

    def to_text(self):
        lines = ["# N x y z"]
        lines += [f"{self.N} {c[0]:.17g} {c[1]:.17g} {c[2]:.17g}" for c in self.centers]
        return "\n".join(lines) + "\n"


def vitali_cover(N, seed_spacing=0.25, verify=True, samples=100_000, seed=0):
    """Maximal family of centers whose 1/3-scaled ellipsoids are pairwise disjoint.

    Candidates come from :func:`candidate_centers`, sorted lexicographically,
    and are accepted greedily.  Disjointness is decided exactly.  With
    ``verify`` the covering is audited by sampling and a
    :class:`ConstructionError` is raised if a sample of ``A_N`` is uncovered.
    """
    cand = candidate_centers(N, seed_spacing)
    order = np.lexsort((cand[:, 2], cand[:, 1], cand[:, 0]))
    cand = np.ascontiguousarray(cand[order])
    normals = cand / np.linalg.norm(cand, axis=1, keepdims=True)
    chosen = _jit.greedy_disjoint(cand, normals, 1.0 / 3.0, float(N), float(N + 2), 2.0 / 3.0)
    cover = Covering(N, cand[chosen], len(cand))
    if verify:
        cover.verification = audit_cover(cover, samples, seed)
        if cover.verification["coverage"] < 1.0:
            raise ConstructionError(f"sample of A_{N} not covered",
                                    witness=cover.verification["uncovered"])
    return cover


def sample_annulus(N, n, rng):
    """Uniform samples of ``A_N``."""
    lo, hi = N - 1.0, float(N)
    r = (lo ** 3 + rng.random(n) * (hi ** 3 - lo ** 3)) ** (1.0 / 3.0)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return r[:, None] * d


def sample_union(cover, n, rng):
    """Uniform samples of the union of the unit ellipsoids.

    Draws from the equal-weight mixture of the ellipsoids and thins by the
    inverse multiplicity, which leaves the uniform law on the union.
    """
    out = []
    total = 0
    normals = cover.normals
    while total < n:
        m = 2 * (n - total) + 1000
        idx = rng.integers(0, cover.count, m)
        y = rng.normal(size=(m, 3))
        y *= (rng.random(m) ** (1.0 / 3.0) / np.linalg.norm(y, axis=1))[:, None]
        nrm = normals[idx]
        yn = np.einsum("ij,ij->i", y, nrm)
        x = cover.centers[idx] + y + (1.0 / cover.N - 1.0) * yn[:, None] * nrm
        mult = cover.multiplicity(x)
        keep = rng.random(m) * np.maximum(mult, 1) < 1.0
        out.append(x[keep])
        total += int(keep.sum())
    return np.concatenate(out)[:n]


def audit_cover(cover, samples=100_000, seed=0):
    """Sampled coverage of ``A_N``, sampled multiplicity, and containment."""
    rng = np.random.default_rng(seed)
    pts = sample_annulus(cover.N, samples, rng)
    counts = cover.multiplicity(pts)
    uncovered = pts[counts == 0]
    union = sample_union(cover, samples, rng)
    mult = cover.multiplicity(union)
    lo, hi = enlarged_annulus_bounds(cover.N)
    ext = np.array([Ellipsoid(tuple(c), cover.N).radial_extent() for c in cover.centers])
    r_union = np.linalg.norm(union, axis=1)
    strict_lo = cover.N >= 2
    inside_lo = ext[:, 0] > lo if strict_lo else ext[:, 0] >= lo
    contained = bool(np.all(inside_lo) and np.all(ext[:, 1] <= hi + 1e-12))
    miss = len(uncovered)
    return {
        "coverage": 1.0 - miss / samples,
        # one-sided 95% upper bound on the uncovered volume fraction
        "uncovered_bound_95": float(stats.beta.ppf(0.95, miss + 1, samples - miss)),
        "uncovered": uncovered[0] if len(uncovered) else None,
        "max_multiplicity": int(mult.max()),
        "mean_multiplicity": float(mult.mean()),
        "contained": contained,
        "sampled_radius_range": (float(r_union.min()), float(r_union.max())),
        "extent_range": (float(ext[:, 0].min()), float(ext[:, 1].max())),
    }


def halved_images_disjoint(cover):
    """Exact pairwise check that the 1/3-scaled ellipsoids are disjoint."""
    c = cover.centers
    n = cover.normals
    for i in range(len(c)):
        d = np.linalg.norm(c[i + 1:] - c[i], axis=1)
        for j in np.nonzero(d <= 2.0 / 3.0)[0] + i + 1:
            if not _jit.ellipsoids_disjoint(c[i], n[i], c[j], n[j], 1.0 / 3.0, float(cover.N)):
                return False
    return True


# ---------------------------------------------------------------------------
# shell estimate


def shell_nodes(lo, hi, n_radial, n_theta):
    """Spherical-shell rule on ``lo < |v| <= hi``: ``(points, weights)``."""
    rr, rw = radial_rule((float(lo), float(hi)), n_radial)
    dirs, dw = sphere_rule(n_theta)
    pts = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    w = ((rw * rr * rr)[:, None] * dw[None, :]).ravel()
    return pts, w


def _fisher_density(f, pts, spec, k, profile):
    rows = engine.mixture_moments(f, pts, spec, k, cut=True, profile=profile)
    u = f.log_gradient(pts)
    return f.evaluate(pts) * np.einsum("ni,nij,nj->n", u, engine.to_matrix(rows[:, :6]), u)


@dataclass(frozen=True)
class ShellEstimate:
    N: int
    fisher: float
    mass_term: float
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else math.nan


def shell_estimate(f, N, spec=None, profile=DEFAULT_PROFILE, M0=None, n_radial=24,
                   n_theta=12, level=None):
    """Both sides of the local coercivity estimate on the shell ``A_N``.

    ``lhs = int_{A~_N} f u^T (abar * f) u + (M0/N) int_{A~_N} s^2`` and
    ``rhs = N^{-5/3} (int_{A_N} s^6)^{1/3}`` with ``s = 2 sqrt(f)``.
    """
    if not isinstance(f, Mixture):
        raise DomainError("shell estimates need a Gaussian-mixture density")
    spec = spec or QuadratureSpec()
    k = level or spec.refinement_levels
    M0 = f.mass if M0 is None else M0
    lo, hi = enlarged_annulus_bounds(N)
    pieces = [(a, a + 1.0) for a in np.arange(lo, hi)]
    fisher = mass = 0.0
    for a, b in pieces:
        pts, w = shell_nodes(a, b, n_radial, n_theta)
        fisher += float(np.sum(w * _fisher_density(f, pts, spec, k, profile)))
        mass += float(np.sum(w * 4.0 * f.evaluate(pts)))
    pts, w = shell_nodes(N - 1.0, float(N), n_radial, n_theta)
    s6 = float(np.sum(w * 64.0 * f.evaluate(pts) ** 3))
    lhs = fisher + M0 / N * mass
    rhs = N ** (-5.0 / 3.0) * s6 ** (1.0 / 3.0)
    return ShellEstimate(N, fisher, M0 / N * mass, lhs, rhs)


def ellipsoid_estimate(f, E, spec=None, profile=DEFAULT_PROFILE, M0=None, n_radial=8,
                       n_theta=4, level=1):
    """Both sides of the single-ellipsoid estimate on ``E`` (scale 1)."""
    spec = spec or QuadratureSpec()
    M0 = f.mass if M0 is None else M0
    y, w = shell_nodes(0.0, 1.0, n_radial, n_theta)
    n = E.normal
    x = np.asarray(E.center) + y + (1.0 / E.N - 1.0) * (y @ n)[:, None] * n
    w = w / E.N
    fisher = float(np.sum(w * _fisher_density(f, x, spec, level, profile)))
    fv = f.evaluate(x)
    mass = float(np.sum(w * 4.0 * fv))
    s6 = float(np.sum(w * 64.0 * fv ** 3))
    lhs = fisher + M0 / E.N * mass
    rhs = E.N ** (-5.0 / 3.0) * s6 ** (1.0 / 3.0)
    return ShellEstimate(E.N, fisher, M0 / E.N * mass, lhs, rhs)
