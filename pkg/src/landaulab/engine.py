"""Kernel-moment evaluation for Gaussian-mixture inner densities.

Thin numpy wrappers around the compiled loops.  A "moment row" holds, for
one outer point ``v``, the integrals of ``K(v - w) rho(w)`` against
``1``, ``u(w)`` and ``u(w)^T K u(w)`` (see :mod:`landaulab._jit`).
"""

import numpy as np
from scipy import fft

from . import _jit
from .profile import DEFAULT_PROFILE
from .quadrature import radial_rule, smooth_cutoff, sphere_rule

SYM = np.array([[0, 3, 4], [3, 1, 5], [4, 5, 2]])


def to_matrix(six):
    """Expand ``(..., 6)`` packed entries into ``(..., 3, 3)`` matrices."""
    six = np.asarray(six)
    return six[..., SYM]


def local_rule(spec, k, cut, profile):
    """Radial/spherical rule and partition radii for the local ball."""
    cnt = spec.level(k)
    r_in, r_out = partition_radii(spec, cut)
    if cut:
        breaks = tuple(profile.radial_breakpoints()) + (r_out,)
    else:
        breaks = (0.0, r_out)
    # node counts proportional to piece length, radial_nodes per r_loc
    unit = spec.singular_ball_radius
    counts = tuple(max(4, int(np.ceil(cnt.radial_nodes * (b - a) / unit - 1e-9)))
                   for a, b in zip(breaks[:-1], breaks[1:]))
    rr, rw = radial_rule(breaks, counts)
    dirs, dw = sphere_rule(cnt.sphere_theta)
    return rr, rw * rr * rr, dirs, dw, r_in, r_out


def partition_radii(spec, cut):
    """Radii between which the local rule hands over to the grid."""
    r_loc = spec.singular_ball_radius
    return (1.0, 1.0 + r_loc) if cut else (0.0, r_loc)


def mixture_moments(f, points, spec, k, cut=False, profile=DEFAULT_PROFILE,
                    use_grid=True, use_near=True):
    """Moment rows of the mixture ``f`` at each point, refinement level ``k``."""
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    gx, gw, gf, gu = f.grid(spec, k)
    lmc, mmu, mT = f.gaussian_params()
    rr, rw, dirs, dw, r_in, r_out = local_rule(spec, k, cut, profile)
    breaks, vt, st = profile.tables()
    return _jit.local_moments(points, gx, gw, gf, gu, lmc, mmu, mT, rr, rw, dirs, dw,
                              r_in, r_out, bool(cut), breaks, vt, st, use_grid, use_near)


def _far_kernels(n_off, h, r_in, r_out, cut):
    """Far-field kernel samples on the offset lattice ``h * m``, ``|m| < n_off``.

    Returns the six packed matrix components, the potential and the error
    kernel, each already multiplied by the grid share ``1 - chi``.
    """
    m = h * np.arange(-(n_off - 1), n_off)
    Z = np.stack(np.meshgrid(m, m, m, indexing="ij"), axis=-1)
    r = np.sqrt(np.einsum("...j,...j->...", Z, Z))
    share = 1.0 - smooth_cutoff(r, r_in, r_out)
    share[r <= r_in] = 0.0
    safe = np.where(r > 0, r, 1.0)
    s = share / safe
    e = Z / safe[..., None]
    comps = [s * (1 - e[..., 0] ** 2), s * (1 - e[..., 1] ** 2), s * (1 - e[..., 2] ** 2),
             -s * e[..., 0] * e[..., 1], -s * e[..., 0] * e[..., 2], -s * e[..., 1] * e[..., 2]]
    # beyond r_in the cutoff kernel is the full one, so its error kernel vanishes
    pot = np.zeros_like(s) if cut else s
    return comps, pot


_GRID_CACHE = {}
_GRID_CACHE_SIZE = 8


def grid_moments(f, spec, k, cut=False, profile=DEFAULT_PROFILE):
    """Cached :func:`compute_grid_moments`; densities are keyed by ``repr``."""
    key = (repr(f), spec, k, bool(cut), profile)
    hit = _GRID_CACHE.get(key)
    if hit is None:
        hit = compute_grid_moments(f, spec, k, cut, profile)
        if len(_GRID_CACHE) >= _GRID_CACHE_SIZE:
            _GRID_CACHE.pop(next(iter(_GRID_CACHE)))
        _GRID_CACHE[key] = hit
    return hit


def compute_grid_moments(f, spec, k, cut=False, profile=DEFAULT_PROFILE):
    """Moment rows at every pruned grid node of the mixture ``f``.

    The grid share of the partition is a discrete convolution on the uniform
    lattice and is evaluated with FFTs; the local share uses the compiled
    spherical rule.  Returns ``(nodes, weights, values, log_grads, rows)``.
    """
    n = spec.level(k).nodes_per_axis
    R = spec.truncation_radius
    h = 2.0 * R / n
    pts, gw, gf, gu = f.grid(spec, k)
    idx = np.rint((pts + R) / h - 0.5).astype(np.int64)
    lo = idx.min(axis=0)
    idx -= lo
    box = tuple(int(b) for b in idx.max(axis=0) + 1)
    nb = max(box)
    r_in, r_out = partition_radii(spec, cut)

    def field(values):
        a = np.zeros(box)
        a[idx[:, 0], idx[:, 1], idx[:, 2]] = values
        return a

    shape = [fft.next_fast_len(b + 2 * nb - 2, real=True) for b in box]
    wf = gw * gf
    data = [wf] + [wf * gu[:, a] for a in range(3)]
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    data += [wf * gu[:, a] * gu[:, b] for a, b in pairs]
    spectra = [fft.rfftn(field(d), shape) for d in data]
    comps, pot = _far_kernels(nb, h, r_in, r_out, cut)

    def take(spec_arr):
        full = fft.irfftn(spec_arr, shape)
        c = nb - 1
        return full[idx[:, 0] + c, idx[:, 1] + c, idx[:, 2] + c]

    rows = np.zeros((len(pts), _jit.NSLOTS))
    m1 = [0, 0, 0]
    m2 = 0
    for q, (a, b) in enumerate(pairs):
        K = fft.rfftn(comps[q], shape)
        rows[:, q] = take(K * spectra[0])
        m1[a] = m1[a] + K * spectra[1 + b]
        if a != b:
            m1[b] = m1[b] + K * spectra[1 + a]
        m2 = m2 + (1.0 if a == b else 2.0) * K * spectra[4 + q]
    for a in range(3):
        rows[:, 6 + a] = take(m1[a])
    rows[:, 9] = take(m2)
    if not cut:
        rows[:, 10] = take(fft.rfftn(pot, shape) * spectra[0])
    lmc, mmu, mT = f.gaussian_params()
    rr, rw, dirs, dw, _, _ = local_rule(spec, k, cut, profile)
    breaks, vt, st = profile.tables()
    empty = np.zeros((0, 3))
    rows += _jit.local_moments(pts, empty, np.zeros(0), np.zeros(0), empty, lmc, mmu, mT,
                               rr, rw, dirs, dw, r_in, r_out, bool(cut), breaks, vt, st,
                               False, True)
    return pts, gw, gf, gu, rows


def bump_ray_moments(bump, outer_stretched, spec, k, background=None,
                     profile=DEFAULT_PROFILE):
    """Moment rows over a bump region seen from points inside it.

    ``outer_stretched`` are outer points in the bump's stretched coordinates.
    The region is the clamped bump, or ``{bump > background}`` when a
    background mixture is given.  Returns ``(n, 4, NSLOTS)``: bump and
    background under the full kernel, then both under the cutoff kernel.
    """
    from .densities import _NO_BACKGROUND
    from .quadrature import unit_radial_rule

    cnt = spec.level(k)
    r01, w01 = unit_radial_rule(cnt.patch_radial_nodes)
    dirs, dw = sphere_rule(cnt.patch_sphere_theta)
    c0, sd, logk, la, rmax = bump.patch_params()
    if background is None:
        lmc, mmu, mT = _NO_BACKGROUND
        has_bg = False
    else:
        lmc, mmu, mT = background.gaussian_params()
        has_bg = True
    breaks, vt, st = profile.tables()
    return _jit.ray_moments(np.ascontiguousarray(outer_stretched), r01, w01, dirs, dw,
                            c0, sd, logk, la, rmax, has_bg, lmc, mmu, mT, breaks, vt, st)


def quadratic_form(rows, u):
    """``u^T M0 u - 2 u . M1 + M2`` per row: the inner integral of
    ``rho(w) (u - u(w))^T K (u - u(w))``."""
    M0 = to_matrix(rows[:, :6])
    return (np.einsum("ni,nij,nj->n", u, M0, u) - 2 * np.einsum("ni,ni->n", u, rows[:, 6:9])
            + rows[:, 9])
