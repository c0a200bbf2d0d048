"""Compiled inner loops.

Everything here works on plain arrays so it can be jitted.  Outer loops run
under ``prange`` with one independent accumulator per outer point; the caller
reduces the per-point results with numpy, so results do not depend on the
number of worker threads.

Moment slots returned by :func:`local_moments` and :func:`ray_moments`
(``K`` is the chosen kernel, ``rho`` the inner density, ``u`` its log-gradient)::

    0..5   sum K(z) rho                   (xx, yy, zz, xy, xz, yz)
    6..8   sum K(z) rho u
    9      sum rho u^T K(z) u
    10     sum rho / |z|                  (full kernel only)
    11     sum err(z) rho                 (cutoff kernel only)
"""

import math

import numpy as np
from numba import njit, prange

NSLOTS = 12


@njit(cache=True)
def eta_eval(x, breaks, vtab, stab):
    """Return ``(eta(x), eta'(x))`` for ``x >= 0``."""
    if x >= 1.0:
        return 1.0, 0.0
    if x <= 0.5:
        return x * x * x, 3.0 * x * x
    k = 0
    if x >= breaks[2]:
        k = 2
    elif x >= breaks[1]:
        k = 1
    t = (x - breaks[k]) / (breaks[k + 1] - breaks[k])
    v = 0.0
    s = 0.0
    for j in range(vtab.shape[1] - 1, -1, -1):
        v = v * t + vtab[k, j]
        s = s * t + stab[k, j]
    return v, s


@njit(cache=True)
def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = math.exp(-1.0 / t)
    b = math.exp(-1.0 / (1.0 - t))
    return a / (a + b)


@njit(cache=True)
def near_weight(r, r_in, r_out):
    """Partition-of-unity weight carried by the local spherical rule."""
    if r <= r_in:
        return 1.0
    if r >= r_out:
        return 0.0
    return 1.0 - smooth_step((r - r_in) / (r_out - r_in))


@njit(cache=True)
def _mixture_sums(y0, y1, y2, lmc, mmu, mT):
    K = lmc.shape[0]
    if K == 1:
        d0 = y0 - mmu[0, 0]
        d1 = y1 - mmu[0, 1]
        d2 = y2 - mmu[0, 2]
        e = lmc[0] - 0.5 * (d0 * d0 + d1 * d1 + d2 * d2) / mT[0]
        return e, 1.0, -d0 / mT[0], -d1 / mT[0], -d2 / mT[0]
    lmax = -np.inf
    for k in range(K):
        d0 = y0 - mmu[k, 0]
        d1 = y1 - mmu[k, 1]
        d2 = y2 - mmu[k, 2]
        e = lmc[k] - 0.5 * (d0 * d0 + d1 * d1 + d2 * d2) / mT[k]
        if e > lmax:
            lmax = e
    s = 0.0
    g0 = 0.0
    g1 = 0.0
    g2 = 0.0
    for k in range(K):
        d0 = y0 - mmu[k, 0]
        d1 = y1 - mmu[k, 1]
        d2 = y2 - mmu[k, 2]
        p = math.exp(lmc[k] - 0.5 * (d0 * d0 + d1 * d1 + d2 * d2) / mT[k] - lmax)
        s += p
        g0 -= p * d0 / mT[k]
        g1 -= p * d1 / mT[k]
        g2 -= p * d2 / mT[k]
    return lmax, s, g0 / s, g1 / s, g2 / s


@njit(cache=True)
def mixture_eval(y0, y1, y2, lmc, mmu, mT):
    """Value and log-gradient of a Gaussian mixture at one point."""
    lmax, s, u0, u1, u2 = _mixture_sums(y0, y1, y2, lmc, mmu, mT)
    return s * math.exp(lmax), u0, u1, u2


@njit(cache=True)
def mixture_logeval(y0, y1, y2, lmc, mmu, mT):
    """Log-value and log-gradient of a Gaussian mixture at one point."""
    lmax, s, u0, u1, u2 = _mixture_sums(y0, y1, y2, lmc, mmu, mT)
    return lmax + math.log(s), u0, u1, u2


@njit(cache=True)
def _kernel_scalars(r, cut, breaks, vtab, stab):
    # returns (s, pot, err) with K(z) = s * (I - zhat zhat)
    if cut:
        if r <= 0.5:
            return r * r, 0.0, -6.0
        eta, deta = eta_eval(r, breaks, vtab, stab)
        return eta / r, 0.0, -2.0 * deta / (r * r)
    inv = 1.0 / r
    return inv, inv, 0.0


@njit(cache=True)
def _accumulate(acc, e0, e1, e2, s, pot, err, w, u0, u1, u2):
    ws = w * s
    acc[0] += ws * (1.0 - e0 * e0)
    acc[1] += ws * (1.0 - e1 * e1)
    acc[2] += ws * (1.0 - e2 * e2)
    acc[3] -= ws * e0 * e1
    acc[4] -= ws * e0 * e2
    acc[5] -= ws * e1 * e2
    ue = u0 * e0 + u1 * e1 + u2 * e2
    acc[6] += ws * (u0 - ue * e0)
    acc[7] += ws * (u1 - ue * e1)
    acc[8] += ws * (u2 - ue * e2)
    acc[9] += ws * (u0 * u0 + u1 * u1 + u2 * u2 - ue * ue)
    acc[10] += w * pot
    acc[11] += w * err


@njit(parallel=True, cache=True)
def local_moments(points, gx, gw, gf, gu, lmc, mmu, mT, rr, rw, dirs, dw,
                  r_in, r_out, cut, breaks, vtab, stab, use_grid, use_near):
    """Kernel moments of a Gaussian-mixture density around each point.

    Far field: the grid nodes ``gx`` (weights ``gw``, values ``gf``,
    log-gradients ``gu``) weighted by ``1 - chi``.  Near field: spherical
    nodes ``x - r*omega`` weighted by ``chi``, with the density evaluated
    from the mixture parameters.  ``rw`` already contains the ``r^2``
    Jacobian.
    """
    n = points.shape[0]
    out = np.zeros((n, NSLOTS))
    rin2 = r_in * r_in
    width = r_out - r_in
    nr = rr.shape[0]
    nw = np.empty(nr)
    ns = np.empty(nr)
    npot = np.empty(nr)
    nerr = np.empty(nr)
    for k in range(nr):
        nw[k] = rw[k] * near_weight(rr[k], r_in, r_out)
        ns[k], npot[k], nerr[k] = _kernel_scalars(rr[k], cut, breaks, vtab, stab)
    for p in prange(n):
        acc = np.zeros(NSLOTS)
        x0 = points[p, 0]
        x1 = points[p, 1]
        x2 = points[p, 2]
        if use_grid:
            for j in range(gx.shape[0]):
                z0 = x0 - gx[j, 0]
                z1 = x1 - gx[j, 1]
                z2 = x2 - gx[j, 2]
                r2 = z0 * z0 + z1 * z1 + z2 * z2
                if r2 <= rin2 or r2 == 0.0:
                    continue
                r = math.sqrt(r2)
                w = gw[j] * gf[j]
                if r < r_out:
                    w *= smooth_step((r - r_in) / width)
                s, pot, err = _kernel_scalars(r, cut, breaks, vtab, stab)
                _accumulate(acc, z0 / r, z1 / r, z2 / r, s, pot, err, w,
                            gu[j, 0], gu[j, 1], gu[j, 2])
        if use_near:
            # radial sums per direction first; the angular factor is applied once
            for m in range(dirs.shape[0]):
                e0 = dirs[m, 0]
                e1 = dirs[m, 1]
                e2 = dirs[m, 2]
                a_w = 0.0
                a_u0 = 0.0
                a_u1 = 0.0
                a_u2 = 0.0
                a_uu = 0.0
                a_pot = 0.0
                a_err = 0.0
                for k in range(rr.shape[0]):
                    r = rr[k]
                    fv, u0, u1, u2 = mixture_eval(x0 - r * e0, x1 - r * e1,
                                                  x2 - r * e2, lmc, mmu, mT)
                    w = nw[k] * fv
                    ws = w * ns[k]
                    ue = u0 * e0 + u1 * e1 + u2 * e2
                    a_w += ws
                    a_u0 += ws * u0
                    a_u1 += ws * u1
                    a_u2 += ws * u2
                    a_uu += ws * (u0 * u0 + u1 * u1 + u2 * u2 - ue * ue)
                    a_pot += w * npot[k]
                    a_err += w * nerr[k]
                d = dw[m]
                a_w *= d
                ue = (a_u0 * e0 + a_u1 * e1 + a_u2 * e2) * d
                acc[0] += a_w * (1.0 - e0 * e0)
                acc[1] += a_w * (1.0 - e1 * e1)
                acc[2] += a_w * (1.0 - e2 * e2)
                acc[3] -= a_w * e0 * e1
                acc[4] -= a_w * e0 * e2
                acc[5] -= a_w * e1 * e2
                acc[6] += a_u0 * d - ue * e0
                acc[7] += a_u1 * d - ue * e1
                acc[8] += a_u2 * d - ue * e2
                acc[9] += a_uu * d
                acc[10] += a_pot * d
                acc[11] += a_err * d
        for q in range(NSLOTS):
            out[p, q] = acc[q]
    return out


# ---------------------------------------------------------------------------
# anisotropic bump patch


@njit(cache=True)
def bump_level(t0, t1, t2, c0, sd, logk, log_alpha, rmax, has_bg, lmc, mmu, mT):
    """Positive inside the bump-dominated set, in stretched coordinates."""
    q = t0 * t0 + t1 * t1 + t2 * t2
    if q >= rmax * rmax:
        return -1.0
    lg = logk + log_alpha - 1.0 / (1.0 - q)
    if not has_bg:
        return 1.0
    lf, _, _, _ = mixture_logeval(c0[0] + sd[0] * t0, c0[1] + sd[1] * t1,
                               c0[2] + sd[2] * t2, lmc, mmu, mT)
    return lg - lf


@njit(cache=True)
def ray_exit(t0, t1, t2, o0, o1, o2, c0, sd, logk, log_alpha, rmax, has_bg,
             lmc, mmu, mT):
    """Distance along ``o`` from an interior point to the set boundary."""
    b = t0 * o0 + t1 * o1 + t2 * o2
    q = t0 * t0 + t1 * t1 + t2 * t2
    disc = b * b - (q - rmax * rmax)
    if disc <= 0.0:
        return 0.0
    hi = -b + math.sqrt(disc)
    if hi <= 0.0:
        return 0.0
    if not has_bg:
        return hi
    if bump_level(t0, t1, t2, c0, sd, logk, log_alpha, rmax, has_bg, lmc, mmu, mT) <= 0.0:
        return 0.0
    lo = 0.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if bump_level(t0 + mid * o0, t1 + mid * o1, t2 + mid * o2, c0, sd, logk,
                      log_alpha, rmax, has_bg, lmc, mmu, mT) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def patch_rule(r01, w01, dirs, dw, c0, sd, logk, log_alpha, rmax, has_bg, lmc, mmu, mT):
    """Star-shaped rule over the bump set, centred at the bump centre.

    Returns stretched-coordinate nodes and their weights (stretched measure).
    """
    nr = r01.shape[0]
    nd = dirs.shape[0]
    nodes = np.zeros((nr * nd, 3))
    weights = np.zeros(nr * nd)
    i = 0
    for m in range(nd):
        T = ray_exit(0.0, 0.0, 0.0, dirs[m, 0], dirs[m, 1], dirs[m, 2], c0, sd,
                     logk, log_alpha, rmax, has_bg, lmc, mmu, mT)
        for k in range(nr):
            t = T * r01[k]
            nodes[i, 0] = t * dirs[m, 0]
            nodes[i, 1] = t * dirs[m, 1]
            nodes[i, 2] = t * dirs[m, 2]
            weights[i] = dw[m] * w01[k] * T * t * t
            i += 1
    return nodes, weights


@njit(parallel=True, cache=True)
def ray_moments(outer, r01, w01, dirs, dw, c0, sd, logk, log_alpha, rmax, has_bg,
                lmc, mmu, mT, breaks, vtab, stab):
    """Kernel moments over the bump set seen from interior points.

    Each outer point (stretched coordinates) is the centre of its own
    spherical rule whose rays are cut at the set boundary, so the ``1/r``
    singularity is absorbed by the ``r^2`` Jacobian.  Output ``(n, 4, NSLOTS)``
    holds, in order, the moments of the bump and of the background under the
    full kernel, then the same two under the cutoff kernel.  Weights are in
    the physical measure.
    """
    n = outer.shape[0]
    out = np.zeros((n, 4, NSLOTS))
    det = sd[0] * sd[1] * sd[2]
    for p in prange(n):
        acc = np.zeros((4, NSLOTS))
        t0 = outer[p, 0]
        t1 = outer[p, 1]
        t2 = outer[p, 2]
        for m in range(dirs.shape[0]):
            o0 = dirs[m, 0]
            o1 = dirs[m, 1]
            o2 = dirs[m, 2]
            T = ray_exit(t0, t1, t2, o0, o1, o2, c0, sd, logk, log_alpha, rmax,
                         has_bg, lmc, mmu, mT)
            if T <= 0.0:
                continue
            a0 = sd[0] * o0
            a1 = sd[1] * o1
            a2 = sd[2] * o2
            alen = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
            e0 = a0 / alen
            e1 = a1 / alen
            e2 = a2 / alen
            for k in range(r01.shape[0]):
                t = T * r01[k]
                y0 = t0 + t * o0
                y1 = t1 + t * o1
                y2 = t2 + t * o2
                r = t * alen
                base = dw[m] * w01[k] * T * t * t * det
                q = y0 * y0 + y1 * y1 + y2 * y2
                om = 1.0 - q
                g = -2.0 / (om * om)
                wb = base * math.exp(logk + log_alpha - 1.0 / om)
                ub0 = g * y0 / sd[0]
                ub1 = g * y1 / sd[1]
                ub2 = g * y2 / sd[2]
                s, pot, err = _kernel_scalars(r, False, breaks, vtab, stab)
                sc, potc, errc = _kernel_scalars(r, True, breaks, vtab, stab)
                _accumulate(acc[0], e0, e1, e2, s, pot, err, wb, ub0, ub1, ub2)
                _accumulate(acc[2], e0, e1, e2, sc, potc, errc, wb, ub0, ub1, ub2)
                if has_bg:
                    lf, uf0, uf1, uf2 = mixture_logeval(c0[0] + sd[0] * y0,
                                                        c0[1] + sd[1] * y1,
                                                        c0[2] + sd[2] * y2, lmc, mmu, mT)
                    wf = base * math.exp(lf)
                    _accumulate(acc[1], e0, e1, e2, s, pot, err, wf, uf0, uf1, uf2)
                    _accumulate(acc[3], e0, e1, e2, sc, potc, errc, wf, uf0, uf1, uf2)
        for a in range(4):
            for q in range(NSLOTS):
                out[p, a, q] = acc[a, q]
    return out


# ---------------------------------------------------------------------------
# anisotropic ellipsoids


@njit(cache=True)
def _pw_value(lam, d0, d1, d2, n, m, inv_ratio):
    # C = lam * Ai^-1 + (1-lam) * Aj^-1 for unit-scale ellipsoids,
    # A^-1 = I + (1/N^2 - 1) n n^T
    k = inv_ratio - 1.0
    c00 = 1.0 + k * (lam * n[0] * n[0] + (1 - lam) * m[0] * m[0])
    c11 = 1.0 + k * (lam * n[1] * n[1] + (1 - lam) * m[1] * m[1])
    c22 = 1.0 + k * (lam * n[2] * n[2] + (1 - lam) * m[2] * m[2])
    c01 = k * (lam * n[0] * n[1] + (1 - lam) * m[0] * m[1])
    c02 = k * (lam * n[0] * n[2] + (1 - lam) * m[0] * m[2])
    c12 = k * (lam * n[1] * n[2] + (1 - lam) * m[1] * m[2])
    i00 = c11 * c22 - c12 * c12
    i01 = c02 * c12 - c01 * c22
    i02 = c01 * c12 - c02 * c11
    i11 = c00 * c22 - c02 * c02
    i12 = c01 * c02 - c00 * c12
    i22 = c00 * c11 - c01 * c01
    det = c00 * i00 + c01 * i01 + c02 * i02
    quad = (d0 * (i00 * d0 + i01 * d1 + i02 * d2)
            + d1 * (i01 * d0 + i11 * d1 + i12 * d2)
            + d2 * (i02 * d0 + i12 * d1 + i22 * d2)) / det
    return lam * (1.0 - lam) * quad


@njit(cache=True)
def ellipsoids_disjoint(ci, ni, cj, nj, scale, shell):
    """Exact disjointness of two scaled anisotropic ellipsoids.

    Uses the Perram-Wertheim contact function: the closed ellipsoids are
    disjoint iff its maximum over ``[0, 1]`` exceeds 1.
    """
    d0 = (cj[0] - ci[0]) / scale
    d1 = (cj[1] - ci[1]) / scale
    d2 = (cj[2] - ci[2]) / scale
    dist2 = d0 * d0 + d1 * d1 + d2 * d2
    if dist2 > 4.0:
        return True
    if dist2 * shell * shell <= 4.0:
        return False
    inv_ratio = 1.0 / (shell * shell)
    a = 0.0
    b = 1.0
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1 = _pw_value(x1, d0, d1, d2, ni, nj, inv_ratio)
    f2 = _pw_value(x2, d0, d1, d2, ni, nj, inv_ratio)
    for _ in range(60):
        if f1 > 1.0 or f2 > 1.0:
            return True
        if f1 < f2:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + g * (b - a)
            f2 = _pw_value(x2, d0, d1, d2, ni, nj, inv_ratio)
        else:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - g * (b - a)
            f1 = _pw_value(x1, d0, d1, d2, ni, nj, inv_ratio)
    return max(f1, f2) > 1.0


@njit(cache=True)
def greedy_disjoint(centers, normals, scale, shell, box, cell):
    """Greedy maximal subfamily with pairwise disjoint scaled ellipsoids.

    ``centers`` must already be in the desired acceptance order.
    """
    n = centers.shape[0]
    nc = int(math.ceil(2.0 * box / cell)) + 1
    head = -np.ones(nc * nc * nc, dtype=np.int64)
    nxt = -np.ones(n, dtype=np.int64)
    chosen = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        ix = int((centers[i, 0] + box) / cell)
        iy = int((centers[i, 1] + box) / cell)
        iz = int((centers[i, 2] + box) / cell)
        ok = True
        for ax in range(max(ix - 1, 0), min(ix + 2, nc)):
            if not ok:
                break
            for ay in range(max(iy - 1, 0), min(iy + 2, nc)):
                if not ok:
                    break
                for az in range(max(iz - 1, 0), min(iz + 2, nc)):
                    j = head[(ax * nc + ay) * nc + az]
                    while j >= 0:
                        if not ellipsoids_disjoint(centers[j], normals[j], centers[i],
                                                   normals[i], scale, shell):
                            ok = False
                            break
                        j = nxt[j]
                    if not ok:
                        break
        if ok:
            chosen[i] = True
            c = (ix * nc + iy) * nc + iz
            nxt[i] = head[c]
            head[c] = i
    return chosen


@njit(parallel=True, cache=True)
def membership_counts(points, centers, normals, shell, box):
    """Number of unit ellipsoids containing each point."""
    nc = int(math.ceil(2.0 * box / 2.0)) + 1
    cell = 2.0
    ncen = centers.shape[0]
    head = -np.ones(nc * nc * nc, dtype=np.int64)
    nxt = -np.ones(ncen, dtype=np.int64)
    for i in range(ncen):
        ix = int((centers[i, 0] + box) / cell)
        iy = int((centers[i, 1] + box) / cell)
        iz = int((centers[i, 2] + box) / cell)
        c = (ix * nc + iy) * nc + iz
        nxt[i] = head[c]
        head[c] = i
    n2 = shell * shell
    counts = np.zeros(points.shape[0], dtype=np.int64)
    for p in prange(points.shape[0]):
        x = points[p]
        ix = int((x[0] + box) / cell)
        iy = int((x[1] + box) / cell)
        iz = int((x[2] + box) / cell)
        cnt = 0
        for ax in range(max(ix - 1, 0), min(ix + 2, nc)):
            for ay in range(max(iy - 1, 0), min(iy + 2, nc)):
                for az in range(max(iz - 1, 0), min(iz + 2, nc)):
                    j = head[(ax * nc + ay) * nc + az]
                    while j >= 0:
                        d0 = x[0] - centers[j, 0]
                        d1 = x[1] - centers[j, 1]
                        d2 = x[2] - centers[j, 2]
                        dn = d0 * normals[j, 0] + d1 * normals[j, 1] + d2 * normals[j, 2]
                        if (n2 - 1.0) * dn * dn + d0 * d0 + d1 * d1 + d2 * d2 <= 1.0:
                            cnt += 1
                        j = nxt[j]
        counts[p] = cnt
    return counts
