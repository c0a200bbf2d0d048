"""Closed-form velocity densities.

Every density evaluates on arrays of shape ``(..., 3)`` and knows how to
integrate a pointwise functional ``F(v, f(v))`` of itself accurately:
Gaussian mixtures use the midpoint grid, bumps use a star-shaped rule in
their stretched coordinates, and ``MaxOfTwo`` combines both.
"""

import math

import numpy as np

from . import _jit
from .errors import ConstructionError, DomainError
from .quadrature import combine, sphere_rule, unit_radial_rule

# Normalisation of exp(-1/(1-|x|^2)) on the unit ball: 1 / int_B exp(-1/(1-|x|^2)) dx.
# Computed with mpmath adaptive quadrature at 30 digits in radial form.
ALPHA0 = 2.267116739608326
# int phi |log phi| for the unit-mass bump (same provenance).
BETA0 = 0.8437737296733789
# int phi |grad log phi|^2 (same provenance).
BUMP_FISHER = 50.92108671123291

FLOOR = 1e-300


def _as_points(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise DomainError("points must have a trailing dimension of 3")
    return v


class Density:
    """Interface shared by all densities."""

    support_radius_hint = np.inf

    def log_evaluate(self, v):
        raise NotImplementedError

    def evaluate(self, v):
        return np.exp(self.log_evaluate(v))

    def log_gradient(self, v):
        raise NotImplementedError

    def gradient(self, v):
        return self.evaluate(v)[..., None] * self.log_gradient(v)

    def sqrt_gradient(self, v):
        """Gradient of ``s = 2*sqrt(f)``, i.e. ``sqrt(f) * grad log f``."""
        return np.sqrt(self.evaluate(v))[..., None] * self.log_gradient(v)

    def integrate(self, fn, spec):
        """``int F(v, f(v)) dv`` for a vectorised ``fn(v, values)``."""
        raise NotImplementedError

    def scaled(self, factor):
        raise NotImplementedError


class Mixture(Density):
    """Finite mixture of isotropic Gaussians.

    ``masses``, ``means`` (K x 3) and ``temperatures`` describe the
    components ``m_k (2 pi T_k)^(-3/2) exp(-|v - mu_k|^2 / (2 T_k))``.
    """

    def __init__(self, masses, means, temperatures):
        self.masses = np.atleast_1d(np.asarray(masses, dtype=float))
        self.means = np.atleast_2d(np.asarray(means, dtype=float))
        self.temperatures = np.atleast_1d(np.asarray(temperatures, dtype=float))
        k = len(self.masses)
        if self.means.shape != (k, 3) or self.temperatures.shape != (k,):
            raise DomainError("inconsistent mixture component shapes")
        if np.any(self.masses <= 0) or np.any(self.temperatures <= 0):
            raise DomainError("masses and temperatures must be positive")
        self._lmc = np.log(self.masses) - 1.5 * np.log(2 * np.pi * self.temperatures)
        spread = np.sqrt(self.temperatures) * 9.0 + np.linalg.norm(self.means, axis=1)
        self.support_radius_hint = float(np.max(spread))

    def __repr__(self):
        return (f"{type(self).__name__}(masses={self.masses.tolist()}, "
                f"means={self.means.tolist()}, temperatures={self.temperatures.tolist()})")

    @property
    def mass(self):
        return float(np.sum(self.masses))

    def gaussian_params(self):
        return self._lmc, self.means, self.temperatures

    def _exponents(self, v):
        d = v[..., None, :] - self.means
        return self._lmc - 0.5 * np.einsum("...kj,...kj->...k", d, d) / self.temperatures, d

    def log_evaluate(self, v):
        e, _ = self._exponents(_as_points(v))
        m = np.max(e, axis=-1)
        return m + np.log(np.sum(np.exp(e - m[..., None]), axis=-1))

    def log_gradient(self, v):
        e, d = self._exponents(_as_points(v))
        p = np.exp(e - np.max(e, axis=-1, keepdims=True))
        p /= np.sum(p, axis=-1, keepdims=True)
        return -np.einsum("...k,...kj->...j", p / self.temperatures, d)

    def integrate(self, fn, spec):
        from .quadrature import integrate3

        def integrand(v):
            return fn(v, self.evaluate(v))

        return integrate3(integrand, spec)

    def scaled(self, factor):
        return Mixture(self.masses * factor, self.means, self.temperatures)

    def grid(self, spec, k):
        """Pruned grid nodes at level ``k``: ``(nodes, weights, f, log_grad)``."""
        from .quadrature import midpoint_grid

        pts, w = midpoint_grid(spec.truncation_radius, spec.level(k).nodes_per_axis)
        f = self.evaluate(pts)
        keep = f > spec.prune * f.max()
        pts = np.ascontiguousarray(pts[keep])
        return pts, w[keep], f[keep], np.ascontiguousarray(self.log_gradient(pts))


class Maxwellian(Mixture):
    """Single Gaussian ``mass (2 pi T)^(-3/2) exp(-|v - mean|^2 / (2T))``."""

    def __init__(self, mass=1.0, mean=(0.0, 0.0, 0.0), temperature=1.0):
        super().__init__([mass], [mean], [temperature])

    def __repr__(self):
        return (f"Maxwellian(mass={self.masses[0]}, mean={self.means[0].tolist()}, "
                f"temperature={self.temperatures[0]})")

    def scaled(self, factor):
        return Maxwellian(self.masses[0] * factor, self.means[0], self.temperatures[0])


def bump_log_profile(q):
    """``log(phi)`` as a function of ``q = |x|^2`` (``-inf`` outside the ball)."""
    q = np.asarray(q, dtype=float)
    out = np.full(q.shape, -np.inf)
    inside = q < 1.0
    out[inside] = math.log(ALPHA0) - 1.0 / (1.0 - q[inside])
    return out


class AffineBump(Density):
    """``k * phi(S^-1 (v - center))`` with diagonal stretch ``S``.

    ``phi`` is the unit-mass bump on the unit ball.  The log-gradient is
    only evaluated where the stretched radius is at most ``1 - clamp``; it
    is reported as 0 beyond that.
    """

    def __init__(self, center, stretch, amplitude, clamp=1e-3):
        self.center = np.asarray(center, dtype=float)
        self.stretch = np.asarray(stretch, dtype=float)
        self.amplitude = float(amplitude)
        self.clamp = float(clamp)
        if self.amplitude <= 0 or np.any(self.stretch <= 0):
            raise DomainError("amplitude and stretch must be positive")
        self.log_amplitude = math.log(self.amplitude)
        self.support_radius_hint = float(np.linalg.norm(self.center) + self.stretch.max())

    @property
    def mass(self):
        return self.amplitude * float(np.prod(self.stretch))

    def stretched(self, v):
        return (_as_points(v) - self.center) / self.stretch

    def log_evaluate(self, v):
        x = self.stretched(v)
        return self.log_amplitude + bump_log_profile(np.einsum("...j,...j->...", x, x))

    def log_gradient(self, v):
        x = self.stretched(v)
        q = np.einsum("...j,...j->...", x, x)
        ok = q <= (1.0 - self.clamp) ** 2
        om = np.where(ok, 1.0 - q, 1.0)
        g = np.where(ok, -2.0 / (om * om), 0.0)
        return g[..., None] * x / self.stretch

    def scaled(self, factor):
        return AffineBump(self.center, self.stretch, self.amplitude * factor, self.clamp)

    def patch_params(self):
        """Arguments describing this bump to the compiled patch routines."""
        return (np.ascontiguousarray(self.center), np.ascontiguousarray(self.stretch),
                self.log_amplitude, math.log(ALPHA0), 1.0 - self.clamp)

    def patch_nodes(self, spec, k, background=None):
        """Nodes and physical weights of the star rule at level ``k``.

        Without a background the rule covers the clamped bump; with a
        Gaussian-mixture background it covers ``{bump > background}``.
        """
        cnt = spec.level(k)
        r01, w01 = unit_radial_rule(cnt.patch_radial_nodes)
        dirs, dw = sphere_rule(cnt.patch_sphere_theta)
        c0, sd, logk, la, rmax = self.patch_params()
        if background is None:
            lmc, mmu, mT = _NO_BACKGROUND
            has_bg = False
        else:
            lmc, mmu, mT = background.gaussian_params()
            has_bg = True
        xt, wt = _jit.patch_rule(r01, w01, dirs, dw, c0, sd, logk, la, rmax, has_bg,
                                 lmc, mmu, mT)
        return xt, wt * float(np.prod(sd))

    def integrate(self, fn, spec):
        values = []
        for k in range(1, spec.refinement_levels + 1):
            xt, w = self.patch_nodes(spec, k)
            v = self.center + xt * self.stretch
            values.append(np.sum(w * fn(v, self.evaluate(v))))
        return combine(values, spec, "bump integral")


_NO_BACKGROUND = (np.zeros(1), np.zeros((1, 3)), np.ones(1))


class Bump(AffineBump):
    """The unit-mass bump ``phi`` centred at the origin."""

    def __init__(self, clamp=1e-3):
        super().__init__(np.zeros(3), np.ones(3), 1.0, clamp)

    def __repr__(self):
        return f"Bump(clamp={self.clamp})"


class ScaledBump(AffineBump):
    """``g(v) = c B^3 N phi(B N (v1 - N), B v2, B v3)`` with ``c = 1/(B N^5)``."""

    def __init__(self, B, N, clamp=1e-3):
        B = float(B)
        N = int(N)
        if B <= 0 or N < 1:
            raise DomainError("B must be positive and N a positive integer")
        self.B = B
        self.N = N
        self.c = 1.0 / (B * N ** 5)
        super().__init__([N, 0.0, 0.0], [1.0 / (B * N), 1.0 / B, 1.0 / B],
                         self.c * B ** 3 * N, clamp)

    def __repr__(self):
        return f"ScaledBump(B={self.B}, N={self.N}, clamp={self.clamp})"


class MaxOfTwo(Density):
    """Pointwise maximum of a Gaussian-mixture background and a bump.

    The log-gradient follows the branch attaining the maximum, with ties
    assigned to the background.
    """

    def __init__(self, background, bump):
        if not isinstance(background, Mixture):
            raise ConstructionError("background must be a Gaussian mixture")
        if not isinstance(bump, AffineBump):
            raise ConstructionError("bump must be an AffineBump")
        self.background = background
        self.bump = bump
        self.support_radius_hint = max(background.support_radius_hint,
                                       bump.support_radius_hint)

    def __repr__(self):
        return f"MaxOfTwo({self.background!r}, {self.bump!r})"

    def bump_wins(self, v):
        return self.bump.log_evaluate(v) > self.background.log_evaluate(v)

    def log_evaluate(self, v):
        return np.maximum(self.background.log_evaluate(v), self.bump.log_evaluate(v))

    def log_gradient(self, v):
        win = self.bump_wins(v)[..., None]
        return np.where(win, self.bump.log_gradient(v), self.background.log_gradient(v))

    def region_nodes(self, spec, k):
        """Star rule over ``{bump > background}``: physical nodes and weights."""
        xt, w = self.bump.patch_nodes(spec, k, self.background)
        return self.bump.center + xt * self.bump.stretch, w

    def integrate(self, fn, spec):
        base = self.background.integrate(fn, spec)
        values = []
        for k in range(1, spec.refinement_levels + 1):
            v, w = self.region_nodes(spec, k)
            corr = fn(v, self.bump.evaluate(v)) - fn(v, self.background.evaluate(v))
            values.append(np.sum(w * corr))
        corr = combine(values, None)
        return combine([base.value - base.error_estimate + corr.value - corr.error_estimate,
                        base.value + corr.value], spec, "max-of-two integral")

    def scaled(self, factor):
        return MaxOfTwo(self.background.scaled(factor), self.bump.scaled(factor))
