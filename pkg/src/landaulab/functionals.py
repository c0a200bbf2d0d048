"""Entropy dissipation, its cutoff decomposition, moments and concentration data.

For a density ``f`` with ``u = grad log f`` the dissipation is

    D(f) = 1/2 iint a(v - w) : (u(v) - u(w))^2 f(v) f(w) dv dw.

Expanding the square around the outer node ``v`` gives
``1/2 int f(v) [u^T M0 u - 2 u.M1 + M2](v) dv`` where ``M0, M1, M2`` are the
kernel moments of ``f`` at ``v``.  The bracket is a sum of non-negative
pair terms, so a Maxwellian gives zero node by node.

With the cutoff kernel the same expansion splits exactly into the
Fisher-type term ``int f u^T (abar * f) u`` and the error term
``iint div div abar(v - w) f f``; since ``abar <= a`` the full dissipation
dominates their sum.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import engine
from .densities import MaxOfTwo, Mixture
from .errors import DegenerateInputError, DomainError
from .profile import DEFAULT_PROFILE
from .quadrature import IntegralResult, QuadratureSpec, combine, integrate3, weighted_norm


@dataclass(frozen=True)
class HydroBounds:
    m0: float
    M0: float
    E0: float
    H0: float

    def __post_init__(self):
        if not 0 < self.m0 <= self.M0:
            raise DomainError("need 0 < m0 <= M0")
        if not self.E0 > 0:
            raise DomainError("need E0 > 0")

    def admits(self, mass, energy, entropy, tol=0.0):
        return (self.m0 - tol <= mass <= self.M0 + tol and energy <= self.E0 + tol
                and entropy <= self.H0 + tol)


@dataclass(frozen=True)
class ConcentrationParams:
    R: float
    l: float
    mu: float
    Lambda: float
    H_tilde0: float


class Moments(NamedTuple):
    mass: float
    energy: float
    entropy: float


def _xlogx(val):
    out = np.zeros_like(val)
    pos = val > 0
    out[pos] = val[pos] * np.log(val[pos])
    return out


def moment_results(f, spec=None):
    """Mass, energy and entropy as :class:`IntegralResult` values."""
    spec = spec or QuadratureSpec()
    mass = f.integrate(lambda v, val: val, spec)
    energy = f.integrate(lambda v, val: val * np.einsum("ij,ij->i", v, v), spec)
    entropy = f.integrate(lambda v, val: _xlogx(val), spec)
    return mass, energy, entropy


def moments(f, spec=None):
    """``(int f, int f |v|^2, int f log f)``."""
    return Moments(*(r.value for r in moment_results(f, spec)))


def momentum(f, spec=None):
    spec = spec or QuadratureSpec()
    return np.array([f.integrate(lambda v, val, i=i: val * v[:, i], spec).value
                     for i in range(3)])


def log_one_plus(f, spec=None):
    """``int f log(1 + f)``, used as the concentration entropy constant."""
    spec = spec or QuadratureSpec()
    return f.integrate(lambda v, val: val * np.log1p(val), spec).value


def hydro_bounds_of(f, spec=None):
    """Tight hydrodynamic bounds of a concrete density."""
    m = moments(f, spec)
    return HydroBounds(m.mass, m.mass, m.energy, m.entropy)


# ---------------------------------------------------------------------------
# dissipation and its decomposition


@dataclass(frozen=True)
class DissipationParts:
    """Full dissipation and the three cutoff pieces, each with error bars."""

    dissipation: IntegralResult
    cutoff_dissipation: IntegralResult
    fisher: IntegralResult
    error: IntegralResult

    @property
    def error_sum(self):
        return (self.dissipation.error_estimate + self.fisher.error_estimate
                + self.error.error_estimate)


def _mixture_parts(f, spec, profile, want_full=True, want_cut=True):
    D, Dc, F, E = [], [], [], []
    for k in range(1, spec.refinement_levels + 1):
        if want_full:
            gx, gw, gf, gu, rows = engine.grid_moments(f, spec, k, cut=False, profile=profile)
            D.append(0.5 * np.sum(gw * gf * engine.quadratic_form(rows, gu)))
        if want_cut:
            gx, gw, gf, gu, rows = engine.grid_moments(f, spec, k, cut=True, profile=profile)
            wf = gw * gf
            M0 = engine.to_matrix(rows[:, :6])
            Dc.append(0.5 * np.sum(wf * engine.quadratic_form(rows, gu)))
            F.append(np.sum(wf * np.einsum("ni,nij,nj->n", gu, M0, gu)))
            E.append(np.sum(wf * rows[:, 11]))
    nan = IntegralResult(math.nan, math.nan, 0)
    return DissipationParts(
        combine(D, spec, "dissipation") if D else nan,
        combine(Dc, spec, "cutoff dissipation") if Dc else nan,
        combine(F, spec, "fisher term") if F else nan,
        combine(E, spec, "error term") if E else nan,
    )


def dissipation_parts(f, spec=None, profile=DEFAULT_PROFILE):
    spec = spec or QuadratureSpec()
    if isinstance(f, MaxOfTwo):
        from .counterexample import max_of_two_parts

        return max_of_two_parts(f, spec, profile)
    if isinstance(f, Mixture):
        return _mixture_parts(f, spec, profile)
    raise DomainError(f"no dissipation rule for {type(f).__name__}")


def dissipation_result(f, spec=None):
    spec = spec or QuadratureSpec()
    if isinstance(f, MaxOfTwo):
        from .counterexample import max_of_two_dissipation

        return max_of_two_dissipation(f, spec)
    if isinstance(f, Mixture):
        return _mixture_parts(f, spec, DEFAULT_PROFILE, want_cut=False).dissipation
    raise DomainError(f"no dissipation rule for {type(f).__name__}")


def dissipation(f, spec=None):
    """Entropy dissipation with the full Coulomb kernel."""
    return dissipation_result(f, spec).value


def fisher_term(f, spec=None, profile=DEFAULT_PROFILE):
    """``int <(abar * f) grad s, grad s>`` with ``s = 2 sqrt(f)``."""
    return dissipation_parts(f, spec, profile).fisher.value


def error_term(f, spec=None, profile=DEFAULT_PROFILE):
    """``iint div div abar(v - w) f(v) f(w) dv dw``."""
    return dissipation_parts(f, spec, profile).error.value


class CoercivityResult(NamedTuple):
    D: float
    norm: float
    c1_estimate: float


def coercivity_check(f, spec=None, bounds=None, D=None):
    """``(D, ||f||_{L^3_{-5/3}}, (D + 20 M0^2) / norm)``."""
    spec = spec or QuadratureSpec()
    if bounds is None:
        bounds = hydro_bounds_of(f, spec)
    if D is None:
        D = dissipation(f, spec)
    norm = weighted_norm(f, 3, 5.0 / 3.0, spec)
    if not norm > 0:
        raise DegenerateInputError("weighted norm vanishes")
    return CoercivityResult(D, norm, (D + 20 * bounds.M0 ** 2) / norm)


# ---------------------------------------------------------------------------
# concentration


def concentration_params(bounds, H_tilde0):
    if not H_tilde0 > 0:
        raise DomainError("H_tilde0 must be positive")
    R = math.sqrt(2 * bounds.E0 / bounds.m0)
    ball = 4.0 * math.pi / 3.0 * R ** 3
    lam = math.expm1(8 * H_tilde0 / bounds.m0)
    return ConcentrationParams(R=R, l=bounds.m0 / (4 * ball), mu=bounds.m0 / (8 * lam),
                               Lambda=lam, H_tilde0=H_tilde0)


def concentration_verify(f, params, spec=None):
    """Measure of ``{v in B_R : f(v) >= l}`` by midpoint quadrature."""
    spec = (spec or QuadratureSpec()).with_(truncation_radius=params.R)
    return integrate3(lambda v: (f.evaluate(v) >= params.l).astype(float), spec).value
