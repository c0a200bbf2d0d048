"""The optimality family ``h = max(f, g)`` and its dissipation bounds.

``f`` is the standard Maxwellian and ``g`` a bump of mass ``c = 1/(B N^5)``
centred at ``N e1``, compressed by ``1/(B N)`` radially and ``1/B``
tangentially.  All integrals over ``E_g = {g > f}`` use star-shaped rules in
the bump's stretched coordinates; inner integrals over ``E_g`` with a
``1/|v - w|`` kernel use a fresh star rule centred at each outer node.

Cauchy-Schwarz on the two cross regions gives ``D(h) <= 2 (I1 + I2 + I3)``
with

    I1 = int_{E_g} g(w) int a(v - w) f(v) u_f(v)^2 dv dw
    I2 = int_{E_g} g(w) u_g(w)^T (a * f)(w) u_g(w) dw
    I3 = int_{E_g} g(v) u_g(v)^T (int_{E_g} a(v - w) g(w) dw) u_g(v) dv

(the ``v`` integrals of ``I1`` and ``I2`` run over all of R^3, which can only
enlarge them).
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import engine
from .densities import ALPHA0, BETA0, Bump, MaxOfTwo, Maxwellian, ScaledBump
from .errors import ConstructionError, DomainError
from .profile import DEFAULT_PROFILE
from .quadrature import IntegralResult, QuadratureSpec, combine, radial_rule, sphere_rule

__all__ = [
    "ALPHA0", "BETA0", "CounterexampleParams", "ScalingRecord", "beta0", "build_h",
    "bump_phi", "compute_I1", "compute_I2", "compute_I3", "dissipation_upper",
    "dissipation_direct", "norm_lower_check", "optimality_ratio", "records_to_csv",
    "records_to_json",
]


def bump_phi(v):
    """Unit-mass bump ``alpha0 exp(-1/(1 - |v|^2))`` on the unit ball."""
    return Bump().evaluate(v)


def bump_radial_constants(panels=256, order=16):
    """``(alpha0, beta0)`` by composite Gauss-Legendre radial quadrature."""
    breaks = tuple(np.linspace(0.0, 1.0, panels + 1))
    r, w = radial_rule(breaks, (order,) * panels)
    q = r * r
    e = np.exp(-1.0 / (1.0 - q))
    shell = 4 * np.pi * q * w
    alpha = 1.0 / np.sum(e * shell)
    beta = np.sum(alpha * e * (1.0 / (1.0 - q) - math.log(alpha)) * shell)
    return float(alpha), float(beta)


def beta0():
    """``int phi |log phi|`` (``log phi < 0`` on the whole ball)."""
    return BETA0


@dataclass(frozen=True)
class CounterexampleParams:
    B: float
    N: int
    clamp: float = 1e-3
    enforce: bool = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ConstructionError("N must be an integer >= 2", witness=self.N)
        if not self.B > 0:
            raise ConstructionError("B must be positive", witness=self.B)
        if self.enforce and self.B < self.N ** 6:
            raise ConstructionError(f"need B >= N^6, got B={self.B}, N={self.N}",
                                    witness=(self.B, self.N))
        if not 0 < self.clamp <= 0.1:
            raise DomainError("clamp must lie in (0, 0.1]")

    @property
    def c(self):
        return 1.0 / (self.B * self.N ** 5)

    @property
    def alpha0(self):
        return ALPHA0

    @property
    def beta0(self):
        return BETA0


def build_h(params):
    """``max(f, g)`` with ``f`` the standard Maxwellian."""
    return MaxOfTwo(Maxwellian(), ScaledBump(params.B, params.N, params.clamp))


def _params_of(h):
    return CounterexampleParams(h.bump.B, h.bump.N, h.bump.clamp, enforce=False)


# ---------------------------------------------------------------------------
# per-level evaluation


def _inner_ball_matrix(points, radius, n_radial=32, n_theta=12):
    """``int_{|w| < radius} a(v - w) f(w) dw`` for points outside that ball."""
    rr, rw = radial_rule((0.0, radius), n_radial)
    dirs, dw = sphere_rule(n_theta)
    nodes = (rr[:, None, None] * dirs[None]).reshape(-1, 3)
    wts = ((rw * rr * rr)[:, None] * dw[None]).ravel() * Maxwellian().evaluate(nodes)
    out = np.zeros((len(points), 3, 3))
    for s in range(0, len(points), 256):
        z = points[s:s + 256, None, :] - nodes[None]
        r = np.linalg.norm(z, axis=-1)
        e = z / r[..., None]
        k = wts / r
        out[s:s + 256] = (np.einsum("pn->p", k)[:, None, None] * np.eye(3)
                          - np.einsum("pn,pni,pnj->pij", k, e, e))
    return out


_LEVEL_CACHE = {}


def _level_data(params, spec, k, profile=DEFAULT_PROFILE):
    """All per-level sums over ``E_g`` for the pair ``(B, N)``."""
    key = (params, spec, k, profile)
    if key in _LEVEL_CACHE:
        return _LEVEL_CACHE[key]
    h = build_h(params)
    f, g = h.background, h.bump
    xt, w = g.patch_nodes(spec, k, f)
    v = g.center + xt * g.stretch
    gv, ug = g.evaluate(v), g.log_gradient(v)
    fv, uf = f.evaluate(v), f.log_gradient(v)
    rf = engine.mixture_moments(f, v, spec, k, cut=False, profile=profile)
    rfc = engine.mixture_moments(f, v, spec, k, cut=True, profile=profile)
    ray = engine.bump_ray_moments(g, xt, spec, k, background=f, profile=profile)
    M0f = engine.to_matrix(rf[:, :6])
    M0g = engine.to_matrix(ray[:, 0, :6])

    def form(M, u):
        return np.einsum("ni,nij,nj->n", u, M, u)

    wg = w * gv
    I1 = np.sum(wg * rf[:, 9])
    I2 = np.sum(wg * form(M0f, ug))
    I3 = np.sum(wg * form(M0g, ug))
    inner = _inner_ball_matrix(v, params.N / 2.0)
    I2_inner = np.sum(wg * form(inner, ug))

    # exact rewrite of D(h): pairs with both points outside E_g cancel
    q_all = engine.quadratic_form(rf, ug)
    q_eg = engine.quadratic_form(ray[:, 1], ug)
    D_cross = np.sum(wg * (q_all - q_eg))
    D_self = 0.5 * np.sum(wg * engine.quadratic_form(ray[:, 0], ug))

    # cutoff pieces relative to those of f alone
    excess = gv - fv
    wr = w * excess
    a_r = engine.to_matrix(ray[:, 2, :6] - ray[:, 3, :6])
    a_h = engine.to_matrix(rfc[:, :6]) + a_r
    fisher_shift = (np.sum(wr * rfc[:, 9])
                    + np.sum(w * (gv * form(a_h, ug) - fv * form(a_h, uf))))
    error_shift = 2 * np.sum(wr * rfc[:, 11]) + np.sum(wr * (ray[:, 2, 11] - ray[:, 3, 11]))

    data = {
        "I1": I1, "I2": I2, "I3": I3, "I2_inner": I2_inner, "I2_exterior": I2 - I2_inner,
        "D_direct": D_cross + D_self, "fisher_shift": fisher_shift,
        "error_shift": error_shift,
        "bump_fisher": np.sum(wg * np.einsum("ni,ni->n", ug, ug)),
        "potential_sup": float(np.max(ray[:, 0, 10])),
        "region_mass": np.sum(wg),
    }
    _LEVEL_CACHE[key] = data
    return data


def integrals(params, spec=None, profile=DEFAULT_PROFILE):
    """Every ``E_g`` integral of the pair as an :class:`IntegralResult`."""
    spec = spec or QuadratureSpec(truncation_radius=params.N + 8.0)
    levels = [_level_data(params, spec, k, profile)
              for k in range(1, spec.refinement_levels + 1)]
    return {name: combine([lv[name] for lv in levels], spec, name) for name in levels[0]}


def clamp_study(params, clamps=(1e-3, 5e-4), spec=None, names=("I1", "I2", "I3")):
    """Finest-level integrals for each bump clamp ``delta``.

    Returns ``{delta: {name: value}}``; the spread across ``delta`` measures
    the effect of cutting the bump support at ``|v~| = 1 - delta``.
    """
    out = {}
    for delta in clamps:
        p = CounterexampleParams(params.B, params.N, delta, params.enforce)
        res = integrals(p, spec or default_spec(p))
        out[delta] = {n: res[n].value for n in names}
    return out


def default_spec(params):
    """Grid truncation that keeps the Maxwellian tail and the bump inside."""
    return QuadratureSpec(truncation_radius=max(12.0, params.N + 2.0))


def compute_I1(params, spec=None):
    return integrals(params, spec or default_spec(params))["I1"].value


def compute_I2(params, spec=None):
    return integrals(params, spec or default_spec(params))["I2"].value


def compute_I3(params, spec=None):
    return integrals(params, spec or default_spec(params))["I3"].value


def dissipation_upper_result(params, spec=None):
    spec = spec or default_spec(params)
    res = integrals(params, spec)
    value = 2 * (res["I1"].value + res["I2"].value + res["I3"].value)
    err = 2 * (res["I1"].error_estimate + res["I2"].error_estimate
               + res["I3"].error_estimate)
    return IntegralResult(value, err, res["I1"].levels_used)


def dissipation_upper(params, spec=None):
    """``2 (I1 + I2 + I3)``."""
    return dissipation_upper_result(params, spec).value


def dissipation_direct(params, spec=None):
    """``D(h)`` by direct quadrature of the double integral."""
    return integrals(params, spec or default_spec(params))["D_direct"]


def max_of_two_dissipation(h, spec):
    if not isinstance(h.background, Maxwellian) or not isinstance(h.bump, ScaledBump):
        raise DomainError("direct dissipation is implemented for Maxwellian + ScaledBump")
    return integrals(_params_of(h), spec)["D_direct"]


def max_of_two_parts(h, spec, profile=DEFAULT_PROFILE):
    from .functionals import DissipationParts, _mixture_parts

    if not isinstance(h.background, Maxwellian) or not isinstance(h.bump, ScaledBump):
        raise DomainError("cutoff decomposition is implemented for Maxwellian + ScaledBump")
    base = _mixture_parts(h.background, spec, profile, want_full=False)
    res = integrals(_params_of(h), spec, profile)

    def shifted(a, b):
        return IntegralResult(a.value + b.value, a.error_estimate + b.error_estimate,
                              a.levels_used)

    fisher = shifted(base.fisher, res["fisher_shift"])
    error = shifted(base.error, res["error_shift"])
    return DissipationParts(res["D_direct"], shifted(fisher, error), fisher, error)


# ---------------------------------------------------------------------------
# norms and ratios


def norm_bound(params, p, q):
    """``B^(2 - 3/p) N^(-4 - q - 1/p)`` (implicit constant omitted)."""
    return params.B ** (2 - 3.0 / p) * params.N ** (-4 - q - 1.0 / p)


def norm_lower_check(params, p, q, spec=None):
    """``(||h||_{L^p_{-q}}, bound)``; compare with a calibrated constant."""
    from .quadrature import weighted_norm

    spec = spec or default_spec(params)
    return weighted_norm(build_h(params), p, q, spec), norm_bound(params, p, q)


def calibrate_kappa(p, q, reference=(64.0, 2), spec=None, safety=0.5):
    """``safety * norm / bound`` at the reference pair."""
    params = CounterexampleParams(*reference)
    norm, bound = norm_lower_check(params, p, q, spec)
    return safety * norm / bound


CSV_COLUMNS = ["B", "N", "c", "I1", "I2", "I3", "D_upper", "mass", "energy", "entropy",
               "norm", "ratio"]


@dataclass
class ScalingRecord:
    B: float
    N: int
    c: float
    I1: float
    I2: float
    I3: float
    D_upper: float
    mass: float
    energy: float
    entropy: float
    norm: float
    ratio: float
    p: float = 3.0
    q: float = 1.0
    D_direct: float | None = None
    errors: dict = field(default_factory=dict)

    def row(self):
        return [getattr(self, name) for name in CSV_COLUMNS]


def scaling_record(params, p, q, spec=None, with_direct=False):
    from .functionals import moments
    from .quadrature import weighted_norm

    spec = spec or default_spec(params)
    res = integrals(params, spec)
    up = dissipation_upper_result(params, spec)
    h = build_h(params)
    m = moments(h, spec)
    norm = weighted_norm(h, p, q, spec)
    return ScalingRecord(
        B=float(params.B), N=int(params.N), c=params.c, I1=res["I1"].value,
        I2=res["I2"].value, I3=res["I3"].value, D_upper=up.value, mass=m.mass,
        energy=m.energy, entropy=m.entropy, norm=norm, ratio=(up.value + 1.0) / norm,
        p=p, q=q, D_direct=res["D_direct"].value if with_direct else None,
        errors={name: r.error_estimate for name, r in res.items()},
    )


def optimality_ratio(p, q, schedule, spec=None):
    """One :class:`ScalingRecord` per ``(B, N)`` with ``ratio = (D_upper + 1)/norm``."""
    if not schedule:
        raise DomainError("empty schedule")
    out = []
    for B, N in schedule:
        params = CounterexampleParams(B, N)
        out.append(scaling_record(params, p, q, spec or default_spec(params)))
    return out


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(x) for x in r.row()])
    return buf.getvalue()


def records_to_json(records):
    return json.dumps([{k: asdict(r)[k] for k in CSV_COLUMNS} for r in records], indent=2)
