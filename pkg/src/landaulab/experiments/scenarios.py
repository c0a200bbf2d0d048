"""Scenario runners: each returns a :class:`Report` with records and assertions."""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .. import counterexample as cx
from .. import functionals as fn
from .. import geometry as geo
from .. import kernels
from ..densities import Maxwellian, Mixture
from ..errors import DomainError, UsageError
from .fitting import fit_loglog


def family_density(name):
    """Named members of the coercivity test family."""
    if name == "maxwellian":
        return Maxwellian()
    if name == "shifted":
        return Maxwellian(mean=(2.0, 0.0, 0.0))
    if name == "hot":
        return Maxwellian(temperature=2.0)
    if name == "mixture":
        return Mixture([0.5, 0.5], [(-2.0, 0.0, 0.0), (2.0, 0.0, 0.0)], [1.0, 1.0])
    if name == "counterexample":
        return cx.build_h(cx.CounterexampleParams(64.0, 2))
    raise UsageError(f"densities: unknown density {name!r}")


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class Report:
    scenario: str
    config: dict
    columns: list
    records: list
    assertions: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)

    @property
    def failures(self):
        return [a.name for a in self.assertions if not a.passed]

    def check(self, name, passed, detail):
        self.assertions.append(Assertion(name, bool(passed), detail))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for rec in self.records:
            w.writerow([format_value(rec[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self):
        recs = [{c: json_value(rec[c]) for c in self.columns} for rec in self.records]
        doc = {"scenario": self.scenario, "config": self.config, "records": recs,
               "assertions": [a.to_dict() for a in self.assertions]}
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _near(value, target, tol):
    return abs(value - target) <= tol


# ---------------------------------------------------------------------------
# scenarios


def coercivity_sweep(cfg):
    spec = cfg.quad_spec()
    cols = ["density", "mass", "energy", "entropy", "D", "D_error", "fisher", "error_term",
            "error_sum", "norm", "c1_estimate"]
    rep = Report(cfg.scenario, cfg.to_dict(), cols, [])
    for name in cfg.densities:
        f = family_density(name)
        m = fn.moments(f, spec)
        parts = fn.dissipation_parts(f, spec)
        D = parts.dissipation.value
        res = fn.coercivity_check(f, spec, fn.HydroBounds(m.mass, m.mass, m.energy, m.entropy),
                                  D)
        rep.records.append({
            "density": name, "mass": m.mass, "energy": m.energy, "entropy": m.entropy,
            "D": D, "D_error": parts.dissipation.error_estimate,
            "fisher": parts.fisher.value, "error_term": parts.error.value,
            "error_sum": parts.error_sum, "norm": res.norm, "c1_estimate": res.c1_estimate,
        })
        slack = cfg.tolerance("positivity")
        rep.check(f"{name}: D >= -{slack:g}", D >= -slack, f"D = {D:.6g}")
        split = parts.fisher.value + parts.error.value - parts.error_sum
        rep.check(f"{name}: D >= fisher + error - errors", D >= split,
                  f"D = {D:.6g}, fisher + error - errors = {split:.6g}")
        floor = -cfg.tolerance("error_floor") * m.mass ** 2 - cfg.tolerance("error_slack")
        rep.check(f"{name}: error term bounded below", parts.error.value >= floor,
                  f"error = {parts.error.value:.6g}, floor = {floor:.6g}")
    c1 = [r["c1_estimate"] for r in rep.records]
    lo = cfg.tolerance("c1_min")
    rep.check("min c1_estimate", min(c1) > lo, f"min = {min(c1):.6g}, threshold = {lo:g}")
    rep.series["c1"] = (["index", "c1_estimate"], [(i, v) for i, v in enumerate(c1)])
    return rep


def eigenvalue_anisotropy(cfg):
    spec = cfg.quad_spec()
    radii = sorted(cfg.radii)
    pts = np.array([[r, 0.0, 0.0] for r in radii])
    mats = kernels.convolved_matrices(Maxwellian(), pts, spec)[-1]
    cols = ["radius", "radial", "tangential", "radial_scaled", "tangential_scaled", "ratio"]
    rep = Report(cfg.scenario, cfg.to_dict(), cols, [])
    for r, p, m in zip(radii, pts, mats):
        e = kernels.aniso_eigen(m, p)
        b = float(kernels.bracket(p))
        rep.records.append({
            "radius": r, "radial": e.radial_eigenvalue, "tangential": e.tangential_min,
            "radial_scaled": e.radial_eigenvalue * b ** 3,
            "tangential_scaled": e.tangential_min * b,
            "ratio": e.tangential_min / e.radial_eigenvalue,
        })
    lo, hi = cfg.tolerance("radial_lo"), cfg.tolerance("radial_hi")
    tlo, thi = cfg.tolerance("tangential_lo"), cfg.tolerance("tangential_hi")
    for rec in rep.records:
        rep.check(f"|v| = {rec['radius']:g}: radial <v>^3 in [{lo:g}, {hi:g}]",
                  lo <= rec["radial_scaled"] <= hi, f"{rec['radial_scaled']:.6g}")
        rep.check(f"|v| = {rec['radius']:g}: tangential <v> in [{tlo:g}, {thi:g}]",
                  tlo <= rec["tangential_scaled"] <= thi, f"{rec['tangential_scaled']:.6g}")
    if len(radii) >= 3:
        fit = fit_loglog([(math.sqrt(1 + r * r), rec["ratio"])
                          for r, rec in zip(radii, rep.records)])
        rep.fits["ratio"] = fit
        tol = cfg.tolerance("slope")
        rep.check("tangential/radial slope", _near(fit.slope, 2.0, tol),
                  f"slope = {fit.slope:.4f}, expected 2 +- {tol:g}")
    rep.series["scaled"] = (["radius", "radial_scaled", "tangential_scaled"],
                            [(r["radius"], r["radial_scaled"], r["tangential_scaled"])
                             for r in rep.records])
    return rep


def shell_estimate(cfg):
    spec = cfg.quad_spec()
    f = Maxwellian()
    cols = ["N", "fisher", "mass_term", "lhs", "rhs", "ratio"]
    rep = Report(cfg.scenario, cfg.to_dict(), cols, [])
    for N in cfg.n_values:
        s = geo.shell_estimate(f, N, spec)
        rep.records.append({"N": N, "fisher": s.fisher, "mass_term": s.mass_term,
                            "lhs": s.lhs, "rhs": s.rhs, "ratio": s.ratio})
    ratios = np.array([r["ratio"] for r in rep.records])
    rep.check("lhs/rhs positive", bool(np.all(ratios > 0)), f"min = {ratios.min():.6g}")
    spread = float(ratios.max() / ratios.min()) if np.all(ratios > 0) else math.inf
    lim = cfg.tolerance("spread")
    rep.check(f"lhs/rhs varies by less than {lim:g}x", spread < lim,
              f"max/min = {spread:.6g}")
    rep.series["ratio"] = (["N", "ratio"], [(r["N"], r["ratio"]) for r in rep.records])
    return rep


def covering_audit(cfg):
    cols = ["N", "centers", "candidates", "coverage", "uncovered_bound_95", "max_multiplicity",
            "mean_multiplicity", "contained", "halved_disjoint"]
    rep = Report(cfg.scenario, cfg.to_dict(), cols, [])
    for N in cfg.n_values:
        cover = geo.vitali_cover(N, verify=False)
        audit = geo.audit_cover(cover, cfg.samples)
        rec = {"N": N, "centers": cover.count, "candidates": cover.candidates,
               "coverage": audit["coverage"], "uncovered_bound_95": audit["uncovered_bound_95"],
               "max_multiplicity": audit["max_multiplicity"],
               "mean_multiplicity": audit["mean_multiplicity"],
               "contained": audit["contained"], "halved_disjoint": geo.halved_images_disjoint(cover)}
        rep.records.append(rec)
        lim = cfg.tolerance("multiplicity")
        rep.check(f"N = {N}: multiplicity <= {lim:g}", rec["max_multiplicity"] <= lim,
                  f"max = {rec['max_multiplicity']}")
        cov = cfg.tolerance("coverage")
        rep.check(f"N = {N}: coverage >= {cov:g}", rec["coverage"] >= cov,
                  f"coverage = {rec['coverage']:.6g}")
        rep.check(f"N = {N}: union inside enlarged annulus", rec["contained"], "")
        rep.check(f"N = {N}: shrunken ellipsoids disjoint", rec["halved_disjoint"], "")
    rep.series["multiplicity"] = (["N", "max_multiplicity", "mean_multiplicity"],
                                  [(r["N"], r["max_multiplicity"], r["mean_multiplicity"])
                                   for r in rep.records])
    return rep


def _schedule_records(cfg, p, q):
    spec_over = cfg.quadrature
    out = []
    for B, N in cfg.schedule:
        params = cx.CounterexampleParams(B, N)
        spec = cx.default_spec(params).with_(**spec_over) if spec_over else None
        out.append((params, cx.scaling_record(params, p, q, spec),
                    cx.integrals(params, spec or cx.default_spec(params))))
    return out


SCALING_COLUMNS = cx.CSV_COLUMNS + ["fisher_normalized", "potential_scaled", "I2_inner",
                                    "I2_exterior"]


def counterexample_scaling(cfg):
    p, q = cfg.pq[0] if cfg.pq else (3.0, 1.0)
    rep = Report(cfg.scenario, cfg.to_dict(), SCALING_COLUMNS, [])
    rows = _schedule_records(cfg, p, q)
    for params, rec, res in rows:
        B, N = params.B, params.N
        d = {c: getattr(rec, c) for c in cx.CSV_COLUMNS}
        d["fisher_normalized"] = res["bump_fisher"].value / (params.c * B * B * N * N)
        d["potential_scaled"] = res["potential_sup"].value * N ** 4
        d["I2_inner"] = res["I2_inner"].value
        d["I2_exterior"] = res["I2_exterior"].value
        rep.records.append(d)
        rep.check(f"({B:g}, {N}): I2 >= max(I1, I3)", d["I2"] >= max(d["I1"], d["I3"]),
                  f"I1 = {d['I1']:.6g}, I2 = {d['I2']:.6g}, I3 = {d['I3']:.6g}")
        tol = cfg.tolerance("moment_tol")
        ok = (1 - tol <= d["mass"] <= 9 + tol and d["energy"] <= 9 + tol
              and d["entropy"] <= 10 + cx.BETA0 + tol)
        rep.check(f"({B:g}, {N}): moment bounds", ok,
                  f"mass = {d['mass']:.6g}, energy = {d['energy']:.6g}, "
                  f"entropy = {d['entropy']:.6g}")
    recs = rep.records
    if len({r["N"] for r in recs}) == 1:
        tol = cfg.tolerance("slope")
        for name, target in (("I1", -1.0), ("I2", 1.0)):
            fit = fit_loglog([(r["B"], r[name]) for r in recs])
            rep.fits[name] = fit
            rep.check(f"{name} slope in B", _near(fit.slope, target, tol),
                      f"slope = {fit.slope:.4f}, expected {target:+g} +- {tol:g}")
    fis = [r["fisher_normalized"] for r in recs]
    lim = cfg.tolerance("fisher_spread")
    rep.check("normalized bump Fisher bounded", max(fis) / min(fis) <= lim,
              f"range [{min(fis):.6g}, {max(fis):.6g}]")
    pot = [r["potential_scaled"] for r in recs]
    cap = cfg.tolerance("potential_safety") * pot[0]
    rep.check("bump potential <= C / N^4", max(pot) <= cap,
              f"max N^4 sup = {max(pot):.6g}, calibrated cap = {cap:.6g}")
    rep.series["integrals"] = (["B", "I1", "I2", "I3"],
                               [(r["B"], r["I1"], r["I2"], r["I3"]) for r in recs])
    return rep


def expected_ratio_slope(schedule, p, q):
    """Exponent of ``B^(-1+3/p) N^(q-2+1/p)`` along the schedule.

    Returns ``(variable, slope)`` with variable ``"B"`` at fixed ``N`` or
    ``"N"`` when ``B = N^k`` for a common ``k``; ``(None, None)`` otherwise.
    """
    Ns = {N for _, N in schedule}
    b_exp = -1 + 3.0 / p
    n_exp = q - 2 + 1.0 / p
    if len(Ns) == 1:
        return "B", b_exp
    ks = {round(math.log(B) / math.log(N), 9) for B, N in schedule}
    if len(ks) == 1:
        return "N", ks.pop() * b_exp + n_exp
    return None, None


def optimality_ratio(cfg):
    cols = ["p", "q"] + cx.CSV_COLUMNS
    rep = Report(cfg.scenario, cfg.to_dict(), cols, [])
    var, _ = expected_ratio_slope(cfg.schedule, 3.0, 0.0)
    for p, q in cfg.pq:
        rows = _schedule_records(cfg, p, q)
        recs = []
        for _, rec, _ in rows:
            d = {"p": p, "q": q, **{c: getattr(rec, c) for c in cx.CSV_COLUMNS}}
            recs.append(d)
        rep.records += recs
        ratios = [r["ratio"] for r in recs]
        dec = all(b < a for a, b in zip(ratios, ratios[1:]))
        tag = f"p = {p:g}, q = {q:g}"
        rep.check(f"{tag}: ratio strictly decreasing", dec,
                  ", ".join(f"{x:.6g}" for x in ratios))
        var, target = expected_ratio_slope(cfg.schedule, p, q)
        if var is None:
            continue
        fit = fit_loglog([(r[var], r["ratio"]) for r in recs])
        rep.fits[tag] = fit
        tol = cfg.tolerance("slope")
        rep.check(f"{tag}: ratio slope in {var}", _near(fit.slope, target, tol),
                  f"slope = {fit.slope:.4f}, expected {target:.4f} +- {tol:g}")
        rep.series[f"ratio_p{p:g}_q{q:g}"] = (
            [var, "ratio", "fitted"],
            [(r[var], r["ratio"], float(fit.predict(r[var]))) for r in recs])
    return rep


RUNNERS = {
    "coercivity-sweep": coercivity_sweep,
    "eigenvalue-anisotropy": eigenvalue_anisotropy,
    "shell-estimate": shell_estimate,
    "covering-audit": covering_audit,
    "counterexample-scaling": counterexample_scaling,
    "optimality-ratio": optimality_ratio,
}


def run_scenario(cfg):
    """Run the configured scenario and return its :class:`Report`."""
    return RUNNERS[cfg.scenario](cfg)


def emit_plotdata(report, path):
    """Write one whitespace-separated column file per plotted series.

    ``path`` is a directory; returns the list of files written.
    """
    if not report.records or not report.series:
        raise DomainError("report has nothing to plot")
    os.makedirs(path, exist_ok=True)
    files = []
    for name, (cols, rows) in report.series.items():
        fname = os.path.join(path, f"{report.scenario}_{name}.dat")
        with open(fname, "w", encoding="utf-8") as fh:
            fh.write("# " + " ".join(cols) + "\n")
            for row in rows:
                fh.write(" ".join(format_value(v) for v in row) + "\n")
        files.append(fname)
    return files


def write_outputs(report, out_dir, csv_out=True, json_out=True):
    os.makedirs(out_dir, exist_ok=True)
    files = []
    if csv_out:
        fname = os.path.join(out_dir, f"{report.scenario}.csv")
        with open(fname, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
        files.append(fname)
    if json_out:
        fname = os.path.join(out_dir, f"{report.scenario}.json")
        with open(fname, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        files.append(fname)
    return files
