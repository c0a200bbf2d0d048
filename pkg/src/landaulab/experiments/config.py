"""Experiment configuration: an INI file with one section per concern.

Example::

    [scenario]
    name = optimality-ratio

    [quadrature]
    nodes_per_axis = 32

    [parameters]
    pq = 3:1
    schedule = 128:2, 2187:3, 16384:4

    [tolerances]
    slope = 0.2

    [output]
    dir = out
    threads = 1
"""

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from ..errors import UsageError
from ..quadrature import QuadratureSpec

SCENARIOS = (
    "coercivity-sweep", "eigenvalue-anisotropy", "shell-estimate", "covering-audit",
    "counterexample-scaling", "optimality-ratio",
)

TEST_FAMILY = ("maxwellian", "shifted", "hot", "mixture", "counterexample")

# documented defaults, one entry per assertion that uses them
DEFAULT_TOLERANCES = {
    "coercivity-sweep": {"c1_min": 1e-4, "positivity": 1e-8, "error_floor": 16.0,
                         "error_slack": 1e-6},
    "eigenvalue-anisotropy": {"radial_lo": 1.6, "radial_hi": 2.4, "tangential_lo": 0.8,
                              "tangential_hi": 1.2, "slope": 0.2},
    "shell-estimate": {"spread": 10.0},
    "covering-audit": {"multiplicity": 64.0, "coverage": 1.0},
    "counterexample-scaling": {"slope": 0.15, "moment_tol": 1e-3, "fisher_spread": 2.0,
                               "potential_safety": 2.0},
    "optimality-ratio": {"slope": 0.2},
}

DEFAULT_PARAMETERS = {
    "coercivity-sweep": {"densities": TEST_FAMILY},
    "eigenvalue-anisotropy": {"radii": (4.0, 8.0, 16.0, 32.0)},
    "shell-estimate": {"n_values": (1, 2, 3, 4, 5, 6)},
    "covering-audit": {"n_values": (1, 2, 4, 8), "samples": 100000},
    "counterexample-scaling": {"schedule": ((64.0, 2), (256.0, 2), (1024.0, 2))},
    "optimality-ratio": {"pq": ((3.0, 1.0),),
                         "schedule": ((128.0, 2), (2187.0, 3), (16384.0, 4))},
}


def _fmt_num(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def _parse_num(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _pairs(text, name):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split(":")
            out.append((float(a), _parse_num(b)))
        except ValueError as exc:
            raise UsageError(f"{name}: cannot parse pair {item!r}") from exc
    return tuple(out)


def _list(text, conv, name):
    try:
        return tuple(conv(t.strip()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"{name}: cannot parse {text!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    quadrature: dict = field(default_factory=dict)
    densities: tuple = ()
    pq: tuple = ()
    schedule: tuple = ()
    n_values: tuple = ()
    radii: tuple = ()
    samples: int = 100000
    tolerances: dict = field(default_factory=dict)
    out_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise UsageError(f"scenario: unknown name {self.scenario!r}; "
                             f"expected one of {', '.join(SCENARIOS)}")
        known = {f.name for f in fields(QuadratureSpec)}
        bad = sorted(set(self.quadrature) - known)
        if bad:
            raise UsageError(f"quadrature: unknown keys {bad}")
        try:
            QuadratureSpec(**self.quadrature)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"quadrature: {exc}") from exc
        bad = sorted(set(self.tolerances) - set(DEFAULT_TOLERANCES[self.scenario]))
        if bad:
            raise UsageError(f"tolerances: unknown keys {bad} for {self.scenario}")
        for d in self.densities:
            if d not in TEST_FAMILY:
                raise UsageError(f"densities: unknown density {d!r}")
        for B, N in self.schedule:
            if int(N) != N or N < 2:
                raise UsageError(f"schedule: N must be an integer >= 2, got {N}")
            if B < N ** 6:
                raise UsageError(f"schedule: need B >= N^6, got B={B}, N={N}")
        if self.threads < 1:
            raise UsageError("threads must be positive")
        need = {"counterexample-scaling": "schedule", "optimality-ratio": "schedule",
                "coercivity-sweep": "densities", "eigenvalue-anisotropy": "radii",
                "shell-estimate": "n_values", "covering-audit": "n_values"}[self.scenario]
        if not getattr(self, need):
            raise UsageError(f"{need}: empty for scenario {self.scenario}")
        if self.scenario == "optimality-ratio" and not self.pq:
            raise UsageError("pq: empty for scenario optimality-ratio")
        if self.scenario in ("counterexample-scaling", "optimality-ratio") \
                and len(self.schedule) < 3:
            raise UsageError("schedule: at least 3 entries are needed for a fit")

    @classmethod
    def default(cls, scenario, **changes):
        if scenario not in SCENARIOS:
            raise UsageError(f"scenario: unknown name {scenario!r}")
        return cls(scenario=scenario, **{**DEFAULT_PARAMETERS[scenario], **changes})

    def quad_spec(self):
        return QuadratureSpec(**self.quadrature)

    def tolerance(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[self.scenario][key])

    def with_(self, **changes):
        return replace(self, **changes)

    def to_text(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp["scenario"] = {"name": self.scenario}
        cp["quadrature"] = {k: _fmt_num(v) for k, v in sorted(self.quadrature.items())}
        par = {}
        if self.densities:
            par["densities"] = ", ".join(self.densities)
        if self.pq:
            par["pq"] = ", ".join(f"{_fmt_num(p)}:{_fmt_num(q)}" for p, q in self.pq)
        if self.schedule:
            par["schedule"] = ", ".join(f"{_fmt_num(B)}:{N}" for B, N in self.schedule)
        if self.n_values:
            par["n_values"] = ", ".join(str(n) for n in self.n_values)
        if self.radii:
            par["radii"] = ", ".join(_fmt_num(r) for r in self.radii)
        par["samples"] = str(self.samples)
        cp["parameters"] = par
        cp["tolerances"] = {k: _fmt_num(v) for k, v in sorted(self.tolerances.items())}
        cp["output"] = {"dir": self.out_dir, "threads": str(self.threads)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_dict(self):
        return {
            "scenario": self.scenario, "quadrature": dict(sorted(self.quadrature.items())),
            "densities": list(self.densities), "pq": [list(x) for x in self.pq],
            "schedule": [list(x) for x in self.schedule], "n_values": list(self.n_values),
            "radii": list(self.radii), "samples": self.samples,
            "tolerances": {k: self.tolerance(k) for k in DEFAULT_TOLERANCES[self.scenario]},
        }


def parse_config(text):
    """Parse INI text into an :class:`ExperimentConfig`."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"config: {exc}") from exc
    if not cp.has_option("scenario", "name"):
        raise UsageError("scenario.name: missing")
    name = cp.get("scenario", "name").strip()
    kw = {"scenario": name}
    if cp.has_section("quadrature"):
        q = {}
        for k, v in cp.items("quadrature"):
            if k == "tolerance" and v.strip().lower() == "none":
                q[k] = None
                continue
            try:
                q[k] = _parse_num(v)
            except ValueError as exc:
                raise UsageError(f"quadrature.{k}: not a number: {v!r}") from exc
        kw["quadrature"] = q
    if cp.has_section("parameters"):
        p = dict(cp.items("parameters"))
        if "densities" in p:
            kw["densities"] = _list(p["densities"], str, "densities")
        if "pq" in p:
            kw["pq"] = tuple((a, float(b)) for a, b in _pairs(p["pq"], "pq"))
        if "schedule" in p:
            kw["schedule"] = tuple((B, int(N)) for B, N in _pairs(p["schedule"], "schedule"))
        if "n_values" in p:
            kw["n_values"] = _list(p["n_values"], int, "n_values")
        if "radii" in p:
            kw["radii"] = _list(p["radii"], float, "radii")
        if "samples" in p:
            kw["samples"] = _list(p["samples"], int, "samples")[0]
    if cp.has_section("tolerances"):
        try:
            kw["tolerances"] = {k: float(v) for k, v in cp.items("tolerances")}
        except ValueError as exc:
            raise UsageError(f"tolerances: {exc}") from exc
    if cp.has_section("output"):
        if cp.has_option("output", "dir"):
            kw["out_dir"] = cp.get("output", "dir")
        if cp.has_option("output", "threads"):
            kw["threads"] = _list(cp.get("output", "threads"), int, "threads")[0]
    unknown = set(cp.sections()) - {"scenario", "quadrature", "parameters", "tolerances",
                                    "output"}
    if unknown:
        raise UsageError(f"config: unknown sections {sorted(unknown)}")
    return ExperimentConfig(**kw)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from exc
