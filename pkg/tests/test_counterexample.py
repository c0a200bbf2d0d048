import csv
import io
import json
import math

import numpy as np
import pytest

from landaulab import counterexample as cx
from landaulab import functionals as fn
from landaulab.densities import Maxwellian
from landaulab.errors import ConstructionError, DomainError
from landaulab.quadrature import QuadratureSpec, weighted_norm


@pytest.fixture(scope="module")
def cheap():
    return QuadratureSpec(nodes_per_axis=12, radial_nodes=8, sphere_nodes=32,
                          patch_radial_nodes=8, patch_sphere_nodes=32)


def test_params_invariants():
    p = cx.CounterexampleParams(64.0, 2)
    assert p.c == pytest.approx(1 / 2048)
    assert p.c <= p.N ** -2 <= p.N ** 6 <= p.B
    assert p.alpha0 == cx.ALPHA0 and p.beta0 == cx.BETA0
    with pytest.raises(ConstructionError):
        cx.CounterexampleParams(63.0, 2)
    with pytest.raises(ConstructionError):
        cx.CounterexampleParams(64.0, 1)
    with pytest.raises(ConstructionError):
        cx.CounterexampleParams(-1.0, 2, enforce=False)


def test_bump_phi():
    assert cx.bump_phi([0.0, 0, 0]) == pytest.approx(cx.ALPHA0 / math.e)
    assert cx.bump_phi([1.0, 0, 0]) == 0.0
    assert cx.bump_phi([0.0, 0, 3.0]) == 0.0


def test_radial_constants_stable_under_refinement():
    a1, b1 = cx.bump_radial_constants(128)
    a2, b2 = cx.bump_radial_constants(256)
    assert abs(a1 - a2) < 1e-6 and abs(b1 - b2) < 1e-6
    assert a2 == pytest.approx(cx.ALPHA0, rel=1e-12)
    assert b2 == pytest.approx(cx.beta0(), rel=1e-12)


def test_build_h():
    params = cx.CounterexampleParams(64.0, 2)
    h = cx.build_h(params)
    v = np.array([[2.0, 0, 0], [-3.0, 1.0, 0]])
    vals = h.evaluate(v)
    assert vals[0] == pytest.approx(h.bump.evaluate(v[:1])[0])
    assert vals[0] > 1e3 * Maxwellian().evaluate(v[:1])[0]
    assert vals[1] == Maxwellian().evaluate(v[1:])[0]


def test_integrals_signs_and_dominance(cheap):
    params = cx.CounterexampleParams(64.0, 2)
    res = cx.integrals(params, cheap.with_(truncation_radius=12.0))
    for name in ("I1", "I2", "I3", "D_direct", "bump_fisher", "potential_sup"):
        assert res[name].value > 0
    assert res["I2"].value >= max(res["I1"].value, res["I3"].value)
    upper = 2 * (res["I1"].value + res["I2"].value + res["I3"].value)
    assert res["D_direct"].value <= upper
    assert res["I2_inner"].value + res["I2_exterior"].value == pytest.approx(res["I2"].value)


def test_dissipation_parts_of_h(cheap):
    h = cx.build_h(cx.CounterexampleParams(64.0, 2))
    parts = fn.dissipation_parts(h, cheap)
    assert parts.dissipation.value > 0
    assert (parts.dissipation.value
            >= parts.fisher.value + parts.error.value - parts.error_sum)
    assert parts.error.value >= -16 * 1.001 ** 2


def test_norm_lower_check(cheap):
    params = cx.CounterexampleParams(64.0, 2)
    norm, bound = cx.norm_lower_check(params, 3, 1, cheap)
    assert bound == pytest.approx(64 * 2 ** (-1 - 13 / 3))
    assert norm > 0
    h = cx.build_h(params)
    assert weighted_norm(h, 1, 0, cheap) >= 1.0


def test_records_export(cheap):
    params = cx.CounterexampleParams(64.0, 2)
    rec = cx.scaling_record(params, 3, 1, cheap)
    assert rec.D_upper == pytest.approx(2 * (rec.I1 + rec.I2 + rec.I3))
    assert rec.ratio == pytest.approx((rec.D_upper + 1) / rec.norm)
    text = cx.records_to_csv([rec])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == cx.CSV_COLUMNS
    assert float(rows[1][3]) == rec.I1
    doc = json.loads(cx.records_to_json([rec]))
    assert list(doc[0]) == cx.CSV_COLUMNS and doc[0]["I2"] == rec.I2


def test_optimality_ratio_rejects_empty_schedule():
    with pytest.raises(DomainError):
        cx.optimality_ratio(3, 1, [])
    with pytest.raises(ConstructionError):
        cx.optimality_ratio(3, 1, [(10.0, 2)])


def test_clamp_study(cheap):
    params = cx.CounterexampleParams(64.0, 2)
    study = cx.clamp_study(params, (1e-3, 5e-4), cheap)
    a, b = study[1e-3], study[5e-4]
    for name in ("I1", "I2", "I3"):
        assert b[name] == pytest.approx(a[name], rel=1e-2)
