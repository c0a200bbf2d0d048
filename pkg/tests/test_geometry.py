import math

import numpy as np
import pytest

from landaulab import geometry as geo
from landaulab.densities import Maxwellian
from landaulab.errors import DomainError


def test_annulus_index():
    assert geo.annulus_index([0, 0, 0]) == 1
    assert geo.annulus_index([1.0, 0, 0]) == 1
    assert geo.annulus_index([1.5, 0, 0]) == 2
    assert geo.annulus_index([0, 3.0, 4.0]) == 5
    assert geo.enlarged_annulus_bounds(1) == (0.0, 2.0)
    assert geo.enlarged_annulus_bounds(5) == (3.0, 6.0)


def test_ellipsoid_membership_and_map():
    E = geo.Ellipsoid((3.0, 0, 0), 4)
    assert E.contains([3.0 + 0.24, 0, 0]) and not E.contains([3.0 + 0.26, 0, 0])
    assert E.contains([3.0, 0.99, 0]) and not E.contains([3.0, 1.01, 0])
    assert E.volume == pytest.approx(math.pi / 3)
    rng = np.random.default_rng(0)
    x = np.asarray(E.center) + rng.uniform(-1, 1, size=(2000, 3))
    y = geo.transform_T0(E, x)
    np.testing.assert_array_equal(E.contains(x), np.linalg.norm(y, axis=1) <= 1)
    with pytest.raises(DomainError):
        geo.Ellipsoid((0.0, 0, 0), 2)


def test_radial_extent_matches_sampling():
    rng = np.random.default_rng(1)
    for center, N in (((2.5, 0, 0), 3), ((0, 0, 1.2), 2), ((1.2, 0.6, 0), 1)):
        E = geo.Ellipsoid(center, N)
        lo, hi = E.radial_extent()
        y = rng.normal(size=(200000, 3))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        n = E.normal
        x = np.asarray(center) + y + (1 / N - 1) * (y @ n)[:, None] * n
        r = np.linalg.norm(x, axis=1)
        assert r.min() >= lo - 1e-9 and r.max() <= hi + 1e-9
        assert r.min() == pytest.approx(lo, abs=1e-3) and r.max() == pytest.approx(hi, abs=1e-3)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_vitali_cover_small(N):
    cover = geo.vitali_cover(N, samples=20000)
    assert cover.verification["coverage"] == 1.0
    assert cover.verification["max_multiplicity"] <= 64
    assert cover.verification["contained"]
    assert 0 < cover.verification["uncovered_bound_95"] < 2e-4
    assert geo.halved_images_disjoint(cover)
    r = np.linalg.norm(cover.centers, axis=1)
    assert np.all((r > N - 1) & (r <= N + 1e-12))
    text = cover.to_text()
    assert text.startswith("# N x y z") and len(text.splitlines()) == cover.count + 1


def test_cover_is_deterministic():
    a = geo.vitali_cover(2, verify=False)
    b = geo.vitali_cover(2, verify=False)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_multiplicity_counts_match_direct_membership():
    cover = geo.vitali_cover(2, verify=False)
    rng = np.random.default_rng(2)
    pts = geo.sample_annulus(2, 500, rng)
    direct = sum(E.contains(pts).astype(int) for E in cover.ellipsoids())
    np.testing.assert_array_equal(cover.multiplicity(pts), direct)


def test_shell_estimate_maxwellian(small_spec):
    s = geo.shell_estimate(Maxwellian(), 2, small_spec, n_radial=8, n_theta=6, level=1)
    assert s.fisher > 0 and s.mass_term > 0 and s.rhs > 0 and s.ratio > 1
    with pytest.raises(DomainError):
        geo.shell_estimate(object(), 2, small_spec)


def test_ellipsoid_estimate_positive(small_spec):
    E = geo.Ellipsoid((1.5, 0.0, 0.0), 2)
    s = geo.ellipsoid_estimate(Maxwellian(), E, small_spec)
    assert s.lhs > 0 and s.rhs > 0
