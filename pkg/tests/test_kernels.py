import numpy as np
import pytest

import oracles
from landaulab import kernels
from landaulab.densities import Maxwellian
from landaulab.errors import AccuracyError, DomainError
from landaulab.profile import DEFAULT_PROFILE


def test_landau_matrix_examples():
    np.testing.assert_allclose(kernels.landau_matrix([1.0, 0, 0]), np.diag([0, 1, 1]))
    np.testing.assert_allclose(kernels.landau_matrix([0, 2.0, 0]), np.diag([0.5, 0, 0.5]))
    with pytest.raises(DomainError):
        kernels.landau_matrix([0.0, 0.0, 0.0])


def test_landau_matrix_structure():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(50, 3))
    a = kernels.landau_matrix(v)
    np.testing.assert_allclose(a, np.swapaxes(a, 1, 2))
    np.testing.assert_allclose(np.einsum("nij,nj->ni", a, v), 0, atol=1e-14)
    np.testing.assert_allclose(np.trace(a, axis1=1, axis2=2), 2 / np.linalg.norm(v, axis=1))
    # homogeneous of degree -1
    np.testing.assert_allclose(kernels.landau_matrix(3 * v), a / 3)
    assert kernels.is_psd(a)


def test_eta_profile():
    x = np.linspace(0, 1.5, 3001)
    e = kernels.eta(x)
    np.testing.assert_allclose(e[x <= 0.5], x[x <= 0.5] ** 3)
    np.testing.assert_allclose(e[x >= 1], 1.0)
    assert np.all(np.diff(e) >= -1e-15)
    assert np.all((e >= 0) & (e <= 1))
    d = kernels.eta_prime(x)
    assert d.min() >= -1e-12 and d.max() <= 2 + 1e-9
    # derivative table consistent with the value table
    mid = (x[1:] + x[:-1]) / 2
    np.testing.assert_allclose(np.diff(e) / np.diff(x), kernels.eta_prime(mid), rtol=1e-3, atol=2e-5)
    with pytest.raises(DomainError):
        kernels.eta(-0.1)


def test_eta_continuous_at_breaks():
    for b in DEFAULT_PROFILE.radial_breakpoints()[1:]:
        lo, hi = kernels.eta([b - 1e-12, b + 1e-12])
        assert abs(hi - lo) < 1e-9
        lo, hi = kernels.eta_prime([b - 1e-12, b + 1e-12])
        assert abs(hi - lo) < 1e-9


def test_cutoff_matrix():
    np.testing.assert_array_equal(kernels.cutoff_matrix([0.0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_allclose(kernels.cutoff_matrix([0.25, 0, 0]),
                               0.25 ** 2 * np.diag([0, 1, 1]))
    v = np.array([[2.0, 1.0, 0.5], [0.1, 0.2, -0.3], [0.6, 0.3, 0.1]])
    np.testing.assert_allclose(kernels.cutoff_matrix(v[:1]), kernels.landau_matrix(v[:1]))
    diff = kernels.landau_matrix(v) - kernels.cutoff_matrix(v)
    assert kernels.is_psd(diff)


def test_error_kernel():
    assert kernels.error_kernel([0.3, 0, 0]) == -6.0
    assert kernels.error_kernel([1.2, 0, 0]) == 0.0
    r = np.linspace(0.01, 2, 400)
    e = kernels.error_kernel(np.stack([r, 0 * r, 0 * r], axis=1))
    assert np.all(e <= 0) and e.min() >= -16.0
    # matches -2 eta'/r^2 computed from finite differences of eta
    h = 1e-6
    x = np.array([0.6, 0.8, 0.95])
    fd = (kernels.eta(x + h) - kernels.eta(x - h)) / (2 * h)
    np.testing.assert_allclose(kernels.error_kernel(np.stack([x, 0 * x, 0 * x], 1)),
                               -2 * fd / x ** 2, rtol=1e-6)


def test_convolved_matrix_vs_closed_form(small_spec):
    spec = small_spec.with_(nodes_per_axis=24, sphere_nodes=72, radial_nodes=16)
    r = np.array([1.0, 2.0, 4.0])
    pts = np.stack([r, 0 * r, 0 * r], axis=1)
    mats = kernels.convolved_matrices(Maxwellian(), pts, spec, cutoff=False)[-1]
    np.testing.assert_allclose(mats[:, 0, 0], oracles.maxwellian_radial(r), rtol=2e-3)
    np.testing.assert_allclose(mats[:, 1, 1], oracles.maxwellian_tangential(r), rtol=2e-3)
    np.testing.assert_allclose(mats[:, 0, 1], 0, atol=1e-6)


def test_convolved_matrix_cutoff_below_full(small_spec):
    f = Maxwellian()
    v = np.array([0.7, -0.4, 0.2])
    full = kernels.convolved_matrix(f, v, small_spec, cutoff=False)
    cut = kernels.convolved_matrix(f, v, small_spec)
    assert kernels.is_psd(cut) and kernels.is_psd(full - cut)


def test_convolved_matrix_tolerance(small_spec):
    with pytest.raises(AccuracyError):
        kernels.convolved_matrix(Maxwellian(), [0.3, 0, 0],
                                 small_spec.with_(nodes_per_axis=4, tolerance=1e-12))


def test_aniso_eigen_and_bracket():
    m = np.diag([1.0, 2.0, 3.0])
    e = kernels.aniso_eigen(m, [1, 0, 0])
    assert e.radial_eigenvalue == pytest.approx(1.0)
    assert e.tangential_eigenvalues == pytest.approx((2.0, 3.0))
    assert e.tangential_min == pytest.approx(2.0)
    assert kernels.bracket([0, 0, 0]) == 1.0
    with pytest.raises(DomainError):
        kernels.aniso_eigen(m, [0, 0, 0])


def test_anisotropy_asymptotes(small_spec):
    pts = np.array([[8.0, 0, 0], [0, 16.0, 0]])
    prod = kernels.anisotropy_products(Maxwellian(), pts, small_spec)
    assert np.all(np.abs(prod[:, 0] - 2) < 0.1)
    assert np.all(np.abs(prod[:, 1] - 1) < 0.05)
    c0 = kernels.estimate_c0(Maxwellian(), small_spec, pts)
    assert 0 < c0 <= prod.min() + 1e-12
    with pytest.raises(DomainError):
        kernels.estimate_c0(Maxwellian(), small_spec, [[0.0, 0, 0]])


def test_estimate_c0_capped(small_spec):
    pts = [[8.0, 0, 0]]
    raw, capped = kernels.estimate_c0_capped(Maxwellian(), small_spec, pts, 0.5)
    assert raw > 0.5 and capped == 0.5
