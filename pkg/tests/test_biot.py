import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflink import SingularityError, biot_savart, delta2_sim, delta2_tensor, gauss_kernel, psi

vec = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3).map(np.array)


def test_biot_savart_example():
    v = biot_savart([0, 0, 1], [1, 0, 0], [0, 0, 0])
    np.testing.assert_allclose(v, [0, 1 / (4 * np.pi), 0], atol=1e-16)
    assert v[1] == pytest.approx(0.0795775, abs=1e-7)


def test_biot_savart_parallel_and_linear():
    assert np.all(biot_savart([2, 0, 0], [1, 0, 0], [0, 0, 0]) == 0)
    a = biot_savart([0.3, -1, 2], [1, 2, 0], [0, 0.5, 0])
    b = biot_savart([0.6, -2, 4], [1, 2, 0], [0, 0.5, 0])
    np.testing.assert_allclose(b, 2 * a)


def test_gauss_kernel_example():
    g = gauss_kernel([1, 0, 0], [0, 0, 0], [0, 1, 0], [0, 0, 1])
    assert g == pytest.approx(-1 / (4 * np.pi), rel=1e-14)
    assert gauss_kernel([1, 1, 0], [0, 0, 0], [2, 2, 0], [0, 1, 1]) == 0


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, vec)
def test_kernel_symmetry(B1, x1, B2, x2):
    if np.linalg.norm(x1 - x2) < 1e-3:
        return
    a = gauss_kernel(B1, x1, B2, x2)
    b = gauss_kernel(B2, x2, B1, x1)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(vec, vec, vec, vec, st.floats(0.1, 4), st.floats(0.1, 4))
def test_kernel_scaling(B1, x1, B2, x2, l, m):
    if np.linalg.norm(x1 - x2) < 1e-2:
        return
    g = gauss_kernel(B1, x1, B2, x2)
    gs = gauss_kernel(l * B1, m * x1, l * B2, m * x2)
    assert gs == pytest.approx(l**2 / m**2 * g, rel=1e-10, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(vec, vec, vec, vec, st.floats(-3, 3), st.floats(-3, 3))
def test_polarisation_is_bilinear(B1, B2, C, x1, s, t):
    x2 = x1 + np.array([0.7, -0.2, 0.4])

    def cross(u, w):
        # polarisation defect of the quadratic kernel G_B = G(B, x1, B, x2)
        q = lambda b: gauss_kernel(b, x1, b, x2)
        return q(u + w) - q(u) - q(w)

    lhs = cross(s * B1 + t * C, B2)
    rhs = s * cross(B1, B2) + t * cross(C, B2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_psi_values():
    assert psi([0, 0, 0], [1, 0, 0]) == 1.0
    assert psi([0, 0, 0], [0, 2, 0]) == 0.125
    with pytest.raises(SingularityError):
        psi([1, 1, 1], [1, 1, 1])
    with pytest.raises(SingularityError):
        gauss_kernel([1, 0, 0], [0, 0, 0], [0, 1, 0], [0, 0, 0])


def test_delta2_tensor(abc, rng):
    for _ in range(20):
        x1, x2 = rng.random(3) * 2, rng.random(3) * 2
        d = delta2_tensor(abc, x1, x2)
        g = gauss_kernel(abc(x1), x1, abc(x2), x2)
        assert d >= 0
        assert d == pytest.approx(g * g, rel=1e-14)


def test_delta2_sim():
    assert delta2_sim(3.0, 1.0, 2.0) == 0
    assert delta2_sim(0, 0, 0) == 0
    g = 0.37
    # B1 = B2: the quadratic kernel gives G_sum = 4g, so the formula yields 2 g^2
    assert delta2_sim(4 * g, g, g) == pytest.approx(2 * g * g)
    assert delta2_sim(4 * g, g, g) / (g * g) == pytest.approx(2.0)
