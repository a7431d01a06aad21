import numpy as np
import pytest

from hopflink import (ConfigError, Loop, ProximityError, StagnationError, asymptotic_linking,
                      closed_curve_linking, gauss_kernel, hopf_link, linking_distribution,
                      segment_linking, zero_ensemble)
from hopflink.linkage import pair_lambdas, panel_edges, sample_pairs


def test_rotation_coaxial_orbits(rotation):
    v = segment_linking(rotation, [1.0, 0, 0], [0.5, 0, 0.3], 2 * np.pi)
    assert abs(v) < 1e-3


def test_small_time_limit(abc):
    x1, x2 = np.array([0.3, 0.2, 1.0]), np.array([1.5, 0.4, 2.0])
    G = gauss_kernel(abc(x1), x1, abc(x2), x2)
    T = 1e-3
    v = segment_linking(abc, x1, x2, T)
    assert v / T**2 == pytest.approx(G, rel=1e-2)


def test_swap_symmetry(abc):
    x1, x2 = [0.3, 0.2, 1.0], [1.5, 0.4, 2.0]
    a = segment_linking(abc, x1, x2, 20.0, on_proximity="ignore")
    b = segment_linking(abc, x2, x1, 20.0, on_proximity="ignore")
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_proximity_error_reports_closest_approach(abc):
    with pytest.raises(ProximityError) as exc:
        segment_linking(abc, [0.3, 0.2, 1.0], [0.3, 0.2, 1.0 + 1e-5], 2.0)
    assert exc.value.distance < 1e-3 * abc.domain.L


def test_asymptotic_rotation(rotation):
    est = asymptotic_linking(rotation, [0.8, 0, 0], [0.4, 0, 0.3],
                             [2 * np.pi, 4 * np.pi, 8 * np.pi])
    assert abs(est.value) < 1e-6
    assert est.error >= 0 and len(est.trace) == 3


def test_asymptotic_zero_field_stalls():
    with pytest.raises(StagnationError):
        asymptotic_linking(zero_ensemble(), [0.1, 0.1, 0.1], [1, 1, 1], [1, 2, 3])


def test_asymptotic_needs_three_entries(abc):
    with pytest.raises(ConfigError):
        asymptotic_linking(abc, [0, 0, 0], [1, 1, 1], [1, 2])


def test_asymptotic_beltrami_against_long_segment(abc):
    x1, x2 = sample_pairs(abc, 1, 7, 0.01)[0]
    est = asymptotic_linking(abc, x1, x2, [50, 100, 200, 400], on_proximity="ignore")
    oracle = segment_linking(abc, x1, x2, 800.0, on_proximity="ignore") / 800**2
    assert np.isfinite(est.value)
    assert abs(est.value - oracle) <= 2 * est.error + 1e-4


def test_extrapolation_flag(abc):
    x1, x2 = sample_pairs(abc, 1, 3, 0.01)[0]
    plain = asymptotic_linking(abc, x1, x2, [10, 20, 40], on_proximity="ignore")
    ext = asymptotic_linking(abc, x1, x2, [10, 20, 40], on_proximity="ignore", extrapolate=True)
    assert plain.value == plain.trace[-1]
    assert np.isfinite(ext.value)


def test_panel_edges_contain_schedule():
    e = panel_edges([1.0, 2.5, 7.0], 8)
    for T in (1.0, 2.5, 7.0):
        assert np.min(np.abs(e - T)) == 0
    with pytest.raises(ConfigError):
        panel_edges([1.0], 4)


def test_hopf_link():
    c1, c2 = hopf_link()
    v = closed_curve_linking(c1, c2)
    assert abs(abs(v) - 1) < 1e-3
    assert v == pytest.approx(-1.0, abs=1e-6)


def test_unlinked_parallel_circles():
    c1 = Loop.circle((0, 0, 0), (0, 0, 1), 1.0)
    c2 = Loop.circle((0, 0, 10), (0, 0, 1), 1.0)
    assert abs(closed_curve_linking(c1, c2)) < 1e-3


def test_double_traversal_doubles():
    c1, c2 = hopf_link()
    c2x2 = Loop.circle((1, 0, 0), (0, -1, 0), 1.0, turns=2, axis=(1, 0, 0))
    assert closed_curve_linking(c1, c2x2) == pytest.approx(2 * closed_curve_linking(c1, c2),
                                                           rel=1e-9)


def test_loops_intersecting_raise():
    c1 = Loop.circle((0, 0, 0), (0, 0, 1), 1.0)
    c2 = Loop.circle((1, 0, 0), (0, 0, 1), 1.0)
    with pytest.raises(ProximityError):
        closed_curve_linking(c1, c2)


def test_scale_covariance_lambda(abc):
    pairs = sample_pairs(abc, 3, 11, 0.01)
    v1, _, ok1 = pair_lambdas(abc, pairs, 30.0)
    v2, _, ok2 = pair_lambdas(abc.scaled(2.0, 2.0), 2 * pairs, 30.0)
    assert ok1.all() and ok2.all()
    np.testing.assert_allclose(v2, v1, rtol=1e-6)


def test_amplitude_doubling_distribution(abc):
    # the doubled field covers twice the length in the same time, so
    # lambda_{2B}(T) = 4 lambda_B(2T); quad_n doubles to keep the same panels
    d1 = linking_distribution(abc, 4, 40.0, seed=2)
    d2 = linking_distribution(abc.scaled(2.0, 1.0), 4, 20.0, seed=2, quad_n=16)
    np.testing.assert_array_equal(d1.pairs, d2.pairs)
    assert np.abs(d2.values - 4 * d1.values).max() < 1e-4 * np.abs(4 * d1.values).max()
    v = d1.sorted_values
    probes = np.concatenate([[v[0] - 1], 0.5 * (v[1:] + v[:-1]), [v[-1] + 1]])
    np.testing.assert_array_equal(d2.cdf(4 * probes), d1.cdf(probes))


def test_rotation_distribution_is_step(rotation):
    d = linking_distribution(rotation, 8, 4 * np.pi, seed=0)
    assert np.abs(d.values).max() < 1e-5
    assert d.cdf(-1e-4) == 0.0 and d.cdf(1e-4) == 1.0


def test_distribution_csv(tmp_path, rotation):
    d = linking_distribution(rotation, 3, 2 * np.pi, seed=0)
    d.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "pair_id,x1,y1,z1,x2,y2,z2,lambda,err"
    assert len(lines) == 4


def test_worker_independence(abc):
    pairs = sample_pairs(abc, 4, 5, 0.01)
    a = pair_lambdas(abc, pairs, 10.0, workers=1)
    b = pair_lambdas(abc, pairs, 10.0, workers=2)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_sample_pairs_deterministic(abc):
    np.testing.assert_array_equal(sample_pairs(abc, 10, 3), sample_pairs(abc, 10, 3))
    P = sample_pairs(abc, 200, 3, dcut=1.0)
    d = P[:, 0] - P[:, 1]
    d -= abc.domain.L * np.round(d / abc.domain.L)
    assert np.linalg.norm(d, axis=1).min() >= 1.0
