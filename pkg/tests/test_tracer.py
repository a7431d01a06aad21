import numpy as np
import pytest

from hopflink import (BeltramiField, ConfigError, DomainExitError, StagnationError,
                      reverse_check, trace, zero_ensemble)
from hopflink.fieldcore import PeriodicBox, UniformField


def test_rotation_orbit_closes(rotation):
    line = trace(rotation, [1.0, 0, 0], 2 * np.pi)
    assert np.linalg.norm(line.x[-1] - [1, 0, 0]) < 1e-6
    assert np.all(np.diff(line.t) > 0)
    assert line.t[0] == 0 and line.T == pytest.approx(2 * np.pi)


def test_zero_time_single_sample(abc):
    line = trace(abc, [0.1, 0.2, 0.3], 0.0)
    assert len(line.samples) == 1
    np.testing.assert_array_equal(line.x[0], [0.1, 0.2, 0.3])


def test_start_tangent(abc):
    line = trace(abc, [0, 0, 0], 1e-3)
    v = (line.at(1e-6) - line.at(0.0)) / 1e-6
    np.testing.assert_allclose(v, [1, 1, 1], rtol=1e-5)
    assert np.linalg.norm(line.B[0]) == pytest.approx(np.sqrt(3))


def test_speed_matches_field(abc):
    line = trace(abc, [0.4, 1.1, 2.2], 20.0)
    t = np.linspace(0.5, 19.5, 40)
    h = 1e-5
    v = (line.at(t + h) - line.at(t - h)) / (2 * h)
    B = abc(line.at(t))
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), np.linalg.norm(B, axis=1), rtol=1e-4)


def test_volume_preservation(abc):
    x0 = np.array([1.0, 2.0, 0.5])
    eps = 1e-4
    pts = [x0, x0 + [eps, 0, 0], x0 + [0, eps, 0], x0 + [0, 0, eps]]
    ends = np.array([trace(abc, p, 10.0, tol=1e-11).x[-1] for p in pts])
    vol0 = eps**3 / 6
    vol = abs(np.linalg.det(ends[1:] - ends[0])) / 6
    assert abs(vol / vol0 - 1) < 0.01


def test_reverse_check(rotation, abc):
    assert reverse_check(rotation, [0.5, 0.2, 0.1], 1.0) < 1e-8
    assert reverse_check(rotation, [0.5, 0.2, 0.1], 0.0) == 0.0
    drift = reverse_check(abc, [0.3, 0.4, 0.5], 50.0)
    assert np.isfinite(drift)


def test_backward_trace(abc):
    fwd = trace(abc, [0.3, 0.4, 0.5], 5.0, tol=1e-11)
    back = trace(abc, fwd.x[-1], -5.0, tol=1e-11)
    assert back.T == pytest.approx(-5.0)
    np.testing.assert_allclose(back.x[-1], [0.3, 0.4, 0.5], atol=1e-7)


def test_stagnation_and_exit(rotation):
    with pytest.raises(StagnationError):
        trace(zero_ensemble(), [0.1, 0.2, 0.3], 1.0)
    with pytest.raises(StagnationError):
        trace(rotation, [0.0, 0.0, 0.5], 1.0)
    leaving = UniformField([1.0, 0, 0], rotation.domain)
    with pytest.raises(DomainExitError):
        trace(leaving, [0.0, 0.0, 0.0], 5.0)


def test_bad_arguments(abc):
    with pytest.raises(ConfigError):
        trace(abc, [0, 0, 0], np.inf)
    with pytest.raises(ConfigError):
        trace(abc, [0, 0, 0], 1.0, tol=0)


def test_covering_space_unwrapped():
    f = UniformField([1.0, 0, 0], PeriodicBox(1.0))
    line = trace(f, [0.5, 0.5, 0.5], 3.0)
    assert line.x[-1][0] == pytest.approx(3.5)


def test_polyline_csv(tmp_path, abc):
    line = trace(abc, [0.1, 0.2, 0.3], 2.0)
    line.to_csv(tmp_path / "l.csv")
    rows = (tmp_path / "l.csv").read_text().splitlines()
    assert rows[0] == "t,x,y,z,Bx,By,Bz"
    assert len(rows) == len(line.t) + 1
    line.to_csv(tmp_path / "r.csv", abc, times=np.linspace(0, 2, 5))
    data = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 4:], abc(data[:, 1:4]))


def test_scale_covariance_bitwise(abc):
    big = abc.scaled(2.0, 2.0)
    a = trace(abc, [0.3, 0.2, 0.1], 30.0)
    b = trace(big, [0.6, 0.4, 0.2], 30.0)
    np.testing.assert_array_equal(b.t, a.t)
    np.testing.assert_array_equal(b.x, 2 * a.x)
