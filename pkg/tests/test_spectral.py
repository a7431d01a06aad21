import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflink import (ConfigError, FourierMode, ShellSpectrum, SpectrumConfig, UnsupportedRepresentation,
                      delta2_bound, energy, fit_slope, generate_ensemble, helical_decompose,
                      helicity_spectral, shell_spectrum, sphere_average)
from hopflink.spectral import (helical_basis, helical_coefficients, lattice_shell, mode_quantities,
                               quad_cross_diagnostic, single_mode)

vec = st.lists(st.integers(-4, 4), min_size=3, max_size=3).filter(any).map(np.array)


def _mean_slope(alpha, quantity, seeds=range(8)):
    return np.mean([fit_slope(shell_spectrum(
        generate_ensemble(SpectrumConfig(alpha, 1, 12, 32, "right", s)), quantity)).slope
        for s in seeds])


def test_helical_eigenvectors():
    for k in ([0, 0, 2.0], [1.0, -2.0, 0.5]):
        _, _, hp, hm = helical_basis(k)
        kh = np.asarray(k) / np.linalg.norm(k)
        np.testing.assert_allclose(1j * np.cross(kh, hp), hp, atol=1e-14)
        np.testing.assert_allclose(1j * np.cross(kh, hm), -hm, atol=1e-14)


def test_right_input_has_no_left_part():
    m = single_mode([1.0, 2.0, 2.0], 1.3, "right")
    left, right = helical_decompose(m.modes()[0])
    assert np.linalg.norm(left) < 1e-15
    np.testing.assert_allclose(right, m.amplitudes[0], atol=1e-15)


def test_linear_polarisation_is_balanced():
    k = np.array([0.0, 0.0, 3.0])
    mode = FourierMode(k, np.array([1.0, 0.5, 0.0], dtype=complex))
    left, right = helical_decompose(mode)
    assert np.linalg.norm(left) == pytest.approx(np.linalg.norm(right), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(vec, st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_decomposition_reconstructs(n, a, b, c, d):
    k = n.astype(float)
    e1, e2, _, _ = helical_basis(k)
    amp = (a + 1j * b) * e1 + (c + 1j * d) * e2
    left, right = helical_decompose(FourierMode(k, amp))
    scale = max(np.linalg.norm(amp), 1.0)
    np.testing.assert_allclose(left + right, amp, atol=1e-12 * scale)
    assert np.linalg.norm(left) ** 2 + np.linalg.norm(right) ** 2 == pytest.approx(
        np.linalg.norm(amp) ** 2, rel=1e-12, abs=1e-24)


def test_zero_wavevector_rejected():
    with pytest.raises(ConfigError):
        helical_decompose(FourierMode(np.zeros(3), np.zeros(3, complex)))


def test_deterministic_generation():
    c = SpectrumConfig(1.0, 1.0, 5.0, 8, "random", seed=11)
    a, b = generate_ensemble(c), generate_ensemble(c)
    np.testing.assert_array_equal(a.kvecs, b.kvecs)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert a.to_dict() == b.to_dict()


def test_config_validation():
    with pytest.raises(ConfigError):
        SpectrumConfig(1.0, 3.0, 2.0)
    with pytest.raises(ConfigError):
        SpectrumConfig(1.0, 1.0, 2.0, modes_per_shell=0)
    with pytest.raises(ConfigError):
        generate_ensemble(SpectrumConfig(1.0, 1.2, 1.8))
    with pytest.raises(ConfigError):
        SpectrumConfig(1.0, 1.0, 2.0, polarization="diagonal")


def test_lattice_shell_half_space():
    n = lattice_shell(1)
    assert len(n) == 9
    full = np.concatenate([n, -n])
    assert len({tuple(v) for v in full}) == 18


def test_right_only_positive_helicity():
    f = generate_ensemble(SpectrumConfig(0.7, 1.0, 6.0, 16, "right", seed=2))
    _, _, hel, _ = mode_quantities(f)
    assert np.all(hel > 0)
    g = generate_ensemble(SpectrumConfig(0.7, 1.0, 6.0, 16, "left", seed=2))
    assert np.all(mode_quantities(g)[2] < 0)


def test_balanced_zero_helicity_and_shells():
    f = generate_ensemble(SpectrumConfig(1.0, 1.0, 8.0, 16, "balanced", seed=0))
    U = energy(f)
    assert abs(helicity_spectral(f)) <= 1e-10 * U
    sp = shell_spectrum(f, "helicity")
    assert np.abs(sp.values).max() <= 1e-12 * U


def test_single_mode_energy_bin():
    b = 1.4
    m = single_mode([0.0, 3.0, 0.0], b)
    sp = shell_spectrum(m, "energy")
    assert len(sp) == 1 and sp.k[0] == pytest.approx(3.0)
    assert sp.values[0] == pytest.approx(b * b * m.domain.volume, rel=1e-12)


def test_shell_spectrum_sums_to_totals():
    f = generate_ensemble(SpectrumConfig(1.0, 1.0, 3.0, 1000, "random", seed=0))
    assert np.all(f.weights == 1.0)
    assert shell_spectrum(f, "energy").values.sum() == pytest.approx(energy(f), rel=1e-12)
    assert shell_spectrum(f, "helicity").values.sum() == pytest.approx(helicity_spectral(f),
                                                                       rel=1e-10)


def test_shell_spectrum_requires_ensemble(abc):
    with pytest.raises(UnsupportedRepresentation):
        shell_spectrum(abc, "energy")
    with pytest.raises(ConfigError):
        shell_spectrum(single_mode([1.0, 0, 0], 1.0), "vorticity")


def test_single_mode_quad_term_against_mc():
    # one mode: the squared kernel integrates to V |P x Q|^2 k / 32 in free
    # space; on the box the L/2 truncation removes only a small tail
    m = single_mode([0.0, 0.0, 4.0], 1.0)
    diag = mode_quantities(m)[3][0]
    mc = delta2_bound(m, 60000, 1)
    assert abs(mc.value - diag) < 4 * mc.error + 0.05 * diag


def test_cross_diagnostic(small_ensemble):
    d = quad_cross_diagnostic(small_ensemble, 2000, 0)
    assert d["total"] == pytest.approx(d["diagonal"] + d["cross"])


def test_fit_exact_power_law():
    k = np.arange(1.0, 13.0)
    fit = fit_slope(ShellSpectrum(k, k**-2.0, "energy"))
    slope, err = fit
    assert slope == pytest.approx(-2.0, abs=1e-9)
    assert err < 1e-9


def test_fit_excludes_nonpositive():
    k = np.arange(1.0, 7.0)
    v = k**1.5
    v[2] = -1.0
    v[4] = 0.0
    fit = fit_slope(ShellSpectrum(k, v, "helicity"))
    assert fit.n_excluded == 2 and fit.slope == pytest.approx(1.5)
    with pytest.raises(ConfigError):
        fit_slope(ShellSpectrum(k[:3], [1.0, -1.0, 2.0], "helicity"))


def test_spectrum_csv(tmp_path):
    sp = shell_spectrum(single_mode([0.0, 2.0, 0.0], 1.0), "energy")
    sp.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "k,value"
    back = ShellSpectrum.from_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.values, sp.values)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_slopes(alpha):
    assert _mean_slope(alpha, "helicity") == pytest.approx(1 - 2 * alpha, abs=0.3)
    assert _mean_slope(alpha, "energy") == pytest.approx(2 - 2 * alpha, abs=0.3)
    assert _mean_slope(alpha, "quad_main") == pytest.approx(6 - 4 * alpha, abs=0.5)


def test_flat_helicity_single_seed():
    f = generate_ensemble(SpectrumConfig(0.5, 1, 12, 32, "right", 0))
    assert fit_slope(shell_spectrum(f, "helicity")).slope == pytest.approx(0.0, abs=0.3)


def test_sphere_averages():
    assert sphere_average("sin2") == pytest.approx(1 / 3, abs=1e-10)
    assert sphere_average("abs_sin") == pytest.approx(0.5, abs=1e-10)
    assert sphere_average("one") == pytest.approx(1.0, abs=1e-14)
    assert sphere_average(lambda th: np.cos(th) ** 2) == pytest.approx(2 / 3, abs=1e-10)
    with pytest.raises(ConfigError):
        sphere_average("tan")
