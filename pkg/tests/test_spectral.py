import json
import math

import numpy as np
import pytest
from scipy import integrate, special

from roughfbm.spectral import (ANTISYMMETRIC, FbmModel, FrequencyGrid, SpectralPath,
                               antisym_cross_covariance, c_alpha, continuum_covariance,
                               continuum_covariance_quad, exact_covariance, fbm_amplitudes,
                               fbm_covariance, load_spectrum, noise_batch, sample_antisym_fbm,
                               sample_fbm, save_spectrum, standard_noise)


def test_c_alpha_values():
    assert c_alpha(0.25) == pytest.approx(0.1579, abs=1e-4)
    direct = 0.5 * math.sqrt(-0.25 / (math.cos(math.pi / 4) * math.gamma(-0.5)))
    assert c_alpha(0.25) == pytest.approx(direct, rel=1e-14)
    assert c_alpha(0.75) > 0
    with pytest.raises(ValueError):
        c_alpha(0.5)
    with pytest.raises(ValueError):
        c_alpha(1.2)


def test_model_validation():
    with pytest.raises(ValueError):
        FbmModel(0.3, 0.0)
    with pytest.raises(ValueError):
        FbmModel(0.3, 1e-3, 3, ANTISYMMETRIC)
    with pytest.raises(ValueError):
        FrequencyGrid(0)
    with pytest.raises(ValueError):
        FrequencyGrid(8, -1.0)


def test_eval_examples():
    grid = FrequencyGrid(8, 0.5)
    p = SpectralPath.from_atoms(grid, [{3: 1.0}])
    omega = 1.5
    t = np.array([0.0, 0.3, 1.7])
    np.testing.assert_allclose(p.eval(1, t), 2 * np.sin(omega * t) / omega, atol=1e-15)
    assert p.eval(1, 0.0) == 0.0
    np.testing.assert_allclose(p.derivative(1, t), 2 * np.cos(omega * t), atol=1e-15)


def test_full_amplitudes_are_hermitian(small_path):
    full = small_path.full_amplitudes(1)
    np.testing.assert_array_equal(full[0::2], np.conj(full[1::2]))
    assert list(small_path.grid.full_k[:4]) == [-1, 1, -2, 2]


def test_sampling_is_reproducible():
    model, grid = FbmModel(0.3, 1e-3, 2), FrequencyGrid(16)
    a, b = sample_fbm(model, grid, 5), sample_fbm(model, grid, 5)
    np.testing.assert_array_equal(a.amp, b.amp)
    assert not np.allclose(a.amp, sample_fbm(model, grid, 6).amp)
    # component 1 does not depend on how many components are drawn
    one = sample_fbm(FbmModel(0.3, 1e-3, 1), grid, 5)
    np.testing.assert_array_equal(one.amp[0], a.amp[0])


def test_noise_moments():
    z = noise_batch(FrequencyGrid(64), 1, seed=0, M=400)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.03)
    assert abs(np.mean(z**2)) < 0.03


def test_exact_covariance_at_origin():
    model, grid = FbmModel(0.3, 1e-3), FrequencyGrid(64)
    assert exact_covariance(model, grid, 1, 1, 0.0, 0.0) == 0.0
    assert exact_covariance(model, grid, 1, 1, 0.0, 0.7) == 0.0


def test_empirical_variance_matches_grid():
    model, grid = FbmModel(0.3, 1e-3, 2), FrequencyGrid(128)
    amp = fbm_amplitudes(model, grid, noise_batch(grid, 2, seed=1, M=10_000))
    f = (np.exp(1j * grid.xi) - 1) / (1j * grid.xi)
    b1 = 2 * np.real(amp @ f)
    var = b1[:, 0] ** 2
    exact = exact_covariance(model, grid, 1, 1, 1.0, 1.0)
    assert abs(var.mean() - exact) <= 5 * var.std(ddof=1) / 100
    cross = b1[:, 0] * b1[:, 1]
    assert abs(cross.mean()) <= 5 * cross.std(ddof=1) / 100


def test_antisymmetric_marginals_match():
    grid = FrequencyGrid(128)
    model = FbmModel(0.3, 1e-3, 2, ANTISYMMETRIC)
    z = fbm_amplitudes(model, grid, noise_batch(grid, 1, seed=2, M=4000))
    f = (np.exp(1j * 0.6 * grid.xi) - 1) / (1j * grid.xi)
    vals = 2 * np.real(z @ f)
    v1, v2 = vals[:, 0] ** 2, vals[:, 1] ** 2
    se = math.hypot(v1.std(), v2.std()) / math.sqrt(len(v1))
    assert abs(v1.mean() - v2.mean()) <= 5 * se
    assert exact_covariance(model, grid, 1, 1, 0.6, 0.6) == pytest.approx(
        exact_covariance(model, grid, 2, 2, 0.6, 0.6), rel=1e-12)


def test_antisymmetric_cross_covariance_formula():
    model = FbmModel(0.3, 1e-3, 2, ANTISYMMETRIC)
    grid = FrequencyGrid(4096, 0.3, "cell")
    target = antisym_cross_covariance(0.3, 0.3, 0.7)
    assert exact_covariance(model, grid, 1, 2, 0.3, 0.7) == pytest.approx(target, rel=0.02)
    # at s = t the formula vanishes
    assert antisym_cross_covariance(0.3, 0.5, 0.5) == 0.0
    assert abs(exact_covariance(model, grid, 1, 2, 0.5, 0.5)) < 1e-12
    p = sample_antisym_fbm(0.3, 1e-3, FrequencyGrid(8), seed=0)
    np.testing.assert_allclose(p.amp[1], -1j * p.amp[0])


@pytest.mark.parametrize("alpha,eta,i,j,s,t", [
    (0.3, 0.1, 1, 1, 0.2, 0.7),
    (0.7, 0.05, 1, 1, 0.4, 1.0),
    (0.3, 0.05, 1, 2, 0.3, 0.7),
])
def test_continuum_closed_form_against_quadrature(alpha, eta, i, j, s, t):
    kind = ANTISYMMETRIC if i != j else "independent"
    model = FbmModel(alpha, eta, 2, kind)
    assert continuum_covariance(model, i, j, s, t) == pytest.approx(
        continuum_covariance_quad(model, i, j, s, t), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_continuum_tends_to_fbm(alpha):
    model = FbmModel(alpha, 1e-12)
    for s, t in [(0.2, 0.9), (1.0, 1.0), (0.5, 0.3)]:
        assert continuum_covariance(model, 1, 1, s, t) == pytest.approx(
            float(fbm_covariance(alpha, s, t)), rel=1e-5)


def test_cell_rule_mass_is_exact():
    grid = FrequencyGrid(32, 0.4, "cell")
    alpha, eta = 0.3, 0.05
    total, _ = integrate.quad(lambda x: np.exp(-2 * eta * x) * x ** (1 - 2 * alpha), 0,
                              (grid.K + 0.5) * grid.delta_xi, limit=200)
    assert grid.mass(alpha, eta).sum() == pytest.approx(total, rel=1e-10)
    node = FrequencyGrid(32, 0.4).mass(alpha, eta)
    assert node[3] == pytest.approx(np.exp(-2 * eta * 1.6) * 1.6 ** 0.4 * 0.4)
    assert special.gammainc(1.4, 0.0) == 0.0


def test_grid_reproduces_fbm_at_alpha_07():
    model, grid = FbmModel(0.7, 1e-3), FrequencyGrid(4096, 0.3, "cell")
    assert exact_covariance(model, grid, 1, 1, 1.0, 1.0) == pytest.approx(1.0, rel=0.02)


def test_spectrum_round_trip(tmp_path, small_path):
    out = tmp_path / "spec.csv"
    save_spectrum(small_path, out, {"alpha": 0.3, "eta": 1e-3, "seed": 7})
    assert out.read_text().splitlines()[0] == "component,k,xi,re_amp,im_amp"
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["convention"] == "hermitian" and meta["K"] == 32 and meta["d"] == 2
    back, meta2 = load_spectrum(out)
    np.testing.assert_array_equal(back.amp, small_path.amp)
    assert back.grid == small_path.grid and meta2["seed"] == 7


def test_standard_noise_substreams_differ():
    z = standard_noise(FrequencyGrid(16), 2, seed=3)
    assert not np.allclose(z[0], z[1])
