import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from texmix.errors import InvalidInputError
from texmix.grid import circular_shift
from texmix.mixing import (alignment_factor, estimate_model, lia_gram, mixed_correlation,
                           mixed_gram, ot_interpolate, ot_spectrum, pixel_mix,
                           sample_gaussian_texture)
from texmix.stats import correlation, covariance, gram, mean, spectrum


def pair(seed, shape=(6, 5, 3)):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape), rng.standard_normal(shape) + 0.5


def test_estimate_model():
    F = np.broadcast_to(np.array([1.0, 2.0]), (4, 4, 2))
    model = estimate_model(F)
    assert np.allclose(model.mean, [1, 2]) and np.allclose(model.cov, 0)
    F = np.random.default_rng(2).standard_normal((5, 6, 3))
    model = estimate_model(F)
    assert np.array_equal(model.mean, mean(F))
    assert np.array_equal(model.cov, covariance(F))


def test_white_noise_covariance_decays():
    n = 256 * 256
    for seed in range(10):
        F = np.random.default_rng(seed).standard_normal((256, 256, 1))
        C = estimate_model(F).cov[..., 0, 0].copy()
        C[0, 0] = 0
        assert np.max(np.abs(C)) < 5 / np.sqrt(n)


def test_identical_inputs_are_a_fixed_point():
    F, _ = pair(0)
    for rho in [0.0, 0.3, 1.0]:
        assert np.max(np.abs(ot_interpolate(F, F, rho) - F)) < 1e-12


def test_rho_zero_returns_first_exactly():
    F0, F1 = pair(1)
    assert np.array_equal(ot_interpolate(F0, F1, 0.0), F0)


def test_two_point_translates():
    F0 = np.array([[[2.0], [0.0]]])
    F1 = np.array([[[0.0], [2.0]]])
    assert np.allclose(np.fft.fft2(F0, axes=(0, 1)).ravel(), [2, 2])
    assert np.allclose(np.fft.fft2(F1, axes=(0, 1)).ravel(), [2, -2])
    for rho in [0.0, 0.25, 0.5, 1.0]:
        assert np.allclose(ot_interpolate(F0, F1, rho), F0, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_rho_one_recovers_statistics_not_values(seed):
    F0, F1 = pair(seed)
    out = ot_interpolate(F0, F1, 1.0)
    assert np.max(np.abs(gram(out) - gram(F1))) < 1e-8
    assert np.max(np.abs(correlation(out) - correlation(F1))) < 1e-8
    assert np.max(np.abs(spectrum(out) - spectrum(F1))) < 1e-8
    assert np.max(np.abs(out - F1)) > 1e-3


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        ot_interpolate(np.zeros((4, 4, 2)), np.zeros((4, 4, 3)), 0.5)
    with pytest.raises(InvalidInputError):
        ot_interpolate(np.zeros((4, 4, 2)), np.zeros((4, 4, 2)), 1.5)


def test_orthogonal_spectra_fall_back_to_linear_blend():
    F0 = np.zeros((4, 4, 2))
    F1 = np.zeros((4, 4, 2))
    F0[..., 0] = np.random.default_rng(0).standard_normal((4, 4))
    F1[..., 1] = np.random.default_rng(1).standard_normal((4, 4))
    out = ot_interpolate(F0, F1, 0.5)
    assert np.all(np.isfinite(out))
    assert np.allclose(out, 0.5 * F0 + 0.5 * F1)


def test_mixed_statistics_endpoints():
    F0, F1 = pair(3)
    assert np.max(np.abs(mixed_gram(F0, F1, 0) - gram(F0))) < 1e-10
    assert np.max(np.abs(mixed_correlation(F0, F1, 0) - correlation(F0))) < 1e-10
    assert np.max(np.abs(mixed_gram(F0, F1, 1) - gram(F1))) < 1e-8
    assert np.max(np.abs(mixed_correlation(F0, F1, 1) - correlation(F1))) < 1e-8
    for rho in [0.25, 0.5, 0.75]:
        assert np.max(np.abs(mixed_gram(F0, F0, rho) - gram(F0))) < 1e-9


def test_lia_gram():
    assert np.allclose(lia_gram(np.eye(2), 3 * np.eye(2), 0.5), 2 * np.eye(2))
    G0 = gram(pair(4)[0])
    G1 = gram(pair(4)[1])
    assert np.array_equal(lia_gram(G0, G1, 0), G0)
    assert np.array_equal(lia_gram(G0, G1, 1), G1)
    for rho in np.linspace(0, 1, 7):
        G = lia_gram(G0, G1, rho)
        assert np.allclose(G, G.T, atol=1e-12)
        assert np.linalg.eigvalsh(G).min() > -1e-10
    with pytest.raises(InvalidInputError):
        lia_gram(np.eye(2), np.eye(3), 0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.tuples(st.integers(1, 6), st.integers(1, 6)),
       st.integers(1, 3))
def test_ot_output_is_real_and_single_phase(seed, rho, dims, k):
    rng = np.random.default_rng(seed)
    F0 = rng.standard_normal(dims + (k,))
    F1 = rng.standard_normal(dims + (k,))
    spec = ot_spectrum(F0, F1, rho)
    residue = np.fft.ifft2(spec, axes=(0, 1)).imag
    assert np.max(np.abs(residue)) < 1e-9
    F0h = np.fft.fft2(F0, axes=(0, 1))
    F1h = np.fft.fft2(F1, axes=(0, 1))
    phase = alignment_factor(F0h, F1h)
    assert np.allclose(np.abs(phase), 1)
    expected = np.abs((1 - rho) * F0h + rho * phase[..., None] * F1h)
    assert np.max(np.abs(np.abs(spec) - expected)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.integers(-6, 6), st.integers(-6, 6))
def test_shifting_second_input_leaves_statistics_unchanged(seed, rho, dy, dx):
    rng = np.random.default_rng(seed)
    F0 = rng.standard_normal((5, 6, 3))
    F1 = rng.standard_normal((5, 6, 3))
    a = ot_interpolate(F0, F1, rho)
    b = ot_interpolate(F0, circular_shift(F1, (dy, dx)), rho)
    for stat in (gram, correlation, spectrum):
        assert np.max(np.abs(stat(a) - stat(b))) < 1e-8


def test_gaussian_sampling_basics():
    const = np.full((8, 8, 3), 0.4)
    assert np.array_equal(sample_gaussian_texture(const, 1),
                          np.broadcast_to(const.mean(axis=(0, 1)), const.shape))
    ex = np.random.default_rng(0).random((16, 16, 3))
    assert np.array_equal(sample_gaussian_texture(ex, 9), sample_gaussian_texture(ex, 9))
    assert not np.array_equal(sample_gaussian_texture(ex, 9), sample_gaussian_texture(ex, 10))
    assert np.allclose(sample_gaussian_texture(ex, 3).mean(axis=(0, 1)), ex.mean(axis=(0, 1)))


def test_pixel_mix():
    rng = np.random.default_rng(5)
    I0 = rng.random((16, 16, 3))
    I1 = rng.random((16, 16, 3)) * 0.5 + 0.2
    assert np.array_equal(pixel_mix(I0, I1, 0.0, 4), sample_gaussian_texture(I0, 4))
    out = pixel_mix(I0, I1, 0.5, 4)
    expected = 0.5 * (I0.mean(axis=(0, 1)) + I1.mean(axis=(0, 1)))
    assert np.max(np.abs(out.mean(axis=(0, 1)) - expected)) < 1e-9
    same = pixel_mix(I0, I0, 0.7, 4)
    ref = sample_gaussian_texture(I0, 4)
    assert np.max(np.abs(covariance(same) - covariance(ref))) < 1e-9
    with pytest.raises(InvalidInputError):
        pixel_mix(I0, I1[:8], 0.5, 0)


def test_sparse_spectrum_stays_real():
    # an exactly periodic field leaves most bins at rounding-noise level
    y, x = np.mgrid[0:32, 0:32]
    F0 = np.stack([np.sin(2 * np.pi * 3 * x / 32), np.cos(2 * np.pi * 2 * (x + y) / 32)], -1)
    F1 = np.random.default_rng(0).random((32, 32, 2))
    for rho in [0.1, 0.5, 1.0]:
        residue = np.fft.ifft2(ot_spectrum(F0, F1, rho), axes=(0, 1)).imag
        assert np.max(np.abs(residue)) < 1e-9
        out = ot_interpolate(F0, F1, rho)
        if rho == 1.0:
            assert np.max(np.abs(gram(out) - gram(F1))) < 1e-8
