"""Optimal-transport interpolation of stationary Gaussian feature models.

Two feature maps are blended in the Fourier domain after rotating the
spectrum of the second one, frequency by frequency, onto the phase of the
first. The rotation has unit modulus, so every second-order statistic of
the second map is preserved and the path runs between the two Gaussian
models rather than between the raw fields.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .grid import as_feature_map, check_same_shape, fft_inverse, mirror_index
from .stats import correlation, covariance, gram, mean

# relative size below which the per-frequency inner product counts as zero
ZERO_INNER_TOL = 1e-12


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    cov: np.ndarray


def check_rho(rho):
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise InvalidInputError(f"mixing weight must lie in [0, 1], got {rho}")
    return rho


def estimate_model(F):
    F = as_feature_map(F)
    return GaussianModel(mean=mean(F), cov=covariance(F))


def alignment_factor(F0_hat, F1_hat):
    """Unit phase per frequency aligning ``F1_hat`` with ``F0_hat``.

    Where the channel inner product vanishes the phase is undefined; the
    factor falls back to 1 there. Both spectra come from real fields, so the
    inner product is conjugate-symmetric in exact arithmetic; that symmetry
    is imposed before taking the phase; otherwise bins holding only
    rounding noise get unrelated phases at w and -w.
    """
    inner = np.sum(np.conj(F1_hat) * F0_hat, axis=2)
    inner = 0.5 * (inner + np.conj(mirror_index(inner)))
    modulus = np.abs(inner)
    scale = np.linalg.norm(F0_hat, axis=2) * np.linalg.norm(F1_hat, axis=2)
    scale = 0.5 * (scale + mirror_index(scale))
    degenerate = modulus < ZERO_INNER_TOL * (scale + 1e-300)
    safe = np.where(degenerate, 1.0, modulus)
    return np.where(degenerate, 1.0 + 0j, inner / safe)


def ot_spectrum(F0, F1, rho):
    """Complex spectrum ``(1 - rho) F0^ + rho * G^`` of the interpolated map."""
    F0 = as_feature_map(F0, "F0")
    F1 = as_feature_map(F1, "F1")
    check_same_shape(F0, F1)
    rho = check_rho(rho)
    F0_hat = np.fft.fft2(F0, axes=(0, 1))
    F1_hat = np.fft.fft2(F1, axes=(0, 1))
    G_hat = F1_hat * alignment_factor(F0_hat, F1_hat)[:, :, None]
    return (1.0 - rho) * F0_hat + rho * G_hat


def ot_interpolate(F0, F1, rho):
    """Feature map of the optimal-transport geodesic at weight ``rho``.

    ``rho = 0`` returns a copy of ``F0``; at ``rho = 1`` the result has the
    Gram matrix, correlation and spectrum of ``F1`` but generally differs
    from it pointwise.
    """
    F0 = as_feature_map(F0, "F0")
    if check_rho(rho) == 0.0:
        check_same_shape(F0, as_feature_map(F1, "F1"))
        return F0.copy()
    return fft_inverse(ot_spectrum(F0, F1, rho), require_real=True)


def mixed_gram(F0, F1, rho):
    return gram(ot_interpolate(F0, F1, rho))


def mixed_correlation(F0, F1, rho):
    return correlation(ot_interpolate(F0, F1, rho))


def lia_gram(G0, G1, rho):
    """Linear interpolation baseline between two Gram matrices."""
    G0 = np.asarray(G0, dtype=np.float64)
    G1 = np.asarray(G1, dtype=np.float64)
    if G0.shape != G1.shape or G0.ndim != 2 or G0.shape[0] != G0.shape[1]:
        raise InvalidInputError(f"Gram shapes incompatible: {G0.shape} vs {G1.shape}")
    rho = check_rho(rho)
    if rho == 0.0:
        return G0.copy()
    if rho == 1.0:
        return G1.copy()
    return (1.0 - rho) * G0 + rho * G1


def white_noise(shape, seed):
    """Standard normal field from numpy's PCG64 stream seeded with ``seed``."""
    return np.random.default_rng(seed).standard_normal(shape)


def sample_gaussian_texture(exemplar, seed):
    """Draw a sample of the exemplar's stationary Gaussian model (ADSN).

    The centred exemplar, scaled by ``1/sqrt(|U|)``, is circularly convolved
    with a single white-noise field shared by all channels.
    """
    exemplar = as_feature_map(exemplar, "exemplar")
    Q, M, _ = exemplar.shape
    m = exemplar.mean(axis=(0, 1))
    texton = (exemplar - m) / np.sqrt(Q * M)
    noise = white_noise((Q, M), seed)
    spec = np.fft.fft2(texton, axes=(0, 1)) * np.fft.fft2(noise)[:, :, None]
    spec[0, 0] = 0  # the texton has zero mean; drop the rounding residue
    return m + np.fft.ifft2(spec, axes=(0, 1)).real


def pixel_mix(I0, I1, rho, seed):
    """Micro-texture mixing: sample the OT-interpolated Gaussian model."""
    I0 = as_feature_map(I0, "I0")
    I1 = as_feature_map(I1, "I1")
    check_same_shape(I0, I1)
    rho = check_rho(rho)
    if rho == 0.0:
        return sample_gaussian_texture(I0, seed)
    m0 = I0.mean(axis=(0, 1))
    m1 = I1.mean(axis=(0, 1))
    mixed = ot_interpolate(I0 - m0, I1 - m1, rho)
    mixed = mixed - mixed.mean(axis=(0, 1)) + (1.0 - rho) * m0 + rho * m1
    return sample_gaussian_texture(mixed, seed)
