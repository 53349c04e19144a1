"""Second-order texture statistics of feature maps.

All correlations use periodic boundaries and are evaluated in the Fourier
domain; the direct sums live only in the test oracles.
"""

import numpy as np

from .grid import as_feature_map


def mean(F):
    F = as_feature_map(F)
    return F.mean(axis=(0, 1))


def gram(F):
    """Channel Gram matrix ``G(i, j) = (1/|U|) sum_p F(p,i) F(p,j)``."""
    F = as_feature_map(F)
    flat = F.reshape(-1, F.shape[2])
    G = flat.T @ flat / flat.shape[0]
    return 0.5 * (G + G.T)


def centered_gram(F):
    F = as_feature_map(F)
    return gram(F - F.mean(axis=(0, 1)))


def correlation(F):
    """Per-channel circular autocorrelation ``S(p, n)``, shape ``(Q, M, k)``."""
    F = as_feature_map(F)
    Fh = np.fft.fft2(F, axes=(0, 1))
    power = (Fh.real ** 2 + Fh.imag ** 2) / (F.shape[0] * F.shape[1])
    return np.fft.ifft2(power, axes=(0, 1)).real


def covariance(F):
    """Cross-channel covariance field ``C(p, i, j)``, shape ``(Q, M, k, k)``.

    ``C(p, i, j) = (1/|U|) sum_p' (F(p',i) - m_i) (F(p+p',j) - m_j)``.
    """
    F = as_feature_map(F)
    Fc = F - F.mean(axis=(0, 1))
    Fh = np.fft.fft2(Fc, axes=(0, 1))
    cross = np.conj(Fh)[:, :, :, None] * Fh[:, :, None, :]
    return np.fft.ifft2(cross, axes=(0, 1)).real / (F.shape[0] * F.shape[1])


def spectrum(F):
    """Fourier modulus ``|F^|`` per frequency and channel."""
    F = as_feature_map(F)
    return np.abs(np.fft.fft2(F, axes=(0, 1)))


def verify_gaussian_identities(F, relative=False):
    """Max absolute deviation of each statistic from its Gaussian-model form.

    Returns a dict with keys ``gram``, ``centered_gram``, ``correlation``
    and ``spectrum``, comparing respectively ``G`` with ``C(0) + m m^T``,
    the centred Gram with ``C(0)``, ``S(p)`` with ``diag C(p) + m*m``, and
    the squared spectrum with ``|U| |S^|``.

    With ``relative`` each deviation is divided by the largest magnitude
    of the statistic it checks, which makes the spectrum entry comparable
    across image sizes.
    """
    F = as_feature_map(F)
    n = F.shape[0] * F.shape[1]
    m = mean(F)
    C = covariance(F)
    S = correlation(F)
    diagC = np.diagonal(C, axis1=2, axis2=3)
    S_hat = np.fft.fft2(S, axes=(0, 1))
    G, Gc, power = gram(F), centered_gram(F), spectrum(F) ** 2
    dev = {
        "gram": (G, C[0, 0] + np.outer(m, m)),
        "centered_gram": (Gc, C[0, 0]),
        "correlation": (S, diagC + m * m),
        "spectrum": (power, n * np.abs(S_hat)),
    }
    out = {}
    for key, (lhs, rhs) in dev.items():
        err = float(np.max(np.abs(lhs - rhs)))
        if relative:
            err /= max(float(np.max(np.abs(lhs))), 1e-300)
        out[key] = err
    return out
