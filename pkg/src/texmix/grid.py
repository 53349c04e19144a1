"""Multi-channel periodic grids and their discrete Fourier transforms.

A feature map is a float64 array of shape ``(Q, M, k)``: rows, columns,
channels (channel-minor). Spectra share that layout with complex values.
The forward DFT is unnormalized and the inverse carries the ``1/|U|``
factor, with ``|U| = Q * M``.
"""

import numpy as np

from .errors import InvalidInputError, NonRealResultError

REAL_TOLERANCE = 1e-9


def as_feature_map(F, name="F"):
    """Validate ``F`` and return it as a float64 ``(Q, M, k)`` array.

    A 2-D array is promoted to a single channel.
    """
    arr = np.asarray(F)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise InvalidInputError(f"{name} must have shape (Q, M, k), got {arr.shape}")
    if min(arr.shape) < 1:
        raise InvalidInputError(f"{name} has a zero dimension: {arr.shape}")
    if np.iscomplexobj(arr):
        raise InvalidInputError(f"{name} must be real-valued")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(F0, F1):
    if F0.shape != F1.shape:
        raise InvalidInputError(f"shape mismatch: {F0.shape} vs {F1.shape}")


def fft_forward(F):
    """Unnormalized per-channel 2-D DFT of a feature map."""
    F = as_feature_map(F)
    return np.fft.fft2(F, axes=(0, 1))


def fft_inverse(S, require_real=True):
    """Inverse DFT (``1/|U|`` normalized) of a ``(Q, M, k)`` spectrum.

    With ``require_real`` the imaginary residue must stay below
    ``REAL_TOLERANCE`` and is discarded; otherwise the complex result
    is returned.
    """
    S = np.asarray(S)
    if S.ndim == 2:
        S = S[:, :, None]
    if S.ndim != 3 or min(S.shape) < 1:
        raise InvalidInputError(f"spectrum must have shape (Q, M, k), got {S.shape}")
    out = np.fft.ifft2(S, axes=(0, 1))
    if not require_real:
        return out
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue >= REAL_TOLERANCE:
        raise NonRealResultError(
            f"inverse transform has imaginary residue {residue:.3e} "
            "(spectrum is not Hermitian)")
    return np.ascontiguousarray(out.real)


def circular_shift(F, offset):
    """Return ``F'(p) = F((p - offset) mod (Q, M))``."""
    F = as_feature_map(F)
    dy, dx = (int(o) for o in offset)
    return np.roll(F, (dy, dx), axis=(0, 1))


def mirror_index(F):
    """Return ``F((-p) mod (Q, M))`` for every grid position ``p``."""
    return np.roll(F[::-1, ::-1], (1, 1), axis=(0, 1))
