"""Self-contained invariant suite behind ``texmix check``."""

import time

import numpy as np

from . import mixing
from . import net as fnet
from . import synthesis as S
from .stats import correlation, gram, spectrum, verify_gaussian_identities


def _fd_rel_error(fun, grad, x, rng, coords=50, h=1e-4):
    flat = x.ravel()
    idx = rng.choice(flat.size, size=min(coords, flat.size), replace=False)
    worst = 0.0
    for c in idx:
        xp, xm = flat.copy(), flat.copy()
        xp[c] += h
        xm[c] -= h
        num = (fun(xp.reshape(x.shape)) - fun(xm.reshape(x.shape))) / (2 * h)
        ana = grad.ravel()[c]
        worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-8))
    return worst


def check_identities(rng):
    worst = 0.0
    for shape in [(2, 2, 1), (5, 4, 2), (7, 3, 4), (8, 8, 8), (16, 16, 4)]:
        for _ in range(4):
            worst = max(worst, max(verify_gaussian_identities(rng.standard_normal(shape)).values()))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def check_ot_endpoints(rng):
    worst0 = worst1 = residue = 0.0
    for _ in range(10):
        F0 = rng.standard_normal((6, 5, 3))
        F1 = rng.standard_normal((6, 5, 3))
        worst0 = max(worst0, np.abs(gram(mixing.ot_interpolate(F0, F1, 0)) - gram(F0)).max())
        out = mixing.ot_interpolate(F0, F1, 1)
        for stat in (gram, correlation, spectrum):
            worst1 = max(worst1, np.abs(stat(out) - stat(F1)).max())
        residue = max(residue, np.abs(np.fft.ifft2(mixing.ot_spectrum(F0, F1, 0.37),
                                                   axes=(0, 1)).imag).max())
    ok = worst0 < 1e-10 and worst1 < 1e-8 and residue < 1e-9
    return ok, f"rho=0 {worst0:.1e}, rho=1 {worst1:.1e}, imag {residue:.1e}"


def check_orthogonal_fallback(rng):
    F0 = np.zeros((4, 4, 2))
    F1 = np.zeros((4, 4, 2))
    F0[..., 0] = rng.standard_normal((4, 4))
    F1[..., 1] = rng.standard_normal((4, 4))
    try:
        with np.errstate(all="ignore"):
            out = mixing.ot_interpolate(F0, F1, 0.5)
    except Exception as exc:  # any failure here means the fallback is broken
        return False, f"raised {type(exc).__name__}"
    ok = bool(np.all(np.isfinite(out))) and np.allclose(out, 0.5 * (F0 + F1))
    return ok, "orthogonal spectra blend linearly" if ok else "non-finite or wrong blend"


def check_layer_gradients(rng):
    worst = 0.0
    layers = [fnet.conv_layer(rng.standard_normal((3, 2, 3, 3)), rng.standard_normal(3)),
              fnet.LayerSpec(fnet.RELU), fnet.LayerSpec(fnet.AVGPOOL), fnet.LayerSpec(fnet.MAXPOOL)]
    for layer in layers:
        net = fnet.FeatureExtractor([layer], taps=[0])
        x = rng.standard_normal((8, 8, 2))
        cot = rng.standard_normal(fnet.forward(net, x)[0].shape)
        fun = lambda img: float(np.sum(cot * fnet.forward(net, img)[0]))
        worst = max(worst, _fd_rel_error(fun, fnet.backward(net, x, [cot]), x, rng))
    return worst < 1e-4, f"max rel error {worst:.1e}"


def check_loss_gradients(rng):
    arch = [{"kind": "conv", "kernel": 3, "out": 4}, "relu", "avgpool",
            {"kind": "conv", "kernel": 3, "out": 4}, "relu"]
    net = fnet.random_init(arch, seed=1, taps=[1, 4], content_tap=4)
    worst = 0.0
    for kind in (S.GRAM, S.CORRELATION):
        targets = S.targets_from_features(fnet.forward(net, rng.random((8, 8, 3))), kind, [1, 1])
        targets.content = {4: fnet.forward(net, rng.random((8, 8, 3)))[1]}
        x = rng.random((8, 8, 3))
        _, grad = S.objective(net, targets, x, alpha=0.5)
        fun = lambda img: S.objective(net, targets, img, 0.5)[0]
        worst = max(worst, _fd_rel_error(fun, grad, x, rng))
    return worst < 1e-4, f"max rel error {worst:.1e}"


CHECKS = [
    ("gaussian identities", check_identities),
    ("OT endpoints and realness", check_ot_endpoints),
    ("OT zero-inner-product fallback", check_orthogonal_fallback),
    ("layer gradients (FD)", check_layer_gradients),
    ("loss gradients (FD)", check_loss_gradients),
]


def run_checks(seed=0):
    """Run every check; returns a list of ``(name, passed, detail, seconds)``."""
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        passed, detail = fn(rng)
        results.append((name, bool(passed), detail, time.perf_counter() - start))
    return results
