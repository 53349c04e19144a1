"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary."""

import time

import numpy as np
import pytest

from texmix import cli, imageio, mixing
from texmix import net as N
from texmix import synthesis as S
from texmix.stats import correlation, covariance, gram, spectrum, verify_gaussian_identities

from conftest import record_criterion
from oracles import (central_difference, naive_correlation, naive_covariance, naive_gram,
                     relative_error)


@pytest.fixture(scope="module")
def desk():
    return N.desk_backbone()


def test_c01_gaussian_identities():
    rng = np.random.default_rng(2024)
    sizes = [(2, 2), (5, 4), (7, 3), (8, 8), (16, 16)]
    channels = [1, 2, 4, 8]
    start = time.perf_counter()
    worst = 0.0
    for trial in range(100):
        shape = sizes[trial % 5] + (channels[(trial // 5) % 4],)
        F = rng.normal(rng.normal(), rng.uniform(0.1, 3), size=shape)
        worst = max(worst, max(verify_gaussian_identities(F).values()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 5
    record_criterion(1, "Gaussian identity suite", ok, f"max dev {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c02_statistic_oracles():
    rng = np.random.default_rng(7)
    shapes = [(3, 3, 1), (5, 4, 2), (7, 3, 3), (8, 8, 4), (16, 16, 4)]
    start = time.perf_counter()
    worst = 0.0
    for trial in range(20):
        F = rng.standard_normal(shapes[trial % 5]) + rng.normal()
        worst = max(worst,
                    np.abs(gram(F) - naive_gram(F)).max(),
                    np.abs(correlation(F) - naive_correlation(F)).max(),
                    np.abs(covariance(F) - naive_covariance(F)).max())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 10
    record_criterion(2, "FFT statistics match direct sums", ok, f"max err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def _random_pairs(n=50):
    rng = np.random.default_rng(99)
    shapes = [(4, 4, 2), (5, 6, 3), (8, 8, 4), (7, 5, 1), (16, 16, 3)]
    for i in range(n):
        shape = shapes[i % len(shapes)]
        yield rng.standard_normal(shape), rng.standard_normal(shape) * 1.5 + 0.3


def test_c03_ot_endpoint_recovery():
    start = time.perf_counter()
    err0 = err1 = 0.0
    moved = 0
    for F0, F1 in _random_pairs():
        out0 = mixing.ot_interpolate(F0, F1, 0.0)
        out1 = mixing.ot_interpolate(F0, F1, 1.0)
        for stat in (gram, correlation, spectrum):
            err0 = max(err0, np.abs(stat(out0) - stat(F0)).max())
            err1 = max(err1, np.abs(stat(out1) - stat(F1)).max())
        moved += np.abs(out1 - F1).max() > 1e-3
    elapsed = time.perf_counter() - start
    ok = err0 < 1e-10 and err1 < 1e-8 and moved >= 45 and elapsed < 10
    record_criterion(3, "OT endpoint recovery", ok,
                     f"rho=0 {err0:.1e}, rho=1 {err1:.1e}, moved {moved}/50, {elapsed:.2f}s")
    assert ok


def test_c04_realness():
    worst = 0.0
    for F0, F1 in _random_pairs():
        for rho in (0.25, 0.5, 0.75, 1.0):
            spec = mixing.ot_spectrum(F0, F1, rho)
            worst = max(worst, np.abs(np.fft.ifft2(spec, axes=(0, 1)).imag).max())
    ok = worst < 1e-9
    record_criterion(4, "OT output realness", ok, f"max imaginary residue {worst:.1e}")
    assert ok


def _fd(fun, x, grad, rng):
    idx = rng.choice(x.size, size=min(50, x.size), replace=False)
    return np.max(relative_error(grad.ravel()[idx], central_difference(fun, x, idx, h=1e-4)))


def test_c05_gradient_suite():
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    errors = {}
    layers = {
        "conv": N.conv_layer(rng.standard_normal((4, 3, 3, 3)), rng.standard_normal(4)),
        "relu": N.LayerSpec(N.RELU), "avgpool": N.LayerSpec(N.AVGPOOL),
        "maxpool": N.LayerSpec(N.MAXPOOL)}
    for name, layer in layers.items():
        net = N.FeatureExtractor([layer], taps=[0])
        x = rng.standard_normal((8, 8, 3))
        cot = rng.standard_normal(N.forward(net, x)[0].shape)
        fun = lambda img: float(np.sum(cot * N.forward(net, img)[0]))
        errors[name] = _fd(fun, x, N.backward(net, x, [cot]), rng)
    acts = [rng.standard_normal((8, 8, 3))]
    for kind in (S.GRAM, S.CORRELATION):
        targets = S.targets_from_features([rng.standard_normal((8, 8, 3))], kind, [1.0])
        loss_fn = S.LOSS_FUNCS[kind]
        fun = lambda a: loss_fn(targets, [a])[0]
        errors[f"{kind} loss"] = _fd(fun, acts[0], loss_fn(targets, acts)[1][0], rng)
    ref = rng.standard_normal((8, 8, 3))
    errors["content loss"] = _fd(lambda a: S.content_loss(ref, a, 5.0)[0], acts[0],
                                 S.content_loss(ref, acts[0], 5.0)[1], rng)
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    ok = worst < 1e-4 and elapsed < 30
    record_criterion(5, "finite-difference gradient suite", ok,
                     f"worst {max(errors, key=errors.get)} {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_c06_synthesis_convergence(desk):
    exemplar = imageio.load_corpus("bricks.png")
    start = time.perf_counter()
    ratios = []
    for seed in range(5):
        cfg = S.SynthesisConfig(method="adam", max_iter=500, stop_tol=1e-12, seed=seed)
        targets = S.exemplar_targets(desk, exemplar, cfg)
        _, trace = S.synthesize(desk, targets, cfg, size=exemplar.shape[:2])
        ratios.append(trace[-1] / trace[0])
    cfg = S.SynthesisConfig(max_iter=500, stop_tol=1e-12)
    fixed, _ = S.synthesize(desk, S.exemplar_targets(desk, exemplar, cfg), cfg, init=exemplar)
    drift = float(np.sqrt(np.mean((fixed - exemplar) ** 2)))
    elapsed = time.perf_counter() - start
    ok = all(r < 0.05 for r in ratios) and drift < 1e-6 and elapsed < 300
    record_criterion(6, "synthesis convergence", ok,
                     f"final/initial max {max(ratios):.4f}, drift {drift:.1e}, {elapsed:.0f}s")
    assert ok


def test_c07_mixing_sanity(desk):
    start = time.perf_counter()
    a = imageio.load_corpus("stripes.png")
    b = imageio.load_corpus("dots.png")
    worst_zero = worst_self = 0.0
    for kind in (S.GRAM, S.CORRELATION):
        cfg = S.SynthesisConfig(stat_kind=kind)
        plain = S.exemplar_targets(desk, a, cfg)
        for x, y in zip(S.mix_targets(desk, a, b, 0.0, cfg).stats, plain.stats):
            worst_zero = max(worst_zero, np.abs(x - y).max())
        for rho in (0.1, 0.5, 0.9, 1.0):
            for x, y in zip(S.mix_targets(desk, a, a, rho, cfg).stats, plain.stats):
                worst_self = max(worst_self, np.abs(x - y).max())
    elapsed = time.perf_counter() - start
    ok = worst_zero < 1e-10 and worst_self < 1e-9 and elapsed < 60
    record_criterion(7, "mixing sanity", ok,
                     f"rho=0 {worst_zero:.1e}, self-mix {worst_self:.1e}, {elapsed:.1f}s")
    assert ok


def test_c08_incremental_training(desk):
    start = time.perf_counter()
    counts = {False: [], True: []}
    for name_a, name_b in imageio.PAIRS:
        a, b = imageio.load_corpus(name_a), imageio.load_corpus(name_b)
        for seed in range(5):
            cfg = S.SynthesisConfig(method="lbfgs", max_iter=1000, stop_tol=1e-3, seed=seed)
            for incremental in (False, True):
                _, traces = S.mix_sequence(desk, a, b, 5, incremental, cfg)
                counts[incremental].extend(len(t) for t in traces[1:])
    elapsed = time.perf_counter() - start
    inc, ind = np.mean(counts[True]), np.mean(counts[False])
    ok = inc < ind and elapsed < 1200
    record_criterion(8, "incremental training converges faster", ok,
                     f"mean iterations {inc:.1f} vs {ind:.1f} independent, {elapsed:.0f}s")
    assert ok


def test_c09_gaussian_sampling_fidelity():
    start = time.perf_counter()
    exemplar = imageio.load_corpus("micro_a.png")
    C = covariance(exemplar)
    empirical = np.zeros_like(C)
    for seed in range(200):
        empirical += covariance(mixing.sample_gaussian_texture(exemplar, seed))
    empirical /= 200
    err = np.abs(empirical - C).max() / np.abs(C).max()
    elapsed = time.perf_counter() - start
    ok = err < 0.15 and elapsed < 120
    record_criterion(9, "Gaussian sampling fidelity", ok, f"max error {err:.3f} x max|C|, {elapsed:.1f}s")
    assert ok


def test_c10_reproducibility(tmp_path):
    args = ["mix", "--a", str(imageio.corpus_path("weave.png")),
            "--b", str(imageio.corpus_path("grain.png")), "--grid", 3, "--incremental",
            "--max-iter", 25, "--seed", 11]
    args = [str(x) for x in args]
    assert cli.main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir()
                   if p.suffix in (".png", ".csv") and p.name.startswith("mix_"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in files)
    ok = same and len(files) == 6
    record_criterion(10, "cmd_mix reproducibility", ok, f"{len(files)} files compared")
    assert ok
