"""Statistic-matching losses and image synthesis by gradient descent."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import net as fnet
from .errors import DivergenceError, InvalidConfigError, InvalidInputError
from .mixing import check_rho, ot_interpolate
from .stats import correlation, gram

GRAM, CORRELATION = "gram", "correlation"
STOP_WINDOW = 10


@dataclass
class SynthesisConfig:
    stat_kind: str = GRAM
    tap_weights: list = None          # None -> 1.0 for every tap
    method: str = "adam"
    step_size: float = 0.02
    max_iter: int = 500
    stop_tol: float = 1e-3
    seed: int = 0
    alpha: float = 5.0
    content_mode: str = "content_tap"  # or "all_taps"
    lag_constraint: bool = False
    lag_pairs: list = field(default_factory=lambda: [[0, 1], [1, 2]])
    lbfgs_history: int = 10

    def __post_init__(self):
        if self.stat_kind not in (GRAM, CORRELATION):
            raise InvalidConfigError(f"unknown stat_kind {self.stat_kind!r}")
        if self.method not in ("adam", "lbfgs"):
            raise InvalidConfigError(f"unknown optimizer {self.method!r}")
        if self.tap_weights is not None:
            if any(w < 0 for w in self.tap_weights) or not any(w > 0 for w in self.tap_weights):
                raise InvalidConfigError("tap weights must be >= 0 with at least one positive")
        if self.max_iter < 1:
            raise InvalidConfigError("max_iter must be >= 1")
        if not self.stop_tol > 0:
            raise InvalidConfigError("stop_tol must be > 0")
        if self.alpha < 0:
            raise InvalidConfigError("alpha must be >= 0")
        if self.content_mode not in ("content_tap", "all_taps"):
            raise InvalidConfigError(f"unknown content_mode {self.content_mode!r}")

    def weights_for(self, net):
        if self.tap_weights is None:
            return [1.0] * len(net.taps)
        if len(self.tap_weights) != len(net.taps):
            raise InvalidConfigError(
                f"{len(self.tap_weights)} tap weights for {len(net.taps)} taps")
        return [float(w) for w in self.tap_weights]


@dataclass
class TargetSet:
    kind: str
    stats: list                      # per tap: Gram matrix or correlation field
    weights: list
    content: dict = None             # layer index -> target activation


# -- losses ---------------------------------------------------------------

def _check(target, act):
    if target.shape != act.shape:
        raise InvalidInputError(f"target shape {target.shape} != activation shape {act.shape}")


def gram_loss(targets, acts):
    """``sum_l w_l ||G_l - gram(act_l)||_F^2`` and its gradient per activation."""
    loss, cots = 0.0, []
    for G_t, act, w in zip(targets.stats, acts, targets.weights):
        k = act.shape[2]
        _check(G_t, np.empty((k, k)))
        n = act.shape[0] * act.shape[1]
        diff = gram(act) - G_t
        loss += w * float(np.sum(diff ** 2))
        cots.append((4.0 * w / n) * (act.reshape(n, k) @ diff).reshape(act.shape))
    return loss, cots


def correlation_loss(targets, acts):
    """``sum_l w_l ||S_l - correlation(act_l)||^2`` with FFT-evaluated gradient."""
    loss, cots = 0.0, []
    for S_t, act, w in zip(targets.stats, acts, targets.weights):
        _check(S_t, act)
        n = act.shape[0] * act.shape[1]
        diff = correlation(act) - S_t
        loss += w * float(np.sum(diff ** 2))
        A = np.fft.fft2(act, axes=(0, 1))
        D = np.fft.fft2(diff, axes=(0, 1))
        # d S(p)/d F(q) = (F(q+p) + F(q-p)) / |U|
        both = np.fft.ifft2((np.conj(D) + D) * A, axes=(0, 1)).real
        cots.append((2.0 * w / n) * both)
    return loss, cots


def content_loss(target, act, alpha):
    """``alpha ||target - act||_F^2`` and its gradient w.r.t. ``act``."""
    target = np.asarray(target, dtype=np.float64)
    _check(target, act)
    if alpha == 0:
        return 0.0, np.zeros_like(act)
    diff = target - act
    return alpha * float(np.sum(diff ** 2)), -2.0 * alpha * diff


STAT_FUNCS = {GRAM: gram, CORRELATION: correlation}
LOSS_FUNCS = {GRAM: gram_loss, CORRELATION: correlation_loss}


# -- targets --------------------------------------------------------------

def targets_from_features(feats, kind, weights):
    stat = STAT_FUNCS[kind]
    return TargetSet(kind, [stat(f) for f in feats], list(weights))


def exemplar_targets(net, image, cfg):
    return targets_from_features(fnet.forward(net, image), cfg.stat_kind, cfg.weights_for(net))


def check_lag_pairs(net, pairs):
    pairs = [tuple(int(v) for v in p) for p in pairs]
    n = len(net.taps)
    for src, tgt in pairs:
        if not (0 <= src < tgt < n):
            raise InvalidConfigError(f"lag pair ({src} -> {tgt}) must satisfy 0 <= src < tgt < {n}")
    tgts = [t for _, t in pairs]
    if any(b <= a for a, b in zip(tgts, tgts[1:])):
        raise InvalidConfigError(f"lag pairs must be strictly increasing: {pairs}")
    return pairs


def mixed_features(net, feats0, feats1, rho, lag_pairs=None):
    """Per-tap interpolated features, optionally with lagged propagation.

    For a lag pair ``(src, tgt)`` the features mixed at tap ``src`` are
    pushed through the layers up to tap ``tgt`` and replace the features
    mixed directly at ``tgt``.
    """
    rho = check_rho(rho)
    mixed = [ot_interpolate(a, b, rho) for a, b in zip(feats0, feats1)]
    if lag_pairs:
        for src, tgt in check_lag_pairs(net, lag_pairs):
            mixed[tgt] = fnet.propagate(net, mixed[src], net.taps[src], net.taps[tgt])
    return mixed


def mix_targets(net, I0, I1, rho, cfg, lag_pairs=None):
    """Gram or correlation targets of the OT-interpolated tap features."""
    f0 = fnet.forward(net, I0)
    f1 = fnet.forward(net, I1)
    mixed = mixed_features(net, f0, f1, rho, lag_pairs)
    return targets_from_features(mixed, cfg.stat_kind, cfg.weights_for(net))


# -- objective and optimizers ----------------------------------------------

def objective(net, targets, image, alpha=0.0):
    """Total loss and its gradient with respect to ``image``."""
    last = net.taps[-1]
    if targets.content:
        last = max(last, max(targets.content))
    acts = fnet.forward_all(net, image, stop=last + 1)
    loss, cots = LOSS_FUNCS[targets.kind](targets, [acts[t + 1] for t in net.taps])
    grads = dict(zip(net.taps, cots))
    for layer, target in (targets.content or {}).items():
        c_loss, c_cot = content_loss(target, acts[layer + 1], alpha)
        loss += c_loss
        grads[layer] = grads[layer] + c_cot if layer in grads else c_cot
    return loss, fnet.backward_layers(net, acts, grads)


def noise_image(shape, seed):
    """Seeded i.i.d. N(0.5, 0.1^2) pixels clamped to [0, 1]."""
    return np.clip(np.random.default_rng(seed).normal(0.5, 0.1, size=shape), 0.0, 1.0)


def window_converged(trace, tol, window=STOP_WINDOW):
    if len(trace) <= window:
        return False
    cur = trace[-1]
    return abs(trace[-1 - window] - cur) / max(cur, 1e-12) < tol


def _adam(fun, x, cfg):
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace = []
    for it in range(cfg.max_iter):
        loss, grad = fun(x)
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise DivergenceError(it, loss)
        trace.append(loss)
        if it == cfg.max_iter - 1 or window_converged(trace, cfg.stop_tol):
            break
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** (it + 1))
        v_hat = v / (1 - beta2 ** (it + 1))
        x = x - cfg.step_size * m_hat / (np.sqrt(v_hat) + eps)
    return x, trace


class _Stop(Exception):
    pass


def _lbfgs(fun, x0, cfg):
    from scipy.optimize import minimize

    shape = x0.shape
    trace, state = [], {"x": x0, "it": 0}

    def flat_fun(z):
        loss, grad = fun(z.reshape(shape))
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise DivergenceError(len(trace), loss)
        return loss, grad.ravel()

    def callback(intermediate_result):
        trace.append(float(intermediate_result.fun))
        state["x"] = intermediate_result.x.reshape(shape).copy()
        if window_converged(trace, cfg.stop_tol):
            raise StopIteration

    loss0, _ = fun(x0)
    trace.append(loss0)
    if cfg.max_iter > 1 and loss0 > 0:
        res = minimize(flat_fun, x0.ravel(), jac=True, method="L-BFGS-B", callback=callback,
                       options={"maxiter": cfg.max_iter - 1, "maxcor": cfg.lbfgs_history,
                                "ftol": 0.0, "gtol": 0.0})
        if len(trace) == 1:
            state["x"] = res.x.reshape(shape)
    return state["x"], trace


def synthesize(net, targets, cfg, init=None, size=None):
    """Optimize image pixels to match ``targets``.

    ``init`` is a starting image; otherwise seeded noise of ``size``
    (H, W) is used. Returns ``(image, loss_trace)`` where ``trace[-1]`` is
    the loss of the returned image. Pixels are not clamped here.
    """
    if init is None:
        if size is None:
            raise InvalidInputError("either init or size is required")
        init = noise_image(tuple(size) + (net.in_channels,), cfg.seed)
    x = np.array(init, dtype=np.float64)
    fun = lambda img: objective(net, targets, img, cfg.alpha)
    if cfg.method == "adam":
        return _adam(fun, x, cfg)
    return _lbfgs(fun, x, cfg)


# -- pipelines ------------------------------------------------------------

def mix_textures(net, I0, I1, rho, cfg, init=None):
    """Synthesize a texture whose statistics lie on the OT path at ``rho``."""
    I0 = np.asarray(I0, dtype=np.float64)
    if np.shape(I1) != I0.shape:
        raise InvalidInputError(f"exemplar sizes differ: {I0.shape} vs {np.shape(I1)}")
    targets = mix_targets(net, I0, I1, rho, cfg)
    return synthesize(net, targets, cfg, init=init, size=I0.shape[:2])


def morph_targets(net, I_content, I_style0, I_style1, rho, cfg):
    lag = cfg.lag_pairs if cfg.lag_constraint else None
    targets = mix_targets(net, I_style0, I_style1, rho, cfg, lag_pairs=lag)
    if cfg.alpha > 0:
        layers = net.taps if cfg.content_mode == "all_taps" else [net.content_tap]
        if layers == [None]:
            raise InvalidConfigError("extractor has no content tap")
        acts = fnet.forward_all(net, I_content, stop=max(layers) + 1)
        targets.content = {l: acts[l + 1] for l in layers}
    return targets


def morph_styles(net, I_content, I_style0, I_style1, rho, cfg, init=None):
    """Style morphing: mixed style Grams plus a content term weighted by alpha."""
    I_content = np.asarray(I_content, dtype=np.float64)
    targets = morph_targets(net, I_content, I_style0, I_style1, rho, cfg)
    return synthesize(net, targets, cfg, init=init, size=I_content.shape[:2])


def rho_grid(n):
    if n < 2:
        raise InvalidConfigError("a mixing sequence needs at least 2 weights")
    return [i / (n - 1) for i in range(n)]


def mix_sequence(net, I0, I1, n, incremental, cfg, on_job=None):
    """Mix at ``rho = i/(n-1)`` for ``i = 0..n-1``.

    With ``incremental`` each job after the first starts from the previous
    job's output; otherwise job ``i`` starts from noise seeded ``cfg.seed + i``.
    ``on_job(i, rho, init_source)`` is called before each job.
    Returns ``(images, traces)``.
    """
    images, traces = [], []
    for i, rho in enumerate(rho_grid(n)):
        if incremental and i > 0:
            init, source, job_cfg = images[-1], f"job {i - 1}", cfg
        else:
            job_cfg = cfg if incremental else replace(cfg, seed=cfg.seed + i)
            init, source = None, f"noise(seed={job_cfg.seed})"
        if on_job is not None:
            on_job(i, rho, source)
        img, trace = mix_textures(net, I0, I1, rho, job_cfg, init=init)
        images.append(img)
        traces.append(trace)
    return images, traces
