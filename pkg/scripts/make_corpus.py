"""Regenerate the bundled texture corpus in src/texmix/data/.

Every texture is periodic on its grid so circular statistics see no seams.
"""

from pathlib import Path

import numpy as np

from texmix.imageio import save_png

OUT = Path(__file__).resolve().parents[1] / "src" / "texmix" / "data"


def _grid(n):
    y, x = np.mgrid[0:n, 0:n]
    return y / n, x / n


def _colorize(field, lo, hi):
    field = (field - field.min()) / (np.ptp(field) + 1e-12)
    lo, hi = np.asarray(lo), np.asarray(hi)
    return lo + field[..., None] * (hi - lo)


def stripes(n=64):
    y, x = _grid(n)
    f = np.sin(2 * np.pi * (3 * x + 2 * y))
    return _colorize(np.tanh(3 * f), (0.15, 0.2, 0.45), (0.9, 0.8, 0.3))


def dots(n=64):
    y, x = _grid(n)
    f = np.cos(2 * np.pi * 8 * x) + np.cos(2 * np.pi * 8 * y)
    return _colorize(np.maximum(f, 0.6), (0.85, 0.85, 0.8), (0.6, 0.1, 0.1))


def weave(n=64):
    y, x = _grid(n)
    a = np.sin(2 * np.pi * 4 * x) * np.sign(np.sin(2 * np.pi * 4 * y))
    b = np.sin(2 * np.pi * 16 * y)
    return _colorize(a + 0.3 * b, (0.3, 0.2, 0.1), (0.8, 0.7, 0.5))


def filtered_noise(n, seed, width, color_lo, color_hi):
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.fftfreq(n)[None, :]
    kernel = np.exp(-(fx ** 2 + fy ** 2) / (2 * width ** 2))
    noise = np.fft.ifft2(np.fft.fft2(rng.standard_normal((n, n))) * kernel).real
    noise = noise / (4 * noise.std()) + 0.5
    hue = np.fft.ifft2(np.fft.fft2(rng.standard_normal((n, n))) * kernel).real
    hue = 0.15 * hue / hue.std()
    img = _colorize(np.clip(noise, 0, 1), color_lo, color_hi)
    img[..., 0] += hue
    return np.clip(img, 0.02, 0.98)


def grain(n=64):
    return filtered_noise(n, 7, 0.08, (0.35, 0.3, 0.2), (0.75, 0.7, 0.55))


def bricks(n=64):
    y, x = _grid(n)
    row = np.floor(y * 8)
    xs = (x * 4 + 0.5 * (row % 2)) % 1.0
    mortar = (np.abs((y * 8) % 1.0 - 0.5) > 0.42) | (np.abs(xs - 0.5) > 0.46)
    img = _colorize(np.where(mortar, 0.0, 1.0) + 0.1 * np.sin(2 * np.pi * 16 * x),
                    (0.8, 0.8, 0.75), (0.6, 0.25, 0.15))
    return img


def waves(n=64):
    y, x = _grid(n)
    f = np.sin(2 * np.pi * (6 * y + 0.5 * np.sin(2 * np.pi * 2 * x)))
    return _colorize(f, (0.1, 0.35, 0.3), (0.7, 0.9, 0.85))


def content(n=64):
    y, x = _grid(n)
    img = np.empty((n, n, 3))
    img[:] = (0.55, 0.7, 0.9)
    img[y > 0.6] = (0.3, 0.55, 0.25)
    sun = (x - 0.7) ** 2 + (y - 0.3) ** 2 < 0.015
    img[sun] = (0.95, 0.85, 0.3)
    house = (np.abs(x - 0.3) < 0.12) & (y > 0.45) & (y < 0.75)
    img[house] = (0.7, 0.35, 0.25)
    return img


CORPUS = {
    "stripes.png": stripes, "dots.png": dots, "weave.png": weave,
    "grain.png": grain, "bricks.png": bricks, "waves.png": waves,
    "content.png": content,
    "micro_a.png": lambda: filtered_noise(128, 21, 0.05, (0.2, 0.25, 0.1), (0.6, 0.7, 0.35)),
    "micro_b.png": lambda: filtered_noise(128, 22, 0.12, (0.45, 0.3, 0.3), (0.9, 0.75, 0.6)),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, make in CORPUS.items():
        save_png(OUT / name, make())
        print(OUT / name)


if __name__ == "__main__":
    main()
