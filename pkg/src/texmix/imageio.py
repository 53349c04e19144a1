"""8-bit RGB PNG input/output and the bundled corpus."""

import logging
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import TexMixError

log = logging.getLogger(__name__)

PAIRS = [("stripes.png", "dots.png"), ("weave.png", "grain.png"), ("bricks.png", "waves.png")]


class ImageIOError(TexMixError, OSError):
    pass


def load_png(path):
    """Read an image as float64 RGB in [0, 1]; grayscale is promoted to RGB."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("RGBA", "LA", "PA") or (mode == "P" and "transparency" in im.info):
                raise ImageIOError(f"{path}: images with an alpha channel are not supported")
            if mode in ("L", "1", "I", "I;16", "F"):
                im = im.convert("L").convert("RGB")
            elif mode != "RGB":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except ImageIOError:
        raise
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: cannot read image ({exc})") from exc
    return arr.astype(np.float64) / 255.0


def quantize(img):
    """Clamp to [0, 1] and map to bytes, rounding half away from zero."""
    scaled = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_png(path, img):
    data = quantize(img)
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    if data.shape[2] != 3:
        raise ImageIOError(f"{path}: expected 3 channels, got {data.shape[2]}")
    _atomic_write(path, lambda tmp: Image.fromarray(data, "RGB").save(tmp, format="PNG"))


def write_text(path, text):
    def write(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    _atomic_write(path, write)


def center_crop(img, multiple):
    """Crop to the largest centred window whose dims are divisible by ``multiple``."""
    H, W = img.shape[:2]
    h, w = H - H % multiple, W - W % multiple
    if h == 0 or w == 0:
        raise ImageIOError(f"image {H}x{W} is smaller than the required multiple {multiple}")
    if (h, w) != (H, W):
        log.warning("center-cropping %dx%d image to %dx%d (dims must divide by %d)",
                    H, W, h, w, multiple)
        top, left = (H - h) // 2, (W - w) // 2
        img = img[top:top + h, left:left + w]
    return img


def corpus_path(name):
    return resources.files("texmix") / "data" / name


def load_corpus(name):
    with resources.as_file(corpus_path(name)) as p:
        return load_png(p)


def load_image(path):
    """Like load_png, but a bare name that is not a file falls back to the corpus."""
    path = Path(path)
    if not path.exists() and path.name == str(path) and corpus_path(path.name).is_file():
        return load_corpus(path.name)
    return load_png(path)
