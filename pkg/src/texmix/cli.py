"""Command-line interface: ``texmix {stats,synth,mix,morph,gauss,check}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
numeric error.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checks, config, imageio, mixing, plotting, stats
from . import net as fnet
from . import synthesis as S
from .errors import InvalidConfigError, TexMixError

log = logging.getLogger("texmix")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- helpers --------------------------------------------------------------

def _trace_csv(trace):
    return "iteration,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(trace))


def _load_sized(path, net):
    img = imageio.load_image(path)
    return imageio.center_crop(img, net.size_multiple())


def _require(doc, key, flag):
    value = doc.get("images", {}).get(key)
    if value is None:
        raise UsageError(f"missing input image: pass {flag} or set images.{key} in the config")
    return value


def _init_image(doc, net, shape):
    init = doc.get("init", "noise")
    if init == "noise":
        return None
    img = _load_sized(init["image"], net)
    if img.shape != shape:
        raise InvalidConfigError(f"init image {init['image']} has shape {img.shape}, need {shape}")
    return img


def _rhos(doc):
    if "grid" in doc:
        return S.rho_grid(doc["grid"])
    return [doc.get("rho", 0.5)]


def _prepare(args, overrides):
    doc = config.merge(config.load_config(args.config), overrides)
    cfg = config.synthesis_config(doc)
    doc = config.resolve(doc, cfg)
    return doc, cfg, config.build_extractor(doc)


def _write_run_files(out, doc, images, traces, names, figures, title):
    for img, trace, name in zip(images, traces, names):
        imageio.save_png(out / f"{name}.png", img)
        imageio.write_text(out / f"{name}_trace.csv", _trace_csv(trace))
    imageio.write_text(out / "resolved_config.json", config.dumps(doc))
    if figures:
        plotting.plot_loss_traces(traces, out / "loss.png", labels=names, title=title)
        if len(images) > 1:
            plotting.plot_image_strip(images, out / "strip.png", labels=names)


# -- commands -------------------------------------------------------------

def _summary(F):
    S_ = stats.correlation(F)
    spec = stats.spectrum(F)
    ac = spec.copy()
    ac[0, 0] = 0
    return {
        "shape": list(F.shape),
        "mean": stats.mean(F).tolist(),
        "gram": stats.gram(F).tolist(),
        "centered_gram": stats.centered_gram(F).tolist(),
        "correlation": {"zero_offset": S_[0, 0].tolist(),
                        "min": S_.min(axis=(0, 1)).tolist(),
                        "max": S_.max(axis=(0, 1)).tolist()},
        "spectrum": {"dc": spec[0, 0].tolist(),
                     "max_ac": ac.max(axis=(0, 1)).tolist(),
                     "energy": (spec ** 2).sum(axis=(0, 1)).tolist()},
        "gaussian_identity_deviation": stats.verify_gaussian_identities(F),
        "gaussian_identity_relative_deviation": stats.verify_gaussian_identities(
            F, relative=True),
    }, S_, spec


def cmd_stats(args):
    img = imageio.load_image(args.image)
    net = config.build_extractor({})
    out = Path(args.out)
    report = {"image": str(args.image)}
    pixel, S_, spec = _summary(img)
    report["pixels"] = pixel
    figures = [("pixels", S_, spec)]
    cropped = imageio.center_crop(img, net.size_multiple())
    report["taps"] = []
    for idx, feat in zip(net.taps, fnet.forward(net, cropped)):
        summary, S_, spec = _summary(feat)
        summary["layer"] = idx
        report["taps"].append(summary)
        figures.append((f"tap{idx}", S_, spec))
    deviations = [pixel["gaussian_identity_deviation"]] + [
        t["gaussian_identity_deviation"] for t in report["taps"]]
    report["max_identity_deviation"] = max(max(d.values()) for d in deviations)
    imageio.write_text(out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not args.no_figures:
        for name, S_, spec in figures:
            plotting.plot_statistics(S_, spec, out.with_name(f"{out.stem}_{name}.png"), title=name)
    print(f"max identity deviation {report['max_identity_deviation']:.3e} -> {out}")
    return EXIT_OK


def cmd_synth(args):
    doc, cfg, net = _prepare(args, {
        "command": "synth", "images.exemplar": args.exemplar, "output": args.out,
        "synthesis.stat_kind": args.stat, "synthesis.seed": args.seed,
        "synthesis.max_iter": args.max_iter, "synthesis.method": args.method})
    ex = _load_sized(_require(doc, "exemplar", "--exemplar"), net)
    out = Path(doc.get("output", "out"))
    targets = S.exemplar_targets(net, ex, cfg)
    img, trace = S.synthesize(net, targets, cfg, init=_init_image(doc, net, ex.shape),
                              size=ex.shape[:2])
    _write_run_files(out, doc, [img], [trace], ["synth"], doc.get("figures", True), "synth")
    print(f"loss {trace[0]:.4g} -> {trace[-1]:.4g} in {len(trace)} iterations; wrote {out}")
    return EXIT_OK


def _job_names(n):
    width = max(3, len(str(n - 1)))
    return [f"{i:0{width}d}" for i in range(n)]


def cmd_mix(args):
    doc, cfg, net = _prepare(args, {
        "command": "mix", "images.a": args.a, "images.b": args.b, "output": args.out_dir,
        "rho": args.rho, "grid": args.grid, "incremental": True if args.incremental else None,
        "synthesis.stat_kind": args.stat, "synthesis.seed": args.seed,
        "synthesis.max_iter": args.max_iter, "synthesis.method": args.method})
    if "rho" in doc and "grid" in doc:
        raise UsageError("use either rho or grid, not both")
    a = _load_sized(_require(doc, "a", "--a"), net)
    b = _load_sized(_require(doc, "b", "--b"), net)
    if a.shape != b.shape:
        raise InvalidConfigError(f"exemplar sizes differ: {a.shape} vs {b.shape}")
    out = Path(doc.get("output", "out"))
    jobs = []

    def on_job(i, rho, source):
        jobs.append({"job": i, "rho": rho, "init": source})
        log.info("job %d: rho=%.6f init=%s", i, rho, source)

    if "grid" in doc:
        images, traces = S.mix_sequence(net, a, b, doc["grid"], doc.get("incremental", False),
                                        cfg, on_job=on_job)
    else:
        rho = doc.get("rho", 0.5)
        on_job(0, rho, f"noise(seed={cfg.seed})" if doc.get("init", "noise") == "noise"
               else doc["init"]["image"])
        img, trace = S.mix_textures(net, a, b, rho, cfg, init=_init_image(doc, net, a.shape))
        images, traces = [img], [trace]
    names = [f"mix_{n}" for n in _job_names(len(images))]
    _write_run_files(out, doc, images, traces, names, doc.get("figures", True), "mix")
    imageio.write_text(out / "jobs.json", json.dumps(jobs, indent=2) + "\n")
    print(f"wrote {len(images)} mixed textures to {out}")
    return EXIT_OK


def cmd_morph(args):
    doc, cfg, net = _prepare(args, {
        "command": "morph", "images.content": args.content, "images.style_a": args.style_a,
        "images.style_b": args.style_b, "output": args.out_dir, "rho": args.rho,
        "grid": args.grid, "synthesis.alpha": args.alpha,
        "synthesis.lag_constraint": True if args.lag else None,
        "synthesis.seed": args.seed, "synthesis.max_iter": args.max_iter,
        "synthesis.method": args.method})
    if "rho" in doc and "grid" in doc:
        raise UsageError("use either rho or grid, not both")
    content = _load_sized(_require(doc, "content", "--content"), net)
    sa = _load_sized(_require(doc, "style_a", "--style-a"), net)
    sb = _load_sized(_require(doc, "style_b", "--style-b"), net)
    if not content.shape == sa.shape == sb.shape:
        raise InvalidConfigError(
            f"image sizes differ: {content.shape}, {sa.shape}, {sb.shape}")
    out = Path(doc.get("output", "out"))
    init = _init_image(doc, net, content.shape)
    images, traces = [], []
    for rho in _rhos(doc):
        img, trace = S.morph_styles(net, content, sa, sb, rho, cfg, init=init)
        images.append(img)
        traces.append(trace)
    names = [f"morph_{n}" for n in _job_names(len(images))]
    _write_run_files(out, doc, images, traces, names, doc.get("figures", True), "morph")
    print(f"wrote {len(images)} morphed images to {out} (lag={cfg.lag_constraint})")
    return EXIT_OK


def cmd_gauss(args):
    if args.sample is not None:
        out = mixing.sample_gaussian_texture(imageio.load_image(args.sample), args.seed)
    else:
        a, b = (imageio.load_image(p) for p in args.mix)
        if a.shape != b.shape:
            raise InvalidConfigError(f"exemplar sizes differ: {a.shape} vs {b.shape}")
        out = mixing.pixel_mix(a, b, args.rho, args.seed)
    imageio.save_png(args.out, out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_check(args):
    results = checks.run_checks()
    for name, passed, detail, secs in results:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail} ({secs:.2f}s)")
    return EXIT_OK if all(r[1] for r in results) else EXIT_RUNTIME


# -- parser ---------------------------------------------------------------

def _common(p, stat=True):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="noise seed (synthesis.seed)")
    p.add_argument("--max-iter", type=int, help="iteration cap (synthesis.max_iter)")
    p.add_argument("--method", choices=["adam", "lbfgs"])
    if stat:
        p.add_argument("--stat", choices=["gram", "correlation"])


def build_parser():
    verbose = _Parser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = _Parser(prog="texmix", description=__doc__.splitlines()[0], parents=[verbose])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    add = sub.add_parser
    sub.add_parser = lambda *a, **kw: add(*a, parents=[verbose], **kw)

    p = sub.add_parser("stats", help="texture statistics and Gaussian identity report")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="synthesize a texture from one exemplar")
    p.add_argument("--exemplar")
    p.add_argument("--out", help="output directory")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mix", help="mix two textures along the OT path")
    p.add_argument("--a")
    p.add_argument("--b")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--rho", type=float)
    group.add_argument("--grid", type=int, help="N jobs at rho = i/(N-1)")
    p.add_argument("--incremental", action="store_true")
    p.add_argument("--out-dir")
    _common(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("morph", help="morph between two styles on a content image")
    p.add_argument("--content")
    p.add_argument("--style-a")
    p.add_argument("--style-b")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--rho", type=float)
    group.add_argument("--grid", type=int)
    p.add_argument("--alpha", type=float, help="content weight (default 5)")
    p.add_argument("--lag", action="store_true", help="enable the lag constraint")
    p.add_argument("--out-dir")
    _common(p, stat=False)
    p.set_defaults(func=cmd_morph)

    p = sub.add_parser("gauss", help="pixel-level Gaussian sampling or mixing")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--sample", metavar="EXEMPLAR")
    group.add_argument("--mix", nargs=2, metavar=("A", "B"))
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("check", help="run the embedded invariant suite")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        return args.func(args)
    except UsageError as exc:
        print(f"texmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidConfigError as exc:
        print(f"texmix: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TexMixError, OSError, ValueError, FloatingPointError) as exc:
        print(f"texmix: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
