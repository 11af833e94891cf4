"""Command-line driver: ``rcdtns <verb> ...``.

Results go to stdout (JSON or CSV) or to ``--out``; progress goes to stderr.
Each error class exits with its own code (see ``rcdtns.errors``).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .data import (ConfoundSpec, SplitPlan, generate_synthetic_dataset, make_templates, read_idx,
                   read_idx_images, write_idx)
from .errors import ConfigError, DimensionMismatch, EmptyTestSet, RcdtError
from .experiments import run_ood, run_sweep, summary_csv, take_per_class
from .flops import count_flops
from .grids import DEFAULT_EPSILON, default_projection_grid, make_uniform_reference1d, normalize_to_density2d
from .model_io import load_model, save_field, save_model
from .subspace import FitConfig, distances_batch, fit, transform_images
from .transforms import rcdt_forward, rcdt_inverse

EXIT_IO = 3


@dataclass(frozen=True)
class RunConfig:
    n_angles: int = 180
    epsilon: float = DEFAULT_EPSILON
    variance_fraction: float = 0.99
    enrich: bool = True
    seed: int = 0
    jobs: int = 1

    def validate(self):
        if self.n_angles < 1:
            raise ConfigError("--angles must be >= 1")
        if not self.epsilon > 0:
            raise ConfigError("--epsilon must be positive")
        if not 0 < self.variance_fraction <= 1:
            raise ConfigError("--variance must lie in (0, 1]")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        return self

    def fit_config(self) -> FitConfig:
        return FitConfig(self.n_angles, self.epsilon, self.variance_fraction, self.enrich, self.jobs)


def _progress(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr, flush=True)


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _pair(text, name):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{name} expects two comma-separated numbers, got {text!r}") from None
    return a, b


def _sizes(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--sizes expects comma-separated integers, got {text!r}") from None


def read_image(path, index: int = 0) -> np.ndarray:
    """A single raster from a PGM/PNG file or image ``index`` of an IDX images file."""
    with open(path, "rb") as f:
        head = f.read(4)
    if len(head) == 4 and head[:2] == b"\x00\x00":
        imgs = read_idx_images(path)
        if not 0 <= index < len(imgs):
            raise ConfigError(f"--index {index} out of range for {len(imgs)} images")
        return imgs[index]
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("I") if im.mode not in ("L", "I", "I;16", "F") else im, dtype=np.float64)


def write_pgm(path, img: np.ndarray):
    """16-bit PGM, scaled so the maximum maps to 65535."""
    from PIL import Image

    peak = img.max()
    scaled = np.round(img / peak * 65535.0) if peak > 0 else np.zeros_like(img)
    Image.fromarray(scaled.astype(np.uint16)).save(path, format="PPM")


def cmd_transform(args, cfg: RunConfig):
    raw = read_image(args.image, args.index)
    h, w = raw.shape
    proj = default_projection_grid(h, w, cfg.n_angles)
    ref = make_uniform_reference1d(proj.t_grid)
    dens = normalize_to_density2d(raw, cfg.epsilon)
    field = rcdt_forward(dens, ref, proj, cfg.epsilon)
    out = args.out or os.path.splitext(args.image)[0] + ".rcdt"
    save_field(field, out)
    report = {"field": out, "m": proj.m, "n": proj.n, "t_range": [proj.t_grid.x_min, proj.t_grid.x_max]}
    if args.roundtrip:
        rec = rcdt_inverse(field, ref, (h, w))
        err = float(np.linalg.norm(rec.values - dens.values) / np.linalg.norm(dens.values))
        rec_path = args.recon or os.path.splitext(out)[0] + ".recon.pgm"
        write_pgm(rec_path, rec.values)
        report.update(reconstruction=rec_path, relative_l2_error=err)
    print(json.dumps(report))


def _load_train(args, cfg):
    data = read_idx(args.images, args.labels)
    if args.per_class is not None:
        data = take_per_class(data, args.per_class, cfg.seed)
    return data


def cmd_train(args, cfg: RunConfig):
    data = _load_train(args, cfg)
    _progress(args, f"fitting {len(data)} images, {data.n_classes} classes, {cfg.n_angles} angles")
    model = fit(data, cfg.fit_config())
    save_model(model, args.out)
    print(json.dumps({"model": args.out, "classes": model.n_classes, "ranks": model.ranks,
                      "grid": [model.proj.m, model.proj.n]}))


def _check_shape(model, shape):
    if model.proj.image_shape is not None and tuple(shape) != tuple(model.proj.image_shape):
        raise DimensionMismatch(f"images are {tuple(shape)}, model was trained on {model.proj.image_shape}")


def cmd_predict(args, cfg: RunConfig):
    model = load_model(args.model)
    imgs = [read_image(p, args.index) for p in args.images]
    for im in imgs:
        _check_shape(model, im.shape)
    feats = transform_images(imgs, model.proj, model.epsilon, cfg.jobs) if imgs else np.zeros((0, model.proj.size))
    dist = distances_batch(feats, model)
    for path, d in zip(args.images, dist):
        print(json.dumps({"image": path, "label": int(np.argmin(d)), "distances": [float(v) for v in d]}))


def evaluate(model, data, jobs=1) -> dict:
    if len(data) == 0:
        raise EmptyTestSet("test set is empty")
    _check_shape(model, data.images.shape[1:])
    feats = transform_images(data.images, model.proj, model.epsilon, jobs)
    pred = np.argmin(distances_batch(feats, model), axis=1)
    K = model.n_classes
    conf = np.zeros((K, K), dtype=np.int64)
    np.add.at(conf, (data.labels, pred), 1)
    correct = int(np.trace(conf))
    return {"n": len(data), "correct": correct, "accuracy": correct / len(data), "confusion": conf.tolist()}


def cmd_eval(args, cfg: RunConfig):
    model = load_model(args.model)
    data = read_idx(args.images, args.labels, model.n_classes)
    if args.per_class is not None:
        data = take_per_class(data, args.per_class, cfg.seed)
    _progress(args, f"evaluating {len(data)} images")
    _emit(args, json.dumps(evaluate(model, data, cfg.jobs)) + "\n")


def _plan(args, cfg):
    try:
        return SplitPlan(_sizes(args.sizes), args.repeats, cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _finish_sweep(args, result, key):
    _emit(args, result.to_csv())
    text = summary_csv(result.summary(key))
    if args.out:
        sys.stdout.write(text)
    else:
        sys.stderr.write(text)


def cmd_sweep(args, cfg: RunConfig):
    plan = _plan(args, cfg)
    train = read_idx(args.train_images, args.train_labels)
    test = take_per_class(read_idx(args.test_images, args.test_labels, train.n_classes), args.test_per_class, cfg.seed)
    res = run_sweep(train, test, plan, cfg.fit_config(), timing=args.timing, quiet=args.quiet)
    _finish_sweep(args, res, "accuracy")


def cmd_ood(args, cfg: RunConfig):
    plan = _plan(args, cfg)
    try:
        spec_in = ConfoundSpec(_pair(args.in_translation, "--in-translation"), _pair(args.in_scale, "--in-scale"), cfg.seed)
        spec_out = ConfoundSpec(_pair(args.out_translation, "--out-translation"), _pair(args.out_scale, "--out-scale"),
                                cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    from .data import check_disjoint

    check_disjoint(spec_in, spec_out)
    train = read_idx(args.train_images, args.train_labels)
    test = take_per_class(read_idx(args.test_images, args.test_labels, train.n_classes), args.test_per_class, cfg.seed)
    res = run_ood(train, test, plan, spec_in, spec_out, (args.canvas, args.canvas), cfg.fit_config(),
                  timing=args.timing, quiet=args.quiet)
    _finish_sweep(args, res, "drop")


def cmd_synth(args, cfg: RunConfig):
    tpl = make_templates(args.classes, (args.size, args.size), args.template_seed)
    try:
        spec = ConfoundSpec(_pair(args.translation, "--translation"), _pair(args.scale, "--scale"), cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    canvas = (args.canvas, args.canvas) if args.canvas else None
    data = generate_synthetic_dataset(tpl, spec, args.n_per_class, canvas)
    write_idx(data, args.images, args.labels, dtype="f64")
    print(json.dumps({"images": args.images, "labels": args.labels, "count": len(data),
                      "shape": list(data.images.shape[1:])}))


def cmd_flops(args, cfg: RunConfig):
    from . import flops

    proj = default_projection_grid(args.size, args.size, cfg.n_angles)
    ranks = [int(r) for r in args.ranks.split(",")] if args.ranks else [min(args.n_train, proj.size) + 2] * args.classes
    fc = count_flops((args.size, args.size), proj.m, proj.n, args.n_train, ranks, cfg.enrich)
    print(json.dumps({"m": proj.m, "n": proj.n, **asdict(fc), "formulas": flops.__doc__.strip()}))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--angles", type=int, default=180, help="number of projection angles")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="positivity floor, relative to the max")
    common.add_argument("--variance", type=float, default=0.99, help="fraction of sample energy the subspace keeps")
    common.add_argument("--no-enrich", action="store_true", help="do not add the translation directions")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: $RCDT_JOBS or 1)")
    common.add_argument("--quiet", action="store_true", help="no progress on stderr")

    p = argparse.ArgumentParser(prog="rcdtns", description="R-CDT transforms and nearest-subspace classification")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("transform", parents=[common], help="R-CDT of one image")
    s.add_argument("image", help="PGM/PNG file or IDX images file")
    s.add_argument("--index", type=int, default=0, help="image index inside an IDX file")
    s.add_argument("--out", help="field file (default: <image>.rcdt)")
    s.add_argument("--roundtrip", action="store_true", help="also reconstruct and report the relative L2 error")
    s.add_argument("--recon", help="reconstruction PGM path")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("train", parents=[common], help="fit a model from an IDX pair")
    s.add_argument("images")
    s.add_argument("labels")
    s.add_argument("--out", required=True, help="model file")
    s.add_argument("--per-class", type=int, help="use a seeded subset of this many images per class")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="classify images")
    s.add_argument("model")
    s.add_argument("images", nargs="+")
    s.add_argument("--index", type=int, default=0)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("eval", parents=[common], help="accuracy and confusion matrix on an IDX pair")
    s.add_argument("model")
    s.add_argument("images")
    s.add_argument("labels")
    s.add_argument("--per-class", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    for verb, fn, helptext in (("sweep", cmd_sweep, "accuracy versus training size"),
                               ("ood", cmd_ood, "in- versus out-of-distribution accuracy")):
        s = sub.add_parser(verb, parents=[common], help=helptext)
        s.add_argument("train_images")
        s.add_argument("train_labels")
        s.add_argument("test_images")
        s.add_argument("test_labels")
        s.add_argument("--sizes", default="1,2,4,8,16,32,64,128,256,512,1024,2048,4096")
        s.add_argument("--repeats", type=int, default=10)
        s.add_argument("--test-per-class", type=int, help="limit the test set (seeded)")
        s.add_argument("--timing", action="store_true", help="fill wall_time_s (otherwise 0.0)")
        s.add_argument("--out", help="CSV path (default stdout)")
        if verb == "ood":
            s.add_argument("--canvas", type=int, default=84)
            s.add_argument("--in-translation", default="0,7")
            s.add_argument("--in-scale", default="0.9,1.2")
            s.add_argument("--out-translation", default="7,14")
            s.add_argument("--out-scale", default="1.5,2.0")
        s.set_defaults(func=fn)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic template dataset as IDX")
    s.add_argument("images")
    s.add_argument("labels")
    s.add_argument("--classes", type=int, default=10)
    s.add_argument("--size", type=int, default=64, help="template side")
    s.add_argument("--canvas", type=int, help="canvas side (default: template side)")
    s.add_argument("--n-per-class", type=int, default=10)
    s.add_argument("--translation", default="0,8")
    s.add_argument("--scale", default="1,1")
    s.add_argument("--template-seed", type=int, default=0, help="templates are fixed by this; --seed drives the confounds")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("flops", parents=[common], help="analytic operation counts")
    s.add_argument("--size", type=int, default=28)
    s.add_argument("--classes", type=int, default=10)
    s.add_argument("--n-train", type=int, default=256, help="training images per class")
    s.add_argument("--ranks", help="comma-separated subspace ranks (default: n_train + 2)")
    s.set_defaults(func=cmd_flops)
    return p


def _jobs(args):
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("RCDT_JOBS", "").strip()
    if not env:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"RCDT_JOBS must be an integer, got {env!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.angles, args.epsilon, args.variance, not args.no_enrich, args.seed, _jobs(args)).validate()
        args.func(args, cfg)
    except RcdtError as e:
        print(f"rcdtns: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"rcdtns: {e}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
