"""Accuracy-versus-training-size sweeps and the in/out-of-distribution experiment."""
from __future__ import annotations

import csv
import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import ConfoundSpec, SplitPlan, check_disjoint, confound_dataset, split_indices
from .errors import EmptyTestSet, InsufficientSamples
from .flops import count_flops
from .grids import LabeledImageSet, default_projection_grid
from .subspace import FitConfig, fit_features, predict_features, transform_images

SWEEP_COLUMNS = ["train_size", "repeat", "accuracy", "train_flops", "test_flops_per_image", "wall_time_s"]
OOD_COLUMNS = ["train_size", "repeat", "in_accuracy", "out_accuracy", "drop", "train_flops",
               "test_flops_per_image", "wall_time_s"]


@dataclass
class SweepResult:
    columns: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def summary(self, key: str = "accuracy") -> list[dict]:
        """Mean and sample standard deviation of ``key`` per training size."""
        out = []
        for size in sorted({r["train_size"] for r in self.rows}):
            vals = np.array([r[key] for r in self.rows if r["train_size"] == size])
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out.append({"train_size": size, "repeats": int(vals.size), "mean": float(vals.mean()), "std": std})
        return out


def summary_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["train_size", "repeats", "mean", "std"])
    for s in summary:
        w.writerow([s["train_size"], s["repeats"], _fmt(s["mean"]), _fmt(s["std"])])
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _log(msg, quiet):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


# worker state, installed once per process
_STATE: dict = {}


def _init_worker(state):
    _STATE.clear()
    _STATE.update(state)


def _run_split(job):
    size, rep = job
    st = _STATE
    t0 = time.perf_counter()
    idx = split_indices(st["labels"], st["n_classes"], size, rep, st["seed"])
    rows = st["row_of"][idx]
    cfg = st["config"]
    model = fit_features(st["train_feats"][rows], st["labels"][idx], st["proj"], st["n_classes"],
                         cfg.epsilon, cfg.variance_fraction, cfg.enrich_translation)
    accs = [float(np.mean(predict_features(F, model) == y)) for F, y in st["tests"]]
    fl = count_flops(st["proj"].image_shape, st["proj"].m, st["proj"].n, size, model.ranks, cfg.enrich_translation)
    wall = time.perf_counter() - t0 if st["timing"] else 0.0
    return size, rep, accs, fl, wall


def _needed_indices(labels, n_classes, plan: SplitPlan) -> np.ndarray:
    counts = np.bincount(labels, minlength=n_classes)
    if counts.size == 0 or counts.min() < plan.sizes_per_class[-1]:
        k = int(np.argmin(counts))
        raise InsufficientSamples(f"class {k} has {counts[k]} samples, plan needs {plan.sizes_per_class[-1]}")
    need = set()
    for size in plan.sizes_per_class:
        for rep in range(plan.repeats):
            need.update(split_indices(labels, n_classes, size, rep, plan.rng_seed).tolist())
    return np.array(sorted(need), dtype=np.int64)


def _run_jobs(state, plan: SplitPlan, jobs: int, quiet: bool):
    work = [(s, r) for s in plan.sizes_per_class for r in range(plan.repeats)]
    results = {}
    if jobs <= 1:
        _init_worker(state)
        for i, job in enumerate(work):
            results[job] = _run_split(job)
            _log(f"split {i + 1}/{len(work)}: size={job[0]} repeat={job[1]} acc={results[job][2]}", quiet)
        _STATE.clear()
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(state,)) as ex:
            for i, res in enumerate(ex.map(_run_split, work)):
                results[work[i]] = res
                _log(f"split {i + 1}/{len(work)} done", quiet)
    # merge in plan order whatever the completion order
    return [results[j] for j in work]


def _prepare(train: LabeledImageSet, plan, config: FitConfig, quiet, confound=None, canvas=None):
    """Features for every training image any split will touch, plus the row lookup."""
    need = _needed_indices(train.labels, train.n_classes, plan)
    sub = train.subset(need)
    if confound is not None:
        _log(f"confounding {len(sub)} training images", quiet)
        sub = confound_dataset(sub, confound, canvas, stream=0)
    h, w = sub.images.shape[1:3]
    proj = default_projection_grid(h, w, config.n_angles)
    _log(f"transforming {len(sub)} training images ({h}x{w}, {proj.m}x{proj.n} grid)", quiet)
    feats = transform_images(sub.images, proj, config.epsilon, config.jobs)
    row_of = np.full(len(train), -1, dtype=np.int64)
    row_of[need] = np.arange(need.size)
    return proj, feats, row_of


def run_sweep(train: LabeledImageSet, test: LabeledImageSet, plan: SplitPlan, config: FitConfig = FitConfig(),
              timing: bool = False, quiet: bool = True) -> SweepResult:
    """One row per (size, repeat): fit on the split, score on the whole test set."""
    if len(test) == 0:
        raise EmptyTestSet("test set is empty")
    proj, feats, row_of = _prepare(train, plan, config, quiet)
    _log(f"transforming {len(test)} test images", quiet)
    test_feats = transform_images(test.images, proj, config.epsilon, config.jobs)
    state = dict(labels=train.labels, n_classes=train.n_classes, seed=plan.rng_seed, row_of=row_of,
                 train_feats=feats, proj=proj, config=config, timing=timing, tests=[(test_feats, test.labels)])
    rows = []
    for size, rep, accs, fl, wall in _run_jobs(state, plan, config.jobs, quiet):
        rows.append(dict(train_size=size, repeat=rep, accuracy=accs[0], train_flops=fl.train,
                         test_flops_per_image=fl.test_per_image, wall_time_s=wall))
    return SweepResult(list(SWEEP_COLUMNS), rows)


def run_ood(train: LabeledImageSet, test: LabeledImageSet, plan: SplitPlan, spec_in: ConfoundSpec,
            spec_out: ConfoundSpec, canvas=(84, 84), config: FitConfig = FitConfig(), timing: bool = False,
            quiet: bool = True) -> SweepResult:
    """Train on in-distribution confounds; test on in- and out-of-distribution copies of the test set."""
    check_disjoint(spec_in, spec_out)
    if len(test) == 0:
        raise EmptyTestSet("test set is empty")
    proj, feats, row_of = _prepare(train, plan, config, quiet, spec_in, canvas)
    tests = []
    for name, spec, stream in (("in", spec_in, 1), ("out", spec_out, 2)):
        _log(f"confounding and transforming {len(test)} {name}-distribution test images", quiet)
        conf = confound_dataset(test, spec, canvas, stream=stream)
        tests.append((transform_images(conf.images, proj, config.epsilon, config.jobs), test.labels))
    state = dict(labels=train.labels, n_classes=train.n_classes, seed=plan.rng_seed, row_of=row_of,
                 train_feats=feats, proj=proj, config=config, timing=timing, tests=tests)
    rows = []
    for size, rep, (a_in, a_out), fl, wall in _run_jobs(state, plan, config.jobs, quiet):
        rows.append(dict(train_size=size, repeat=rep, in_accuracy=a_in, out_accuracy=a_out, drop=a_in - a_out,
                         train_flops=fl.train, test_flops_per_image=fl.test_per_image, wall_time_s=wall))
    return SweepResult(list(OOD_COLUMNS), rows)


def take_per_class(data: LabeledImageSet, n_per_class: int | None, seed: int = 0) -> LabeledImageSet:
    """The first ``n_per_class`` images of each class after a seeded shuffle (all of them if None)."""
    if n_per_class is None:
        return data
    rng = np.random.default_rng([seed, 0x7E57])
    order = rng.permutation(len(data))
    keep = np.concatenate([order[data.labels[order] == k][:n_per_class] for k in range(data.n_classes)])
    return data.subset(np.sort(keep))
