import os

import numpy as np
import pytest

from rcdtns.data import (ConfoundSpec, SplitPlan, apply_confound, check_disjoint, confound_dataset,
                         generate_synthetic_dataset, make_templates, read_idx, read_idx_images, sample_splits,
                         split_indices, write_idx)
from rcdtns.errors import BadMagic, CountMismatch, InsufficientSamples, OverlappingSpecs, SupportClipped, TruncatedFile
from rcdtns.grids import LabeledImageSet

MNIST = os.environ.get("RCDT_MNIST_DIR", "/root/data/mnist")
needs_mnist = pytest.mark.skipif(not os.path.exists(os.path.join(MNIST, "t10k-images-idx3-ubyte")),
                                 reason="MNIST files not found (set RCDT_MNIST_DIR)")


def centroid(img):
    yy, xx = np.mgrid[0:img.shape[0], 0:img.shape[1]]
    m = img.sum()
    return (img * xx).sum() / m, (img * yy).sum() / m


def blob(shape=(32, 32), sd=3.0):
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]] - (np.array(shape)[:, None, None] - 1) / 2.0
    return np.exp(-0.5 * (xx ** 2 + yy ** 2) / sd ** 2)


@needs_mnist
def test_mnist_test_files():
    data = read_idx(os.path.join(MNIST, "t10k-images-idx3-ubyte"), os.path.join(MNIST, "t10k-labels-idx1-ubyte"))
    assert data.images.shape == (10000, 28, 28)
    assert data.images.dtype == np.float64 and data.images.max() <= 255
    assert set(np.unique(data.labels)) == set(range(10)) and data.n_classes == 10


def _small_set(n=5):
    rng = np.random.default_rng(71)
    return LabeledImageSet(rng.integers(0, 256, (n, 6, 7)).astype(float), np.arange(n) % 3, 3)


def test_idx_roundtrip_u8_and_f64(tmp_path):
    data = _small_set()
    write_idx(data, tmp_path / "i", tmp_path / "l")
    back = read_idx(tmp_path / "i", tmp_path / "l")
    assert np.array_equal(back.images, data.images) and np.array_equal(back.labels, data.labels)
    assert (tmp_path / "i").read_bytes()[:4] == b"\x00\x00\x08\x03"
    assert (tmp_path / "l").read_bytes()[:4] == b"\x00\x00\x08\x01"
    f = LabeledImageSet(data.images / 7.0, data.labels, 3)
    write_idx(f, tmp_path / "fi", tmp_path / "fl", dtype="f64")
    assert np.array_equal(read_idx(tmp_path / "fi", tmp_path / "fl").images, f.images)


def test_bad_magic(tmp_path):
    data = _small_set()
    write_idx(data, tmp_path / "i", tmp_path / "l")
    with pytest.raises(BadMagic):
        read_idx(tmp_path / "l", tmp_path / "l")
    raw = bytearray((tmp_path / "i").read_bytes())
    raw[0] = 1
    (tmp_path / "x").write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        read_idx_images(tmp_path / "x")


def test_count_mismatch(tmp_path):
    data = _small_set(5)
    write_idx(data, tmp_path / "i", tmp_path / "l")
    write_idx(_small_set(4), tmp_path / "i4", tmp_path / "l4")
    with pytest.raises(CountMismatch):
        read_idx(tmp_path / "i", tmp_path / "l4")


def test_truncated_and_missing(tmp_path):
    write_idx(_small_set(), tmp_path / "i", tmp_path / "l")
    raw = (tmp_path / "i").read_bytes()
    for cut in (2, 10, len(raw) - 1):
        (tmp_path / "t").write_bytes(raw[:cut])
        with pytest.raises(TruncatedFile):
            read_idx_images(tmp_path / "t")
    with pytest.raises(TruncatedFile):
        read_idx(tmp_path / "i", tmp_path / "nope")


def test_confound_identity():
    img = np.random.default_rng(72).random((20, 24))
    assert np.max(np.abs(apply_confound(img) - img)) < 1e-12


def test_confound_shift_moves_centroid():
    img = blob()
    cx, cy = centroid(img)
    out = apply_confound(img, (5.0, 0.0))
    ox, oy = centroid(out)
    assert abs(ox - cx - 5.0) < 0.05 and abs(oy - cy) < 0.05
    out = apply_confound(img, (-2.5, 3.25))
    ox, oy = centroid(out)
    assert abs(ox - cx + 2.5) < 0.05 and abs(oy - cy - 3.25) < 0.05


def test_confound_scale_keeps_mass_and_doubles_width():
    img = np.zeros((32, 32))
    img[12:20, 10:22] = 1.0
    out = apply_confound(img, (0, 0), 2.0, canvas=(64, 64))
    assert abs(out.sum() - img.sum()) < 1e-6 * img.sum()
    # widths at half height; bilinear ramps add a partial pixel at each edge
    assert abs(np.sum(out.max(axis=0) > 0.5 * out.max()) - 2 * 12) <= 1
    assert abs(np.sum(out.max(axis=1) > 0.5 * out.max()) - 2 * 8) <= 1


@pytest.mark.parametrize("t,a", [((3.0, -4.0), 0.9), ((0.0, 7.0), 1.2), ((-6.0, 1.0), 1.5)])
def test_confound_mass_preserved(t, a):
    img = blob((28, 28), 2.5)
    out = apply_confound(img, t, a, canvas=(84, 84))
    assert abs(out.sum() - img.sum()) < 1e-6 * img.sum()


def test_support_clipped():
    img = np.zeros((20, 20))
    img[5:15, 5:15] = 1
    with pytest.raises(SupportClipped):
        apply_confound(img, (8.0, 0.0))
    with pytest.raises(SupportClipped):
        apply_confound(img, (0, 0), 3.0)


def test_zero_ranges_give_copies():
    tpl = make_templates(3, (24, 24), seed=1)
    data = generate_synthetic_dataset(tpl, ConfoundSpec(), 4)
    assert len(data) == 12
    for k in range(3):
        for img in data.images[data.labels == k]:
            assert np.max(np.abs(img - tpl[k])) < 1e-12


def test_generation_is_seeded():
    tpl = make_templates(2, (32, 32), seed=2)
    a = generate_synthetic_dataset(tpl, ConfoundSpec((0, 4), (0.9, 1.1), 5), 3)
    b = generate_synthetic_dataset(tpl, ConfoundSpec((0, 4), (0.9, 1.1), 5), 3)
    c = generate_synthetic_dataset(tpl, ConfoundSpec((0, 4), (0.9, 1.1), 6), 3)
    assert np.array_equal(a.images, b.images)
    assert not np.array_equal(a.images, c.images)


def test_draws_respect_ranges():
    spec = ConfoundSpec((7, 14), (1.5, 2.0), 3)
    rng = np.random.default_rng(0)
    draws = np.array([spec.draw(rng) for _ in range(2000)])
    mag = np.hypot(draws[:, 0], draws[:, 1])
    assert mag.min() >= 7 and mag.max() <= 14
    assert draws[:, 2].min() >= 1.5 and draws[:, 2].max() <= 2.0
    ang = np.arctan2(draws[:, 1], draws[:, 0])
    assert np.histogram(ang, 8, (-np.pi, np.pi))[0].min() > 180


def test_confound_dataset_rows_independent_of_subset():
    data = LabeledImageSet(np.stack([blob((28, 28), s) for s in (2.0, 2.5, 3.0, 3.5)]), [0, 1, 0, 1])
    spec = ConfoundSpec((0, 5), (0.9, 1.2), 4)
    full = confound_dataset(data, spec, (40, 40))
    part = confound_dataset(data.subset([3, 1]), spec, (40, 40))
    assert np.array_equal(part.images, full.images[[3, 1]])


def test_bad_spec_values():
    with pytest.raises(ValueError):
        ConfoundSpec((5, 2), (1, 1))
    with pytest.raises(ValueError):
        ConfoundSpec((0, 1), (0, 1))


def test_overlapping_specs():
    check_disjoint(ConfoundSpec((0, 7), (0.9, 1.2)), ConfoundSpec((7, 14), (1.5, 2.0)))
    check_disjoint(ConfoundSpec((0, 7), (0.9, 1.2)), ConfoundSpec((0, 7), (1.5, 2.0)))
    with pytest.raises(OverlappingSpecs):
        check_disjoint(ConfoundSpec((0, 7), (0.9, 1.2)), ConfoundSpec((5, 14), (1.1, 2.0)))


def _labels(per_class=20, K=10):
    return np.repeat(np.arange(K), per_class)


def test_size_one_gives_one_per_class():
    labels = _labels()
    data = LabeledImageSet(np.zeros((labels.size, 2, 2)), labels, 10)
    subset, rep = next(sample_splits(data, SplitPlan((1,), 1, 0)))
    assert len(subset) == 10 and rep == 0
    assert np.array_equal(np.bincount(subset.labels), np.ones(10))


def test_splits_seeded_and_distinct():
    labels = _labels()
    a = split_indices(labels, 10, 4, 0, 9)
    assert np.array_equal(a, split_indices(labels, 10, 4, 0, 9))
    sets = {tuple(sorted(split_indices(labels, 10, 4, r, 9))) for r in range(10)}
    assert len(sets) == 10
    assert np.unique(a).size == a.size


def test_plan_yields_size_times_repeats():
    labels = _labels()
    data = LabeledImageSet(np.zeros((labels.size, 2, 2)), labels, 10)
    out = list(sample_splits(data, SplitPlan((1, 2, 4), 2, 0)))
    assert [len(s) for s, _ in out] == [10, 10, 20, 20, 40, 40]
    assert [r for _, r in out] == [0, 1] * 3


def test_insufficient_samples():
    labels = _labels(3)
    data = LabeledImageSet(np.zeros((labels.size, 2, 2)), labels, 10)
    with pytest.raises(InsufficientSamples):
        list(sample_splits(data, SplitPlan((2, 4), 1, 0)))


def test_bad_plan():
    with pytest.raises(ValueError):
        SplitPlan((4, 2))
    with pytest.raises(ValueError):
        SplitPlan((1,), 0)
