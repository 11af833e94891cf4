import numpy as np
import pytest

from rcdtns.errors import AllZeroImage, CountMismatch
from rcdtns.grids import (Density1D, Density2D, Grid1D, LabeledImageSet, ProjectionGrid, default_projection_grid,
                          make_uniform_reference1d, normalize_to_density1d, normalize_to_density2d, trapz_mass)


def test_grid_spacing_and_points():
    g = Grid1D(5, -1.0, 1.0)
    assert g.spacing == pytest.approx(0.5)
    assert np.allclose(g.points, [-1, -0.5, 0, 0.5, 1])


@pytest.mark.parametrize("args", [(1, 0.0, 1.0), (3, 1.0, 1.0), (3, 2.0, 1.0)])
def test_grid_rejects_bad_args(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_uniform_image_normalizes_to_sixteenth():
    d = normalize_to_density2d(np.ones((4, 4)), 1e-8)
    assert np.allclose(d.values, 1 / 16, atol=1e-15)


def test_delta_image_keeps_unit_mass_and_peak():
    raw = np.zeros((4, 4))
    raw[1, 2] = 1.0
    d = normalize_to_density2d(raw, 1e-6)
    assert d.values.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.argmax(d.values) == 6
    assert d.values.min() > 0
    assert d.values[1, 2] == pytest.approx((1 + 1e-6) / (1 + 16e-6), rel=1e-12)


def test_negative_values_are_clipped():
    raw = np.array([[-5.0, 1.0], [2.0, -1.0]])
    d = normalize_to_density2d(raw, 1e-3)
    assert np.all(d.values > 0)
    assert d.values[0, 0] == pytest.approx(d.values[1, 1])


@pytest.mark.parametrize("raw", [np.zeros((3, 3)), -np.ones((3, 3))])
def test_all_zero_image_raises(raw):
    with pytest.raises(AllZeroImage):
        normalize_to_density2d(raw)


def test_pixel_spacing_sets_area():
    d = normalize_to_density2d(np.ones((4, 4)), pixel_spacing=0.5)
    assert (d.values.sum() * 0.25) == pytest.approx(1.0, abs=1e-12)


def test_density2d_validates_mass():
    with pytest.raises(ValueError):
        Density2D(np.full((2, 2), 0.3))


def test_centroid_of_offset_blob():
    raw = np.zeros((9, 9))
    raw[4, 6] = 1.0
    c = normalize_to_density2d(raw, 1e-12).centroid()
    assert c == pytest.approx([2.0, 0.0], abs=1e-9)


def test_density1d_unit_trapezoid_mass():
    g = Grid1D(101, -1, 1)
    d = normalize_to_density1d(np.exp(-g.points ** 2 / 0.02), g, 1e-8)
    assert trapz_mass(d.values, g.spacing) == pytest.approx(1.0, abs=1e-12)
    assert d.values.min() > 0
    F = d.cdf()
    assert F[0] == 0.0 and F[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Density1D(g, d.values * 2)


def test_uniform_reference_is_constant():
    g = Grid1D(11, -2, 2)
    r = make_uniform_reference1d(g)
    assert np.allclose(r.values, 0.25)
    assert r.mass == pytest.approx(1.0)


def test_projection_grid_invariants():
    g = Grid1D(11, -5, 5)
    ProjectionGrid(g, np.arange(4) * np.pi / 4)
    with pytest.raises(ValueError):
        ProjectionGrid(g, np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        ProjectionGrid(g, np.array([0.0, 0.5, 0.4]))
    with pytest.raises(ValueError):
        ProjectionGrid(g, np.array([0.0, np.pi]))
    with pytest.raises(ValueError):
        ProjectionGrid(Grid1D(11, -4, 5), np.array([0.0]))


@pytest.mark.parametrize("shape", [(28, 28), (64, 64), (30, 50), (84, 84)])
def test_default_grid_covers_diagonal(shape):
    p = default_projection_grid(*shape, n_angles=12)
    assert p.covers(*shape)
    assert p.t_grid.x_max >= 0.5 * np.hypot(*shape)
    assert p.thetas[0] == 0 and p.thetas[-1] < np.pi
    assert np.allclose(np.diff(p.thetas), np.pi / 12)
    assert p.size == p.m * 12


def test_labeled_set_checks_counts_and_range():
    with pytest.raises(CountMismatch):
        LabeledImageSet(np.zeros((3, 2, 2)), [0, 1])
    with pytest.raises(ValueError):
        LabeledImageSet(np.zeros((2, 2, 2)), [0, 3], n_classes=2)
    s = LabeledImageSet([np.ones((2, 2)), np.zeros((2, 2))], [1, 0])
    assert s.n_classes == 2 and len(s) == 2
    sub = s.subset([1])
    assert sub.labels.tolist() == [0] and sub.source_indices.tolist() == [1]
    assert sub.subset([0]).source_indices.tolist() == [1]
