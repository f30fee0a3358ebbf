"""Region rasters: exactness, containment, SVG determinism."""

import numpy as np
import pytest

from opsplit.calculus import INParams, compose_general
from opsplit.errors import DomainError
from opsplit.figures import (
    Disk,
    PRESET_NAMES,
    class_region,
    composition_region_exact,
    emit_svg,
    preset_figure,
    raster_contains,
    region_membership,
)


def test_class_region_named_disks():
    assert class_region(INParams(0.0, 0.8)) == Disk(0.0, 0.8)
    assert class_region(INParams(0.7, 0.7)) == Disk(0.7, 0.7)
    assert class_region(INParams(0.5, 0.5)) == Disk(0.5, 0.5)
    assert class_region(INParams(-0.2, 1.2)) == Disk(-0.2, 1.2)


def test_region_membership_known_points():
    p = INParams(0.5, 0.5)
    pts = np.array(
        [
            [1.0, 0.0],   # identity edge: on the boundary
            [0.0, 0.0],   # zero map is reachable
            [0.0, 0.5],   # tangency of an intermediate disk
            [-1.0 / 3.0, 0.0],  # inside the certified disk but not reachable
            [1.01, 0.0],  # beyond the tangency point
        ]
    )
    got = region_membership(pts, p, p)
    assert got.tolist() == [True, True, True, False, False]


def test_region_membership_negative_second_identity_coefficient():
    # second factor conic 1.7: alpha2 = -0.7 flips the sweep orientation
    p1, p2 = INParams(0.5, 0.5), INParams(-0.7, 1.7)
    pts = np.array([[(0.5 + 0.5) * (-0.7 + 1.7), 0.0], [2.5, 0.0]])
    got = region_membership(pts, p1, p2)
    assert got.tolist() == [True, False]


def test_raster_idempotent_and_symmetric():
    p = INParams(0.5, 0.5)
    r1 = composition_region_exact(p, p, 128)
    r2 = composition_region_exact(p, p, 128)
    assert np.array_equal(r1.grid, r2.grid)
    assert np.array_equal(r1.grid, r1.grid[::-1])  # mirror symmetry in y


def test_raster_contained_in_certified_disk():
    p = INParams(0.5, 0.5)
    r = composition_region_exact(p, p, 256)
    disk = class_region(compose_general(p, p))
    pts = r.marked_points()
    assert disk.contains(pts).all()
    assert raster_contains(r, (1.0, 0.0))  # boundary contact at the marker


def test_identity_second_factor_reproduces_first_disk():
    p1 = INParams(0.3, 0.7)
    r = composition_region_exact(p1, INParams(1.0, 0.0), 128)
    d1 = class_region(p1)
    assert d1.contains(r.marked_points()).all()
    # and disk points are marked up to one pixel of dilation
    for ang in np.linspace(0, 2 * np.pi, 40):
        pt = (0.3 + 0.69 * np.cos(ang), 0.69 * np.sin(ang))
        assert raster_contains(r, pt, dilate=1)


def test_degenerate_first_disk_is_a_point_sweep():
    r = composition_region_exact(INParams(0.5, 0.0), INParams(0.5, 0.5), 128)
    # region = disk around (0.25, 0) with radius 0.25
    pts = r.marked_points()
    d = Disk(0.25, 0.25)
    assert d.contains(pts).all()
    assert raster_contains(r, (0.5, 0.0), dilate=1)
    assert not raster_contains(r, (-0.2, 0.0), dilate=1)


def test_identity_edge_point_always_marked():
    for p1, p2 in (
        (INParams(0.5, 0.5), INParams(0.5, 0.5)),
        (INParams(0.3, 0.7), INParams(0.4, 0.6)),
        (INParams(-0.7, 1.7), INParams(0.55, 0.45)),
    ):
        r = composition_region_exact(p1, p2, 128)
        pt = ((p1.alpha + p1.beta) * (p2.alpha + p2.beta), 0.0)
        assert raster_contains(r, pt, dilate=1)


def test_failing_conic_pair_region_extends_past_marker():
    # parameter product 1.7*0.7 > 1: the region reaches beyond (1, 0), so no
    # disk anchored at the marker and extending only leftward can contain it
    p1, p2 = INParams(-0.7, 1.7), INParams(0.3, 0.7)
    r = composition_region_exact(p1, p2, 256)
    pts = r.marked_points()
    assert pts[:, 0].max() > 1.0 + r.pixel
    # while the certified pair (1.7, 0.45) stays weakly left of the marker
    ok = composition_region_exact(INParams(-0.7, 1.7), INParams(0.55, 0.45), 256)
    assert ok.marked_points()[:, 0].max() <= 1.0 + 1e-12


def test_relaxed_region_is_shifted_and_shrunk():
    p1, p2 = INParams(0.5, 0.5), INParams(0.5, 0.5)
    w = 0.5
    r = composition_region_exact(p1, p2, 128, relax_weight=w)
    # the relaxed region is (1-w)*e + w*(base region)
    base = region_membership(np.array([[0.0, 0.0], [1.0, 0.0]]), p1, p2)
    assert base.tolist() == [True, True]
    assert raster_contains(r, (0.5, 0.0), dilate=1)  # image of the origin
    assert raster_contains(r, (1.0, 0.0), dilate=1)  # image of the marker
    assert not raster_contains(r, (-0.4, 0.0), dilate=1)


def test_resolution_floor():
    with pytest.raises(DomainError):
        composition_region_exact(INParams(0.5, 0.5), INParams(0.5, 0.5), 32)


# ---------------------------------------------------------------------------
# SVG


def test_svg_single_disk_has_one_region_circle():
    text = emit_svg([(Disk(0.0, 0.8), {"fill": "none", "stroke": "#000000"})])
    assert text.count("<circle") == 3  # region + unit guide + marker dot
    assert 'stroke-dasharray' in text


def test_svg_empty_regions_has_guides_only():
    text = emit_svg([])
    assert text.count("<circle") == 2
    assert "<path" not in text


def test_svg_deterministic(tmp_path):
    regions, markers = preset_figure("averaged-averaged-0.5-0.5", resolution=128)
    a = emit_svg(regions, markers, tmp_path / "a.svg")
    b = emit_svg(regions, markers, tmp_path / "b.svg")
    assert a == b
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_all_presets_render():
    for name in PRESET_NAMES:
        regions, markers = preset_figure(name, resolution=64 if name != "single-class" else 512)
        text = emit_svg(regions, markers)
        assert text.startswith("<?xml") and text.endswith("</svg>\n")
    with pytest.raises(DomainError):
        preset_figure("unknown")
