"""Planar region figures for operator classes and their compositions.

Everything is normalized to ``||x - y|| = 1`` with ``x - y`` on the positive
horizontal axis: a descriptor ``(alpha, beta)`` confines the image difference
``Rx - Ry`` to the disk of radius ``beta`` centered at ``(alpha, 0)``.

The composition region sweeps the full first-factor disk (not only its
boundary: interior points matter when the second identity coefficient is
negative).  A pixel center ``p`` belongs to the region iff some ``q`` in the
first disk satisfies ``||p - a2*q|| <= b2*||q||``; for fixed ``p`` that set of
``q`` is a disk, a half-plane or a disk complement, so the test against the
first disk is closed-form and the raster is exact at pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import INParams
from .errors import DomainError

__all__ = [
    "Disk",
    "Raster",
    "class_region",
    "composition_region_exact",
    "region_membership",
    "raster_contains",
    "emit_svg",
    "PRESET_NAMES",
    "preset_figure",
]


@dataclass(frozen=True)
class Disk:
    """Disk centered at ``(center_x, 0)``."""

    center_x: float
    radius: float

    def contains(self, pts: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts)
        d = np.hypot(pts[:, 0] - self.center_x, pts[:, 1])
        return d <= self.radius * (1.0 + 1e-12) + slack


@dataclass
class Raster:
    """Boolean grid of pixel-center samples over ``[-extent, extent]^2``.

    ``grid[j, i]`` samples the point ``(-extent + i*h, -extent + j*h)`` with
    ``h = 2*extent/resolution``; the grid has ``resolution + 1`` samples per
    axis so the boundary and the origin are sampled exactly.
    """

    grid: np.ndarray
    extent: float
    resolution: int

    @property
    def pixel(self) -> float:
        return 2.0 * self.extent / self.resolution

    def axis(self) -> np.ndarray:
        return -self.extent + self.pixel * np.arange(self.resolution + 1)

    def marked_points(self) -> np.ndarray:
        js, is_ = np.nonzero(self.grid)
        ax = self.axis()
        return np.column_stack([ax[is_], ax[js]])


def class_region(p: INParams) -> Disk:
    """The reachability disk of a single descriptor."""
    return Disk(p.alpha, p.beta)


def region_membership(points: np.ndarray, p1: INParams, p2: INParams) -> np.ndarray:
    """Exact membership of ``points`` in the composition region of ``p2 . p1``.

    A point ``p`` is reachable iff some ``q`` with ``||q - (a1, 0)|| <= b1``
    satisfies ``||p - a2*q|| <= b2*||q||``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a1, b1 = p1.alpha, p1.beta
    a2, b2 = p2.alpha, p2.beta
    c = np.array([a1, 0.0])
    rho_max = abs(a1) + b1

    if a2 == 0.0:
        return np.hypot(pts[:, 0], pts[:, 1]) <= b2 * rho_max

    w = pts / a2
    k = b2 / abs(a2)
    nw = np.hypot(w[:, 0], w[:, 1])
    s = 1.0 - k * k
    # ||w - s*c|| compared against k*||w|| + s*b1; the comparison direction
    # flips with the sign of s (Apollonius disk vs disk complement).
    lhs = np.hypot(w[:, 0] - s * c[0], w[:, 1] - s * c[1])
    if s > 0.0:
        return lhs <= k * nw + s * b1
    if s < 0.0:
        return lhs >= k * nw + s * b1
    return w @ c + b1 * nw >= 0.5 * nw * nw


def composition_region_exact(
    p1: INParams,
    p2: INParams,
    resolution: int = 512,
    relax_weight: float = 1.0,
) -> Raster:
    """Exact raster of the displacement region of the composition.

    With ``relax_weight = w`` the region of ``(1-w)*Id + w*(second . first)``
    is rasterized instead (an affine image of the base region).  ``p1`` with
    ``beta = 0`` degenerates to a single point and is handled by the same
    closed-form test.
    """
    if resolution < 64:
        raise DomainError(f"resolution must be >= 64, got {resolution}")
    if not relax_weight > 0.0:
        raise DomainError(f"relax weight must be > 0, got {relax_weight}")
    w = relax_weight
    base = (abs(p1.alpha) + p1.beta) * (abs(p2.alpha) + p2.beta)
    extent = abs(1.0 - w) + w * base
    if extent == 0.0:
        extent = 1.0
    ax = -extent + (2.0 * extent / resolution) * np.arange(resolution + 1)
    gx, gy = np.meshgrid(ax, ax)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    # Membership of the relaxed map at p is membership of the base map at
    # (p - (1-w)*e)/w.
    shifted = pts.copy()
    shifted[:, 0] -= 1.0 - w
    shifted /= w
    marked = region_membership(shifted, p1, p2)
    return Raster(marked.reshape(gx.shape), extent, resolution)


def raster_contains(raster: Raster, point, dilate: int = 0) -> bool:
    """Whether ``point`` falls on a marked pixel (within ``dilate`` pixels)."""
    x, y = float(point[0]), float(point[1])
    h = raster.pixel
    i = round((x + raster.extent) / h)
    j = round((y + raster.extent) / h)
    n = raster.resolution
    if not (-dilate <= i <= n + dilate and -dilate <= j <= n + dilate):
        return False
    i0, i1 = max(0, i - dilate), min(n, i + dilate)
    j0, j1 = max(0, j - dilate), min(n, j + dilate)
    return bool(raster.grid[j0 : j1 + 1, i0 : i1 + 1].any())


# ---------------------------------------------------------------------------
# SVG emission

CANVAS = 600.0
_GUIDE_STYLE = 'fill="none" stroke="#999999" stroke-dasharray="4,4" stroke-width="1"'
_AXIS_STYLE = 'stroke="#cccccc" stroke-width="1"'


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def emit_svg(regions, markers=(), path=None) -> str:
    """Write a deterministic SVG: fixed 600x600 canvas, unit-circle guide,
    marker at (1, 0).

    ``regions`` is a list of ``(region, style)`` pairs where ``region`` is a
    :class:`Disk` or :class:`Raster` and ``style`` a dict of SVG attributes.
    Returns the SVG text; writes it to ``path`` when given.  Identical inputs
    produce byte-identical output.
    """
    extent = 1.05
    for region, _ in regions:
        if isinstance(region, Disk):
            extent = max(extent, abs(region.center_x) + region.radius)
        else:
            extent = max(extent, region.extent)
    for m in markers:
        extent = max(extent, abs(m[0]), abs(m[1]))
    s = CANVAS / 2.0 / (extent * 1.05)

    def tx(x):
        return CANVAS / 2.0 + x * s

    def ty(y):
        return CANVAS / 2.0 - y * s

    def attrs(style: dict) -> str:
        return " ".join(f'{k}="{style[k]}"' for k in sorted(style))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS:.0f}" '
        f'height="{CANVAS:.0f}" viewBox="0 0 {CANVAS:.0f} {CANVAS:.0f}">',
        f'<rect width="{CANVAS:.0f}" height="{CANVAS:.0f}" fill="#ffffff"/>',
        f'<line x1="0" y1="{_fmt(ty(0))}" x2="{CANVAS:.0f}" y2="{_fmt(ty(0))}" {_AXIS_STYLE}/>',
        f'<line x1="{_fmt(tx(0))}" y1="0" x2="{_fmt(tx(0))}" y2="{CANVAS:.0f}" {_AXIS_STYLE}/>',
    ]
    for region, style in regions:
        if isinstance(region, Disk):
            lines.append(
                f'<circle cx="{_fmt(tx(region.center_x))}" cy="{_fmt(ty(0))}" '
                f'r="{_fmt(region.radius * s)}" {attrs(style)}/>'
            )
        else:
            lines.append(_raster_path(region, tx, ty, s, attrs(style)))
    lines.append(
        f'<circle cx="{_fmt(tx(0))}" cy="{_fmt(ty(0))}" r="{_fmt(s)}" {_GUIDE_STYLE}/>'
    )
    lines.append(
        f'<circle cx="{_fmt(tx(1.0))}" cy="{_fmt(ty(0))}" r="3" fill="#000000"/>'
    )
    for m in markers:
        lines.append(
            f'<path d="M {_fmt(tx(m[0]) - 4)} {_fmt(ty(m[1]))} h 8 M {_fmt(tx(m[0]))} '
            f'{_fmt(ty(m[1]) - 4)} v 8" stroke="#000000" stroke-width="1"/>'
        )
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Named presets

_RASTER_STYLE = {"fill": "#b8b8b8", "stroke": "none"}
_CERT_STYLE = {"fill": "none", "stroke": "#cc2222", "stroke-width": "1.5"}
_PALETTE = ("#1f6fb4", "#d9541e", "#2d8f2d", "#8332a8", "#8a6d1f", "#17808a", "#b02456")


def _single_class_regions():
    named = [
        ("lipschitz 0.8", INParams(0.0, 0.8)),
        ("cocoercive 1.4", INParams(0.7, 0.7)),
        ("cocoercive 0.7", INParams(0.35, 0.35)),
        ("averaged 0.25", INParams(0.75, 0.25)),
        ("averaged 0.5", INParams(0.5, 0.5)),
        ("averaged 0.75", INParams(0.25, 0.75)),
        ("conic 1.2", INParams(-0.2, 1.2)),
        ("conic 1.5", INParams(-0.5, 1.5)),
    ]
    return [
        (class_region(p), {"fill": "none", "stroke": _PALETTE[i % len(_PALETTE)],
                           "stroke-width": "1.5"})
        for i, (_, p) in enumerate(named)
    ]


def _composition_preset(p1, p2, resolution, certified=True, relax_weight=1.0):
    from .calculus import compose_general

    regions = [(composition_region_exact(p1, p2, resolution, relax_weight), dict(_RASTER_STYLE))]
    if certified:
        cert = compose_general(p1, p2)
        if relax_weight != 1.0:
            w = relax_weight
            cert = INParams((1.0 - w) + w * cert.alpha, w * cert.beta)
        regions.append((class_region(cert), dict(_CERT_STYLE)))
    return regions


PRESET_NAMES = (
    "single-class",
    "averaged-averaged-0.5-0.5",
    "averaged-averaged-0.7-0.6",
    "conic-conic-1.7-0.45",
    "conic-conic-1.7-0.7",
    "scaled-averaged-cocoercive",
    "fb-relaxed",
)


def preset_figure(name: str, resolution: int = 512):
    """Return ``(regions, markers)`` for one of the named presets."""
    from .calculus import ScaledConic, compose_conic, compose_scaled_averaged_cocoercive

    if name == "single-class":
        return _single_class_regions(), []
    if name == "averaged-averaged-0.5-0.5":
        return _composition_preset(INParams(0.5, 0.5), INParams(0.5, 0.5), resolution), []
    if name == "averaged-averaged-0.7-0.6":
        return _composition_preset(INParams(0.3, 0.7), INParams(0.4, 0.6), resolution), []
    if name == "conic-conic-1.7-0.45":
        return _composition_preset(INParams(-0.7, 1.7), INParams(0.55, 0.45), resolution), []
    if name == "conic-conic-1.7-0.7":
        # Parameter product above one: no certified disk exists.
        return (
            _composition_preset(INParams(-0.7, 1.7), INParams(0.3, 0.7), resolution,
                                certified=False),
            [],
        )
    if name == "scaled-averaged-cocoercive":
        p1, p2 = INParams(0.6, 1.0), INParams(0.3125, 0.3125)
        cert = compose_scaled_averaged_cocoercive(ScaledConic(1.6, 0.625), 0.625).to_in()
        regions = [
            (composition_region_exact(p1, p2, resolution), dict(_RASTER_STYLE)),
            (class_region(cert), dict(_CERT_STYLE)),
        ]
        return regions, []
    if name == "fb-relaxed":
        p1, p2 = INParams(-0.95, 1.95), INParams(0.5, 0.5)
        w = 0.04
        conic = compose_conic(ScaledConic(1.0, 1.95), ScaledConic(1.0, 0.5))
        base = conic.to_in()
        cert = INParams((1.0 - w) + w * base.alpha, w * base.beta)
        regions = [
            (composition_region_exact(p1, p2, resolution, relax_weight=w), dict(_RASTER_STYLE)),
            (class_region(cert), dict(_CERT_STYLE)),
        ]
        return regions, []
    raise DomainError(f"unknown preset {name!r}; known: {PRESET_NAMES}")


def _raster_path(raster: Raster, tx, ty, s, attr_text: str) -> str:
    """One path element: a rect run per maximal horizontal run of pixels."""
    h = raster.pixel
    half = h / 2.0
    ax = raster.axis()
    parts = []
    for j in range(raster.grid.shape[0]):
        row = raster.grid[j]
        i = 0
        n = len(row)
        while i < n:
            if row[i]:
                i0 = i
                while i < n and row[i]:
                    i += 1
                x0 = tx(ax[i0] - half)
                x1 = tx(ax[i - 1] + half)
                y0 = ty(ax[j] + half)
                y1 = ty(ax[j] - half)
                parts.append(
                    f"M {_fmt(x0)} {_fmt(y0)} H {_fmt(x1)} V {_fmt(y1)} H {_fmt(x0)} Z"
                )
            else:
                i += 1
    return f'<path d="{" ".join(parts)}" {attr_text}/>'
