"""Rasters of parabolic basins and of the domain of the renormalized map.

Pixels are classified independently, rows in parallel, so the output does
not depend on the number of threads.  Basin classes:

* ``0..q-1``: the orbit entered attracting petal ``2k`` first,
* ``ESCAPE``: ``|z|`` exceeded the escape radius,
* ``UNDECIDED``: neither happened within the iteration budget.

The pixel grid is affine: column ``j`` maps to
``xmin + (j / (w-1)) (xmax - xmin)`` and row ``i`` (top row first) to
``ymax - (i / (h-1)) (ymax - ymin)``, evaluated symmetrically about the
centre so that a window symmetric about the real axis gives exactly
conjugate pixel rows.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numba
import numpy as np

from .fatou import petal_chart
from .germ import UnicriticalGerm
from .horn import HornMapSampler

__all__ = [
    "ESCAPE",
    "UNDECIDED",
    "INSIDE",
    "OUTSIDE",
    "Window",
    "Raster",
    "render_basin",
    "classify_points",
    "render_renorm_domain",
    "circle_transitions",
    "component_of",
    "has_holes",
    "write_ppm",
    "write_sidecar",
    "PALETTE",
]

ESCAPE = 254
UNDECIDED = 255
INSIDE = 1
OUTSIDE = 0


@dataclass(frozen=True)
class Window:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("empty window")

    @classmethod
    def centered(cls, center: complex, half_width: float, half_height: float | None = None) -> "Window":
        hh = half_width if half_height is None else half_height
        return cls(center.real - half_width, center.real + half_width,
                   center.imag - hh, center.imag + hh)

    def _axis(self, lo: float, hi: float, n: int, reverse: bool) -> np.ndarray:
        if n == 1:
            return np.array([(lo + hi) / 2])
        t = (np.arange(n) * 2.0 - (n - 1)) / (n - 1)
        if reverse:
            t = -t
        out = (lo + hi) / 2 + t * ((hi - lo) / 2)
        out[0], out[-1] = (hi, lo) if reverse else (lo, hi)
        return out

    def grid(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """``(xs, ys)`` for the columns and rows (rows run top to bottom)."""
        return (self._axis(self.xmin, self.xmax, width, False),
                self._axis(self.ymin, self.ymax, height, True))

    def as_list(self) -> list[float]:
        return [self.xmin, self.xmax, self.ymin, self.ymax]


@dataclass
class Raster:
    window: Window
    pixels: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def point(self, i: int, j: int) -> complex:
        xs, ys = self.window.grid(self.width, self.height)
        return complex(xs[j], ys[i])

    def pixel_of(self, z: complex) -> tuple[int, int]:
        w = self.window
        j = round((z.real - w.xmin) / (w.xmax - w.xmin) * (self.width - 1))
        i = round((w.ymax - z.imag) / (w.ymax - w.ymin) * (self.height - 1))
        return i, j

    def class_counts(self) -> dict[str, int]:
        vals, counts = np.unique(self.pixels, return_counts=True)
        return {str(int(v)): int(c) for v, c in zip(vals, counts)}

    def fraction(self, cls_values) -> float:
        return float(np.isin(self.pixels, list(cls_values)).mean())


# -- basin kernel -------------------------------------------------------------


@numba.njit(cache=True)
def _petal_hit(z, q, a, dirs, radii, margins):
    if z == 0:
        return -1
    r = abs(z)
    ang = math.atan2(z.imag, z.real)
    for k in range(dirs.shape[0]):
        if r >= radii[k]:
            continue
        diff = ang - dirs[k]
        diff -= 2 * math.pi * math.floor(diff / (2 * math.pi) + 0.5)
        if abs(diff) >= math.pi / q:
            continue
        w = -1.0 / (q * a * z ** q)
        if w.real > margins[k]:
            return k
    return -1


@numba.njit(cache=True)
def _classify(z, horner, q, a, dirs, radii, margins, budget, escape):
    for _ in range(budget + 1):
        k = _petal_hit(z, q, a, dirs, radii, margins)
        if k >= 0:
            return k
        if not abs(z) <= escape:
            return ESCAPE
        acc = 0j
        for c in horner:
            acc = acc * z + c
        z = acc
    return UNDECIDED


@numba.njit(parallel=True, cache=True)
def _basin_kernel(xs, ys, horner, q, a, dirs, radii, margins, budget, escape):
    out = np.empty((ys.shape[0], xs.shape[0]), dtype=np.uint8)
    for i in numba.prange(ys.shape[0]):
        for j in range(xs.shape[0]):
            out[i, j] = _classify(complex(xs[j], ys[i]), horner, q, a, dirs, radii,
                                  margins, budget, escape)
    return out


@numba.njit(parallel=True, cache=True)
def _points_kernel(zs, horner, q, a, dirs, radii, margins, budget, escape):
    out = np.empty(zs.shape[0], dtype=np.uint8)
    for i in numba.prange(zs.shape[0]):
        out[i] = _classify(zs[i], horner, q, a, dirs, radii, margins, budget, escape)
    return out


def _petal_arrays(germ: UnicriticalGerm):
    charts = [petal_chart(germ, 2 * k) for k in range(germ.q)]
    dirs = np.array([c.direction for c in charts])
    radii = np.array([c.radius for c in charts])
    margins = np.array([c.margin for c in charts])
    a = complex(charts[0].data.series.a)
    horner = np.array([complex(c) for c in germ.coeffs[::-1]])
    return horner, a, dirs, radii, margins


def classify_points(germ: UnicriticalGerm, zs, budget: int = 20_000, escape: float = 1e3) -> np.ndarray:
    if not germ.is_parabolic:
        raise ValueError("basin classification needs alpha = 0")
    horner, a, dirs, radii, margins = _petal_arrays(germ)
    zs = np.ascontiguousarray(np.asarray(zs, dtype=complex))
    return _points_kernel(zs, horner, germ.q, a, dirs, radii, margins, budget, escape)


def render_basin(germ: UnicriticalGerm, window: Window, resolution, budget: int = 20_000,
                 escape: float = 1e3) -> Raster:
    if not germ.is_parabolic:
        raise ValueError("render_basin needs alpha = 0")
    width, height = (resolution, resolution) if isinstance(resolution, int) else resolution
    xs, ys = window.grid(width, height)
    horner, a, dirs, radii, margins = _petal_arrays(germ)
    pixels = _basin_kernel(xs, ys, horner, germ.q, a, dirs, radii, margins, budget, escape)
    meta = {"kind": "basin", "germ": germ.descriptor(), "budget": budget, "escape_radius": escape,
            "petal_margins": margins.tolist(), "classes": {"escape": ESCAPE, "undecided": UNDECIDED,
                                                           "petal": list(range(germ.q))}}
    return Raster(window, pixels, meta)


def circle_transitions(germ: UnicriticalGerm, radius: float, n: int = 4096,
                       budget: int = 20_000, local_radius: float | None = None) -> tuple[int, np.ndarray]:
    """Number of changes of local basin membership around ``|z| = radius``.

    A point belongs to the local basin when its orbit lands in an attracting
    petal without leaving ``|z| < local_radius`` (default ``2 radius``).
    Every point of a small circle eventually lands somewhere, so the global
    basin would give no transitions at all.
    """
    escape = 2 * radius if local_radius is None else local_radius
    zs = radius * np.exp(2j * math.pi * (np.arange(n) + 0.5) / n)
    cls = classify_points(germ, zs, budget, escape)
    inside = cls < germ.q
    changes = int(np.count_nonzero(inside != np.roll(inside, 1)))
    return changes, cls


# -- renormalization domain ---------------------------------------------------


@numba.njit(cache=True)
def _series_value(z, c, neg, pos, direction):
    zi = 1.0 / z
    acc_n = 0j
    for k in range(neg.shape[0] - 1, -1, -1):
        acc_n = (acc_n + neg[k]) * zi
    acc_p = 0j
    for k in range(pos.shape[0] - 1, -1, -1):
        acc_p = (acc_p + pos[k]) * z
    rot = complex(math.cos(direction), -math.sin(direction))
    zr = z * rot
    lg = complex(math.log(abs(zr)), math.atan2(zr.imag, zr.real) + direction)
    return c * lg + acc_n + acc_p


@numba.njit(cache=True)
def _series_derivative(z, c, neg, pos):
    zi = 1.0 / z
    acc = c * zi
    for k in range(neg.shape[0]):
        acc -= (k + 1) * neg[k] * zi ** (k + 2)
    zk = 1.0 + 0j
    for k in range(pos.shape[0]):
        acc += (k + 1) * pos[k] * zk
        zk *= z
    return acc


@numba.njit(cache=True)
def _series_inverse(v, q, a, c, neg, pos, direction):
    r = (-1.0 / (q * a * v)) ** (1.0 / q)
    best = r
    best_d = 1e300
    for k in range(q):
        cand = r * complex(math.cos(2 * math.pi * k / q), math.sin(2 * math.pi * k / q))
        d = math.atan2(cand.imag, cand.real) - direction
        d -= 2 * math.pi * math.floor(d / (2 * math.pi) + 0.5)
        if abs(d) < best_d:
            best, best_d = cand, abs(d)
    z = best
    scale = max(1.0, abs(v))
    for _ in range(60):
        res = _series_value(z, c, neg, pos, direction) - v
        if abs(res) < 1e-14 * scale:
            break
        z = z - res / _series_derivative(z, c, neg, pos)
    return z


@numba.njit(parallel=True, cache=True)
def _renorm_kernel(xs, ys, c1, depth, q, a, c, neg, pos, rep_dir, horner,
                   dirs, radii, margins, budget, escape):
    out = np.empty((ys.shape[0], xs.shape[0]), dtype=np.uint8)
    for i in numba.prange(ys.shape[0]):
        for j in range(xs.shape[0]):
            zpix = complex(xs[j], ys[i])
            if zpix == 0:
                out[i, j] = INSIDE
                continue
            re = math.atan2(zpix.imag, zpix.real) / (2 * math.pi)
            re -= math.floor(re)
            w = complex(re, -math.log(abs(zpix)) / (2 * math.pi))
            v = w - c1
            m = 0
            while True:
                u = v - m
                if abs(u) >= depth and u.real <= abs(u.imag):
                    break
                m += 1
            z = _series_inverse(v - m, q, a, c, neg, pos, rep_dir)
            ok = True
            for _ in range(m * q):
                acc = 0j
                for cc in horner:
                    acc = acc * z + cc
                z = acc
                if not abs(z) < escape:
                    ok = False
                    break
            if not ok:
                out[i, j] = OUTSIDE
                continue
            k = _classify(z, horner, q, a, dirs, radii, margins, budget, escape)
            out[i, j] = INSIDE if k < q else OUTSIDE
    return out


def render_renorm_domain(sampler: HornMapSampler, window: Window, resolution,
                         budget: int = 20_000) -> Raster:
    """Pixels ``z`` with ``chi(Exp^{-1}(z))`` in the basin, plus ``z = 0``.

    ``Exp^{-1}`` takes the fundamental strip ``0 <= Re w < 1``; undecided
    orbits count as outside.
    """
    coords = sampler.coords
    germ = coords.germ
    width, height = (resolution, resolution) if isinstance(resolution, int) else resolution
    xs, ys = window.grid(width, height)
    horner, a, dirs, radii, margins = _petal_arrays(germ)
    rep = coords.rep
    series = rep.series
    pixels = _renorm_kernel(xs, ys, complex(coords.c1), float(rep.depth), germ.q,
                            complex(series.a), complex(series.c), series.neg, series.pos,
                            float(rep.petal.direction), horner, dirs, radii, margins,
                            budget, 1e3)
    meta = {"kind": "renorm_domain", "germ": germ.descriptor(), "budget": budget,
            "coordinates": coords.descriptor()}
    return Raster(window, pixels, meta)


def component_of(mask: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
    """4-connected component of ``mask`` containing ``seed``."""
    h, w = mask.shape
    comp = np.zeros_like(mask, dtype=bool)
    if not mask[seed]:
        return comp
    queue = deque([seed])
    comp[seed] = True
    while queue:
        i, j = queue.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < h and 0 <= b < w and mask[a, b] and not comp[a, b]:
                comp[a, b] = True
                queue.append((a, b))
    return comp


def has_holes(component: np.ndarray) -> bool:
    """True if the complement of ``component`` has a piece not reaching the border.

    The component is 4-connected, so its complement is traced with
    8-connectivity (the dual pairing that makes the pixel Jordan theorem
    hold); one-pixel-wide diagonal channels then count as connected.
    """
    outside = ~component
    h, w = component.shape
    reach = np.zeros_like(outside)
    queue = deque()
    border = [(i, j) for i in range(h) for j in (0, w - 1)] + \
             [(i, j) for j in range(w) for i in (0, h - 1)]
    for i, j in border:
        if outside[i, j] and not reach[i, j]:
            reach[i, j] = True
            queue.append((i, j))
    steps = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj]
    while queue:
        i, j = queue.popleft()
        for di, dj in steps:
            a, b = i + di, j + dj
            if 0 <= a < h and 0 <= b < w and outside[a, b] and not reach[a, b]:
                reach[a, b] = True
                queue.append((a, b))
    return bool((outside & ~reach).any())


# -- output -------------------------------------------------------------------

PALETTE = {
    ESCAPE: (250, 250, 250),
    UNDECIDED: (255, 0, 255),
    OUTSIDE: (235, 235, 235),
}
_PETAL_COLOURS = [(31, 119, 180), (214, 39, 40), (44, 160, 44), (148, 103, 189),
                  (255, 127, 14), (140, 86, 75), (23, 190, 207), (188, 189, 34)]


def _colour_table(kind: str) -> np.ndarray:
    table = np.zeros((256, 3), dtype=np.uint8)
    for k in range(254):
        table[k] = _PETAL_COLOURS[k % len(_PETAL_COLOURS)]
    table[ESCAPE] = PALETTE[ESCAPE]
    table[UNDECIDED] = PALETTE[UNDECIDED]
    if kind == "renorm_domain":
        table[OUTSIDE] = PALETTE[OUTSIDE]
        table[INSIDE] = (20, 20, 20)
    return table


def write_ppm(path, raster: Raster) -> None:
    rgb = _colour_table(raster.meta.get("kind", "basin"))[raster.pixels]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb).tobytes())


def write_sidecar(path, raster: Raster, extra: dict | None = None) -> dict:
    data = dict(raster.meta)
    data.update({"window": raster.window.as_list(), "resolution": [raster.width, raster.height],
                 "class_counts": raster.class_counts()})
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data
