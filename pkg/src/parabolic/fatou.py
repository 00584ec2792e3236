"""Petals and numerical Fatou coordinates of a parabolic germ.

For ``F = h^q(z) = z + a z^{q+1} + ...`` the change of variable
``W(z) = -1/(q a z^q)`` turns ``F`` into ``W -> W + 1 + O(|W|^{-1/q})``.
A Fatou coordinate is approximated by a formal solution

    Phi(z) = c log z + sum_{k=-q, k != 0}^{K} b_k z^k

of ``Phi(F(z)) - Phi(z) = 1`` (solved order by order from the Taylor
series of ``F``), evaluated after pushing ``z`` deep into the petal:

    phi(z) = Phi(F^n(z)) - n          (attracting, forward orbit)
    phi(z) = Phi(F^{-n}(z)) + n       (repelling, backward orbit)

where ``n`` is the first index with ``|W| >= depth``.  The truncation error
of ``Phi`` decays like ``|W|^{-(K+1)/q}``, so the depth only has to be
moderate (a few tens), far below the ``1/tol`` steps a plain
``W(F^n z) - n`` limit would need.

Petal indexing: petal ``j`` (mod ``2q``) is centred on the direction
``theta_0 + j pi/q``, counted counterclockwise from the attracting
direction ``theta_0`` along which the critical value converges.  Even
indices are attracting, odd ones repelling, and ``h`` sends petal ``j`` to
petal ``j + 2p``.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NonConvergenceError, NotInPetalError
from .germ import UnicriticalGerm
from .series import TruncatedSeries

__all__ = [
    "ATTRACTING",
    "REPELLING",
    "FatouSeries",
    "PetalChart",
    "FatouChart",
    "parabolic_data",
    "petal_chart",
    "fatou_chart",
    "fit_margin",
    "petal_membership",
    "attracting_fatou",
    "repelling_fatou",
    "repelling_inverse",
    "petal_cycle_check",
    "petal_index_of",
    "petal_samples",
    "depth_for_tol",
    "write_samples_csv",
]

ATTRACTING = "attracting"
REPELLING = "repelling"

MAX_TILT = math.pi / 13
DEFAULT_BUDGET = 10_000_000
_MARGINS = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0)


def depth_for_tol(q: int, tol: float) -> float:
    """Deep-region radius in the ``W`` plane giving roughly ``tol`` accuracy."""
    # truncation error falls like depth^-(K+1)/q ~ depth^-8 while rounding
    # grows with the number of iterations, so keep the depth moderate
    tol = min(max(tol, 1e-14), 1e-2)
    return max(8.0, 2.5 * tol ** -0.1)


def _rotated_log(z: complex, direction: float) -> complex:
    return cmath.log(z * cmath.exp(-1j * direction)) + 1j * direction


def _angle_diff(x: float, y: float) -> float:
    """Signed difference ``x - y`` reduced to [-pi, pi]."""
    return math.remainder(x - y, 2 * math.pi)


@dataclass(frozen=True)
class FatouSeries:
    """Formal Fatou coordinate ``c log z + sum b_k z^k`` of ``F = h^q``."""

    q: int
    a: complex
    c: complex
    neg: np.ndarray   # b_{-1}, ..., b_{-q}
    pos: np.ndarray   # b_1, ..., b_K

    @property
    def order(self) -> int:
        return len(self.pos)

    @property
    def log_coefficient(self) -> complex:
        """``A`` in ``phi = lim W(F^n z) - n - A log n``."""
        return self.c / self.q

    @classmethod
    def from_germ(cls, germ: UnicriticalGerm, order: int | None = None) -> "FatouSeries":
        q = germ.q
        K = order if order is not None else 8 * q + 4
        N = K + q
        germ.q_fold_series()  # non-degeneracy checks
        F = germ.fold_series(N + 1)
        u = TruncatedSeries(F.coeffs[1:], N)
        u.coeffs[0] = 0
        a = u[q]
        L = u.log1p()
        ks = [k for k in range(-q, K + 1) if k != 0]
        E = {k: (L * k).exp() - 1 for k in ks}
        b: dict[int, complex] = {}
        c = 0j
        for J in range(N + 1):
            s = c * L[J]
            for k, bk in b.items():
                if 0 <= J - k <= N:
                    s += bk * E[k][J - k]
            target = 1.0 if J == 0 else 0.0
            if J == q:
                c = (target - s) / L[q]
            else:
                k = J - q
                b[k] = (target - s) / (k * a)
        neg = np.array([b[-k] for k in range(1, q + 1)], dtype=complex)
        pos = np.array([b[k] for k in range(1, K + 1)], dtype=complex)
        return cls(q, complex(a), complex(c), neg, pos)

    def W(self, z: complex) -> complex:
        return -1 / (self.q * self.a * z ** self.q)

    def W_inverse(self, w: complex, direction: float) -> complex:
        """Root of ``W(z) = w`` closest to the given direction."""
        r = (-1 / (self.q * self.a * w)) ** (1 / self.q)
        best, best_d = r, math.inf
        for k in range(self.q):
            cand = r * cmath.exp(2j * math.pi * k / self.q)
            d = abs(_angle_diff(cmath.phase(cand), direction))
            if d < best_d:
                best, best_d = cand, d
        return best

    def __call__(self, z: complex, direction: float) -> complex:
        zi = 1 / z
        acc_n = 0j
        for b in self.neg[::-1]:
            acc_n = (acc_n + b) * zi
        acc_p = 0j
        for b in self.pos[::-1]:
            acc_p = (acc_p + b) * z
        return self.c * _rotated_log(z, direction) + acc_n + acc_p

    def derivative(self, z: complex) -> complex:
        zi = 1 / z
        acc = self.c * zi
        for k, b in enumerate(self.neg, start=1):
            acc -= k * b * zi ** (k + 1)
        zk = 1 + 0j
        for k, b in enumerate(self.pos, start=1):
            acc += k * b * zk
            zk *= z
        return acc

    def inverse(self, v: complex, direction: float, tol: float = 1e-14,
                max_iter: int = 60) -> complex:
        """Solve ``Phi(z) = v`` near the branch of ``W^{-1}(v)`` at ``direction``."""
        z = self.W_inverse(v, direction)
        scale = max(1.0, abs(v))
        for _ in range(max_iter):
            r = self(z, direction) - v
            if abs(r) < tol * scale:
                return z
            z = z - r / self.derivative(z)
        if abs(self(z, direction) - v) < 1e3 * tol * scale:
            return z
        raise NonConvergenceError("Newton inversion of the formal Fatou series failed", v=v)


@dataclass(frozen=True)
class ParabolicData:
    """Germ-level data shared by every chart: series and petal directions."""

    germ: UnicriticalGerm
    series: FatouSeries
    theta0: float

    def direction(self, j: int) -> float:
        return math.remainder(self.theta0 + j * math.pi / self.germ.q, 2 * math.pi)


def _cv_direction(germ: UnicriticalGerm, series: FatouSeries) -> float:
    q, a = germ.q, series.a
    cands = [(math.pi - cmath.phase(a) + 2 * math.pi * k) / q for k in range(q)]
    z = germ.critical_value
    for _ in range(200_000):
        if z != 0 and abs(series.W(z)) > 40:
            break
        z = germ.fold(z)
        if not abs(z) < 1e6:
            raise NonConvergenceError("critical orbit escaped", germ=repr(germ))
    else:
        raise NonConvergenceError("critical orbit did not reach a petal", germ=repr(germ))
    ang = cmath.phase(z)
    return min(cands, key=lambda t: abs(_angle_diff(ang, t)))


@lru_cache(maxsize=64)
def parabolic_data(germ: UnicriticalGerm, order: int | None = None) -> ParabolicData:
    series = FatouSeries.from_germ(germ, order)
    return ParabolicData(germ, series, _cv_direction(germ, series))


def petal_index_of(germ: UnicriticalGerm, z: complex) -> int:
    """Index of the petal direction nearest to ``arg z``."""
    data = parabolic_data(germ)
    q = germ.q
    k = round(_angle_diff(cmath.phase(z), data.theta0) / (math.pi / q))
    return k % (2 * q)


@dataclass(frozen=True)
class PetalChart:
    """Petal ``j`` described in the ``W`` coordinate.

    Attracting: ``Re W > Im(W) tan(tilt) + margin``; repelling:
    ``Re W < Im(W) tan(tilt) - margin``; both restricted to the sector of
    half-angle ``pi/q`` about the petal direction.
    """

    germ: UnicriticalGerm
    index: int
    tilt: float
    margin: float
    data: ParabolicData = field(repr=False, compare=False)

    @property
    def kind(self) -> str:
        return ATTRACTING if self.index % 2 == 0 else REPELLING

    @property
    def q(self) -> int:
        return self.germ.q

    @property
    def direction(self) -> float:
        return self.data.direction(self.index)

    @property
    def branch(self) -> int:
        """Which ``q``-th root sector of ``W^{-1}`` the petal uses (0..q-1)."""
        return (self.index // 2) % self.q

    @property
    def radius(self) -> float:
        m = self.margin * math.cos(self.tilt)
        return (1 / (self.q * abs(self.data.series.a) * m)) ** (1 / self.q)

    def W(self, z: complex) -> complex:
        return self.data.series.W(z)

    def W_inverse(self, w: complex) -> complex:
        return self.data.series.W_inverse(w, self.direction)

    def in_sector(self, z: complex) -> bool:
        return abs(_angle_diff(cmath.phase(z), self.direction)) < math.pi / self.q

    def half_plane(self, w: complex, margin: float | None = None) -> bool:
        m = self.margin if margin is None else margin
        shift = w.imag * math.tan(self.tilt)
        if self.kind == ATTRACTING:
            return w.real > shift + m
        return w.real < shift - m

    def contains(self, z: complex) -> bool:
        if z == 0 or not abs(z) < self.radius or not self.in_sector(z):
            return False
        return self.half_plane(self.W(z))

    def is_deep(self, z: complex, depth: float) -> bool:
        if z == 0 or not self.in_sector(z):
            return False
        w = self.W(z)
        if abs(w) < depth:
            return False
        if self.kind == ATTRACTING:
            return w.real >= -abs(w.imag)
        return w.real <= abs(w.imag)

    def from_W(self, w: complex) -> complex:
        return self.W_inverse(w)


def petal_membership(chart: PetalChart, z: complex) -> bool:
    return chart.contains(complex(z))


def _margin_ok(germ: UnicriticalGerm, data: ParabolicData, j: int, tilt: float, margin: float) -> bool:
    chart = PetalChart(germ, j, tilt, margin, data)
    t = math.tan(tilt)
    sgn = 1 if chart.kind == ATTRACTING else -1
    for y in np.linspace(-40, 40, 81):
        for extra in (1e-3, 0.5, 3.0):
            w = complex(y * t + sgn * (margin + extra), y)
            z = chart.W_inverse(w)
            try:
                img = germ.fold(z) if sgn > 0 else germ.fold_inverse(z)
            except ArithmeticError:
                return False
            if not chart.contains(img):
                return False
    return True


@lru_cache(maxsize=256)
def fit_margin(germ: UnicriticalGerm, j: int = 0, tilt: float = 0.0) -> float:
    """Smallest tabulated margin for which the sampled petal is invariant.

    Attracting petals are tested for ``F(P) in P``, repelling ones for
    ``F^{-1}(P) in P``.
    """
    data = parabolic_data(germ)
    for m in _MARGINS:
        if _margin_ok(germ, data, j, tilt, m):
            return m
    raise NonConvergenceError("no invariant petal margin found", j=j, tilt=tilt)


def petal_chart(germ: UnicriticalGerm, j: int = 0, tilt: float = 0.0,
                margin: float | None = None) -> PetalChart:
    if abs(tilt) > MAX_TILT + 1e-12:
        raise ValueError(f"tilt {tilt} outside [-pi/13, pi/13]")
    j = j % (2 * germ.q)
    if margin is None:
        margin = fit_margin(germ, j, float(tilt))
    return PetalChart(germ, j, float(tilt), float(margin), parabolic_data(germ))


class FatouChart:
    """Numerical Fatou coordinate on one petal, ``phi(F(z)) = phi(z) + 1``.

    ``c0`` is the additive normalization; ``depth`` the ``|W|`` radius of the
    region where the formal series is used directly.
    """

    def __init__(self, petal: PetalChart, tol: float = 1e-10, c0: complex = 0j,
                 budget: int = DEFAULT_BUDGET):
        self.petal = petal
        self.germ = petal.germ
        self.series = petal.data.series
        self.tol = tol
        self.depth = depth_for_tol(petal.q, tol)
        self.c0 = complex(c0)
        self.budget = budget

    @property
    def kind(self) -> str:
        return self.petal.kind

    @property
    def log_coefficient(self) -> complex:
        return self.series.log_coefficient

    def with_constant(self, c0: complex) -> "FatouChart":
        out = FatouChart(self.petal, self.tol, c0, self.budget)
        out.depth = self.depth
        return out

    def with_depth(self, depth: float) -> "FatouChart":
        out = FatouChart(self.petal, self.tol, self.c0, self.budget)
        out.depth = depth
        return out

    def push_deep(self, z: complex, depth: float | None = None) -> tuple[complex, int]:
        """Iterate ``F`` (or ``F^{-1}`` when repelling) until ``z`` is deep."""
        depth = self.depth if depth is None else depth
        petal, germ = self.petal, self.germ
        forward = self.kind == ATTRACTING
        n = 0
        while not petal.is_deep(z, depth):
            z = germ.fold(z) if forward else germ.fold_inverse(z)
            n += 1
            if n > self.budget or not math.isfinite(abs(z)):
                raise NonConvergenceError("petal orbit did not reach the deep region", steps=n)
        return z, n

    def raw(self, z: complex, depth: float | None = None) -> complex:
        """Coordinate without the additive constant."""
        zd, n = self.push_deep(complex(z), depth)
        val = self.series(zd, self.petal.direction)
        return val - n if self.kind == ATTRACTING else val + n

    def __call__(self, z: complex, depth: float | None = None) -> complex:
        z = complex(z)
        if not self.petal.contains(z):
            raise NotInPetalError(f"z={z} is not in petal {self.petal.index}")
        return self.raw(z, depth) + self.c0

    def inverse(self, w: complex, max_shift: int = 1_000_000) -> complex:
        """``z`` with ``phi(z) = w``.

        Repelling: solve far out in the series and push forward by ``F``.
        Attracting: solve at ``w + m`` deep inside and pull back by ``F^{-1}``.
        """
        v = complex(w) - self.c0
        petal, germ = self.petal, self.germ
        if self.kind == REPELLING:
            m = 0
            while not self._deep_value(v - m):
                m += 1
                if m > max_shift:
                    raise NonConvergenceError("repelling inverse shift budget exceeded", w=w)
            z = self.series.inverse(v - m, petal.direction)
            for _ in range(m):
                z = germ.fold(z)
            return z
        m = 0
        while not self._deep_value(v + m):
            m += 1
            if m > max_shift:
                raise NonConvergenceError("attracting inverse shift budget exceeded", w=w)
        z = self.series.inverse(v + m, petal.direction)
        for _ in range(m):
            z = germ.fold_inverse(z)
        return z

    def _deep_value(self, v: complex) -> bool:
        if abs(v) < self.depth:
            return False
        if self.kind == REPELLING:
            return v.real <= abs(v.imag)
        return v.real >= -abs(v.imag)

    def abel_residual(self, z: complex) -> float:
        """``|phi(F z) - phi(z) - 1|`` with the two sides evaluated at different depths.

        Using one depth for both sides would land on the same deep point and
        make the residual vanish identically; doubling the depth for one side
        exposes the actual error of the coordinate.
        """
        z = complex(z)
        fz = self.germ.fold(z)
        lhs = self.raw(fz, self.depth)
        rhs = self.raw(z, 2 * self.depth)
        return abs(lhs - rhs - 1)


def fatou_chart(germ: UnicriticalGerm, j: int = 0, tilt: float = 0.0,
                tol: float = 1e-10, c0: complex = 0j) -> FatouChart:
    return FatouChart(petal_chart(germ, j, tilt), tol, c0)


def _check_kind(chart: FatouChart, kind: str):
    if chart.kind != kind:
        raise NotInPetalError(f"petal {chart.petal.index} is {chart.kind}, not {kind}")


def attracting_fatou(germ: UnicriticalGerm, j: int, theta: float, z: complex,
                     tol: float = 1e-10) -> complex:
    chart = fatou_chart(germ, j, theta, tol)
    _check_kind(chart, ATTRACTING)
    return chart(z)


def repelling_fatou(germ: UnicriticalGerm, j: int, theta: float, z: complex,
                    tol: float = 1e-10) -> complex:
    chart = fatou_chart(germ, j, theta, tol)
    _check_kind(chart, REPELLING)
    return chart(z)


def repelling_inverse(germ: UnicriticalGerm, j: int, theta: float, w: complex,
                      tol: float = 1e-10, max_shift: int = 1_000_000) -> complex:
    chart = fatou_chart(germ, j, theta, tol)
    _check_kind(chart, REPELLING)
    return chart.inverse(w, max_shift)


def petal_cycle_check(germ: UnicriticalGerm, z: complex, j: int = 0,
                      depth: float = 200.0, budget: int = 1_000_000) -> int:
    """Petal index containing ``h(F^n z)`` for ``n`` large.

    ``z`` must lie in attracting petal ``j``; the observed index is returned
    and should equal ``j + 2p`` mod ``2q``.
    """
    chart = petal_chart(germ, j)
    if chart.kind != ATTRACTING:
        raise NotInPetalError("petal_cycle_check needs an attracting petal")
    z = complex(z)
    if not chart.contains(z):
        raise NotInPetalError(f"z={z} is not in petal {j}")
    n = 0
    while not chart.is_deep(z, depth):
        z = germ.fold(z)
        n += 1
        if n > budget:
            raise NonConvergenceError("orbit did not go deep", steps=n)
    img = germ(z)
    k = petal_index_of(germ, img)
    target = petal_chart(germ, k)
    if k % 2 or not target.contains(img):
        raise NotInPetalError("orbit left the attracting petals")
    return k


def petal_samples(chart: PetalChart, n: int, rng: np.random.Generator,
                  spread: float = 15.0) -> list[complex]:
    """Random points of the petal, drawn in the ``W`` coordinate."""
    t = math.tan(chart.tilt)
    sgn = 1 if chart.kind == ATTRACTING else -1
    out = []
    for _ in range(n):
        y = rng.uniform(-spread, spread)
        x = y * t + sgn * (chart.margin + 0.5 + rng.uniform(0, spread))
        out.append(chart.W_inverse(complex(x, y)))
    return out


def write_samples_csv(path, chart: FatouChart, points) -> list[tuple]:
    """Rows ``(re z, im z, re phi, im phi, residual)``."""
    rows = []
    for z in points:
        val = chart(z)
        rows.append((z.real, z.imag, val.real, val.imag, chart.abel_residual(z)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_z", "im_z", "re_phi", "im_phi", "residual"])
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
    return rows
