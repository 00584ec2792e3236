"""Extended Fatou coordinates, horn maps and parabolic renormalization.

``rho`` extends the attracting coordinate of petal 0 to the whole parabolic
basin by following orbits until they land in the petal; ``chi`` extends the
inverse of the repelling coordinate of petal 1 by pushing far-out points
forward with ``F = h^q``.  The horn map is ``H = rho o chi``; it commutes
with ``w -> w + 1`` and tends to translations ``w + zeta_+`` and
``w + zeta_-`` at the two ends of the strip.

Normalization is done in two stages: ``rho(cv) = 0`` fixes the attracting
constant, then the repelling constant is shifted so that
``zeta_+ = (1 - E(omega))/2``.  With that choice the top renormalized map
``Exp o H o Exp^{-1}`` (``Exp(w) = exp(2 pi i w)``) fixes 0 with derivative 1.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EscapeError, NonConvergenceError, NotInBasinError
from .fatou import FatouChart, fatou_chart
from .germ import UnicriticalGerm
from .mcf import signature

__all__ = [
    "ExtendedCoordinates",
    "HornMapSampler",
    "CriticalPoint",
    "Exp",
    "Exp_inverse",
    "winding_number",
    "build_sampler",
]

ESCAPE_RADIUS = 1e3
TWO_PI_I = 2j * math.pi


def Exp(w: complex) -> complex:
    return cmath.exp(TWO_PI_I * w)


def Exp_inverse(z: complex) -> complex:
    """Branch of ``Exp^{-1}`` with real part in ``[0, 1)``."""
    if z == 0:
        raise ValueError("Exp^{-1}(0) lies at the top end of the cylinder")
    re = (cmath.phase(z) / (2 * math.pi)) % 1.0
    return complex(re, -math.log(abs(z)) / (2 * math.pi))


def winding_number(values) -> int:
    """Winding number about 0 of a closed polygon given by complex samples."""
    v = np.asarray(values, dtype=complex)
    turns = np.angle(np.roll(v, -1) / v)
    return int(round(turns.sum() / (2 * math.pi)))


class ExtendedCoordinates:
    """``rho`` on the basin and ``chi`` on the plane for a parabolic germ."""

    def __init__(self, germ: UnicriticalGerm, tol: float = 1e-10, budget: int = 200_000):
        if not germ.is_parabolic:
            raise ValueError("extended coordinates need alpha = 0")
        self.germ = germ
        self.q = germ.q
        self.tol = tol
        self.budget = budget
        self.att: FatouChart = fatou_chart(germ, 0, 0.0, tol)
        self.rep: FatouChart = fatou_chart(germ, 1, 0.0, tol)
        self.c0 = 0j
        self.c1 = 0j
        self.c0 = -self.rho(germ.critical_value)
        # rough repelling constant making chi close to W^{-1} at height 5, so
        # the upper end is found before the exact zeta normalization
        z5 = self.rep.petal.W_inverse(5j)
        self.c1 = 5j - self.rep.series(z5, self.rep.petal.direction)

    # -- rho ------------------------------------------------------------------

    def landing(self, z: complex, budget: int | None = None) -> tuple[complex, int]:
        """First ``h``-iterate of ``z`` inside attracting petal 0, with its index."""
        budget = self.budget if budget is None else budget
        petal, h = self.att.petal, self.germ
        z = complex(z)
        for i in range(budget + 1):
            if petal.contains(z):
                return z, i
            if not abs(z) < ESCAPE_RADIUS:
                raise EscapeError(f"orbit escaped after {i} steps")
            z = h(z)
        raise NotInBasinError(f"no landing in the petal within {budget} steps")

    def rho(self, z: complex, extra_blocks: int = 0) -> complex:
        """Attracting coordinate transported along the orbit.

        ``extra_blocks`` uses a later landing; the value must not change.
        """
        zi, i = self.landing(z)
        for _ in range(extra_blocks):
            zi = self.germ.fold(zi)
        i += extra_blocks * self.q
        return self.att.raw(zi) - i // self.q + self.c0

    def in_basin(self, z: complex, budget: int | None = None) -> bool:
        try:
            self.landing(z, budget)
        except NotInBasinError:
            return False
        return True

    # -- chi ------------------------------------------------------------------

    def chi(self, w: complex, extra_shift: int = 0) -> complex:
        """``F^m(phi_1^{-1}(w - m))`` with the smallest deep ``m`` plus ``extra_shift``."""
        rep = self.rep
        v = complex(w) - self.c1
        m = 0
        while not rep._deep_value(v - m):
            m += 1
            if m > self.budget:
                raise NonConvergenceError("chi shift budget exceeded", w=str(w))
        m += extra_shift
        z = rep.series.inverse(v - m, rep.petal.direction)
        for _ in range(m):
            z = self.germ.fold(z)
            if not abs(z) < ESCAPE_RADIUS:
                return complex(math.inf, math.inf)
        return z

    def chi_derivative(self, w: complex, step: float = 1e-5) -> complex:
        return (self.chi(w + step) - self.chi(w - step)) / (2 * step)

    def descriptor(self) -> dict:
        return {
            "germ": self.germ.descriptor(),
            "c0": [self.c0.real, self.c0.imag],
            "c1": [self.c1.real, self.c1.imag],
            "tol": self.tol,
            "depth": self.att.depth,
        }


@dataclass(frozen=True)
class CriticalPoint:
    """Critical point ``w`` of the horn map with its image and local degree."""

    w: complex
    z: complex            # Exp(w), critical point of the renormalized map
    value: complex        # Exp(H(w))
    preimage_order: int   # h^j(chi(w)) = -1
    degree: int


class HornMapSampler:
    """Horn map ``H = rho o chi`` with its end asymptotics and renormalizations."""

    def __init__(self, coords: ExtendedCoordinates):
        self.coords = coords
        self.germ = coords.germ
        self.zeta_plus: complex | None = None
        self.zeta_minus: complex | None = None
        self.eta: float | None = None
        self.normalized = False

    @property
    def zeta_target(self) -> int:
        return (1 - signature(self.germ.omega)) // 2

    def horn_map(self, w: complex) -> complex:
        z = self.coords.chi(w)
        if not math.isfinite(abs(z)):
            raise EscapeError(f"chi({w}) escaped")
        return self.coords.rho(z)

    __call__ = horn_map

    def segment(self, im: float, n: int = 64) -> np.ndarray:
        return np.arange(n) / n + 1j * im

    def fit_zeta(self, im: float, n: int = 64) -> tuple[complex, float]:
        """Mean of ``H(w) - w`` on a fundamental segment and its spread."""
        diffs = np.array([self.horn_map(w) - w for w in self.segment(im, n)])
        mean = complex(diffs.mean())
        return mean, float(np.abs(diffs - mean).max())

    def normalize_zeta(self, im: float = 5.0, check_im: float = 6.0,
                       max_spread: float = 1e-3) -> "HornMapSampler":
        """Shift the repelling constant so the top end translates by the target."""
        for _ in range(4):
            raw, spread = self.fit_zeta(im)
            shift = raw - self.zeta_target
            self.coords.c1 += shift
            if abs(shift) < 1e-12:
                break
        check, _ = self.fit_zeta(check_im)
        self.zeta_plus, spread = self.fit_zeta(im)
        if spread > max_spread or abs(check - self.zeta_plus) > max_spread:
            raise NonConvergenceError(
                "horn map not yet a translation at the fitting height",
                spread=spread, drift=abs(check - self.zeta_plus),
            )
        # the lower end can sit several units further down; reported only
        self.zeta_minus = None
        for k in (1, 2, 3, 4):
            try:
                zm, zm_spread = self.fit_zeta(-k * im)
            except (NotInBasinError, NonConvergenceError):
                continue
            if zm_spread < max_spread:
                self.zeta_minus = zm
                break
        self.normalized = True
        return self

    def fit_eta(self, n: int = 256, max_height: int = 10) -> float:
        """Smallest integer height at which a fundamental segment lies in the domain."""
        for k in range(0, max_height + 1):
            try:
                for w in self.segment(float(k), n):
                    self.horn_map(w)
            except (NotInBasinError, NonConvergenceError):
                continue
            self.eta = float(k)
            return self.eta
        raise NonConvergenceError("no strip height found", max_height=max_height)

    def periodicity_defect(self, ws) -> float:
        """``max |H(w+1) - H(w) - 1|``.

        ``H(w+1)`` is evaluated with one extra repelling shift and one extra
        attracting block, so the two sides follow different orbits.
        """
        coords = self.coords
        worst = 0.0
        for w in ws:
            shifted = coords.rho(coords.chi(w + 1, extra_shift=1), extra_blocks=1)
            worst = max(worst, abs(shifted - self.horn_map(w) - 1))
        return worst

    # -- renormalized maps ----------------------------------------------------

    def parabolic_renorm(self, z: complex) -> complex:
        """Top renormalization ``Exp o H o Exp^{-1}``, extended by 0 at 0."""
        z = complex(z)
        if z == 0:
            return 0j
        return Exp(self.horn_map(Exp_inverse(z)))

    def bottom_renorm(self, z: complex) -> complex:
        """Bottom renormalization ``e^{2 pi i zeta_-} / R(1/z)``, extended by 0 at 0."""
        z = complex(z)
        if z == 0:
            return 0j
        if self.zeta_minus is None:
            raise ValueError("bottom renormalization needs a fitted zeta_minus")
        return Exp(self.zeta_minus) / self.parabolic_renorm(1 / z)

    def derivative_at_zero(self, im: float = 4.0, n: int = 64, end: str = "top") -> complex:
        """Mean of ``R(z)/z`` on the circle ``|z| = exp(-2 pi im)``."""
        r = math.exp(-2 * math.pi * im)
        f = self.parabolic_renorm if end == "top" else self.bottom_renorm
        zs = r * np.exp(2j * math.pi * (np.arange(n) + 0.5) / n)
        return complex(np.mean([f(z) / z for z in zs]))

    def critical_points(self, im_range=(-3.0, 3.0), n_re: int = 16, n_im: int = 49,
                        n_seeds: int = 6, tol: float = 1e-11) -> list[CriticalPoint]:
        """Critical points of ``H`` in a fundamental strip.

        They are the ``w`` whose image ``chi(w)`` hits the critical point
        ``-1`` within ``q`` steps of ``h``.  A coarse grid of
        ``|h^j(chi(w)) + 1|`` supplies seeds that are refined by Newton.
        """
        coords, h = self.coords, self.germ

        def g(w, j):
            z = coords.chi(w)
            for _ in range(j):
                z = h(z)
            return z + 1

        found: list[CriticalPoint] = []
        grid = [complex(re, im)
                for im in np.linspace(im_range[0], im_range[1], n_im)
                for re in (np.arange(n_re) + 0.5) / n_re]
        for j in range(h.q):
            scored = []
            for w in grid:
                try:
                    val = abs(g(w, j))
                except (ArithmeticError, NonConvergenceError, OverflowError):
                    continue
                if math.isfinite(val):
                    scored.append((val, w))
            scored.sort(key=lambda t: t[0])
            for _, w in scored[:n_seeds]:
                w = self._newton_critical(g, w, j, tol)
                if w is None:
                    continue
                w = complex(w.real % 1.0, w.imag)
                if any(abs(w - c.w) < 1e-7 for c in found):
                    continue
                try:
                    val = self.horn_map(w)
                except (NotInBasinError, NonConvergenceError):
                    continue
                found.append(CriticalPoint(w, Exp(w), Exp(val), j, self.local_degree(w)))
        found.sort(key=lambda c: -c.w.imag)
        return found

    @staticmethod
    def _newton_critical(g, w, j, tol):
        try:
            for _ in range(50):
                gv = g(w, j)
                if abs(gv) < tol:
                    return w
                dg = (g(w + 1e-6, j) - g(w - 1e-6, j)) / 2e-6
                step = gv / dg
                if abs(step) > 0.25:
                    step *= 0.25 / abs(step)
                w -= step
        except (ArithmeticError, NonConvergenceError, OverflowError, ValueError):
            return None
        return None

    def local_degree(self, w: complex, radius: float = 1e-3, n: int = 256) -> int:
        centre = self.horn_map(w)
        ring = [self.horn_map(w + radius * cmath.exp(2j * math.pi * k / n)) - centre
                for k in range(n)]
        return winding_number(ring)

    # -- outputs --------------------------------------------------------------

    def summary(self) -> dict:
        def pair(x):
            return None if x is None else [x.real, x.imag]
        deriv = self.derivative_at_zero() if self.normalized else None
        return {
            "germ": self.germ.descriptor(),
            "zeta_plus_target": self.zeta_target,
            "zeta_plus_fit": pair(self.zeta_plus),
            "zeta_minus_fit": pair(self.zeta_minus),
            "eta": self.eta,
            "derivative_at_zero": pair(deriv),
        }

    def write_samples_csv(self, path, ws) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["re_w", "im_w", "re_H", "im_H"])
            for w in ws:
                hw = self.horn_map(w)
                out.writerow([repr(w.real), repr(w.imag), repr(hw.real), repr(hw.imag)])

    def write_summary_json(self, path) -> dict:
        data = self.summary()
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return data


def build_sampler(germ: UnicriticalGerm, tol: float = 1e-10, normalize: bool = True) -> HornMapSampler:
    sampler = HornMapSampler(ExtendedCoordinates(germ, tol))
    if normalize:
        sampler.normalize_zeta()
    return sampler
