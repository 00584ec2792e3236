"""Perturbed dynamics: Lavaurs maps, gate transits and fiber renormalization.

Three independent numerical experiments live here.

* Lavaurs maps ``L_delta = chi o (rho + delta)`` built from the extended
  coordinates of the parabolic germ, compared with long iterates
  ``h_k^{kq}`` of the perturbed germs with ``alpha_k = 1/(k - delta)``.
* Gate transits: orbits of ``h_alpha`` leaving the repelling petal are
  followed around to the attracting petal and back out through the gate;
  the number of ``q``-blocks is compared with ``(Re 1/4alpha, Re 7/4alpha)``.
* Fiber renormalization in the regime where 0 attracts for ``h_alpha^q``:
  a Koenigs linearizer at 0 and a Poincare function at the split-off
  repelling fixed point give coordinates conjugating ``h^q`` to ``w -> w+1``,
  whose composition is the perturbed transition map.

Gate thresholds use the unperturbed petal charts with an extra
``Re 1/(4 alpha)`` band, a leading-order transport of the entering and
exiting conditions.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import EscapeError, NonConvergenceError, NotInBasinError, NotInPetalError
from .fatou import parabolic_data
from .germ import UnicriticalGerm
from .horn import ESCAPE_RADIUS, Exp, Exp_inverse, ExtendedCoordinates, build_sampler
from .mcf import Mcf, conjugate, signature
from .series import TruncatedSeries
from .valley import PLUS, AngleSector, build_tower, invert_mu, sector_side, t_map

__all__ = [
    "LavaursMap",
    "lavaurs_map",
    "lavaurs_test_points",
    "lavaurs_experiment",
    "write_ladder_csv",
    "GateTransit",
    "gate_window",
    "gate_start_points",
    "gate_transit",
    "conjugate_symmetry",
    "PerturbedCharts",
    "FiberRenormalization",
    "fiber_renorm_sample",
    "SkewStep",
    "skew_step",
    "skew_tower",
    "write_jsonl",
]

TWO_PI_I = 2j * math.pi


def _pair(x) -> list[float] | None:
    if x is None:
        return None
    x = complex(x)
    return [x.real, x.imag]


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Lavaurs maps


class LavaursMap:
    """``L_delta`` for a parabolic germ.

    For ``q > 1`` the landing index ``i`` of ``z`` in petal 0 need not be a
    multiple of ``q``.  Writing ``r = i mod q``, the value is
    ``h^{(q-r) mod q}(chi(phi(h^i z) - ceil(i/q) + delta))``, which reduces to
    ``chi(rho(z) + delta)`` when ``r = 0`` and commutes with ``h^q``.
    """

    def __init__(self, coords: ExtendedCoordinates, delta: complex = 0):
        self.coords = coords
        self.delta = complex(delta)

    @property
    def germ(self) -> UnicriticalGerm:
        return self.coords.germ

    def __call__(self, z: complex) -> complex:
        c = self.coords
        q = c.q
        zi, i = c.landing(z)
        r = i % q
        w = c.att.raw(zi) + c.c0 - (-(-i // q)) + self.delta
        out = c.chi(w)
        for _ in range((q - r) % q):
            out = c.germ(out)
        if not math.isfinite(abs(out)):
            raise EscapeError(f"L_delta({z}) escaped")
        return out

    def shifted(self, k: int) -> "LavaursMap":
        return LavaursMap(self.coords, self.delta + k)


def lavaurs_map(coords: ExtendedCoordinates, delta: complex, z: complex) -> complex:
    return LavaursMap(coords, delta)(z)


def lavaurs_test_points(coords: ExtendedCoordinates, n: int = 10, radius: float = 1.5,
                        delta: complex = 0) -> list[complex]:
    """Points of the basin with moderate ``|L_delta|`` and well-defined ``rho``.

    Candidates are preimages under the attracting coordinate of a grid of
    ``w`` values a few units before the critical value.
    """
    att = coords.att.with_constant(coords.c0)
    pts: list[complex] = []
    for x in (-3.0, -2.5, -2.0, -1.5):
        for y in (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5):
            w = complex(x, y)
            try:
                z = att.inverse(w)
                if abs(coords.rho(z) - w) > 1e-6:
                    continue
                if not abs(coords.chi(w + delta)) < radius:
                    continue
            except (ArithmeticError, NonConvergenceError, NotInBasinError, ValueError):
                continue
            pts.append(z)
            if len(pts) == n:
                return pts
    if not pts:
        raise NonConvergenceError("no Lavaurs test points found", germ=repr(coords.germ))
    return pts


def lavaurs_experiment(d: int, omega: Mcf | str, delta: complex, ks, points=None,
                       coords: ExtendedCoordinates | None = None, tol: float = 1e-10) -> list[dict]:
    """Sup error of ``h_k^{kq}`` against ``L_delta`` for each ``k``.

    ``alpha_k = 1/(k - delta)`` (exact when ``delta`` is an integer) must lie
    in the plus sector of ``A_{1/2}``.
    """
    if isinstance(omega, str):
        omega = Mcf.from_string(omega)
    if coords is None:
        coords = build_sampler(UnicriticalGerm(d, omega), tol).coords
    lav = LavaursMap(coords, delta)
    if points is None:
        points = lavaurs_test_points(coords, delta=delta)
    targets = [lav(z) for z in points]
    rows = []
    for k in ks:
        if complex(delta).imag == 0 and float(complex(delta).real).is_integer():
            alpha = Fraction(1, int(k) - int(complex(delta).real))
        else:
            alpha = 1 / (k - complex(delta))
        if alpha not in AngleSector(0.5, PLUS):
            raise ValueError(f"alpha_k = {alpha} is not in the plus sector")
        hk = UnicriticalGerm(d, omega, alpha)
        n = int(k) * hk.q
        errs = []
        for z, target in zip(points, targets):
            zk, _, escaped = hk.iterate(z, n, ESCAPE_RADIUS)
            if escaped:
                raise EscapeError(f"orbit of {z} escaped under h_k for k={k}")
            errs.append(abs(zk - target))
        rows.append({"k": int(k), "alpha": _pair(complex(alpha)), "sup_error": max(errs),
                     "mean_error": float(np.mean(errs)), "n_points": len(errs)})
    return rows


def write_ladder_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "re_alpha", "im_alpha", "sup_error", "mean_error"])
        for r in rows:
            out.writerow([r["k"], repr(r["alpha"][0]), repr(r["alpha"][1]),
                          repr(r["sup_error"]), repr(r["mean_error"])])


# ---------------------------------------------------------------------------
# gate transit


@dataclass(frozen=True)
class GateTransit:
    m: int
    k: int
    steps: int
    window: tuple[float, float]

    @property
    def in_window(self) -> bool:
        return self.window[0] < self.m < self.window[1]


def gate_window(alpha) -> tuple[float, float]:
    inv = 1 / complex(alpha)
    return (inv.real / 4, 7 * inv.real / 4)


def _band(alpha) -> float:
    return (1 / (4 * complex(alpha))).real


def _exiting(rep, z, band) -> bool:
    return rep.contains(z) and rep.W(z).real > -rep.margin - band


def _entering(att, z, band) -> bool:
    return att.contains(z) and att.W(z).real < att.margin + band


def gate_start_points(coords: ExtendedCoordinates, alpha, n: int = 4,
                      heights=(2.0, 3.0), offsets=(-3.0, -6.0, -9.0)) -> list[complex]:
    """Petal-exiting points ``chi(w)`` on the upper end of the strip."""
    band = _band(alpha)
    rep = coords.rep.petal
    pts = []
    for y in heights:
        for x in offsets:
            z = coords.chi(complex(x, y))
            if math.isfinite(abs(z)) and _exiting(rep, z, band):
                pts.append(z)
                if len(pts) == n:
                    return pts
    return pts


def gate_transit(d: int, omega: Mcf | str, alpha, z_start: complex,
                 coords: ExtendedCoordinates | None = None, budget: int = 1_000_000) -> GateTransit:
    """Count the steps from a petal-exiting point through the gate and out again.

    The orbit of ``h_alpha`` is followed until it is petal-entering in the
    unperturbed attracting chart, then until it is petal-exiting again.  A
    minus-sector ``alpha`` is reduced to the plus sector by conjugation.
    """
    if isinstance(omega, str):
        omega = Mcf.from_string(omega)
    if sector_side(alpha) != PLUS:
        star = conjugate_symmetry(UnicriticalGerm(d, omega, alpha))
        return gate_transit(d, star.omega, star.alpha, complex(z_start).conjugate(), None, budget)
    if coords is None:
        coords = ExtendedCoordinates(UnicriticalGerm(d, omega))
    h = UnicriticalGerm(d, omega, alpha)
    band = _band(alpha)
    att, rep = coords.att.petal, coords.rep.petal
    z = complex(z_start)
    if not _exiting(rep, z, band):
        raise NotInPetalError(f"z={z} is not petal-exiting")
    entered = False
    for n in range(1, budget + 1):
        z = h(z)
        if not abs(z) < ESCAPE_RADIUS:
            raise EscapeError(f"transit orbit escaped after {n} steps")
        if not entered:
            entered = _entering(att, z, band)
        elif _exiting(rep, z, band):
            return GateTransit(n // h.q, n % h.q, n, gate_window(alpha))
    raise NonConvergenceError("gate transit budget exceeded", budget=budget)


# ---------------------------------------------------------------------------
# conjugate symmetry


def conjugate_symmetry(germ: UnicriticalGerm) -> UnicriticalGerm:
    """Germ ``h* = conj o h o conj``, written as ``(d, omega*, -conj(alpha))``.

    For real ``alpha`` this is ``-alpha``; the conjugate is what keeps the
    multiplier identity ``(h*)'(0) = conj(h'(0))`` for complex ``alpha``.
    """
    alpha = germ.alpha
    new_alpha = -alpha if isinstance(alpha, Fraction) else -complex(alpha).conjugate()
    return UnicriticalGerm(germ.d, conjugate(germ.omega), new_alpha)


# ---------------------------------------------------------------------------
# perturbed linearizing coordinates


def _point_series(h: UnicriticalGerm, z0: complex, order: int) -> TruncatedSeries:
    """``h(z0 + u) - h(z0)`` as a series in ``u``."""
    c = np.zeros(order + 1, dtype=complex)
    for k in range(1, min(h.d, order) + 1):
        c[k] = h.lam * comb(h.d, k) * (z0 + 1) ** (h.d - k) / h.d
    return TruncatedSeries(c, order)


def _fold_series_at(h: UnicriticalGerm, z0: complex, order: int) -> TruncatedSeries:
    acc = TruncatedSeries.identity(order)
    z = z0
    for _ in range(h.q):
        acc = _point_series(h, z, order).compose(acc)
        z = h(z)
    return acc


def _koenigs_series(G: TruncatedSeries, lam: complex, order: int) -> TruncatedSeries:
    """``kappa`` with ``kappa o G = lam kappa``, ``kappa'(0) = 1``."""
    k = np.zeros(order + 1, dtype=complex)
    k[1] = 1
    for n in range(2, order + 1):
        c = TruncatedSeries(k, order).compose(G)[n] - lam * k[n]
        k[n] = -c / (lam ** n - lam)
    return TruncatedSeries(k, order)


def _poincare_series(G: TruncatedSeries, lam: complex, order: int) -> TruncatedSeries:
    """``psi`` with ``psi(lam t) = G(psi(t))``, ``psi'(0) = 1``."""
    p = np.zeros(order + 1, dtype=complex)
    p[1] = 1
    for n in range(2, order + 1):
        c = G.compose(TruncatedSeries(p, order))[n] - lam * p[n]
        p[n] = c / (lam ** n - lam)
    return TruncatedSeries(p, order)


def _validated_radius(residual, start: float, floor: float, thresh: float) -> float:
    r = start
    while r > floor:
        if all(residual(r * cmath.exp(2j * math.pi * (j + 0.3) / 8)) < thresh for j in range(8)):
            return r
        r *= 0.7
    raise NonConvergenceError("no radius of validity for a linearizing series", floor=floor)


class PerturbedCharts:
    """Linearizing coordinates of ``F = h_alpha^q`` when 0 attracts.

    ``kappa`` linearizes ``F`` at 0 with multiplier ``lambda_q``; ``Psi``
    is the Poincare function at the repelling fixed point ``sigma`` of
    ``F`` lying in the gate.  ``phi_att = log kappa / log lambda_q`` and
    ``chi(w) = Psi(lambda_sigma^{w - c1})`` both conjugate ``F`` to ``w + 1``.
    """

    def __init__(self, germ: UnicriticalGerm, order: int = 40, escape: float = ESCAPE_RADIUS):
        if germ.is_parabolic:
            raise ValueError("perturbed charts need alpha != 0")
        self.germ = germ
        self.q = germ.q
        self.order = order
        self.escape = escape
        self.eps = self.q * complex(germ.mu) - germ.p
        self.log_lambda_q = TWO_PI_I * self.eps
        self.lambda_q = cmath.exp(self.log_lambda_q)
        if not abs(self.lambda_q) < 1:
            raise ValueError(f"|lambda_q| = {abs(self.lambda_q):.6f} >= 1: 0 does not attract")
        self.kappa_series = _koenigs_series(_fold_series_at(germ, 0j, order), self.lambda_q, order)
        self.kappa_radius = _validated_radius(self._kappa_residual, 0.25, 1e-6, 1e-13)
        self.sigma = self._find_sigma()
        G = _fold_series_at(germ, self.sigma, order)
        self.lambda_sigma = G[1]
        if not abs(self.lambda_sigma) > 1:
            raise NonConvergenceError("split fixed point is not repelling", sigma=str(self.sigma))
        self.log_lambda_sigma = cmath.log(self.lambda_sigma)
        self.psi_series = _poincare_series(G, self.lambda_sigma, order)
        self._dpsi = self.psi_series.derivative()
        self.psi_radius = _validated_radius(self._psi_residual, 0.25, 1e-8, 1e-13)
        self.c1 = 0j

    # periods of the two logarithmic coordinates
    @property
    def attracting_period(self) -> complex:
        return 1 / self.eps

    @property
    def repelling_period(self) -> complex:
        return TWO_PI_I / self.log_lambda_sigma

    def _kappa_residual(self, z):
        k = self.kappa_series
        return abs(k(self.germ.fold(z)) - self.lambda_q * k(z)) / abs(k(z))

    def _psi_residual(self, t):
        p, s = self.psi_series, self.sigma
        return abs(s + p(self.lambda_sigma * t) - self.germ.fold(s + p(t))) / abs(t)

    def _find_sigma(self) -> complex:
        h, q = self.germ, self.q
        base = parabolic_data(UnicriticalGerm(h.d, h.omega))
        a = base.series.a
        gate_dir = base.theta0 + math.pi / (2 * q)
        lead = (-TWO_PI_I * self.eps / a)
        roots = [abs(lead) ** (1 / q) * cmath.exp(1j * (cmath.phase(lead) + 2 * math.pi * j) / q)
                 for j in range(q)]
        seed = min(roots, key=lambda r: abs(math.remainder(cmath.phase(r) - gate_dir, 2 * math.pi)))
        z = seed
        for _ in range(60):
            f, df = h.fold_deriv(z)
            step = (f - z) / (df - 1)
            z -= step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                break
        f, _ = h.fold_deriv(z)
        if abs(f - z) > 1e-12 or abs(z) < 0.1 * abs(seed):
            raise NonConvergenceError("fixed point refinement failed", seed=str(seed), z=str(z))
        return z

    # -- attracting side ------------------------------------------------------

    def kappa(self, z: complex, extra: int = 0) -> tuple[complex, int]:
        """``(kappa_series(F^n z), n)`` with ``F^n z`` inside the disc of validity."""
        F = self.germ.fold
        z = complex(z)
        n = 0
        while not abs(z) < self.kappa_radius:
            z = F(z)
            n += 1
            if not abs(z) < self.escape:
                raise EscapeError("orbit escaped before reaching the Koenigs disc")
            if n > 10_000_000:
                raise NonConvergenceError("Koenigs budget exceeded")
        for _ in range(extra):
            z = F(z)
            n += 1
        return self.kappa_series(z), n

    def kappa_value(self, z: complex) -> complex:
        k, n = self.kappa(z)
        return k / self.lambda_q ** n

    def phi_att(self, z: complex, extra: int = 0) -> complex:
        """``log kappa / log lambda_q`` on the principal branch at the deep point."""
        k, n = self.kappa(z, extra)
        return cmath.log(k) / self.log_lambda_q - n

    def linearizer_residual(self, z: complex) -> float:
        """Relative ``|kappa(F z) - lambda_q kappa(z)|`` through the full evaluation."""
        k0 = self.kappa_value(z)
        k1, n = self.kappa(self.germ.fold(z), extra=1)
        return abs(k1 / self.lambda_q ** n - self.lambda_q * k0) / abs(k0)

    # -- repelling side -------------------------------------------------------

    def Psi(self, t: complex, extra: int = 0) -> complex:
        n = 0
        t = complex(t)
        while not abs(t) < self.psi_radius:
            t /= self.lambda_sigma
            n += 1
            if n > 100_000:
                raise NonConvergenceError("Poincare budget exceeded")
        for _ in range(extra):
            t /= self.lambda_sigma
            n += 1
        z = self.sigma + self.psi_series(t)
        for _ in range(n):
            z = self.germ.fold(z)
            if not abs(z) < self.escape:
                return complex(math.inf, math.inf)
        return z

    def chi(self, w: complex, extra: int = 0) -> complex:
        return self.Psi(cmath.exp((complex(w) - self.c1) * self.log_lambda_sigma), extra)

    def chi_inverse(self, z: complex, budget: int = 100_000) -> complex:
        """A value ``w`` with ``chi(w) = z``, found by pulling ``z`` back to ``sigma``.

        Defined modulo ``1`` and the repelling period.
        """
        z = complex(z)
        n = 0
        while not abs(z - self.sigma) < 0.5 * self.psi_radius:
            z = self.germ.fold_inverse(z)
            n += 1
            if n > budget:
                raise NonConvergenceError("backward orbit did not reach sigma")
        u = z - self.sigma
        t = u
        for _ in range(60):
            step = (self.psi_series(t) - u) / self._dpsi(t)
            t -= step
            if abs(step) < 1e-16 * abs(t):
                break
        return self.c1 + cmath.log(t) / self.log_lambda_sigma + n

    def reduce(self, w: complex) -> complex:
        """Representative of ``w`` modulo ``1`` and the repelling period."""
        per = self.repelling_period
        w = w - round(w.imag / per.imag) * per
        return w - round(w.real)

    def descriptor(self) -> dict:
        return {
            "germ": self.germ.descriptor(),
            "lambda_q": _pair(self.lambda_q),
            "sigma": _pair(self.sigma),
            "lambda_sigma": _pair(self.lambda_sigma),
            "kappa_radius": self.kappa_radius,
            "psi_radius": self.psi_radius,
            "c1": _pair(self.c1),
            "order": self.order,
        }


class FiberRenormalization:
    """Perturbed transition map ``T = rho_alpha o chi_alpha`` and its renormalization.

    ``rho_alpha`` is ``phi_att`` shifted to vanish at the critical value,
    on the branch (mod ``1/eps``) closest to the unperturbed ``rho``;
    ``chi_alpha`` is normalized like the unperturbed horn map, so that
    ``T(w) - w`` averages to ``(1 - E(omega))/2`` on ``Im w = norm_height``.
    The renormalized map is ``Exp o (T - 1/alpha_eff) o Exp^{-1}`` where
    ``1/alpha_eff = 1/eps`` is the gate translation.
    """

    def __init__(self, charts: PerturbedCharts, base: ExtendedCoordinates):
        self.charts = charts
        self.base = base
        self.germ = charts.germ
        self._cv = charts.phi_att(self.germ.critical_value)
        self.zeta_target = (1 - signature(self.germ.omega)) // 2
        self.zeta_fit: complex | None = None
        self.zeta_spread: float | None = None

    @property
    def inverse_alpha_eff(self) -> complex:
        return self.charts.attracting_period

    def rho(self, z: complex, extra: int = 0) -> complex:
        v = self.charts.phi_att(z, extra) - self._cv
        try:
            ref = self.base.rho(z)
        except (NotInBasinError, NonConvergenceError):
            return v
        per = self.charts.attracting_period
        j = round(((ref - v) / per).real)
        return min((v + (j + s) * per for s in (-1, 0, 1)), key=lambda x: abs(x - ref))

    def transition(self, w: complex) -> complex:
        z = self.charts.chi(w)
        if not math.isfinite(abs(z)):
            raise EscapeError(f"chi_alpha({w}) escaped")
        return self.rho(z)

    __call__ = transition

    def normalize(self, height: float = 3.0, n: int = 32, rounds: int = 4) -> "FiberRenormalization":
        """Anchor ``chi_alpha`` on the unperturbed repelling chart, then fit ``zeta``."""
        w0 = complex(0.25, height)
        z0 = self.base.chi(w0)
        self.charts.c1 = 0j
        self.charts.c1 = w0 - self.charts.chi_inverse(z0)
        ws = np.arange(n) / n + 1j * height
        for _ in range(rounds):
            diffs = np.array([self.transition(w) - w for w in ws])
            shift = complex(diffs.mean()) - self.zeta_target
            self.charts.c1 += shift
            if abs(shift) < 1e-12:
                break
        diffs = np.array([self.transition(w) - w for w in ws])
        self.zeta_fit = complex(diffs.mean())
        self.zeta_spread = float(np.abs(diffs - self.zeta_fit).max())
        return self

    def periodicity_defect(self, ws) -> float:
        """``max |T(w+1) - T(w) - 1|`` with the shifted side evaluated on another path."""
        worst = 0.0
        for w in ws:
            z1 = self.charts.chi(w + 1, extra=1)
            shifted = self.rho(z1, extra=1)
            worst = max(worst, abs(shifted - self.transition(w) - 1))
        return worst

    def renorm(self, zeta: complex) -> complex:
        zeta = complex(zeta)
        if zeta == 0:
            return 0j
        return Exp(self.transition(Exp_inverse(zeta)) - self.inverse_alpha_eff)

    def derivative_angle(self, height: float = 4.0, n: int = 64) -> complex:
        """Fitted ``log R'(0) / (2 pi i)``, reduced mod 1.

        ``R(zeta)/zeta`` underflows for strongly attracting maps, so the
        fit is the mean of ``T(w) - w - 1/alpha_eff`` on a fundamental segment.
        """
        ws = np.arange(n) / n + 1j * height
        val = complex(np.mean([self.transition(w) - w for w in ws])) - self.inverse_alpha_eff
        return complex(val.real - math.floor(val.real), val.imag)

    def semiconjugacy_check(self, w1: complex, budget: int = 1_000_000) -> dict:
        """Follow ``h_alpha`` from ``chi_alpha(w1)`` through the gate and back.

        At the return point the repelling coordinate, computed independently
        from a backward orbit, must equal ``T(w1)`` plus the number of
        ``F``-steps, modulo 1 and the repelling period.
        """
        ch, h = self.charts, self.germ
        alpha = complex(h.alpha)
        band = _band(alpha)
        att, rep = self.base.att.petal, self.base.rep.petal
        z = ch.chi(w1)
        t1 = self.transition(w1)
        entered = False
        for n in range(1, budget + 1):
            z = h(z)
            if not abs(z) < ESCAPE_RADIUS:
                raise EscapeError("semiconjugacy orbit escaped")
            if not entered:
                entered = _entering(att, z, band)
            elif _exiting(rep, z, band) and n % h.q == 0:
                break
        else:
            raise NonConvergenceError("semiconjugacy budget exceeded")
        w_ret = ch.chi_inverse(z)
        mismatch = abs(ch.reduce(w_ret - t1 - n // h.q))
        predicted = ch.chi(t1 + n // h.q)
        window = gate_window(alpha)
        m = n // h.q
        return {
            "w": _pair(w1),
            "m": m,
            "k": n % h.q,
            "window": list(window),
            "in_window": window[0] < m < window[1],
            "coordinate_mismatch": mismatch,
            "orbit_distance": abs(predicted - z),
            "gate_offset": _pair(ch.reduce(-ch.repelling_period - self.inverse_alpha_eff)),
        }


NORMALIZATION_HEIGHTS = (3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
MAX_ZETA_SPREAD = 1e-5


def _normalized(charts: PerturbedCharts, base: ExtendedCoordinates,
                height: float | None) -> tuple[FiberRenormalization, float]:
    """Normalize at ``height``, or at the lowest tabulated height where ``T`` is a translation."""
    heights = NORMALIZATION_HEIGHTS if height is None else (float(height),)
    tried = {}
    for h in heights:
        fr = FiberRenormalization(charts, base)
        try:
            fr.normalize(h)
        except (NotInBasinError, NonConvergenceError) as exc:
            tried[h] = str(exc)
            continue
        if height is not None or fr.zeta_spread < MAX_ZETA_SPREAD:
            return fr, h
        tried[h] = f"spread {fr.zeta_spread:.2e}"
    raise NonConvergenceError("no height where the transition map is a translation", tried=tried)


def fiber_renorm_sample(d: int, omega: Mcf | str, alpha, ws=None, order: int = 40,
                        height: float | None = None, base: ExtendedCoordinates | None = None) -> dict:
    """Build the perturbed charts, normalize and sample the renormalized map.

    Without an explicit ``height`` the normalization height is the lowest of
    ``NORMALIZATION_HEIGHTS`` at which ``T(w) - w`` is constant to
    ``MAX_ZETA_SPREAD``; the upper end sits higher for ``q > 1``.
    """
    if isinstance(omega, str):
        omega = Mcf.from_string(omega)
    germ = UnicriticalGerm(d, omega, alpha)
    if alpha not in AngleSector(0.5, PLUS):
        raise ValueError(f"alpha={alpha} is not in the plus sector")
    charts = PerturbedCharts(germ, order)
    if base is None:
        base = build_sampler(UnicriticalGerm(d, omega)).coords
    fr, height = _normalized(charts, base, height)
    if ws is None:
        ws = np.arange(16) / 16 + 1j * height
    ws = [complex(w) for w in ws]
    period = fr.periodicity_defect(ws)
    samples = []
    for w in ws:
        tw = fr.transition(w)
        samples.append({"w": _pair(w), "T": _pair(tw), "R": _pair(fr.renorm(Exp(w)))})
    lam_explicit = germ.fold_deriv(0j)[1]
    semi = fr.semiconjugacy_check(complex(0.1, height))
    angle = fr.derivative_angle(height + 1)
    t_alpha = t_map(complex(alpha))
    gap = angle - t_alpha
    matches = abs(gap.imag) < 1e-6 and abs(gap.real - round(gap.real)) < 1e-6
    return {
        "germ": germ.descriptor(),
        "charts": charts.descriptor(),
        "height": height,
        "zeta_fit": _pair(fr.zeta_fit),
        "zeta_spread": fr.zeta_spread,
        "periodicity_defect": period,
        "periodic": period < 1e-5,
        "lambda_q_error": abs(lam_explicit - charts.lambda_q),
        "linearizer_residual": max(charts.linearizer_residual(charts.sigma * s) for s in (0.3, 0.5)),
        "derivative_angle": _pair(angle),
        "T_alpha": _pair(t_alpha),
        "derivative_matches_T": matches,
        "semiconjugacy": semi,
        "samples": samples,
        "_object": fr,
    }


# ---------------------------------------------------------------------------
# skew product


@dataclass
class SkewStep:
    x: Fraction | complex
    alpha: Fraction | complex
    new_angle: Fraction | complex
    omega: Mcf
    numeric: dict | None = None

    def as_dict(self) -> dict:
        def fmt(v):
            return str(v) if isinstance(v, Fraction) else _pair(v)
        out = {"omega": str(self.omega), "x": fmt(self.x), "alpha": fmt(self.alpha),
               "new_angle": fmt(self.new_angle)}
        if self.numeric is not None:
            out["numeric"] = {k: v for k, v in self.numeric.items() if not k.startswith("_")}
        return out


def skew_step(omega: Mcf | str, x=None, alpha=None, d: int = 2, numeric: bool = False) -> SkewStep:
    """One step ``(mu_omega(alpha), f) -> (T(alpha), R f)``.

    Give either the angle ``x`` (decomposed as ``mu_omega(alpha)``) or
    ``alpha`` itself.  The numeric map step runs only when requested and
    when 0 attracts for the perturbed germ; otherwise only the angle moves.
    """
    if isinstance(omega, str):
        omega = Mcf.from_string(omega)
    if (x is None) == (alpha is None):
        raise ValueError("give exactly one of x and alpha")
    if alpha is None:
        alpha = invert_mu(omega, x)
    else:
        from .mcf import eval_mu
        x = eval_mu(omega, alpha)
    if not AngleSector.union_contains(0.5, alpha):
        raise ValueError(f"alpha={alpha} is not in A_1/2: decomposition failed")
    new = t_map(alpha)
    info = None
    if numeric:
        germ = UnicriticalGerm(d, omega, alpha)
        eps = germ.q * complex(germ.mu) - germ.p
        if sector_side(alpha) == PLUS and eps.imag > 0:
            info = fiber_renorm_sample(d, omega, alpha)
        else:
            info = {"regime": "descriptor-only"}
    return SkewStep(x, alpha, new, omega, info)


def skew_tower(stream, params, depth: int) -> list[SkewStep]:
    """Angle-only skew product along the tower of a valley-type stream.

    Level ``i`` starts from the exact angle ``x_i``; the next angle is
    ``T(alpha_i)`` shifted by the large entry at the cut.
    """
    levels = build_tower(stream, params, depth)
    steps = []
    x = levels[0].x if levels else None
    for lv in levels:
        st = skew_step(lv.head, x=x)
        steps.append(st)
        x = st.new_angle + lv.big_entry
    return steps
