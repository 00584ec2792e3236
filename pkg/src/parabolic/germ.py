"""Rotated unicritical polynomials ``h = exp(2 pi i mu_omega(alpha)) * G_d``.

``G_d(z) = ((z + 1)^d - 1) / d`` fixes 0 with derivative 1 and has a single
critical point at -1 of local degree ``d``.  Rotating it by the rational
angle ``p/q = mu_omega(0)`` gives a germ with a non-degenerate parabolic
point of period ``q`` at the origin; ``alpha != 0`` perturbs the angle.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import cached_property
from math import comb

import numpy as np

from .mcf import Mcf, convergents, eval_mu
from .series import TruncatedSeries

__all__ = [
    "UnicriticalGerm",
    "DegenerateGermError",
    "InverseBranchError",
    "rotation",
]

_HORNER_MAX_DEGREE = 16


class DegenerateGermError(ValueError):
    """The q-fold iterate is not of the form z + a z^{q+1} + ... with a != 0."""


class InverseBranchError(ArithmeticError):
    """Newton inversion of the germ failed (no convergence or critical point)."""


def rotation(angle) -> complex:
    """``exp(2 pi i angle)``, reducing exact rationals into (-1/2, 1/2] first.

    The symmetric range makes ``rotation(-x)`` the exact conjugate of ``rotation(x)``.
    """
    if isinstance(angle, Fraction):
        frac = angle - math.floor(angle)
        if frac > Fraction(1, 2):
            frac -= 1
        if frac == 0:
            return 1 + 0j
        if frac == Fraction(1, 2):
            return -1 + 0j
        if frac == Fraction(1, 4):
            return 1j
        if frac == Fraction(-1, 4):
            return -1j
        t = 2 * math.pi * float(frac)
        return complex(math.cos(t), math.sin(t))
    return cmath.exp(2j * math.pi * complex(angle))


class UnicriticalGerm:
    """The map ``h(z) = lam * ((z+1)^d - 1)/d`` with ``lam = e^{2 pi i mu_omega(alpha)}``.

    ``alpha`` may be an exact rational (including 0) or a complex number.
    The germ is immutable; derived data is computed on first use.
    """

    def __init__(self, d: int, omega: Mcf | str = Mcf(), alpha=0):
        if int(d) != d or d < 2:
            raise ValueError("degree d must be an integer >= 2")
        if isinstance(omega, str):
            omega = Mcf.from_string(omega)
        self.d = int(d)
        self.omega = omega
        if isinstance(alpha, (int, Fraction)) and not isinstance(alpha, bool):
            alpha = Fraction(alpha)
        else:
            alpha = complex(alpha)
            if alpha.imag == 0 and alpha.real == 0:
                alpha = Fraction(0)
        self.alpha = alpha
        conv = convergents(omega)
        self.p = conv.p_at(conv.n)
        self.q = conv.q_at(conv.n)
        self.q_prev = conv.q_at(conv.n - 1)
        self.mu = eval_mu(omega, alpha)
        self.lam = rotation(self.mu)
        # coefficients of h in powers of z, index k -> z^k
        self.coeffs = np.array(
            [0j] + [self.lam * comb(self.d, k) / self.d for k in range(1, self.d + 1)]
        )
        self._horner = [complex(c) for c in self.coeffs[::-1]]

    def __repr__(self):
        return f"UnicriticalGerm(d={self.d}, omega='{self.omega}', alpha={self.alpha!s})"

    def __eq__(self, other):
        return (
            isinstance(other, UnicriticalGerm)
            and (self.d, self.omega, self.alpha) == (other.d, other.omega, other.alpha)
        )

    def __hash__(self):
        return hash((self.d, self.omega, self.alpha))

    @property
    def is_parabolic(self) -> bool:
        return self.alpha == 0

    @property
    def critical_point(self) -> complex:
        return -1 + 0j

    @property
    def critical_value(self) -> complex:
        return self.lam * (-1 / self.d)

    def descriptor(self) -> dict:
        a = complex(self.alpha)
        return {"d": self.d, "omega": str(self.omega), "alpha": [a.real, a.imag]}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "UnicriticalGerm":
        re_, im_ = desc.get("alpha", [0.0, 0.0])
        alpha = Fraction(0) if (re_, im_) == (0, 0) else complex(re_, im_)
        return cls(desc["d"], Mcf.from_string(desc.get("omega", "")), alpha)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, z: complex) -> complex:
        if self.d <= _HORNER_MAX_DEGREE:
            acc = 0j
            for c in self._horner:
                acc = acc * z + c
            return acc
        try:
            return self.lam * ((z + 1) ** self.d - 1) / self.d
        except OverflowError:
            return complex(math.inf, math.inf)

    def deriv(self, z: complex) -> complex:
        try:
            return self.lam * (z + 1) ** (self.d - 1)
        except OverflowError:
            return complex(math.inf, math.inf)

    def fold(self, z: complex) -> complex:
        """``h^q(z)``."""
        for _ in range(self.q):
            z = self(z)
        return z

    def fold_deriv(self, z: complex) -> tuple[complex, complex]:
        """``(h^q(z), (h^q)'(z))`` by the chain rule."""
        dz = 1 + 0j
        for _ in range(self.q):
            dz *= self.deriv(z)
            z = self(z)
        return z, dz

    def iterate(self, z0: complex, n: int, escape_radius: float = math.inf):
        """Apply ``h`` up to ``n`` times, stopping once ``|z| > escape_radius``.

        Returns ``(z, steps, escaped)``; the escape test runs after each map.
        """
        z = complex(z0)
        for i in range(n):
            z = self(z)
            if not abs(z) <= escape_radius:
                return z, i + 1, True
        return z, n, False

    def local_inverse(self, target: complex, guess: complex, tol: float = 1e-13,
                      max_iter: int = 80, min_deriv: float = 1e-6) -> complex:
        """Solve ``h(w) = target`` by damped Newton from ``guess``."""
        w = complex(guess)
        resid = self(w) - target
        scale = max(1.0, abs(target))
        for _ in range(max_iter):
            if abs(resid) < tol * scale:
                return w
            dh = self.deriv(w)
            if abs(dh) < min_deriv:
                raise InverseBranchError(f"derivative {abs(dh):.2e} too small near critical point at w={w}")
            step = resid / dh
            t = 1.0
            while True:
                cand = w - t * step
                r_new = self(cand) - target
                if abs(r_new) < abs(resid) or t < 1e-6:
                    break
                t *= 0.5
            w, resid = cand, r_new
        if abs(resid) < tol * scale * 10:
            return w
        raise InverseBranchError(f"Newton inversion did not converge (residual {abs(resid):.2e})")

    def fold_inverse(self, target: complex, tol: float = 1e-14) -> complex:
        """Branch of ``h^{-q}`` fixing 0, valid near the origin."""
        z = complex(target)
        lam_inv = 1 / self.lam
        for _ in range(self.q):
            z = self.local_inverse(z, z * lam_inv, tol=tol)
        return z

    # -- series -------------------------------------------------------------

    def series(self, order: int) -> TruncatedSeries:
        return TruncatedSeries(self.coeffs, order)

    def fold_series(self, order: int) -> TruncatedSeries:
        """Taylor series of ``h^q`` at 0 to the given order."""
        hs = self.series(order)
        acc = TruncatedSeries.identity(order)
        for _ in range(self.q):
            acc = hs.compose(acc)
        return acc

    @cached_property
    def _parabolic_series(self) -> tuple[TruncatedSeries, complex]:
        if not self.is_parabolic:
            raise ValueError("q_fold_series needs alpha = 0")
        q = self.q
        s = self.fold_series(q + 3)
        if abs(s[1] - 1) > 1e-10:
            raise DegenerateGermError(f"(h^q)'(0) = {s[1]} is not 1")
        for k in range(2, q + 1):
            if abs(s[k]) > 1e-10:
                raise DegenerateGermError(f"coefficient of z^{k} is {s[k]:.3e}, expected 0")
        a = s[q + 1]
        if abs(a) <= 1e-8:
            raise DegenerateGermError(f"leading coefficient a = {a:.3e} vanishes")
        return s, a

    def q_fold_series(self) -> tuple[TruncatedSeries, complex]:
        """Series of ``h^q`` to order ``q+2`` (plus a guard term) and its coefficient ``a``."""
        return self._parabolic_series

    @property
    def leading_coefficient(self) -> complex:
        return self._parabolic_series[1]

    def multiplier_q(self) -> complex:
        """``(h^q)'(0) = lam^q``."""
        return self.lam ** self.q
