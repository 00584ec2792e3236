"""Sector arithmetic, the T map, valley-type streams and renormalization towers.

A stream is a finite prefix of an infinite modified continued fraction.
Every verdict about it is qualified by a horizon: ``is_valley_type``
only inspects windows starting at positions ``1..horizon``.

Tower construction.  Given ``x = mu_stream(0)`` the head of each level is
cut just before the first entry ``a > N`` of the current window, so that
the residual angle ``alpha`` begins with that large entry and satisfies
``|alpha| <= 1/(a - 1) <= 1/N``.  The next level continues after the large
entry with its first sign flipped, and its value is ``T(alpha) + a``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .mcf import Mcf, PoleError, conjugate, eval_mu, mobius_of, signature, split

__all__ = [
    "PLUS",
    "MINUS",
    "AngleSector",
    "McfStream",
    "ValleyParams",
    "TowerLevel",
    "t_map",
    "sector_side",
    "alpha_split",
    "invert_mu",
    "is_valley_type",
    "vt_step",
    "build_tower",
    "tower_to_json",
    "synthetic_stream",
    "periodic_stream",
]

PLUS = 1
MINUS = -1


def _side(side) -> int:
    if side in (PLUS, "plus", "+"):
        return PLUS
    if side in (MINUS, "minus", "-"):
        return MINUS
    raise ValueError(f"unknown sector side {side!r}")


@dataclass(frozen=True)
class AngleSector:
    """``A_r^+ = {|alpha| < r, |arg alpha| < pi/4}`` and ``A_r^- = -A_r^+``."""

    r: float
    side: int = PLUS

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("sector radius must be positive")
        object.__setattr__(self, "side", _side(self.side))

    def __contains__(self, alpha) -> bool:
        alpha = complex(alpha) * self.side
        if alpha == 0 or not abs(alpha) < self.r:
            return False
        return abs(cmath.phase(alpha)) < math.pi / 4

    @staticmethod
    def union_contains(r: float, alpha) -> bool:
        return alpha in AngleSector(r, PLUS) or alpha in AngleSector(r, MINUS)


def sector_side(alpha, r: float = 0.5) -> int:
    """``PLUS`` or ``MINUS`` for a point of ``A_r``; ``ValueError`` otherwise."""
    if alpha in AngleSector(r, PLUS):
        return PLUS
    if alpha in AngleSector(r, MINUS):
        return MINUS
    raise ValueError(f"alpha={alpha} is not in A_{r}")


def t_map(alpha, side=None, r: float = 0.5):
    """``T(alpha) = -1/alpha`` on the plus sector and ``1/alpha`` on the minus sector.

    Exact for ``Fraction`` input.
    """
    if alpha == 0:
        raise ZeroDivisionError("T is undefined at alpha = 0")
    actual = sector_side(alpha, r)
    if side is not None and _side(side) != actual:
        raise ValueError(f"alpha={alpha} is not in the {side} sector")
    return -actual / alpha if isinstance(alpha, Fraction) else -actual / complex(alpha)


def alpha_split(omega: Mcf, m: int, alpha):
    """Residual ``alpha_m`` with ``mu_omega(alpha) = mu_{omega[:m]}(alpha_m)``.

    ``alpha_m = eps_{m+1} E(head) / (a_{m+1} + mu_{tail}(E(omega) E(tail) alpha))``
    where ``head = omega[:m]`` and ``tail = omega[m+1:]``.
    """
    if not 0 <= m < len(omega):
        raise IndexError(f"split index {m} outside 0..{len(omega) - 1}")
    head, rest = split(omega, m)
    (a, eps), tail = rest[0], rest[1:]
    if isinstance(alpha, (int, Fraction)):
        alpha = Fraction(alpha)
    inner = eval_mu(tail, signature(omega) * signature(tail) * alpha)
    den = a + inner
    if den == 0:
        raise PoleError("alpha_split hits a pole")
    return eps * signature(head) / den


def invert_mu(omega: Mcf, x):
    """``mu_omega^{-1}(x)`` through the inverse integer matrix (exact for rationals)."""
    mat = mobius_of(omega)
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
    num = mat.br * x - mat.tr
    den = -mat.bl * x + mat.tl
    if den == 0:
        raise PoleError(f"mu_{omega}^-1 has a pole at {x}")
    return num / den


@dataclass(frozen=True)
class McfStream:
    """Finite prefix ``(a_j, eps_j)`` of an infinite continued fraction."""

    entries: tuple[tuple[int, int], ...]
    provenance: str = "synthetic"

    def __post_init__(self):
        ents = tuple((int(a), int(e)) for a, e in self.entries)
        for a, e in ents:
            if a < 2 or e not in (-1, 1):
                raise ValueError(f"invalid stream entry ({a}, {e})")
        object.__setattr__(self, "entries", ents)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def a(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.entries)

    def prefix(self, n: int | None = None) -> Mcf:
        return Mcf(self.entries[:n])

    def value(self) -> Fraction:
        """``mu`` of the whole prefix at 0, an exact rational approximant."""
        return eval_mu(self.prefix(), Fraction(0))


def synthetic_stream(big: Sequence[int] | int, small: int, length: int, period: int,
                     rng: np.random.Generator | None = None, provenance: str = "synthetic") -> McfStream:
    """Stream with a large entry at every ``period``-th position.

    ``big`` is an entry or a pool sampled per large slot; the others equal
    ``small``.  Signs are random when ``rng`` is given, else all ``+1``.
    """
    entries = []
    for j in range(length):
        if j % period == 0:
            if isinstance(big, int):
                a = big
            else:
                a = int(rng.choice(big)) if rng is not None else int(big[0])
        else:
            a = small
        e = int(rng.choice((-1, 1))) if rng is not None else 1
        entries.append((a, e))
    return McfStream(tuple(entries), provenance)


def periodic_stream(pattern: Iterable[int], length: int, signs: Iterable[int] | None = None,
                    provenance: str = "synthetic") -> McfStream:
    pattern = list(pattern)
    signs = list(signs) if signs is not None else [1] * len(pattern)
    return McfStream(tuple((pattern[j % len(pattern)], signs[j % len(signs)])
                           for j in range(length)), provenance)


@dataclass(frozen=True)
class ValleyParams:
    N: int
    M: int
    horizon: int

    def __post_init__(self):
        if self.N < 0 or self.M < 0 or self.horizon < 1:
            raise ValueError("need N >= 0, M >= 0 and horizon >= 1")


def is_valley_type(x: McfStream, params: ValleyParams) -> bool:
    """Every window ``a_j..a_{j+M}`` with ``1 <= j <= horizon`` has an entry ``> N``."""
    need = params.horizon + params.M
    if len(x) < need:
        raise ValueError(f"prefix of length {len(x)} is shorter than horizon + M = {need}")
    a = x.a
    for j in range(params.horizon):
        if not any(a[k] > params.N for k in range(j, j + params.M + 1)):
            return False
    return True


def vt_step(x: McfStream, m: int) -> McfStream:
    """Stream of ``T(mu_{x[:m]}^{-1}(x)) + a_{m+1}``.

    This is ``a_{m+2}, a_{m+3}, ...`` with the sign of its first entry
    flipped.  At least two entries must remain.
    """
    if not 0 <= m < len(x) - 2:
        raise ValueError(f"vt_step needs 0 <= m < {len(x) - 2}, got m={m}")
    tail = conjugate(Mcf(x.entries[m + 1:]))
    return McfStream(tail.entries, x.provenance)


@dataclass(frozen=True)
class TowerLevel:
    """One level: head, exact residual and the stream position of the cut."""

    head: Mcf
    alpha: Fraction
    big_entry: int
    window_index: int
    x: Fraction = field(repr=False)

    @property
    def alpha_bound(self) -> float:
        return float(abs(self.alpha))

    def as_dict(self) -> dict:
        return {
            "head": str(self.head),
            "alpha_bound": self.alpha_bound,
            "window_index": self.window_index,
        }


def build_tower(x: McfStream, params: ValleyParams, depth: int) -> list[TowerLevel]:
    """Renormalization tower of an ``(N, M)`` valley-type stream.

    Each level checks exactly that ``x_i = mu_{head_i}(alpha_i)`` and that
    ``x_{i+1} = T(alpha_i) + a`` for the large entry ``a`` at the cut.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    entries = x.entries
    N, M = params.N, params.M
    levels: list[TowerLevel] = []
    pos = 0
    first_sign_flip = False
    for _ in range(depth):
        window = entries[pos:pos + M + 1]
        if len(window) < M + 1 or pos + M + 1 >= len(entries):
            raise ValueError(f"horizon exhausted at stream position {pos}")
        cut = next((k for k, (a, _) in enumerate(window) if a > N), None)
        if cut is None:
            raise ValueError(f"window at position {pos} has no entry > {N}: not valley-type")
        current = list(entries[pos:])
        if first_sign_flip:
            a0, e0 = current[0]
            current[0] = (a0, -e0)
        stream = Mcf(tuple(current))
        head, tail = split(stream, cut)
        x_val = eval_mu(stream, Fraction(0))
        alpha = signature(head) * eval_mu(tail, Fraction(0))
        if eval_mu(head, alpha) != x_val:
            raise ArithmeticError("tower level does not reconstruct the stream value")
        big = tail[0][0]
        levels.append(TowerLevel(head, alpha, big, pos + cut, x_val))
        if levels[:-1]:
            prev = levels[-2]
            if t_map(prev.alpha) + prev.big_entry != x_val:
                raise ArithmeticError("T relation between levels failed")
        pos = pos + cut + 1
        first_sign_flip = True
    return levels


def tower_to_json(levels: Sequence[TowerLevel]) -> str:
    return json.dumps([lv.as_dict() for lv in levels], indent=2)
