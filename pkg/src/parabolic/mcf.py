"""Modified (signed) continued fractions and their Moebius maps.

A modified continued fraction of height ``n`` is a sequence of pairs
``(a_j, eps_j)`` with integers ``a_j >= 2`` and signs ``eps_j = +-1``.  It
addresses the rational number

    eps_1 / (a_1 + eps_2 / (a_2 + ... + eps_n / a_n))

and, more generally, the Moebius map

    mu(z) = (p_n + E z p_{n-1}) / (q_n + E z q_{n-1})

where ``p_j, q_j`` are the convergents and ``E = (-1)^n prod(eps_j)`` is the
signature.  Everything in this module is exact: integers are Python ints and
rationals are :class:`fractions.Fraction`, so nothing overflows.

Textual form: ``"(2:+)(3:-)"``; the empty fraction is ``""``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Union

__all__ = [
    "Mcf",
    "Convergents",
    "MoebiusMatrix",
    "PoleError",
    "convergents",
    "signature",
    "convergents_and_signature",
    "mobius_of",
    "eval_mu",
    "conjugate",
    "split",
    "expand_rational",
    "parse_rational",
    "format_rational",
    "random_mcf",
    "identity_report",
    "geometry_bound_defect",
]

Number = Union[Fraction, complex]

_ENTRY_RE = re.compile(r"\(\s*(\d+)\s*:\s*([+-])1?\s*\)")


class PoleError(ZeroDivisionError):
    """Raised when a Moebius map is evaluated at its pole."""


@dataclass(frozen=True)
class Mcf:
    """A finite modified continued fraction ``<(a_1:eps_1), ..., (a_n:eps_n)>``."""

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        entries = tuple((int(a), int(e)) for a, e in self.entries)
        for a, e in entries:
            if a < 2:
                raise ValueError(f"entry {a} must be an integer >= 2")
            if e not in (-1, 1):
                raise ValueError(f"sign {e} must be +1 or -1")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_string(cls, text: str) -> "Mcf":
        text = text.strip()
        if text in ("", "()", "∅", "empty"):
            return cls()
        pos = 0
        entries = []
        for m in _ENTRY_RE.finditer(text):
            if text[pos:m.start()].strip():
                raise ValueError(f"cannot parse continued fraction {text!r}")
            entries.append((int(m.group(1)), 1 if m.group(2) == "+" else -1))
            pos = m.end()
        if not entries or text[pos:].strip():
            raise ValueError(f"cannot parse continued fraction {text!r}")
        return cls(tuple(entries))

    def __str__(self) -> str:
        return "".join(f"({a}:{'+' if e > 0 else '-'})" for a, e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.entries)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Mcf(self.entries[item])
        return self.entries[item]

    @property
    def height(self) -> int:
        return len(self.entries)

    @property
    def a(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.entries)

    @property
    def eps(self) -> tuple[int, ...]:
        return tuple(e for _, e in self.entries)


@dataclass(frozen=True)
class Convergents:
    """Convergent tables ``p_j, q_j`` for ``j = -1 .. n``.

    The stored lists start at index ``-1``; use :meth:`p_at`/:meth:`q_at`
    to index from -1 directly.
    """

    p: tuple[int, ...]
    q: tuple[int, ...]

    def p_at(self, j: int) -> int:
        return self.p[j + 1]

    def q_at(self, j: int) -> int:
        return self.q[j + 1]

    @property
    def n(self) -> int:
        return len(self.p) - 2


def signature(omega: Mcf) -> int:
    sign = -1 if len(omega) % 2 else 1
    for e in omega.eps:
        sign *= e
    return sign


def convergents(omega: Mcf) -> Convergents:
    p = [1, 0]
    q = [0, 1]
    for a, e in omega:
        p.append(a * p[-1] + e * p[-2])
        q.append(a * q[-1] + e * q[-2])
    return Convergents(tuple(p), tuple(q))


def convergents_and_signature(omega: Mcf) -> tuple[Convergents, int]:
    return convergents(omega), signature(omega)


@dataclass(frozen=True)
class MoebiusMatrix:
    """Integer matrix ``[[tl, tr], [bl, br]]`` acting by ``z -> (tl z + tr) / (bl z + br)``."""

    tl: int
    tr: int
    bl: int
    br: int

    @classmethod
    def identity(cls) -> "MoebiusMatrix":
        return cls(1, 0, 0, 1)

    @classmethod
    def scaling(cls, s: int) -> "MoebiusMatrix":
        return cls(s, 0, 0, 1)

    def det(self) -> int:
        return self.tl * self.br - self.tr * self.bl

    def __matmul__(self, other: "MoebiusMatrix") -> "MoebiusMatrix":
        return MoebiusMatrix(
            self.tl * other.tl + self.tr * other.bl,
            self.tl * other.tr + self.tr * other.br,
            self.bl * other.tl + self.br * other.bl,
            self.bl * other.tr + self.br * other.br,
        )

    def __neg__(self) -> "MoebiusMatrix":
        return MoebiusMatrix(-self.tl, -self.tr, -self.bl, -self.br)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.tl, self.tr, self.bl, self.br)

    def same_map(self, other: "MoebiusMatrix") -> bool:
        """True if both matrices define the same Moebius map (equal up to a scalar)."""
        a = self.as_tuple()
        b = other.as_tuple()
        # proportional iff all 2x2 minors vanish
        return all(a[i] * b[j] == a[j] * b[i] for i in range(4) for j in range(i + 1, 4))

    def __call__(self, z):
        z = _coerce(z)
        num = self.tl * z + self.tr
        den = self.bl * z + self.br
        if den == 0:
            raise PoleError(f"pole of Moebius map at z={z}")
        return num / den


def mobius_of(omega: Mcf) -> MoebiusMatrix:
    conv, sig = convergents_and_signature(omega)
    n = conv.n
    return MoebiusMatrix(sig * conv.p_at(n - 1), conv.p_at(n), sig * conv.q_at(n - 1), conv.q_at(n))


def _coerce(z):
    if isinstance(z, Fraction):
        return z
    if isinstance(z, (int, Rational)) and not isinstance(z, bool):
        return Fraction(z)
    return complex(z)


def eval_mu(omega: Mcf, z) -> Number:
    """Evaluate ``mu_omega(z)``; exact for rational ``z``.

    Uses the nested form ``eps_1/(a_1 + eps_2/(... eps_n/(a_n + E z)))``,
    which is better conditioned in floating point than the matrix form.
    The point at infinity is tracked symbolically through the levels.
    """
    z = _coerce(z)
    val = signature(omega) * z
    infinite = False
    for a, e in reversed(omega.entries):
        if infinite:
            val, infinite = _zero_like(z), False
            continue
        den = a + val
        if den == 0:
            infinite = True
            continue
        val = e / den
    if infinite:
        raise PoleError(f"mu_{omega} has a pole at z={z}")
    return val


def _zero_like(z):
    return Fraction(0) if isinstance(z, Fraction) else 0j


def conjugate(omega: Mcf) -> Mcf:
    if not omega.entries:
        return omega
    (a, e), rest = omega.entries[0], omega.entries[1:]
    return Mcf(((a, -e),) + rest)


def split(omega: Mcf, m: int) -> tuple[Mcf, Mcf]:
    """Return the head ``omega[:m]`` and tail ``omega[m:]``."""
    if not 0 <= m <= len(omega):
        raise IndexError(f"split index {m} outside 0..{len(omega)}")
    return omega[:m], omega[m:]


def _nearest_int(u: Fraction) -> int:
    # u > 0 here, so floor(u + 1/2) rounds ties away from zero
    half = u + Fraction(1, 2)
    return half.numerator // half.denominator


def expand_rational(x) -> Mcf:
    """Nearest-integer signed expansion of a rational in (-1, 1).

    At each level ``x = eps / (a + t)`` with ``a`` the nearest integer to
    ``1/|x|`` (ties away from zero, at least 2) and ``|t| < 1``.  The
    denominator of the remainder strictly decreases, so this terminates.
    """
    x = Fraction(x)
    if abs(x) >= 1:
        raise ValueError(f"|x| must be < 1, got {x}")
    entries = []
    while x != 0:
        eps = 1 if x > 0 else -1
        u = 1 / abs(x)
        a = max(2, _nearest_int(u))
        entries.append((a, eps))
        x = u - a
    return Mcf(tuple(entries))


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# -- self-checks ----------------------------------------------------------------


def random_mcf(rng, max_height: int = 10, max_entry: int = 50, min_height: int = 0) -> Mcf:
    """Uniformly random height, entries and signs (``rng`` is a numpy Generator)."""
    n = int(rng.integers(min_height, max_height + 1))
    return Mcf(tuple((int(rng.integers(2, max_entry + 1)), int(rng.choice((-1, 1))))
                     for _ in range(n)))


def _positive_multiple(a: MoebiusMatrix, b: MoebiusMatrix) -> bool:
    if not a.same_map(b):
        return False
    pairs = [(x, y) for x, y in zip(a.as_tuple(), b.as_tuple()) if x or y]
    return all((x > 0) == (y > 0) for x, y in pairs)


def _apply(mat: MoebiusMatrix, point: tuple[int, int]) -> tuple[int, int]:
    r, s = point
    return (mat.tl * r + mat.tr * s, mat.bl * r + mat.br * s)


def identity_report(omega: Mcf, z: Fraction) -> dict[str, bool]:
    """Exact checks of the determinant, conjugation and decomposition identities.

    ``z`` is used for the evaluation form of the decomposition identity;
    the matrix form is checked for every split index.
    """
    conv, sig = convergents_and_signature(omega)
    n = conv.n
    mat = mobius_of(omega)
    out = {
        "determinant_identity": conv.p_at(n - 1) * conv.q_at(n) - conv.p_at(n) * conv.q_at(n - 1) == sig,
        "unit_determinant": mat.det() == 1,
    }
    star = mobius_of(conjugate(omega))
    flipped = MoebiusMatrix(mat.tl, -mat.tr, -mat.bl, mat.br)
    out["conjugation_identity"] = _positive_multiple(star, flipped)
    # evaluation form on projective integer pairs (r : s) standing for r/s
    z = Fraction(z)
    point = (z.numerator, z.denominator)
    lhs = _apply(mat, point)
    ok = True
    for m in range(len(omega) + 1):
        head, tail = split(omega, m)
        mh, mt = mobius_of(head), mobius_of(tail)
        inner = _apply(MoebiusMatrix.scaling(sig * signature(tail)), point)
        rhs = _apply(mh @ MoebiusMatrix.scaling(signature(head)) @ mt, inner)
        composed = mh @ MoebiusMatrix.scaling(signature(head)) @ mt @ \
            MoebiusMatrix.scaling(sig * signature(tail))
        ok &= _positive_multiple(composed, mat)
        ok &= lhs[0] * rhs[1] == lhs[1] * rhs[0]
    out["decomposition_identity"] = ok
    return out


def geometry_bound_defect(omega: Mcf, z: complex) -> float:
    """How far ``mu_omega(z)`` is outside the disc and angle bounds ``1/(a_1 - 1)``.

    Non-positive means the bound holds.  Needs height at least 1 and ``|z| <= 1``.
    """
    import cmath

    if len(omega) == 0:
        raise ValueError("the bound needs height >= 1")
    a1, e1 = omega.entries[0]
    val = eval_mu(omega, complex(z))
    bound = 1 / (a1 - 1)
    return max(abs(val) - bound, abs(cmath.phase(e1 * val)) - bound)
