"""Truncated power series with complex coefficients.

Coefficients are stored from ``z^0`` up to ``z^order``; anything above the
order is unknown, not zero.  Multiplication is a plain truncated
convolution, which is all that is needed at the orders used here (< 100).
"""

from __future__ import annotations

import numpy as np

__all__ = ["TruncatedSeries"]


class TruncatedSeries:
    """Power series ``c_0 + c_1 z + ... + c_K z^K + O(z^{K+1})``."""

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=complex).ravel()
        if order is None:
            order = len(c) - 1
        out = np.zeros(order + 1, dtype=complex)
        n = min(len(c), order + 1)
        out[:n] = c[:n]
        self.coeffs = out
        self.order = order

    @classmethod
    def identity(cls, order: int) -> "TruncatedSeries":
        return cls([0, 1], order)

    @classmethod
    def constant(cls, value, order: int) -> "TruncatedSeries":
        return cls([value], order)

    def __repr__(self):
        return f"TruncatedSeries({np.array2string(self.coeffs, precision=6)}, order={self.order})"

    def __getitem__(self, k: int) -> complex:
        if k > self.order:
            raise IndexError(f"coefficient z^{k} beyond truncation order {self.order}")
        return complex(self.coeffs[k])

    def _lift(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries.constant(other, self.order)

    def __add__(self, other):
        other = self._lift(other)
        order = min(self.order, other.order)
        return TruncatedSeries(self.coeffs[: order + 1] + other.coeffs[: order + 1], order)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * other, self.order)
        order = min(self.order, other.order)
        prod = np.convolve(self.coeffs[: order + 1], other.coeffs[: order + 1])[: order + 1]
        return TruncatedSeries(prod, order)

    __rmul__ = __mul__

    def __call__(self, z):
        """Evaluate the truncated polynomial (Horner)."""
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """Return ``self(inner(z))``; ``inner`` must have no constant term."""
        if abs(inner.coeffs[0]) != 0:
            raise ValueError("inner series must vanish at 0")
        order = min(self.order, inner.order)
        acc = TruncatedSeries.constant(0, order)
        for c in self.coeffs[::-1]:
            acc = acc * inner + c
        return acc

    def derivative(self) -> "TruncatedSeries":
        k = np.arange(1, self.order + 1)
        return TruncatedSeries(self.coeffs[1:] * k, max(self.order - 1, 0))

    def shift_down(self, k: int) -> "TruncatedSeries":
        """Divide by ``z^k``; the first ``k`` coefficients must vanish."""
        return TruncatedSeries(self.coeffs[k:], self.order - k)

    def reciprocal(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        out = np.zeros(self.order + 1, dtype=complex)
        out[0] = 1 / c0
        for n in range(1, self.order + 1):
            out[n] = -np.dot(self.coeffs[1 : n + 1], out[n - 1 :: -1][:n]) / c0
        return TruncatedSeries(out, self.order)

    def log1p(self) -> "TruncatedSeries":
        """``log(1 + u)`` for a series ``u`` with zero constant term."""
        if self.coeffs[0] != 0:
            raise ValueError("log1p needs a series without constant term")
        one_plus = self + 1
        ratio = self.derivative() * one_plus.reciprocal()
        out = np.zeros(self.order + 1, dtype=complex)
        out[1:] = ratio.coeffs[: self.order] / np.arange(1, self.order + 1)
        return TruncatedSeries(out, self.order)

    def exp(self) -> "TruncatedSeries":
        """``exp(L)`` for ``L`` with zero constant term, via ``E' = L' E``."""
        if self.coeffs[0] != 0:
            raise ValueError("exp needs a series without constant term")
        n_max = self.order
        lp = self.coeffs * np.arange(n_max + 1)
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1
        for n in range(1, n_max + 1):
            out[n] = np.dot(lp[1 : n + 1], out[n - 1 :: -1][:n]) / n
        return TruncatedSeries(out, n_max)

    def reversion(self) -> "TruncatedSeries":
        """Compositional inverse of a series ``c_1 z + ...`` with ``c_1 != 0``."""
        c1 = self.coeffs[1] if self.order >= 1 else 0
        if self.coeffs[0] != 0 or c1 == 0:
            raise ValueError("reversion needs c_0 = 0 and c_1 != 0")
        inv = TruncatedSeries([0, 1 / c1], self.order)
        # Newton iteration on g(f(z)) = z doubles the number of correct terms
        ident = TruncatedSeries.identity(self.order)
        deriv = self.derivative()
        for _ in range(int(np.ceil(np.log2(self.order + 1))) + 1):
            resid = self.compose(inv) - ident
            inv = inv - resid * deriv.compose(inv).reciprocal()
        return inv
