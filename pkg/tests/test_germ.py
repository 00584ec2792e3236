from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parabolic.germ import DegenerateGermError, InverseBranchError, UnicriticalGerm
from parabolic.mcf import Mcf
from parabolic.series import TruncatedSeries

GERMS = [(d, w) for d in (2, 3) for w in ("", "(2:+)", "(3:-)", "(3:+)")]


def test_critical_value_and_fixed_point():
    g = UnicriticalGerm(2)
    assert g(-1) == -0.5
    assert g.critical_value == -0.5
    for d, w in GERMS:
        assert UnicriticalGerm(d, w)(0) == 0


def test_explicit_quadratic():
    assert abs(UnicriticalGerm(2)(0.2) - 0.22) < 1e-15


def test_multiplier_is_rotation():
    for d, w in GERMS:
        g = UnicriticalGerm(d, w)
        assert abs(g.deriv(0) - g.lam) < 1e-15
        assert abs(g.lam ** g.q - 1) < 1e-12
        assert abs(cmath.exp(2j * math.pi * g.p / g.q) - g.lam) < 1e-15


def test_derivative_vanishes_only_at_critical_point():
    g = UnicriticalGerm(3)
    assert g.deriv(-1) == 0
    assert abs(g.deriv(-0.9)) > 0


def test_large_degree_evaluation():
    g = UnicriticalGerm(40)
    z = 0.01 + 0.02j
    assert abs(g(z) - ((1 + z) ** 40 - 1) / 40) < 1e-12
    assert not math.isfinite(abs(g(1e300)))


def test_q_fold_examples():
    s, a = UnicriticalGerm(2).q_fold_series()
    assert abs(a - 0.5) < 1e-14
    g = UnicriticalGerm(2, "(2:+)")
    assert g.q == 2
    assert abs(g.q_fold_series()[1] + 0.5) < 1e-12
    g = UnicriticalGerm(2, "(3:+)")
    s, a = g.q_fold_series()
    assert g.q == 3
    assert abs(s[2]) < 1e-10 and abs(s[3]) < 1e-10


def test_q_fold_series_shape():
    for d in (2, 3, 4):
        for w in ("", "(2:+)", "(3:-)", "(4:+)", "(5:-)", "(2:+)(3:-)"):
            g = UnicriticalGerm(d, w)
            if g.q > 5:
                continue
            s, a = g.q_fold_series()
            assert abs(s[1] - 1) < 1e-10
            assert all(abs(s[k]) < 1e-10 for k in range(2, g.q + 1))
            assert abs(a) > 1e-8


def test_q_fold_series_ratio():
    # |h^q(z) - series(z)| = O(|z|^{q+2}): shrinking |z| by 10 shrinks the error by ~10^{q+2}
    for d, w in GERMS:
        g = UnicriticalGerm(d, w)
        s, _ = g.q_fold_series()
        trunc = TruncatedSeries(s.coeffs[: g.q + 2], g.q + 1)
        e1 = max(abs(g.fold(z) - trunc(z)) for z in 1e-2 * np.exp(2j * np.pi * np.arange(8) / 8))
        e2 = max(abs(g.fold(z) - trunc(z)) for z in 1e-3 * np.exp(2j * np.pi * np.arange(8) / 8))
        assert e2 <= e1 * 10.0 ** (-(g.q + 2) + 0.5) + 1e-17


def test_degenerate_needs_parabolic():
    with pytest.raises(ValueError):
        UnicriticalGerm(2, "", 0.01 + 0.001j).q_fold_series()
    with pytest.raises(ValueError):
        UnicriticalGerm(1)
    assert issubclass(DegenerateGermError, ValueError)


def test_iterate_examples():
    g = UnicriticalGerm(2)
    assert g.iterate(0, 17) == (0, 17, False)
    z, n, esc = g.iterate(10, 5, escape_radius=4)
    assert esc and n == 1
    z, n, esc = g.iterate(-0.5, 4000)
    assert not esc and abs(z) < 1e-3
    mods = [abs(g.iterate(-0.5, k)[0]) for k in range(100, 110)]
    assert all(b < a for a, b in zip(mods, mods[1:]))


def test_local_inverse_examples():
    g = UnicriticalGerm(2)
    assert abs(g.local_inverse(g(0.1), 0.1) - 0.1) < 1e-13
    with pytest.raises(InverseBranchError):
        g.local_inverse(g.critical_value + 1e-6, -1 + 1e-9)


@given(st.floats(0, 0.5), st.floats(-np.pi, np.pi), st.sampled_from(GERMS))
def test_local_inverse_round_trip(r, t, germ):
    g = UnicriticalGerm(*germ)
    z = r * cmath.exp(1j * t)
    w = g.local_inverse(g(z), z * 1.01)
    assert abs(w - z) < 1e-12


def test_descriptor_round_trip():
    g = UnicriticalGerm(3, "(2:+)(3:-)", 0.01 + 0.002j)
    assert UnicriticalGerm.from_descriptor(g.descriptor()) == g
    h = UnicriticalGerm(2, Mcf(), Fraction(0))
    assert h.descriptor() == {"d": 2, "omega": "", "alpha": [0.0, 0.0]}
