from __future__ import annotations

import cmath
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parabolic.mcf import Mcf, eval_mu, random_mcf, split
from parabolic.valley import (
    MINUS,
    PLUS,
    AngleSector,
    McfStream,
    ValleyParams,
    alpha_split,
    build_tower,
    invert_mu,
    is_valley_type,
    periodic_stream,
    sector_side,
    synthetic_stream,
    t_map,
    tower_to_json,
    vt_step,
)


def test_sector_membership():
    assert 0.1 in AngleSector(0.5, PLUS)
    assert -0.1 in AngleSector(0.5, MINUS)
    assert 0.1 not in AngleSector(0.5, MINUS)
    assert 0.1j not in AngleSector(0.5, PLUS)
    assert 0 not in AngleSector(0.5, PLUS)
    assert 0.6 not in AngleSector(0.5, PLUS)
    assert AngleSector.union_contains(0.5, -0.2 + 0.1j)
    with pytest.raises(ValueError):
        AngleSector(0, PLUS)


def test_t_map_examples():
    assert t_map(0.1, PLUS) == pytest.approx(-10)
    assert t_map(-0.1, MINUS) == pytest.approx(-10)
    a = 0.05 + 0.02j
    assert abs(t_map(a, PLUS) - (-1 / a)) < 1e-15
    assert t_map(Fraction(1, 10)) == -10
    assert t_map(Fraction(-1, 10)) == -10
    with pytest.raises(ZeroDivisionError):
        t_map(0)
    with pytest.raises(ValueError):
        t_map(0.1, MINUS)
    with pytest.raises(ValueError):
        t_map(0.3j)


@given(st.floats(1e-3, 0.49), st.floats(-0.78, 0.78), st.sampled_from([PLUS, MINUS]))
def test_t_map_inverts(r, t, side):
    alpha = side * r * cmath.exp(1j * t)
    beta = t_map(alpha)
    back = -1 / beta if side == PLUS else 1 / beta
    assert abs(back - alpha) <= 1e-12 * abs(alpha)


def test_alpha_split_example():
    omega = Mcf.from_string("(2:+)(3:-)")
    a1 = alpha_split(omega, 1, 0)
    head, _ = split(omega, 1)
    assert eval_mu(head, a1) == Fraction(3, 5)
    assert alpha_split(omega, 0, Fraction(1, 9)) == eval_mu(omega, Fraction(1, 9))
    with pytest.raises(IndexError):
        alpha_split(omega, 2, 0)


def test_alpha_split_random_exact():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 100:
        omega = random_mcf(rng, min_height=1)
        m = int(rng.integers(0, len(omega)))
        alpha = Fraction(int(rng.integers(-20, 21)), int(rng.integers(21, 60)))
        am = alpha_split(omega, m, alpha)
        assert eval_mu(omega[:m], am) == eval_mu(omega, alpha)
        checked += 1


def test_alpha_split_complex():
    omega = Mcf.from_string("(2:+)(3:-)(4:+)")
    alpha = 0.01 + 0.004j
    am = alpha_split(omega, 2, alpha)
    assert abs(eval_mu(omega[:2], am) - eval_mu(omega, alpha)) < 1e-14


def test_invert_mu():
    omega = Mcf.from_string("(2:+)(3:-)(7:+)")
    x = eval_mu(omega, Fraction(2, 11))
    assert invert_mu(omega, x) == Fraction(2, 11)


def test_valley_examples():
    s = periodic_stream([5, 2, 2], 40)
    assert is_valley_type(s, ValleyParams(4, 2, 12))
    assert not is_valley_type(s, ValleyParams(5, 2, 12))
    assert is_valley_type(periodic_stream([2, 3], 10), ValleyParams(1, 0, 5))
    with pytest.raises(ValueError):
        is_valley_type(s, ValleyParams(4, 2, 39))


def test_stream_validation():
    with pytest.raises(ValueError):
        McfStream(((1, 1),))
    with pytest.raises(ValueError):
        ValleyParams(-1, 0, 1)


def test_vt_step_example():
    s = periodic_stream([5, 2, 2], 12)
    out = vt_step(s, 0)
    assert out.entries[0] == (2, -1)
    assert out.entries[1:] == s.entries[2:]
    assert len(out) == len(s) - 1
    with pytest.raises(ValueError):
        vt_step(s, len(s) - 2)


def test_vt_step_value_relation():
    s = synthetic_stream([10, 12], 2, 12, 2, np.random.default_rng(1))
    m = 2
    x = s.value()
    alpha = invert_mu(s.prefix(m), x)
    expected = t_map(alpha) + s.entries[m][0]
    assert vt_step(s, m).value() == expected


def test_vt_step_preserves_valley_type():
    rng = np.random.default_rng(11)
    for _ in range(100):
        period = int(rng.integers(1, 4))
        s = synthetic_stream([10, 11, 15], int(rng.integers(2, 10)), 60, period, rng)
        params = ValleyParams(9, period - 1, 40)
        assert is_valley_type(s, params)
        m = int(rng.integers(0, 10))
        out = vt_step(s, m)
        shorter = ValleyParams(9, period - 1, params.horizon - m)
        assert is_valley_type(out, shorter)


def test_tower_periodic_example():
    s = periodic_stream([10, 2], 40)
    levels = build_tower(s, ValleyParams(9, 1, 30), 5)
    assert len(levels) == 5
    assert all(len(lv.head) <= 2 for lv in levels)
    assert all(lv.alpha_bound <= 1 / 8 for lv in levels)


def test_tower_high_type():
    s = periodic_stream([12], 30)
    levels = build_tower(s, ValleyParams(9, 0, 20), 10)
    assert all(len(lv.head) <= 1 for lv in levels)


def test_tower_depth_20_exact():
    s = synthetic_stream([10, 14, 30], 2, 80, 2, np.random.default_rng(5))
    params = ValleyParams(9, 1, 60)
    levels = build_tower(s, params, 20)
    assert len(levels) == 20
    for prev, lv in zip(levels, levels[1:]):
        assert eval_mu(lv.head, lv.alpha) == lv.x
        assert t_map(prev.alpha) + prev.big_entry == lv.x
    assert max(lv.alpha_bound for lv in levels) <= 1 / (params.N - 1)
    data = json.loads(tower_to_json(levels))
    assert set(data[0]) == {"head", "alpha_bound", "window_index"}


def test_tower_rejects_non_valley():
    s = periodic_stream([2, 3], 30)
    with pytest.raises(ValueError):
        build_tower(s, ValleyParams(9, 1, 20), 3)


def test_tower_horizon_exhausted():
    s = periodic_stream([10, 2], 8)
    with pytest.raises(ValueError):
        build_tower(s, ValleyParams(9, 1, 6), 10)


def test_sector_side():
    assert sector_side(Fraction(1, 10)) == PLUS
    assert sector_side(-0.1 + 0.01j) == MINUS
    with pytest.raises(ValueError):
        sector_side(0.2j)
