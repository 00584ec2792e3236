from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from parabolic.errors import NotInPetalError
from parabolic.germ import UnicriticalGerm
from parabolic.horn import ExtendedCoordinates, build_sampler
from parabolic.implosion import (
    LavaursMap,
    PerturbedCharts,
    conjugate_symmetry,
    fiber_renorm_sample,
    gate_start_points,
    gate_transit,
    gate_window,
    lavaurs_experiment,
    lavaurs_map,
    lavaurs_test_points,
    skew_step,
    skew_tower,
    write_jsonl,
)
from parabolic.mcf import Mcf, conjugate, eval_mu
from parabolic.valley import ValleyParams, build_tower, synthetic_stream, t_map


@lru_cache(maxsize=None)
def coords(d=2, omega=""):
    return build_sampler(UnicriticalGerm(d, omega)).coords


@lru_cache(maxsize=None)
def fiber(alpha=0.01 + 0.004j, omega=""):
    return fiber_renorm_sample(2, omega, alpha)


# -- Lavaurs maps -------------------------------------------------------------------


def test_lavaurs_examples():
    c = coords()
    g = c.germ
    val = lavaurs_map(c, 0, -0.3)
    assert math.isfinite(abs(val))
    assert abs(val - c.chi(c.rho(-0.3))) < 1e-12
    # L_1 = h o L_0 on the same point
    assert abs(lavaurs_map(c, 1, -0.3) - g.fold(val)) < 1e-8


@pytest.mark.parametrize("delta", [0.0, 0.4 + 0.1j])
def test_lavaurs_equivariance(delta):
    c = coords()
    g = c.germ
    for z in (-0.3, -0.2 + 0.1j):
        base = lavaurs_map(c, delta, z)
        # evaluate the shifted map through a later landing and a deeper repelling shift
        shifted = c.chi(c.rho(z, extra_blocks=2) + delta + 1, extra_shift=2)
        assert abs(shifted - g.fold(base)) < 1e-8
        assert abs(LavaursMap(c, delta)(g.fold(z)) - g.fold(base)) < 1e-8


def test_lavaurs_ladder_plain():
    rows = lavaurs_experiment(2, "", 0, [100, 400, 1600], coords=coords())
    errs = [r["sup_error"] for r in rows]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2
    assert rows[0]["n_points"] == 10


def test_lavaurs_ladder_period_two():
    rows = lavaurs_experiment(2, "(2:+)", 0, [100, 400, 1600], coords=coords(2, "(2:+)"))
    errs = [r["sup_error"] for r in rows]
    assert errs[0] > errs[1] > errs[2]


def test_lavaurs_delta_shift():
    # (delta + 1, k + 1) uses the same alpha as (delta, k) and one more q-block
    c = coords()
    pts = lavaurs_test_points(c)
    a = lavaurs_experiment(2, "", 0, [400], pts, c)[0]
    b = lavaurs_experiment(2, "", 1, [401], pts, c)[0]
    assert a["alpha"] == b["alpha"]
    assert 0.5 < b["sup_error"] / a["sup_error"] < 2


def test_lavaurs_rejects_minus_sector():
    with pytest.raises(ValueError):
        lavaurs_experiment(2, "", 0, [-100], coords=coords())


# -- gate transit --------------------------------------------------------------------


def test_gate_window():
    assert gate_window(Fraction(1, 100)) == (25, 175)
    assert gate_window(Fraction(1, 200)) == (50, 350)


@pytest.mark.parametrize("omega", ["", "(2:+)"])
@pytest.mark.parametrize("alpha", [Fraction(1, 50), Fraction(1, 100), Fraction(1, 200)])
def test_gate_transits_in_window(omega, alpha):
    c = coords(2, omega)
    starts = gate_start_points(c, alpha)
    assert len(starts) >= 2
    for z in starts:
        res = gate_transit(2, omega, alpha, z, c)
        assert res.in_window, (res.m, res.window)


def test_gate_requires_exiting_point():
    with pytest.raises(NotInPetalError):
        gate_transit(2, "", Fraction(1, 100), -0.3, coords())


def test_gate_minus_sector_by_symmetry():
    c = coords(2, "(3:-)")
    alpha = Fraction(1, 100)
    for z in gate_start_points(c, alpha, n=2):
        plus = gate_transit(2, "(3:-)", alpha, z, c)
        minus = gate_transit(2, "(3:+)", -alpha, z.conjugate())
        assert (plus.m, plus.k, plus.steps) == (minus.m, minus.k, minus.steps)


# -- conjugate symmetry ---------------------------------------------------------------


def test_conjugate_symmetry_multiplier():
    for omega, alpha in (("(3:+)", Fraction(-1, 100)), ("(2:-)(3:+)", -0.02 + 0.003j)):
        g = UnicriticalGerm(2, omega, alpha)
        star = conjugate_symmetry(g)
        assert star.omega == conjugate(Mcf.from_string(omega))
        assert abs(star.deriv(0) - g.deriv(0).conjugate()) < 1e-14
        if isinstance(alpha, Fraction):
            assert star.alpha == -alpha
            expected = cmath.exp(2j * math.pi * complex(eval_mu(star.omega, -alpha)))
            assert abs(star.deriv(0) - expected) < 1e-14
        assert conjugate_symmetry(star) == g


def test_conjugate_symmetry_orbits():
    rng = np.random.default_rng(21)
    for _ in range(100):
        omega = Mcf.from_string(str(rng.choice(["", "(2:+)", "(3:-)", "(2:-)(4:+)"])))
        alpha = -Fraction(1, int(rng.integers(20, 400)))
        g = UnicriticalGerm(int(rng.integers(2, 4)), omega, alpha)
        star = conjugate_symmetry(g)
        z = complex(*rng.uniform(-0.4, 0.4, 2))
        n = int(rng.integers(1, 101))
        a, b = z, z.conjugate()
        for _ in range(n):
            if abs(a) > 10:
                break
            a, b = g(a), star(b)
        assert abs(b.conjugate() - a) <= 1e-12 * max(1.0, abs(a))


# -- perturbed charts and fiber renormalization ---------------------------------------


def test_perturbed_charts_regime():
    with pytest.raises(ValueError):
        PerturbedCharts(UnicriticalGerm(2, "", 0.01 - 0.004j))


def test_perturbed_linearizer():
    g = UnicriticalGerm(2, "", 0.01 + 0.004j)
    ch = PerturbedCharts(g)
    lam_expected = cmath.exp(2j * math.pi * (g.q * complex(g.mu) - g.p))
    assert abs(ch.lambda_q - lam_expected) < 1e-10
    assert abs(g.fold_deriv(0)[1] - lam_expected) < 1e-10
    for z in ch.kappa_radius * 0.5 * np.exp(2j * np.pi * np.arange(8) / 8):
        assert abs(ch.kappa_value(g.fold(z)) - ch.lambda_q * ch.kappa_value(z)) < 1e-8
        assert abs(ch.phi_att(g.fold(z)) - ch.phi_att(z) - 1) < 1e-8


def test_perturbed_fixed_point():
    g = UnicriticalGerm(2, "", 0.01 + 0.004j)
    ch = PerturbedCharts(g)
    assert abs(g.fold(ch.sigma) - ch.sigma) < 1e-14
    assert abs(ch.sigma) > 0 and abs(ch.lambda_sigma) > 1
    # the repelling coordinate is periodic, so inversion recovers w up to the period
    for w in (0.3 + 3j, -2 + 1j, 0.5 - 1j):
        gap = ch.chi_inverse(ch.chi(w)) - w
        k = round((gap / ch.repelling_period).real)
        assert abs(gap - k * ch.repelling_period) < 1e-8


def test_fiber_sample():
    r = fiber()
    assert r["periodicity_defect"] < 1e-5
    assert r["lambda_q_error"] < 1e-10
    assert r["linearizer_residual"] < 1e-8
    semi = r["semiconjugacy"]
    assert semi["in_window"]
    assert semi["coordinate_mismatch"] < 1e-3
    assert semi["orbit_distance"] < 1e-3


def test_fiber_derivative_angle_matches_t_map():
    r = fiber()
    angle = complex(*r["derivative_angle"])
    target = t_map(0.01 + 0.004j)
    diff = angle - target
    assert abs(diff.imag) < 1e-6
    assert abs(diff.real - round(diff.real)) < 1e-6
    assert r["derivative_matches_T"]


def test_fiber_period_two():
    r = fiber(0.01 + 0.004j, "(2:+)")
    assert r["periodicity_defect"] < 1e-5
    assert r["semiconjugacy"]["in_window"]
    assert r["T_alpha"] == [t_map(0.01 + 0.004j).real, t_map(0.01 + 0.004j).imag]


# -- skew product ---------------------------------------------------------------------


def test_skew_step_angle_only():
    step = skew_step("(2:+)", x=Fraction(3, 7))
    assert eval_mu(step.omega, step.alpha) == Fraction(3, 7)
    assert step.new_angle == t_map(step.alpha)
    with pytest.raises(ValueError):
        skew_step("", x=Fraction(3, 4))


def test_skew_step_numeric():
    step = skew_step("", alpha=0.01 + 0.004j, numeric=True)
    assert step.numeric["periodic"]
    assert "derivative_angle" in step.numeric
    other = skew_step("", alpha=0.01 - 0.004j, numeric=True)
    assert other.numeric == {"regime": "descriptor-only"}


def test_skew_tower_matches_build_tower():
    s = synthetic_stream([10, 13], 2, 80, 2, np.random.default_rng(6))
    params = ValleyParams(9, 1, 60)
    steps = skew_tower(s, params, 20)
    levels = build_tower(s, params, 20)
    assert [st.alpha for st in steps] == [lv.alpha for lv in levels]
    for st, lv, nxt in zip(steps, levels, levels[1:]):
        assert st.new_angle + lv.big_entry == nxt.x


def test_jsonl(tmp_path):
    write_jsonl(tmp_path / "r.jsonl", [{"a": 1}, {"b": [1.5, 2]}])
    assert (tmp_path / "r.jsonl").read_text().splitlines() == ['{"a": 1}', '{"b": [1.5, 2]}']
