from __future__ import annotations

import json
import math
from functools import lru_cache

import numpy as np
import pytest

from parabolic.errors import NotInBasinError
from parabolic.germ import UnicriticalGerm
from parabolic.horn import Exp, Exp_inverse, build_sampler, winding_number

GERM_SET = [(d, w) for d in (2, 3) for w in ("", "(2:+)", "(3:-)")]


@lru_cache(maxsize=None)
def sampler(d=2, omega=""):
    return build_sampler(UnicriticalGerm(d, omega))


def test_exp_branch():
    for w in (0.25 + 3j, 0.9 - 1j, 0.0 + 0.5j):
        assert abs(Exp_inverse(Exp(w)) - w) < 1e-12
    with pytest.raises(ValueError):
        Exp_inverse(0)


def test_winding_number():
    circle = np.exp(2j * np.pi * np.arange(64) / 64)
    assert winding_number(circle) == 1
    assert winding_number(circle ** 3) == 3
    assert winding_number(circle + 3) == 0


def test_rho_examples():
    coords = sampler().coords
    g = coords.germ
    assert abs(coords.rho(g.critical_value)) < 1e-8
    val = coords.rho(-0.3)
    assert math.isfinite(abs(val))
    assert abs(coords.rho(g.fold(-0.3)) - val - 1) < 1e-8
    with pytest.raises(NotInBasinError):
        coords.rho(3)


@pytest.mark.parametrize("omega", ["", "(2:+)", "(3:-)"])
def test_rho_landing_independent(omega):
    coords = sampler(2, omega).coords
    for z in (coords.germ.critical_value, coords.chi(0.3 + 2j)):
        assert abs(coords.rho(z, extra_blocks=3) - coords.rho(z)) < 1e-8


@pytest.mark.parametrize("omega", ["", "(2:+)", "(3:-)"])
def test_chi_examples(omega):
    coords = sampler(2, omega).coords
    g = coords.germ
    for w in (0.1 + 2j, 0.6 + 3j, 0.3 - 0.5j):
        assert abs(coords.chi(w, extra_shift=1) - coords.chi(w)) < 1e-8
        assert abs(coords.chi(w + 1) - g.fold(coords.chi(w))) < 1e-8
    # far on the repelling side no shift is needed
    w = -60 + 0j
    assert abs(coords.chi(w) - coords.rep.inverse(w - coords.c1)) < 1e-12


@pytest.mark.parametrize("d,omega", GERM_SET)
def test_periodicity(d, omega):
    s = sampler(d, omega)
    ws = [complex(k / 64, y) for y in (2.0, 3.0, 4.0) for k in range(64)]
    assert s.periodicity_defect(ws) < 1e-6


def test_flattening_toward_zeta():
    s = sampler()
    d5, _ = s.fit_zeta(5.0)
    d6, _ = s.fit_zeta(6.0)
    assert abs(d5 - d6) < 1e-3
    spreads = [s.fit_zeta(im)[1] for im in (3.0, 4.0, 5.0)]
    assert spreads[0] > spreads[1] > spreads[2]


def test_zeta_targets():
    assert sampler().zeta_target == 0
    assert sampler(2, "(2:+)").zeta_target == 1
    for omega in ("", "(2:+)", "(3:-)"):
        s = sampler(2, omega)
        refit, _ = s.fit_zeta(5.0)
        assert abs(refit - s.zeta_target) < 1e-4


def test_eta():
    s = build_sampler(UnicriticalGerm(2))
    eta = s.fit_eta(n=64)
    assert 0 <= eta <= 10


@pytest.mark.parametrize("d,omega", GERM_SET)
def test_derivative_at_zero(d, omega):
    assert abs(sampler(d, omega).derivative_at_zero(4.0) - 1) < 1e-3


def test_top_consistency():
    s = sampler()
    for w in (0.2 + 2.5j, 0.7 + 3j):
        assert abs(s.parabolic_renorm(Exp(w)) - Exp(s.horn_map(w))) < 1e-6
    assert s.parabolic_renorm(0) == 0


def test_bottom_renorm():
    s = sampler()
    assert s.zeta_minus is not None
    assert abs(s.derivative_at_zero(6.0, end="bottom") - 1) < 1e-3


@pytest.mark.parametrize("d,omega", GERM_SET)
def test_critical_values_and_degree(d, omega):
    cps = sampler(d, omega).critical_points()
    assert cps
    for c in cps:
        assert abs(c.value - 1) < 1e-3
        assert c.degree == d


def test_summary_json(tmp_path):
    s = sampler()
    data = s.write_summary_json(tmp_path / "h.json")
    loaded = json.loads((tmp_path / "h.json").read_text())
    assert loaded == data
    assert set(data) >= {"zeta_plus_target", "zeta_plus_fit", "zeta_minus_fit", "eta",
                         "derivative_at_zero"}


def test_samples_csv(tmp_path):
    s = sampler()
    s.write_samples_csv(tmp_path / "h.csv", [0.5 + 3j])
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "re_w,im_w,re_H,im_H"
    assert len(lines) == 2
