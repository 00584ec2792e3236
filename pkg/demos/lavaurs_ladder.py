"""Convergence of h_alpha^(k q) to the Lavaurs map as alpha -> 0 along 1/k."""
from __future__ import annotations

from parabolic import lavaurs_experiment

for omega in ("", "(2:+)"):
    print(f"omega = {omega or 'empty'}")
    for row in lavaurs_experiment(2, omega, 0, [100, 400, 1600]):
        print(f"  k = {row['k']:5d}  sup error = {row['sup_error']:.3e}")
