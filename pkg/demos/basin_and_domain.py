"""Render the parabolic basin of G_2 and the domain of its renormalized map.

Writes basin.ppm and renorm_domain.ppm (plus JSON sidecars) into the
directory given as the first argument (default: demo_out).
"""
from __future__ import annotations

import sys
from pathlib import Path

from parabolic import UnicriticalGerm, build_sampler
from parabolic.raster import Window, render_basin, render_renorm_domain, write_ppm, write_sidecar

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

germ = UnicriticalGerm(2)
basin = render_basin(germ, Window(-2, 1, -1.5, 1.5), 400)
write_ppm(out / "basin.ppm", basin)
write_sidecar(out / "basin.json", basin)

domain = render_renorm_domain(build_sampler(germ), Window(-800, 800, -800, 800), 400)
write_ppm(out / "renorm_domain.ppm", domain)
write_sidecar(out / "renorm_domain.json", domain)
print("basin fraction", basin.fraction([0]), "domain fraction", domain.fraction([1]))
