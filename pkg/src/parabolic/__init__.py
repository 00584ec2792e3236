"""Modified continued fractions and parabolic renormalization of unicritical maps.

The numerical raster kernels live in :mod:`parabolic.raster` and are not
imported here, so importing the package does not pull in numba.
"""

from __future__ import annotations

from .errors import EscapeError, NonConvergenceError, NotInBasinError, NotInPetalError
from .fatou import fatou_chart, petal_chart
from .germ import UnicriticalGerm
from .horn import build_sampler
from .implosion import conjugate_symmetry, fiber_renorm_sample, gate_transit, lavaurs_experiment, skew_step
from .mcf import Mcf, conjugate, convergents, eval_mu, expand_rational, signature, split
from .valley import ValleyParams, build_tower, t_map, vt_step

__version__ = "0.1.0"

__all__ = [
    "EscapeError",
    "Mcf",
    "NonConvergenceError",
    "NotInBasinError",
    "NotInPetalError",
    "UnicriticalGerm",
    "ValleyParams",
    "build_sampler",
    "build_tower",
    "conjugate",
    "conjugate_symmetry",
    "convergents",
    "eval_mu",
    "expand_rational",
    "fatou_chart",
    "fiber_renorm_sample",
    "gate_transit",
    "lavaurs_experiment",
    "petal_chart",
    "signature",
    "skew_step",
    "split",
    "t_map",
    "vt_step",
]
