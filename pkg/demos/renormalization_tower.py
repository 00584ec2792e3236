"""Exact renormalization tower of a synthetic valley-type stream and one skew step."""
from __future__ import annotations

import numpy as np

from parabolic import ValleyParams, build_tower, skew_step
from parabolic.valley import synthetic_stream

stream = synthetic_stream([10, 14, 30], 2, 80, 2, np.random.default_rng(5))
for i, level in enumerate(build_tower(stream, ValleyParams(9, 1, 60), 8)):
    print(f"level {i}: head {level.head}  |alpha| <= {float(level.alpha_bound):.4f}")

step = skew_step("", alpha=0.01 + 0.004j, numeric=True)
print("new angle", step.new_angle)
print("fiber sample periodic:", step.numeric["periodic"])
