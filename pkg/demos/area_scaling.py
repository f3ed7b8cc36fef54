"""Second moment of the Lévy area as the smoothing scale shrinks.

At alpha = 0.2 the plain area of the smoothed process diverges as eta -> 0
and the regularized entry levels off.  Over this window both still grow,
the plain one faster; the limiting slopes only appear at much smaller eta.
The grid-exact moments need no sampling; a small Monte Carlo run sits on
top of them.
"""

import math

from roughfbm import (Divergence, FbmModel, FrequencyGrid, RegularizationConfig,
                      scaling_slope)
from roughfbm.verify import exact_second_moments

model = FbmModel(0.2, 1e-3, 2)
grid = FrequencyGrid(256, math.pi / 2)
cfg = RegularizationConfig(0.5)
etas = tuple(2.0**-j for j in range(2, 8))

for regularized in (False, True):
    exp = Divergence(etas, regularized)
    xs, exact = exact_second_moments(exp, model, grid, cfg)
    mc = scaling_slope(exp, model, grid, cfg, 400, seed=0)
    label = "regularized" if regularized else "plain"
    print(f"{label} area")
    for eta, e, (_, log_m, se) in zip(xs, exact, mc.points):
        print(f"  eta {eta:.4f}  exact {e:.5f}  mc {math.exp(log_m):.5f} +- {se:.5f}")
    print(f"  log-log slope {mc.slope:+.3f} +- {mc.stderr:.3f}")
