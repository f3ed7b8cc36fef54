"""Algebraic identities of the regularized tensor on a sampled fBm path.

Build levels 1..3 on three intervals and check that the tensor multiplies
across a split point and that products of entries expand into shuffles.
"""

from roughfbm import (FbmModel, FrequencyGrid, RegularizationConfig, build_tensor,
                      chen_residual, sample_fbm, shuffle_residual)

cfg = RegularizationConfig(0.5)
path = sample_fbm(FbmModel(0.3, 1e-3, 2), FrequencyGrid(48), seed=1)
s, u, t = 0.1, 0.45, 0.9

X_tu = build_tensor(path, 3, u, t, cfg)
X_us = build_tensor(path, 3, s, u, cfg)
X_ts = build_tensor(path, 3, s, t, cfg)
print("level 1:", {w: round(v, 6) for w, v in X_ts.levels.items() if len(w) == 1})
print("level 2:", {w: round(v, 6) for w, v in X_ts.levels.items() if len(w) == 2})
print(f"Chen residual over (s, u, t): {chen_residual(X_tu, X_us, X_ts):.2e}")

for w1, w2 in [((1,), (2,)), ((1, 2), (2,)), ((2,), (1, 1))]:
    print(f"shuffle {w1} x {w2}: residual {shuffle_residual(X_ts, w1, w2):.2e}")

# damaging one entry shows up immediately
X_ts.levels[(1, 2)] += 1e-3
print(f"Chen residual after perturbing (1,2): {chen_residual(X_tu, X_us, X_ts):.2e}")
