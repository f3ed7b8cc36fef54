"""Acceptance criteria 1-9.

Each ``criterion_N`` returns ``(passed, detail)``.  Under pytest every test
records one ``criterion N: PASS|FAIL`` line, printed in the terminal summary;
running this file directly prints the same lines.
"""

import math
import sys
import time
from itertools import permutations, product

import numpy as np
import pytest

from roughfbm import (ANTISYMMETRIC, INDEPENDENT, AtomicTreeMeasure, DecoratedForest, Divergence,
                      FbmModel, FrequencyGrid, Holder, Rate, RegularizationConfig,
                      admissible_cuts, build_tensor, chen_residual, coproduct, covariance_table,
                      exact_slope, fubini_residual, generic_atom_path, reg_iterated_integral,
                      sample_fbm, scaling_slope, sector_assignment, shuffle_residual,
                      split_at_cut, trunk_tree)
from roughfbm.permutations import split_sectors
from roughfbm.trees import EMPTY
from roughfbm.verify import certify_generic

CFG = RegularizationConfig()

# pinned tolerances and budgets
FUBINI_TOL, FUBINI_SECONDS = 1e-8, 30
TREE_TOL, TREE_SECONDS = 1e-9, 120
CHEN_TOL, CHEN_SECONDS = 1e-8, 300
SHUFFLE_TOL, SHUFFLE_SECONDS = 1e-8, 300
HOLDER_TARGET, HOLDER_BAND, HOLDER_SECONDS = 0.8, 0.2, 1200
RATE_TARGET, RATE_BAND, RATE_SECONDS = 0.6, 0.2, 1200
DIV_TARGET, DIV_BAND, DIV_REG_BAND, DIV_SECONDS = -0.2, 0.15, 0.1, 1800
COV_TOL, COV_SE, COV_SECONDS = 0.02, 5.0, 600
COMB_SECONDS = 60


def _line(n, ok, detail):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"


def criterion_1():
    """Sector reconstruction equals the exponential-polynomial oracle on generic atoms."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = 0.0
    for n in (2, 3, 4):
        for seed in range(3):
            p = generic_atom_path(n, 3, seed)
            w = tuple(range(1, n + 1))
            assert certify_generic(p, w)
            s, t = np.sort(rng.uniform(-1, 1, 2))
            worst = max(worst, fubini_residual(p, w, s, t))
    elapsed = time.time() - t0
    ok = worst <= FUBINI_TOL and elapsed <= FUBINI_SECONDS
    return ok, f"max residual {worst:.2e} (tol {FUBINI_TOL:.0e}), {elapsed:.1f}s"


def _random_forest(rng):
    n = int(rng.integers(1, 6))
    parent = tuple(int(rng.integers(0, v)) for v in range(1, n + 1))
    return DecoratedForest(parent, tuple(int(x) for x in rng.integers(1, 3, n)))


def criterion_2():
    """Increment of a regularized tree integral equals its sum over admissible cuts."""
    t0 = time.time()
    rng = np.random.default_rng(22)
    grid = FrequencyGrid(64)
    worst = 0.0
    for trial in range(50):
        forest = _random_forest(rng)
        p = sample_fbm(FbmModel(0.3, 1e-3, 2), grid, seed=100 + trial)
        m = AtomicTreeMeasure.from_path(forest, p)
        s, u, t = np.sort(rng.uniform(0, 1, 3))

        def ri(meas, a, b):
            return reg_iterated_integral(meas, CFG, a, b).value

        whole = [ri(m, t, s), ri(m, t, u), ri(m, u, s)]
        lhs = whole[0] - whole[1] - whole[2]
        rhs, scale = 0.0, sum(abs(x) for x in whole)
        for cut in admissible_cuts(forest):
            sp = split_at_cut(forest, cut)
            term = ri(m.restrict(sp.left_vertices), t, u) * ri(m.restrict(sp.right_vertices), u, s)
            rhs += term
            scale += abs(term)
        worst = max(worst, abs(lhs - rhs) / scale)
    elapsed = time.time() - t0
    ok = worst <= TREE_TOL and elapsed <= TREE_SECONDS
    return ok, f"max residual {worst:.2e} over 50 forests (tol {TREE_TOL:.0e}), {elapsed:.1f}s"


def criterion_3():
    """Chen identity on level <= 3 tensors of a sampled 2-d path."""
    t0 = time.time()
    rng = np.random.default_rng(33)
    p = sample_fbm(FbmModel(0.3, 1e-3, 2), FrequencyGrid(64), seed=3)
    worst = 0.0
    for _ in range(20):
        s, u, t = (float(x) for x in np.sort(rng.uniform(0, 1, 3)))
        X_tu = build_tensor(p, 3, u, t, CFG)
        X_us = build_tensor(p, 3, s, u, CFG)
        X_ts = build_tensor(p, 3, s, t, CFG)
        worst = max(worst, chen_residual(X_tu, X_us, X_ts))
    elapsed = time.time() - t0
    ok = worst <= CHEN_TOL and elapsed <= CHEN_SECONDS
    return ok, f"max residual {worst:.2e} over 20 triples (tol {CHEN_TOL:.0e}), {elapsed:.1f}s"


def criterion_4():
    """Shuffle identity for all word pairs with total length <= 4 over two letters."""
    t0 = time.time()
    rng = np.random.default_rng(44)
    worst, count = 0.0, 0
    for trial in range(10):
        p = sample_fbm(FbmModel(0.3, 1e-3, 2), FrequencyGrid(16), seed=200 + trial)
        s, t = (float(x) for x in np.sort(rng.uniform(0, 1, 2)))
        X = build_tensor(p, 4, s, t, CFG)
        for n1 in range(1, 4):
            for n2 in range(1, 5 - n1):
                for w1 in product((1, 2), repeat=n1):
                    for w2 in product((1, 2), repeat=n2):
                        worst = max(worst, shuffle_residual(X, w1, w2))
                        count += 1
    elapsed = time.time() - t0
    ok = worst <= SHUFFLE_TOL and elapsed <= SHUFFLE_SECONDS
    return ok, (f"max residual {worst:.2e} over {count} pairs on 10 paths "
                f"(tol {SHUFFLE_TOL:.0e}), {elapsed:.1f}s")


def criterion_5():
    """Level-2 Hölder scaling of the regularized (1,2) entry at alpha = 0.2."""
    t0 = time.time()
    model, grid = FbmModel(0.2, 1e-3, 2), FrequencyGrid(256, 2 * math.pi)
    exp = Holder((1, 2), tuple(2.0**-j for j in range(1, 7)))
    report = scaling_slope(exp, model, grid, CFG, 1000, seed=0)
    exact = exact_slope(exp, model, grid, CFG)
    elapsed = time.time() - t0
    ok = abs(report.slope - HOLDER_TARGET) <= HOLDER_BAND and elapsed <= HOLDER_SECONDS
    return ok, (f"MC slope {report.slope:.3f} +- {report.stderr:.3f}, grid-exact slope {exact:.3f}, "
                f"target {HOLDER_TARGET} +- {HOLDER_BAND}, {elapsed:.1f}s")


def criterion_6():
    """Rate of convergence in eta on shared noise at alpha = 0.3."""
    t0 = time.time()
    model, grid = FbmModel(0.3, 1e-4, 2), FrequencyGrid(1024, math.pi)
    exp = Rate(1e-4, tuple(2.0**-j for j in range(3, 8)))
    report = scaling_slope(exp, model, grid, CFG, 1000, seed=0)
    exact = exact_slope(exp, model, grid, CFG)
    elapsed = time.time() - t0
    ok = abs(report.slope - RATE_TARGET) <= RATE_BAND and elapsed <= RATE_SECONDS
    return ok, (f"MC slope {report.slope:.3f} +- {report.stderr:.3f}, grid-exact slope {exact:.3f}, "
                f"target {RATE_TARGET} +- {RATE_BAND}, {elapsed:.1f}s")


def criterion_7():
    """Plain area variance grows as eta shrinks; the regularized entry stays bounded."""
    t0 = time.time()
    model, grid = FbmModel(0.2, 1e-3, 2), FrequencyGrid(512, math.pi / 2)
    etas = tuple(2.0**-j for j in range(2, 9))
    plain = scaling_slope(Divergence(etas, False), model, grid, CFG, 2000, seed=0)
    regd = scaling_slope(Divergence(etas, True), model, grid, CFG, 2000, seed=0)
    exact_plain = exact_slope(Divergence(etas, False), model, grid, CFG)
    exact_reg = exact_slope(Divergence(etas, True), model, grid, CFG)
    elapsed = time.time() - t0
    ok = (abs(plain.slope - DIV_TARGET) <= DIV_BAND and abs(regd.slope) <= DIV_REG_BAND
          and elapsed <= DIV_SECONDS)
    return ok, (f"plain slope {plain.slope:.3f} (grid-exact {exact_plain:.3f}, target "
                f"{DIV_TARGET} +- {DIV_BAND}); regularized slope {regd.slope:.3f} (grid-exact "
                f"{exact_reg:.3f}, target 0 +- {DIV_REG_BAND}), {elapsed:.1f}s")


def criterion_8():
    """Grid covariances against the fBm and antisymmetric-fBm laws."""
    t0 = time.time()
    times = [0.2, 0.4, 0.6, 0.8, 1.0]
    grid = FrequencyGrid(4096, 0.3, "cell")
    parts, ok = [], True
    for alpha, kind, pairs in ((0.3, INDEPENDENT, [(1, 1)]), (0.7, INDEPENDENT, [(1, 1)]),
                               (0.3, ANTISYMMETRIC, [(1, 2), (2, 1)])):
        d = 2 if kind == ANTISYMMETRIC else 1
        rows = covariance_table(FbmModel(alpha, 1e-3, d, kind), grid, times, pairs, 2000, seed=0)
        rel = max(r["rel_error"] for r in rows)
        z = max(abs(r["empirical"] - r["exact"]) / r["stderr"] for r in rows)
        smooth = max(abs(r["exact"] - r["smoothed"]) / max(abs(r["smoothed"]), abs(r["s"] * r["t"]) ** alpha)
                     for r in rows)
        good = rel <= COV_TOL and z <= COV_SE
        ok &= good
        label = "cross" if kind == ANTISYMMETRIC else "B_1"
        parts.append(f"alpha={alpha} {label}: rel {rel:.4f}, z {z:.2f}, vs smoothed {smooth:.1e}"
                     f" [{'ok' if good else 'out'}]")
    elapsed = time.time() - t0
    ok &= elapsed <= COV_SECONDS
    return ok, "; ".join(parts) + f" (tol {COV_TOL}, {COV_SE:.0f} SE), {elapsed:.1f}s"


def _all_forests(n_max):
    """Every forest with up to ``n_max`` vertices in canonical numbering, single label."""
    out = [EMPTY]
    for n in range(1, n_max + 1):
        for parent in product(*(range(v) for v in range(1, n + 1))):
            out.append(DecoratedForest(parent, (1,) * n))
    return out


def _splits(forest, vertices):
    """Coproduct terms as (left ids, right ids, split); the empty forest splits trivially."""
    if forest.n == 0:
        return [((), (), None)]
    return [(tuple(vertices[v - 1] for v in sp.left_vertices),
             tuple(vertices[v - 1] for v in sp.right_vertices), sp) for sp in coproduct(forest)]


def _iterated(forest, outer_left):
    """Sorted vertex-set triples of one of the two iterated coproducts."""
    triples = []
    for left_ids, right_ids, sp in _splits(forest, tuple(forest.vertices)):
        if outer_left:
            for a, b, _ in _splits(sp.left, left_ids):
                triples.append((a, b, right_ids))
        else:
            for b, c, _ in _splits(sp.right, right_ids):
                triples.append((left_ids, b, c))
    return sorted(triples)


def _claiming_permutations(xi):
    """Permutations whose reordering is strictly increasing in ``(|x|, x, index)``."""
    out = []
    for sigma in permutations(range(1, len(xi) + 1)):
        keys = [(abs(xi[i - 1]), xi[i - 1], i) for i in sigma]
        if all(a < b for a, b in zip(keys, keys[1:])):
            out.append(sigma)
    return out


def _split_terms(xi):
    return sorted((tuple(int(x) for x in perms[0]), w) for _, perms, w in split_sectors(np.array([xi])))


def criterion_9():
    """Coassociativity, trunk cut counts and sector partition."""
    t0 = time.time()
    forests = _all_forests(5)[1:]
    coassoc = all(_iterated(f, True) == _iterated(f, False) for f in forests)
    trunk = all(len(admissible_cuts(trunk_tree((1,) * n))) == n - 1 for n in range(1, 9))
    partition, tuples = True, 0
    for n in range(1, 5):
        for mags in product(range(1, n + 1), repeat=n):
            for signs in product((-1, 1), repeat=n):
                xi = tuple(m * s for m, s in zip(mags, signs))
                tuples += 1
                claim = _claiming_permutations(xi)
                partition &= len(claim) == 1 and claim[0] == sector_assignment(xi)
                terms = _split_terms(xi)
                partition &= abs(sum(w for _, w in terms) - 1.0) < 1e-12
                partition &= all(abs(xi[a]) <= abs(xi[b]) for q, _ in terms for a, b in zip(q, q[1:]))
                partition &= terms == _split_terms(tuple(-x for x in xi))
    elapsed = time.time() - t0
    ok = coassoc and trunk and partition and elapsed <= COMB_SECONDS
    return ok, (f"coassociativity on {len(forests)} forests {'ok' if coassoc else 'broken'}, "
                f"trunk cuts {'ok' if trunk else 'wrong'}, sector partition on {tuples} tuples "
                f"{'ok' if partition else 'broken'}, {elapsed:.1f}s")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


SLOW = {5, 6, 7, 8}


@pytest.mark.parametrize("n", [pytest.param(n, marks=pytest.mark.slow) if n in SLOW else n
                               for n in sorted(CRITERIA)])
def test_criterion(n):
    from conftest import ACCEPTANCE_LINES
    ok, detail = CRITERIA[n]()
    line = _line(n, ok, detail)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        results.append(ok)
        print(_line(n, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
