"""Oracles, identity residuals and Monte Carlo scaling experiments."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np
from scipy import integrate, stats

from .roughpath import RoughPathTensor, full_amplitude_batch, kernel_plan, unregularized_kernel
from .skeleton import TRIVIAL, RegularizationConfig
from .spectral import (ANTISYMMETRIC, INDEPENDENT, FbmModel, FrequencyGrid, SpectralPath,
                       amplitude_constant, antisym_cross_covariance, continuum_covariance,
                       exact_covariance, fbm_amplitudes, fbm_covariance, kernel_f, noise_batch)
from .trees import shuffles

EPS = 1e-30


# -- exponential polynomials ------------------------------------------------

@dataclass
class ExpPoly:
    """``sum_k p_k(x) exp(i k scale x)`` with integer frequency keys.

    ``terms[k]`` holds polynomial coefficients in ascending powers of ``x``.
    """

    scale: float
    terms: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_path(cls, p: SpectralPath, i: int) -> ExpPoly:
        """Derivative of component ``i``: ``sum_k a_k exp(i xi_k x)`` over signed modes."""
        full = p.full_amplitudes(i)
        terms = {int(k): np.array([a]) for k, a in zip(p.grid.full_k, full) if a != 0}
        return cls(p.grid.delta_xi, terms)

    def __mul__(self, other: ExpPoly) -> ExpPoly:
        if self.scale != other.scale:
            raise ValueError("frequency scales differ")
        out: dict[int, np.ndarray] = {}
        for k1, p1 in self.terms.items():
            for k2, p2 in other.terms.items():
                prod = np.convolve(p1, p2)
                k = k1 + k2
                out[k] = _padd(out[k], prod) if k in out else prod
        return ExpPoly(self.scale, out)

    def antiderivative(self) -> ExpPoly:
        out: dict[int, np.ndarray] = {}
        for k, poly in self.terms.items():
            if k == 0:
                new = np.concatenate([[0.0], poly / np.arange(1, len(poly) + 1)])
            else:
                w = 1j * k * self.scale
                new = np.zeros(len(poly), dtype=complex)
                deriv = np.asarray(poly, dtype=complex)
                sign = 1.0
                for m in range(len(poly)):
                    new[: len(deriv)] += sign * deriv / w ** (m + 1)
                    deriv = deriv[1:] * np.arange(1, len(deriv))
                    sign = -sign
            out[k] = _padd(out[k], new) if k in out else new
        return ExpPoly(self.scale, out)

    def __call__(self, x: float) -> complex:
        total = 0.0 + 0.0j
        for k, poly in self.terms.items():
            total += np.polyval(poly[::-1], x) * np.exp(1j * k * self.scale * x)
        return complex(total)

    def integral_from(self, s: float) -> ExpPoly:
        """``x -> int_s^x self``."""
        anti = self.antiderivative()
        c = anti(s)
        anti.terms[0] = _padd(anti.terms[0], np.array([-c])) if 0 in anti.terms else np.array([-c])
        return anti


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def oracle_iterated_integral(p: SpectralPath, w, s: float, t: float) -> complex:
    """``int_{t > x1 > ... > xn > s} dB(w1)_{x1} ... dB(wn)_{xn}`` by exact nested antiderivatives."""
    w = tuple(w)
    if not 1 <= len(w) <= 5:
        raise ValueError("oracle supports words of length 1..5")
    inner = ExpPoly.from_path(p, w[-1]).integral_from(s)
    for letter in reversed(w[:-1]):
        inner = (ExpPoly.from_path(p, letter) * inner).integral_from(s)
    return inner(t)


def quadrature_iterated_integral(p: SpectralPath, w, s: float, t: float,
                                 rtol: float = 1e-12) -> float:
    """Same quantity by integrating the nested ODE system ``y_j' = B'(w_j) y_{j+1}``."""
    w = tuple(w)
    n = len(w)

    def rhs(x, y):
        out = np.empty(n)
        for j in range(n):
            drive = p.derivative(w[j], x)
            out[j] = drive * (y[j + 1] if j + 1 < n else 1.0)
        return out

    freq = np.max(np.abs(p.grid.full_k[np.concatenate(
        [p.full_amplitudes(i) for i in set(w)]).reshape(len(set(w)), -1).any(axis=0)]))
    sol = integrate.solve_ivp(rhs, (s, t), np.zeros(n), method="DOP853", rtol=rtol,
                              atol=1e-14, max_step=0.5 / (freq * p.grid.delta_xi))
    return float(sol.y[0, -1])


# -- generic deterministic atoms --------------------------------------------

def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    return all(m % q for q in range(2, math.isqrt(m) + 1))


def superincreasing_primes(count: int, start: int = 3) -> list[int]:
    """Primes each exceeding the sum of all previous ones."""
    out: list[int] = []
    m = start
    while len(out) < count:
        if _is_prime(m) and m > sum(out):
            out.append(m)
        m += 1
    return out


def generic_atom_path(d: int, atoms: int, seed: int, delta_xi: float = 0.3) -> SpectralPath:
    """Deterministic path whose signed subset sums of modes never vanish.

    Component ``i`` gets ``atoms`` modes from a superincreasing prime sequence
    and random complex amplitudes.
    """
    primes = superincreasing_primes(d * atoms)
    rng = np.random.default_rng(seed)
    rng.shuffle(primes)
    grid = FrequencyGrid(max(primes), delta_xi)
    comps = []
    for i in range(d):
        mine = primes[i * atoms:(i + 1) * atoms]
        amp = rng.standard_normal(atoms) + 1j * rng.standard_normal(atoms)
        comps.append(dict(zip(mine, amp)))
    return SpectralPath.from_atoms(grid, comps)


def certify_generic(p: SpectralPath, w) -> bool:
    """Brute force: no mode tuple of the word has a vanishing partial sum over any slot subset."""
    supports = [p.support(i) for i in w]
    n = len(supports)
    for combo in product(*supports):
        for mask in range(1, 1 << n):
            if sum(combo[j] for j in range(n) if mask >> j & 1) == 0:
                return False
    return True


# -- identity residuals -----------------------------------------------------

def fno_value(p: SpectralPath, w, s: float, t: float, cfg: RegularizationConfig):
    """``(value, scale)``: complex FNO value and the absolute sum bounding its rounding."""
    w = tuple(w)
    supports = [p.support(i) for i in w]
    k_index = {int(k): j for j, k in enumerate(p.grid.full_k)}
    amps = [p.full_amplitudes(i)[[k_index[int(k)] for k in sup]] for i, sup in zip(w, supports)]
    kernel = kernel_plan(supports, cfg, p.grid.delta_xi).kernel(s, t)
    value, scale = kernel, np.abs(kernel)
    for a in reversed(amps):
        value = value @ a
        scale = scale @ np.abs(a)
    return complex(value), float(scale)


def fubini_residual(p: SpectralPath, w, s: float, t: float,
                    cfg: RegularizationConfig = TRIVIAL) -> float:
    value, _ = fno_value(p, w, s, t, cfg)
    oracle = oracle_iterated_integral(p, w, s, t)
    return abs(value - oracle) / (abs(oracle) + EPS)


def _same_config(*tensors: RoughPathTensor) -> None:
    keys = ("c_reg", "mode")
    ref = tuple(tensors[0].meta.get(k) for k in keys)
    for T in tensors[1:]:
        if tuple(T.meta.get(k) for k in keys) != ref:
            raise ValueError("tensors were built with different configurations")


def chen_residual(X_tu: RoughPathTensor, X_us: RoughPathTensor, X_ts: RoughPathTensor) -> float:
    """Largest normalized defect of ``X_ts - X_tu - X_us = sum X_tu(head) X_us(tail)``.

    Each defect is divided by the summed magnitude scales of every quantity
    entering it, so cancellation in small entries is not mistaken for error.
    """
    _same_config(X_tu, X_us, X_ts)
    if not (X_tu.t == X_ts.t and X_us.s == X_ts.s and X_tu.s == X_us.t):
        raise ValueError("tensors must be taken over (u, t), (s, u) and (s, t)")
    worst = 0.0
    for w in X_ts.levels:
        if len(w) < 2:
            continue
        lhs = X_ts[w] - X_tu[w] - X_us[w]
        rhs = sum(X_tu[w[:k]] * X_us[w[k:]] for k in range(1, len(w)))
        norm = X_ts.scale(w) + X_tu.scale(w) + X_us.scale(w)
        norm += sum(X_tu.scale(w[:k]) * X_us.scale(w[k:]) for k in range(1, len(w)))
        worst = max(worst, abs(lhs - rhs) / (norm + EPS))
    return worst


def shuffle_residual(X: RoughPathTensor, w1, w2) -> float:
    w1, w2 = tuple(w1), tuple(w2)
    if len(w1) + len(w2) > X.depth:
        raise ValueError("shuffle exceeds the tensor depth")
    words = shuffles(w1, w2)
    lhs = X[w1] * X[w2]
    rhs = sum(X[w] for w in words)
    norm = X.scale(w1) * X.scale(w2) + sum(X.scale(w) for w in words)
    return abs(lhs - rhs) / (norm + EPS)


# -- Hölder norm ------------------------------------------------------------

def holder_norm_2var(values, times, kappa: float, level: int = 1) -> float:
    """``sup_{s < t} |f_{st}| / |t - s|^kappa`` over grid pairs; ``values[i][j] = f(times[i], times[j])``."""
    if not 0 < kappa <= level:
        raise ValueError(f"kappa must lie in (0, {level}]")
    f = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if not np.allclose(np.diag(f), 0):
        raise ValueError("f must vanish on the diagonal")
    i, j = np.triu_indices(len(times), k=1)
    gaps = np.abs(times[j] - times[i])
    return float(np.max(np.abs(f[i, j]) / gaps**kappa)) if len(i) else 0.0


# -- Monte Carlo scaling experiments ----------------------------------------

@dataclass(frozen=True)
class Holder:
    """``E|RB(word)_{s0, s0+h}|^2`` against the gap ``h``."""

    word: tuple[int, ...]
    gaps: tuple[float, ...]
    s0: float = 0.0


@dataclass(frozen=True)
class Rate:
    """``E|RB^eta(word) - RB^(eta+delta)(word)|^2`` against ``delta`` on shared noise."""

    eta: float
    deltas: tuple[float, ...]
    word: tuple[int, ...] = (1, 2)
    s: float = 0.0
    t: float = 1.0


@dataclass(frozen=True)
class Divergence:
    """Second moment of the level-2 ``word`` against ``eta``; ``regularized=False`` uses the plain area."""

    etas: tuple[float, ...]
    regularized: bool = False
    word: tuple[int, int] = (1, 2)
    s: float = 0.0
    t: float = 1.0


@dataclass
class SlopeReport:
    slope: float
    stderr: float
    points: list[tuple[float, float, float]]
    M: int
    seed: int
    experiment: str = ""
    meta: dict = field(default_factory=dict)
    samples: list | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("samples")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _word_values(kernel: np.ndarray, amps: list[np.ndarray]) -> np.ndarray:
    """``kernel`` contracted with one amplitude row per slot, for each sample."""
    out = kernel @ amps[-1].T
    for a in reversed(amps[:-1]):
        out = np.einsum("...gm,mg->...m", out, a)
    return out


def _path_values(model: FbmModel, grid: FrequencyGrid, noise: np.ndarray, word, s: float,
                 t: float, kernel: np.ndarray | None) -> np.ndarray:
    amp = fbm_amplitudes(model, grid, noise)
    if len(word) == 1:
        f = np.exp(1j * t * grid.xi) - np.exp(1j * s * grid.xi)
        return 2 * np.real((amp[:, word[0] - 1, :] * (f / (1j * grid.xi))).sum(axis=1))
    full = full_amplitude_batch(amp)
    vals = _word_values(kernel, [full[:, i - 1, :] for i in word])
    return _checked_real(vals)


def _checked_real(vals: np.ndarray) -> np.ndarray:
    big = np.max(np.abs(vals)) if vals.size else 0.0
    if big and np.max(np.abs(vals.imag)) > 1e-8 * big:
        raise ArithmeticError("Monte Carlo values are not real")
    return vals.real


def _regress(xs, ys, mc_se, M: int, seed: int, name: str, meta: dict) -> SlopeReport:
    x, y = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    if len(x) < 4 or not np.all(np.isfinite(y)):
        raise ValueError("need at least 4 usable regression points")
    fit = stats.linregress(x, y)
    points = [(float(a), float(b), float(c)) for a, b, c in zip(x, y, mc_se)]
    return SlopeReport(float(fit.slope), float(fit.stderr), points, M, seed, name, meta)


def _second_moment(vals: np.ndarray) -> tuple[float, float]:
    sq = vals**2
    return float(np.mean(sq)), float(np.std(sq, ddof=1) / math.sqrt(len(sq)))


def scaling_slope(experiment, model: FbmModel, grid: FrequencyGrid, cfg: RegularizationConfig,
                  M: int, seed: int, batch: int = 250) -> SlopeReport:
    """Log-log slope of a Monte Carlo second moment across the experiment's abscissae.

    Samples are drawn in batches from per-sample noise substreams, so the
    report depends only on ``(experiment, model, grid, cfg, M, seed)``.
    ``points`` hold ``(log abscissa, log estimate, standard error of the estimate)``.
    """
    if M < 100:
        raise ValueError("need M >= 100 samples")
    d = max(max(getattr(experiment, "word", (1,))), model.d)
    model = FbmModel(model.alpha, model.eta, d, model.kind)
    batches = [(b, min(batch, M - b)) for b in range(0, M, batch)]

    def noise(start, size):
        return noise_batch(grid, d, seed, size, start)

    if isinstance(experiment, Holder):
        word = tuple(experiment.word)
        xs = list(experiment.gaps)
        plan = (kernel_plan([grid.full_k] * len(word), cfg, grid.delta_xi)
                if len(word) > 1 else None)
        kernels = [plan.kernel(experiment.s0, experiment.s0 + h) if plan else None for h in xs]
        sums = [[] for _ in xs]
        for start, size in batches:
            z = noise(start, size)
            for j, h in enumerate(xs):
                sums[j].append(_path_values(model, grid, z, word, experiment.s0,
                                            experiment.s0 + h, kernels[j]))
        name = "holder"
    elif isinstance(experiment, Rate):
        word = tuple(experiment.word)
        xs = list(experiment.deltas)
        plan = kernel_plan([grid.full_k] * len(word), cfg, grid.delta_xi)
        kernel = plan.kernel(experiment.s, experiment.t)
        base = FbmModel(model.alpha, experiment.eta, d, model.kind)
        sums = [[] for _ in xs]
        for start, size in batches:
            z = noise(start, size)
            ref = _path_values(base, grid, z, word, experiment.s, experiment.t, kernel)
            for j, delta in enumerate(xs):
                other = FbmModel(model.alpha, experiment.eta + delta, d, model.kind)
                sums[j].append(ref - _path_values(other, grid, z, word, experiment.s,
                                                  experiment.t, kernel))
        name = "rate"
    elif isinstance(experiment, Divergence):
        word = tuple(experiment.word)
        xs = list(experiment.etas)
        if experiment.regularized:
            kernel = kernel_plan([grid.full_k] * 2, cfg, grid.delta_xi).kernel(
                experiment.s, experiment.t)
        else:
            kernel = unregularized_kernel([grid.full_k] * 2, experiment.s, experiment.t,
                                          grid.delta_xi)
        sums = [[] for _ in xs]
        for start, size in batches:
            z = noise(start, size)
            for j, eta in enumerate(xs):
                m = FbmModel(model.alpha, eta, d, model.kind)
                sums[j].append(_path_values(m, grid, z, word, experiment.s, experiment.t, kernel))
        name = "divergence-regularized" if experiment.regularized else "divergence"
    else:
        raise TypeError(f"unknown experiment {experiment!r}")

    samples = [np.concatenate(v) for v in sums]
    moments = [_second_moment(v) for v in samples]
    meta = {"alpha": model.alpha, "eta": model.eta, "K": grid.K, "delta_xi": grid.delta_xi,
            "rule": grid.rule, "c_reg": cfg.c_reg, "mode": cfg.mode.value,
            "experiment": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in asdict(experiment).items()}}
    report = _regress(xs, [m for m, _ in moments], [se for _, se in moments], M, seed, name, meta)
    report.meta["abscissae"] = [float(x) for x in xs]
    report.meta["moments"] = [m for m, _ in moments]
    report.samples = samples
    return report


def exact_second_moments(experiment, model: FbmModel, grid: FrequencyGrid,
                         cfg: RegularizationConfig) -> tuple[list[float], list[float]]:
    """Grid-exact second moments behind ``scaling_slope``, without sampling.

    Covers level 1 and level-2 words with distinct letters of the
    independent model, where the moment is ``sum |kernel|^2 * weights^2``
    over signed modes.  Returns ``(abscissae, moments)``.
    """
    word = tuple(experiment.word)
    if model.kind != INDEPENDENT or len(word) > 2 or len(set(word)) != len(word):
        raise ValueError("exact moments need the independent model and distinct letters, level <= 2")
    c2 = amplitude_constant(model.alpha) ** 2

    def weights(eta):
        return np.repeat(c2 * grid.mass(model.alpha, eta), 2)

    def kernel(s, t, regularized=True):
        if len(word) == 1:
            f = np.exp(1j * t * grid.xi) - np.exp(1j * s * grid.xi)
            return np.repeat(f / (1j * grid.xi), 2)
        if not regularized:
            return unregularized_kernel([grid.full_k] * 2, s, t, grid.delta_xi)
        return kernel_plan([grid.full_k] * 2, cfg, grid.delta_xi).kernel(s, t)

    def moment(k2, w):
        return float(np.sum(k2 * w) if len(word) == 1 else np.sum(k2 * np.outer(w, w)))

    if isinstance(experiment, Holder):
        xs = list(experiment.gaps)
        w = weights(model.eta)
        ys = [moment(np.abs(kernel(experiment.s0, experiment.s0 + h)) ** 2, w) for h in xs]
    elif isinstance(experiment, Rate):
        xs = list(experiment.deltas)
        k2 = np.abs(kernel(experiment.s, experiment.t)) ** 2
        a = np.sqrt(weights(experiment.eta))
        ys = []
        for delta in xs:
            b = np.sqrt(weights(experiment.eta + delta))
            coef = (a - b) ** 2 if len(word) == 1 else (np.outer(a, a) - np.outer(b, b)) ** 2
            ys.append(float(np.sum(k2 * coef)))
    elif isinstance(experiment, Divergence):
        xs = list(experiment.etas)
        k2 = np.abs(kernel(experiment.s, experiment.t, experiment.regularized)) ** 2
        ys = [moment(k2, weights(eta)) for eta in xs]
    else:
        raise TypeError(f"unknown experiment {experiment!r}")
    return [float(x) for x in xs], ys


def exact_slope(experiment, model: FbmModel, grid: FrequencyGrid,
                cfg: RegularizationConfig) -> float:
    """Least-squares log-log slope of ``exact_second_moments``."""
    xs, ys = exact_second_moments(experiment, model, grid, cfg)
    return float(stats.linregress(np.log(xs), np.log(ys)).slope)


def covariance_table(model: FbmModel, grid: FrequencyGrid, times, pairs, M: int,
                     seed: int, batch: int = 500) -> list[dict]:
    """Empirical, grid-exact, smoothed-continuum and limiting covariances.

    One row per component pair and ordered time pair.  ``target`` is the
    ``eta -> 0`` law (fBm, or the antisymmetric cross-covariance);
    ``rel_error`` compares ``exact`` with it, relative to ``|target|`` or to
    ``|s t|^alpha`` where the target vanishes.
    """
    times = np.asarray(times, dtype=float)
    d_noise = 1 if model.kind == ANTISYMMETRIC else model.d
    f = kernel_f(times, grid.xi)
    sums = np.zeros((model.d, model.d, len(times), len(times)))
    sq = np.zeros_like(sums)
    for start in range(0, M, batch):
        size = min(batch, M - start)
        amp = fbm_amplitudes(model, grid, noise_batch(grid, d_noise, seed, size, start))
        # path values at each time: 2 Re sum a_k f_t(xi_k)
        vals = 2 * np.real(np.einsum("mdk,tk->mdt", amp, f))
        prod_ = np.einsum("mis,mjt->mijst", vals, vals)
        sums += prod_.sum(axis=0)
        sq += (prod_**2).sum(axis=0)
    mean = sums / M
    se = np.sqrt(np.maximum(sq / M - mean**2, 0.0) * M / (M - 1) / M)
    rows = []
    a = model.alpha
    for i, j in pairs:
        for p, s in enumerate(times):
            for q, t in enumerate(times):
                exact = exact_covariance(model, grid, i, j, s, t)
                if i == j:
                    target = float(fbm_covariance(a, s, t))
                elif model.kind == ANTISYMMETRIC:
                    target = float(antisym_cross_covariance(a, s, t))
                    target *= 1 if (i, j) == (1, 2) else -1
                else:
                    target = 0.0
                ref = abs(target) if target != 0 else abs(s * t) ** a
                rows.append({"i": i, "j": j, "s": float(s), "t": float(t),
                             "empirical": float(mean[i - 1, j - 1, p, q]),
                             "stderr": float(se[i - 1, j - 1, p, q]), "exact": exact,
                             "smoothed": continuum_covariance(model, i, j, s, t),
                             "target": target, "rel_error": abs(exact - target) / ref})
    return rows


def write_samples_csv(report: SlopeReport, path) -> None:
    """Per-point samples as ``abscissa,sample_index,value``."""
    samples = report.samples
    if samples is None:
        raise ValueError("report carries no samples")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["abscissa", "sample_index", "value"])
        for x, vals in zip(report.meta["abscissae"], samples):
            for m, v in enumerate(vals):
                w.writerow([repr(x), m, repr(float(v))])
