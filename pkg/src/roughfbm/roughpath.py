"""Regularized iterated integrals of spectral paths by Fourier normal ordering.

For a word ``w`` of length ``n`` the value is a multilinear form in the mode
amplitudes of the letters:

    RB(w)_{ts} = sum over mode tuples k of  kappa(k) * a^(w1)_k1 ... a^(wn)_kn

The kernel ``kappa`` does not depend on the letters.  For each tuple it sorts
the modes by magnitude (the tuple's sector ``sigma``), expands the reordered
simplex integral into the signed forests of ``permutation_graph(sigma)`` and
evaluates each forest's regularized integral on the sorted modes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .permutations import permutation_graph, sector_permutations, split_sectors
from .skeleton import RegularizationConfig, monomial_coefficients
from .spectral import FrequencyGrid, SpectralPath, kernel_f

DEFAULT_BUDGET = 10**9
MAX_LEVEL = 5
CHUNK = 1 << 18

Word = tuple[int, ...]


class ResourceError(RuntimeError):
    """The requested computation exceeds the configured tuple budget."""


class RealnessError(ArithmeticError):
    """A value expected to be real carried a non-negligible imaginary part."""


@lru_cache(maxsize=None)
def _sector_terms(sigma: tuple[int, ...]):
    return permutation_graph(sigma, (1,) * len(sigma)).terms


def _sector_pieces(modes: np.ndarray, tie_rule: str):
    if tie_rule == "split":
        yield from split_sectors(modes)
    elif tie_rule == "signed":
        yield np.arange(modes.shape[0]), sector_permutations(modes), 1.0
    else:
        raise ValueError(f"unknown tie rule {tie_rule!r}")


def _check_budget(shape, budget: int) -> None:
    total = math.prod(shape)
    if total * (1 << len(shape)) > budget:
        raise ResourceError(f"{total} tuples of length {len(shape)} exceed the budget {budget}")


class KernelPlan:
    """Time-independent part of the kernel over a product of per-slot supports.

    ``coef[A]`` multiplies ``exp(i dxi (t * k_A + s * k_rest))`` where ``k_A``
    sums the modes of the slots in bitmask ``A``; any ``(s, t)`` is then a
    cheap evaluation.  ``tie_rule`` decides tuples with equal magnitudes:
    ``"split"`` shares them equally among all orderings of the tied slots,
    ``"signed"`` sends them to the single sector given by ``sector_assignment``.
    """

    def __init__(self, supports, cfg: RegularizationConfig, delta_xi: float,
                 budget: int = DEFAULT_BUDGET, tie_rule: str = "split"):
        self.supports = [np.asarray(x, dtype=np.int64) for x in supports]
        self.shape = tuple(len(x) for x in self.supports)
        self.delta_xi = float(delta_xi)
        self.cfg = cfg
        n = self.n = len(self.shape)
        total = math.prod(self.shape)
        _check_budget(self.shape, budget)
        coef = np.zeros((1 << n, total), dtype=complex)
        weights = n ** np.arange(n)
        for start in range(0, total, CHUNK):
            flat = np.arange(start, min(start + CHUNK, total))
            modes = np.stack(
                [self.supports[j][i] for j, i in enumerate(np.unravel_index(flat, self.shape))],
                axis=1)
            for rows, perm, share in _sector_pieces(modes, tie_rule):
                code = perm @ weights
                for c in np.unique(code):
                    sel = np.nonzero(code == c)[0]
                    sigma0 = perm[sel[0]]
                    eta = modes[rows[sel]][:, sigma0]
                    target = start + rows[sel]
                    to_slots = _slot_masks(tuple(int(x) for x in sigma0))
                    for sign, forest in _sector_terms(tuple(int(x) + 1 for x in sigma0)):
                        parts = monomial_coefficients(forest, eta, self.delta_xi, cfg)
                        for mask, val in parts.items():
                            coef[to_slots[mask], target] += (sign * share) * val
        self.coef = coef.reshape((1 << n,) + self.shape)

    def kernel(self, s: float, t: float) -> np.ndarray:
        phase_t = [np.exp(1j * self.delta_xi * t * k) for k in self.supports]
        phase_s = [np.exp(1j * self.delta_xi * s * k) for k in self.supports]
        out = np.zeros(self.shape, dtype=complex)
        for mask in range(1 << self.n):
            factor = np.ones((), dtype=complex)
            for j in range(self.n):
                ph = phase_t[j] if mask >> j & 1 else phase_s[j]
                factor = np.multiply.outer(factor, ph)
            out += self.coef[mask] * factor
        return out


@lru_cache(maxsize=None)
def _slot_masks(sigma0: tuple[int, ...]) -> np.ndarray:
    """Vertex bitmask -> slot bitmask, vertex ``j+1`` sitting in slot ``sigma0[j]``."""
    n = len(sigma0)
    table = np.zeros(1 << n, dtype=np.int64)
    for mask in range(1 << n):
        table[mask] = sum(1 << sigma0[j] for j in range(n) if mask >> j & 1)
    return table


_PLANS: dict = {}
PLAN_CACHE_ENTRIES = 5 * 10**7  # complex coefficients kept across cached plans


def kernel_plan(supports, cfg: RegularizationConfig, delta_xi: float,
                budget: int = DEFAULT_BUDGET, tie_rule: str = "split") -> KernelPlan:
    """Memoized ``KernelPlan``; recent plans are kept up to ``PLAN_CACHE_ENTRIES`` coefficients."""
    key = (tuple(np.asarray(x, dtype=np.int64).tobytes() for x in supports), cfg,
           float(delta_xi), tie_rule)
    _check_budget(tuple(len(x) for x in supports), budget)
    if key in _PLANS:
        _PLANS[key] = _PLANS.pop(key)
        return _PLANS[key]
    plan = KernelPlan(supports, cfg, delta_xi, budget, tie_rule)
    while _PLANS and sum(q.coef.size for q in _PLANS.values()) + plan.coef.size > PLAN_CACHE_ENTRIES:
        _PLANS.pop(next(iter(_PLANS)))
    _PLANS[key] = plan
    return plan


def fno_kernel(supports, s: float, t: float, cfg: RegularizationConfig, delta_xi: float,
               budget: int = DEFAULT_BUDGET, tie_rule: str = "split") -> np.ndarray:
    """Kernel over the product of per-slot mode supports, shape ``(len(s1), ..., len(sn))``."""
    return kernel_plan(supports, cfg, delta_xi, budget, tie_rule).kernel(s, t)


def unregularized_kernel(supports, s: float, t: float, delta_xi: float) -> np.ndarray:
    """Kernel of the plain double integral ``int_s^t dx1 e^{i xi1 x1} int_s^x1 e^{i xi2 x2} dx2``."""
    x1 = np.asarray(supports[0], dtype=float)[:, None] * delta_xi
    x2 = np.asarray(supports[1], dtype=float)[None, :] * delta_xi

    def window(w):
        safe = np.where(w == 0, 1.0, w)
        return np.where(w == 0, t - s, (np.exp(1j * w * t) - np.exp(1j * w * s)) / (1j * safe))

    return (window(x1 + x2) - np.exp(1j * x2 * s) * window(x1)) / (1j * x2)


def contract(kernel: np.ndarray, amplitudes) -> complex:
    """``sum kernel[k1..kn] * a1[k1] * ... * an[kn]`` with pairwise-summed reductions."""
    out = kernel
    for a in reversed(amplitudes):
        out = out @ a
    return complex(out)


def _slots(p: SpectralPath, w: Word):
    w = tuple(int(x) for x in w)
    if not w:
        raise ValueError("empty word")
    if any(not 1 <= x <= p.d for x in w):
        raise ValueError(f"word {w} uses letters outside 1..{p.d}")
    supports = [p.support(x) for x in w]
    full = [p.full_amplitudes(x) for x in w]
    k_index = {int(k): i for i, k in enumerate(p.grid.full_k)}
    amps = [f[[k_index[int(k)] for k in sup]] for f, sup in zip(full, supports)]
    return w, supports, amps


def _real(value: complex, scale: float, what: str) -> float:
    if abs(value.imag) > 1e-10 * (scale + 1e-300) and abs(value.imag) > 1e-14:
        raise RealnessError(f"{what}: imaginary part {value.imag:.3e} vs scale {scale:.3e}")
    return value.real


def fno_level(p: SpectralPath, w, s: float, t: float, cfg: RegularizationConfig,
              budget: int = DEFAULT_BUDGET) -> float:
    w, supports, amps = _slots(p, w)
    kernel = fno_kernel(supports, s, t, cfg, p.grid.delta_xi, budget)
    value = contract(kernel, amps)
    scale = contract(np.abs(kernel), [np.abs(a) for a in amps]).real
    return _real(value, scale, f"word {w}")


def unregularized_area(p: SpectralPath, s: float, t: float, i: int = 1, j: int = 2) -> float:
    if p.d < 2:
        raise ValueError("the area needs at least two components")
    _, supports, amps = _slots(p, (i, j))
    kernel = unregularized_kernel(supports, s, t, p.grid.delta_xi)
    value = contract(kernel, amps)
    scale = contract(np.abs(kernel), [np.abs(a) for a in amps]).real
    return _real(value, scale, f"area ({i},{j})")


def word_key(w: Word) -> str:
    return ",".join(map(str, w))


@dataclass
class RoughPathTensor:
    """Levels ``1..N`` over ``(s, t)``.

    ``scales[w]`` is the absolute sum behind ``levels[w]``: the kernel and
    amplitudes contracted in modulus.  It bounds the value and sets the
    size of its rounding error.
    """

    s: float
    t: float
    levels: dict[Word, float]
    meta: dict = field(default_factory=dict)
    scales: dict[Word, float] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return max((len(w) for w in self.levels), default=0)

    def __getitem__(self, w) -> float:
        return self.levels[tuple(w)]

    def scale(self, w) -> float:
        w = tuple(w)
        return self.scales.get(w, abs(self.levels[w]))

    def to_dict(self) -> dict:
        out = {"s": self.s, "t": self.t}
        out.update(self.meta)

        def ordered(d):
            return {word_key(w): v for w, v in sorted(d.items(), key=lambda kv: (len(kv[0]), kv[0]))}

        out["levels"] = ordered(self.levels)
        if self.scales:
            out["scales"] = ordered(self.scales)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> RoughPathTensor:
        data = dict(data)

        def parse(d):
            return {tuple(int(x) for x in k.split(",")): float(v) for k, v in d.items()}

        levels = parse(data.pop("levels"))
        scales = parse(data.pop("scales", {}))
        s, t = float(data.pop("s")), float(data.pop("t"))
        return cls(s, t, levels, data, scales)


def build_tensor(p: SpectralPath, N: int, s: float, t: float, cfg: RegularizationConfig,
                 budget: int = DEFAULT_BUDGET, meta: dict | None = None) -> RoughPathTensor:
    """All words of length ``1..N``; level 1 holds the path increments themselves."""
    if not 1 <= N <= MAX_LEVEL:
        raise ValueError(f"N must lie in 1..{MAX_LEVEL}")
    levels: dict[Word, float] = {}
    scales: dict[Word, float] = {}
    df = (kernel_f(t, p.grid.xi) - kernel_f(s, p.grid.xi))
    for i in range(1, p.d + 1):
        levels[(i,)] = float(p.increment(i, s, t))
        scales[(i,)] = float(2 * np.sum(np.abs(p.amp[i - 1] * df)))
    for n in range(2, N + 1):
        kernels: dict = {}
        for w in product(range(1, p.d + 1), repeat=n):
            _, supports, amps = _slots(p, w)
            key = tuple(x.tobytes() for x in supports)
            if key not in kernels:
                kernel = fno_kernel(supports, s, t, cfg, p.grid.delta_xi, budget)
                kernels[key] = (kernel, np.abs(kernel))
            kernel, mod = kernels[key]
            value = contract(kernel, amps)
            scale = contract(mod, [np.abs(a) for a in amps]).real
            levels[w] = _real(value, scale, f"word {w}")
            scales[w] = scale
    info = {"c_reg": cfg.c_reg, "mode": cfg.mode.value}
    info.update(meta or {})
    return RoughPathTensor(s, t, levels, info, scales)


def full_kernel(grid: FrequencyGrid, n: int, s: float, t: float, cfg: RegularizationConfig,
                budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Kernel over the whole grid in every slot, for Monte Carlo over sampled spectra."""
    return fno_kernel([grid.full_k] * n, s, t, cfg, grid.delta_xi, budget)


def bilinear_values(kernel: np.ndarray, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    """``a1[m] @ kernel @ a2[m]`` for each row ``m`` of two amplitude batches."""
    return np.einsum("mi,mi->m", a1 @ kernel, a2)


def full_amplitude_batch(amp: np.ndarray) -> np.ndarray:
    """Hermitian extension of ``(..., K)`` positive-mode amplitudes onto the full mode list."""
    out = np.empty(amp.shape[:-1] + (2 * amp.shape[-1],), dtype=complex)
    out[..., 0::2] = np.conj(amp)
    out[..., 1::2] = amp
    return out
