"""Skeleton integrals, regularization domains and regularized tree integrals.

The regularized integral of a tree over ``(s, t)`` is its skeleton increment
minus, for every admissible cut, the regularized integral of the root part
times the skeleton of the top part at ``s``.  Unrolling that recursion once
per forest shape (``iterated_expansion``) turns every evaluation into a
signed sum of products of block skeletons, each block being a subtree taken
at time ``t`` or ``s``.  Two evaluators share the expansion:

* ``reg_iterated_integral`` on an ``AtomicTreeMeasure`` (a product measure,
  one amplitude table per vertex): block skeletons are scalars obtained by
  compiled enumeration of ordered tuples.
* ``monomial_iterated`` on explicit mode tuples: block skeletons are arrays,
  one entry per tuple.  This is the kernel of Fourier normal ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from ._enumerate import block_weights
from .permutations import mode_rank
from .trees import DecoratedForest, admissible_cuts
from .spectral import SpectralPath

T_TAG, S_TAG = 0, 1


class Mode(enum.Enum):
    REGULARIZED = "regularized"
    TRIVIAL = "trivial"


class ResonanceError(ArithmeticError):
    """A vanishing resonance denominator carried nonzero weight in TRIVIAL mode."""


@dataclass(frozen=True)
class RegularizationConfig:
    c_reg: float = 0.5
    mode: Mode = Mode.REGULARIZED

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.c_reg < 1:
            raise ValueError(f"c_reg must lie in (0, 1), got {self.c_reg}")

    @property
    def trivial(self) -> bool:
        return self.mode is Mode.TRIVIAL


TRIVIAL = RegularizationConfig(mode=Mode.TRIVIAL)


# -- domains on real frequency tuples ---------------------------------------

def _check_tuple(forest: DecoratedForest, xi) -> tuple[float, ...]:
    xi = tuple(float(x) for x in xi)
    if len(xi) != forest.n:
        raise ValueError(f"need {forest.n} frequencies, got {len(xi)}")
    if any(x == 0 for x in xi):
        raise ValueError("frequencies must be nonzero")
    return xi


def in_plus_domain(forest: DecoratedForest, xi) -> bool:
    """Magnitudes nondecreasing along the vertex order, ties by signed value."""
    xi = _check_tuple(forest, xi)
    keys = [(abs(x), x) for x in xi]
    return all(a <= b for a, b in zip(keys, keys[1:]))


def resonance_denominators(forest: DecoratedForest, xi) -> list[float]:
    """``xi_v + sum of xi_w over w above v`` for each vertex ``v``."""
    xi = _check_tuple(forest, xi)
    return [xi[v - 1] + sum(xi[w - 1] for w in forest.above(v)) for v in forest.vertices]


def in_reg_domain(forest: DecoratedForest, xi, cfg: RegularizationConfig) -> bool:
    """Every denominator beats ``c_reg`` times the largest magnitude above its vertex.

    The ordering condition is separate (``in_plus_domain``); tree integrals
    sum over tuples passing both.  In TRIVIAL mode only nonvanishing
    denominators are required.
    """
    xi = _check_tuple(forest, xi)
    dens = resonance_denominators(forest, xi)
    if cfg.trivial:
        return all(d != 0 for d in dens)
    for v, dv in zip(forest.vertices, dens):
        up = forest.above(v)
        if up and not abs(dv) > cfg.c_reg * max(abs(xi[w - 1]) for w in up):
            return False
    return True


# -- the unrolled increment/boundary recursion ------------------------------

Term = tuple[int, tuple[tuple[tuple[int, ...], int], ...]]


@lru_cache(maxsize=None)
def _tree_terms(parent: tuple[int, ...]) -> tuple[Term, ...]:
    """Expansion of a tree given by its local parent map; blocks use local ids."""
    tree = DecoratedForest(parent, (1,) * len(parent))
    everything = tuple(tree.vertices)
    terms: list[Term] = [(1, ((everything, T_TAG),)), (-1, ((everything, S_TAG),))]
    if tree.n == 1:
        return tuple(terms)
    for cut in admissible_cuts(tree):
        top = set(cut.vertices)
        for v in cut.vertices:
            top |= tree.above(v)
        left = tuple(v for v in everything if v not in top)
        tops = tuple(
            (tuple(sorted((c,) + tuple(tree.above(c)))), S_TAG) for c in cut.vertices)
        sub = _tree_terms(tree.induced(left).parent)
        for sign, blocks in sub:
            mapped = tuple((tuple(left[u - 1] for u in b), tag) for b, tag in blocks)
            terms.append((-sign, mapped + tops))
    return tuple(terms)


@lru_cache(maxsize=None)
def iterated_expansion(parent: tuple[int, ...]) -> tuple[Term, ...]:
    """Signed block products equal to the regularized integral over ``(s, t)``.

    Each term is ``(sign, ((block, tag), ...))`` where ``block`` is a sorted
    tuple of vertex ids spanning a subtree and ``tag`` selects ``t`` or ``s``.
    Forests multiply over their components.
    """
    forest = DecoratedForest(parent, (1,) * len(parent))
    per_tree = []
    for comp in forest.components:
        local = _tree_terms(forest.induced(comp).parent)
        per_tree.append([(sg, tuple((tuple(comp[u - 1] for u in b), tag) for b, tag in blocks))
                         for sg, blocks in local])
    out = []
    for combo in product(*per_tree):
        sign = 1
        blocks: tuple = ()
        for sg, bl in combo:
            sign *= sg
            blocks += bl
        out.append((sign, blocks))
    return tuple(out)


def _block_parent(forest: DecoratedForest, block: tuple[int, ...]) -> np.ndarray:
    pos = {v: i for i, v in enumerate(block)}
    return np.array([pos.get(forest.parent[v - 1], -1) for v in block], dtype=np.int64)


# -- product measures -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AtomicTreeMeasure:
    """Product of per-vertex atomic measures on the signed grid modes ``kvals``.

    ``tables[v-1]`` holds the amplitudes of vertex ``v`` over ``kvals``, which
    must be listed in sector order.
    """

    forest: DecoratedForest
    kvals: np.ndarray
    tables: np.ndarray
    delta_xi: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        kv = np.asarray(self.kvals, dtype=np.int64)
        tab = np.ascontiguousarray(self.tables, dtype=np.complex128)
        if tab.shape != (self.forest.n, kv.shape[0]):
            raise ValueError("tables must have shape (n, len(kvals))")
        if np.any(kv == 0):
            raise ValueError("zero frequency in the grid")
        if np.any(np.diff(mode_rank(kv)) <= 0):
            raise ValueError("kvals must be distinct and in sector order")
        if not np.all(np.isfinite(tab)):
            raise ValueError("amplitude tables must be finite")
        object.__setattr__(self, "kvals", kv)
        object.__setattr__(self, "tables", tab)

    @classmethod
    def from_path(cls, forest: DecoratedForest, path: SpectralPath) -> AtomicTreeMeasure:
        tables = np.stack([path.full_amplitudes(label) for label in forest.labels])
        return cls(forest, path.grid.full_k, tables, path.grid.delta_xi)

    def restrict(self, vertices) -> AtomicTreeMeasure:
        vs = sorted(vertices)
        return AtomicTreeMeasure(self.forest.induced(vs), self.kvals,
                                 self.tables[[v - 1 for v in vs]], self.delta_xi)

    def block_coefficients(self, block: tuple[int, ...], cfg: RegularizationConfig):
        key = (block, cfg)
        if key not in self._cache:
            parent = _block_parent(self.forest, block)
            amp = self.tables[[v - 1 for v in block]]
            W, off, resonant = block_weights(parent, amp, self.kvals, cfg.c_reg, cfg.trivial)
            if resonant:
                raise ResonanceError(f"vanishing denominator on block {block} of {self.forest}")
            nz = np.nonzero(W)[0]
            freqs = (nz - off) * self.delta_xi
            coef = W[nz] / self.delta_xi ** len(block)
            self._cache[key] = (freqs, coef)
        return self._cache[key]

    def block_skeleton(self, block, cfg, t: float) -> complex:
        freqs, coef = self.block_coefficients(tuple(block), cfg)
        return complex(np.sum(coef * np.exp(1j * t * freqs)))


@dataclass(frozen=True)
class TreeIntegralValue:
    value: complex
    forest: DecoratedForest
    config: RegularizationConfig
    s: float | None
    t: float

    def __complex__(self) -> complex:
        return complex(self.value)


def skeleton_integral(m: AtomicTreeMeasure, cfg: RegularizationConfig, t: float) -> TreeIntegralValue:
    """Product over tree components of the summed skeleton integrands at ``t``."""
    value = 1.0 + 0.0j
    for comp in m.forest.components:
        value *= m.block_skeleton(comp, cfg, t)
    return TreeIntegralValue(value, m.forest, cfg, None, t)


def reg_iterated_integral(m: AtomicTreeMeasure, cfg: RegularizationConfig, t: float,
                          s: float) -> TreeIntegralValue:
    if m.forest.n == 0:
        return TreeIntegralValue(1.0 + 0.0j, m.forest, cfg, s, t)
    times = (t, s)
    memo: dict = {}
    total = 0.0 + 0.0j
    for sign, blocks in iterated_expansion(m.forest.parent):
        prod = 1.0 + 0.0j
        for block, tag in blocks:
            key = (block, tag)
            if key not in memo:
                memo[key] = m.block_skeleton(block, cfg, times[tag])
            prod *= memo[key]
        total += sign * prod
    return TreeIntegralValue(total, m.forest, cfg, s, t)


# -- explicit mode tuples ---------------------------------------------------

def _monomial_block(parent: np.ndarray, cols: np.ndarray, delta_xi: float, cfg):
    """Time-independent coefficient and total mode of one block for each row."""
    m = cols.shape[1]
    D = cols.astype(np.int64, copy=True)
    Mx = np.zeros_like(D)
    for v in range(m - 1, 0, -1):
        p = parent[v]
        if p >= 0:
            D[:, p] += D[:, v]
            np.maximum(Mx[:, p], np.maximum(np.abs(cols[:, v]), Mx[:, v]), out=Mx[:, p])
    if cfg.trivial:
        if np.any(D == 0):
            raise ResonanceError("vanishing denominator in TRIVIAL mode")
        keep = None
    else:
        keep = np.ones(D.shape[0], dtype=bool)
        for v in range(m):
            has_above = Mx[:, v] > 0
            keep &= ~has_above | (np.abs(D[:, v]) > cfg.c_reg * Mx[:, v])
    den = np.prod((1j * delta_xi) * D, axis=1)
    if keep is None:
        coef = 1.0 / den
    else:
        coef = np.zeros(D.shape[0], dtype=complex)
        coef[keep] = 1.0 / den[keep]
    return coef, D[:, 0]


def monomial_coefficients(forest: DecoratedForest, modes: np.ndarray, delta_xi: float,
                          cfg: RegularizationConfig) -> dict[int, np.ndarray]:
    """Time-independent form of ``monomial_iterated``.

    The blocks of every expansion term partition the vertices, so the result
    is ``sum over masks A of C[A] * exp(i dxi (t * sum_{v in A} k_v + s * sum_{v not in A} k_v))``
    where bit ``v-1`` of ``A`` marks vertex ``v``.  Returns ``{A: C[A]}``.
    """
    modes = np.asarray(modes, dtype=np.int64)
    coefs: dict = {}
    out: dict[int, np.ndarray] = {}
    for sign, blocks in iterated_expansion(forest.parent):
        prod = None
        mask = 0
        for block, tag in blocks:
            if block not in coefs:
                cols = modes[:, [v - 1 for v in block]]
                coefs[block] = _monomial_block(_block_parent(forest, block), cols, delta_xi, cfg)[0]
            if tag == T_TAG:
                for v in block:
                    mask |= 1 << (v - 1)
            prod = coefs[block] if prod is None else prod * coefs[block]
        if mask in out:
            out[mask] = out[mask] + prod if sign > 0 else out[mask] - prod
        else:
            out[mask] = prod.copy() if sign > 0 else -prod
    return out


def monomial_iterated(forest: DecoratedForest, modes: np.ndarray, delta_xi: float,
                      cfg: RegularizationConfig, t: float, s: float) -> np.ndarray:
    """Regularized integral of ``forest`` against unit atoms at each row of ``modes``.

    ``modes[:, v-1]`` is the integer mode carried by vertex ``v``.  Rows are
    assumed to lie in the ordered domain of the forest.
    """
    modes = np.asarray(modes, dtype=np.int64)
    total = np.zeros(modes.shape[0], dtype=complex)
    bits = 1 << np.arange(forest.n)
    for mask, coef in monomial_coefficients(forest, modes, delta_xi, cfg).items():
        at_t = (mask & bits) != 0
        phase = t * modes[:, at_t].sum(axis=1) + s * modes[:, ~at_t].sum(axis=1)
        total += coef * np.exp(1j * delta_xi * phase)
    return total
