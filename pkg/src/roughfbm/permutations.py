"""Magnitude sectors of frequency tuples and the signed forests obtained by
reordering a simplex integral along a permutation.

Permutations are 1-based tuples: ``sigma[j-1]`` is the index of the variable
integrated at step ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .trees import ROOT, DecoratedForest


@dataclass(frozen=True)
class SignedForestSum:
    terms: tuple[tuple[int, DecoratedForest], ...]

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)


def _check_permutation(sigma) -> tuple[int, ...]:
    sigma = tuple(int(x) for x in sigma)
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError(f"{sigma} is not a permutation of 1..{len(sigma)}")
    return sigma


def sector_assignment(xi) -> tuple[int, ...]:
    """The permutation sorting ``xi`` by magnitude.

    Ties in magnitude are broken by signed value, then by position, so every
    tuple of nonzero reals belongs to exactly one sector.
    """
    xi = tuple(float(x) for x in xi)
    if any(x == 0 for x in xi):
        raise ValueError("frequencies must be nonzero")
    order = sorted(range(len(xi)), key=lambda i: (abs(xi[i]), xi[i], i))
    return tuple(i + 1 for i in order)


def mode_rank(k):
    """Integer key reproducing the sector order on grid modes ``k != 0``.

    Sorting by rank is sorting by ``(|k|, k)``: -1, 1, -2, 2, ...
    """
    k = np.asarray(k)
    return 2 * np.abs(k) - (k < 0)


def sector_permutations(modes: np.ndarray) -> np.ndarray:
    """Row-wise 0-based sector permutations of an ``(N, n)`` integer mode array."""
    modes = np.asarray(modes)
    if np.any(modes == 0):
        raise ValueError("frequencies must be nonzero")
    return np.argsort(mode_rank(modes), axis=1, kind="stable")


@lru_cache(maxsize=None)
def _group_orders(n: int, pattern: int) -> np.ndarray:
    """All reorderings of ``range(n)`` that permute only within runs of tied positions.

    Bit ``j`` of ``pattern`` says sorted positions ``j`` and ``j + 1`` tie.
    """
    groups, current = [], [0]
    for j in range(n - 1):
        if pattern >> j & 1:
            current.append(j + 1)
        else:
            groups.append(current)
            current = [j + 1]
    groups.append(current)
    orders = [sum((list(p) for p in combo), []) for combo in
              product(*(permutations(g) for g in groups))]
    return np.array(orders, dtype=np.int64)


def split_sectors(modes: np.ndarray):
    """Fractional sector split of an ``(N, n)`` integer mode array.

    Tuples with distinct magnitudes get their unique sector with weight 1.
    A tuple whose magnitudes tie is shared equally between every ordering of
    the tied variables, so the weights over sectors still sum to 1 and the
    split commutes with negating all modes.  Yields ``(rows, perms, weight)``
    with 0-based row-wise permutations.
    """
    modes = np.asarray(modes)
    if np.any(modes == 0):
        raise ValueError("frequencies must be nonzero")
    n = modes.shape[1]
    mag = np.abs(modes)
    base = np.argsort(mag, axis=1, kind="stable")
    if n == 1:
        yield np.arange(modes.shape[0]), base, 1.0
        return
    ordered = np.take_along_axis(mag, base, axis=1)
    pattern = (ordered[:, 1:] == ordered[:, :-1]) @ (1 << np.arange(n - 1))
    for pat in np.unique(pattern):
        rows = np.nonzero(pattern == pat)[0]
        orders = _group_orders(n, int(pat))
        for q in orders:
            yield rows, base[rows][:, q], 1.0 / len(orders)


def permutation_graph(sigma, labels) -> SignedForestSum:
    """Fubini expansion of the simplex integral in the variable order ``sigma``.

    At step ``j`` the variable ``x_{sigma(j)}`` is bounded above by the
    nearest already integrated variable of smaller index (or ``t``) and below
    by the nearest one of larger index (or ``s``).  A lower bound other than
    ``s`` is split as ``int_s^upper - int_s^lower``, so each such step doubles
    the number of terms.  Vertex ``j`` of every forest is the step-``j``
    variable, attached to the vertex of its upper limit.
    """
    sigma = _check_permutation(sigma)
    labels = tuple(labels)
    n = len(sigma)
    if n == 0:
        raise ValueError("need at least one variable")
    if len(labels) != n:
        raise ValueError("labels must have the same length as sigma")

    step_of = {}
    choices = []
    for j, var in enumerate(sigma, start=1):
        earlier = [sigma[i] for i in range(j - 1)]
        smaller = [m for m in earlier if m < var]
        larger = [m for m in earlier if m > var]
        upper = step_of[max(smaller)] if smaller else ROOT
        if larger:
            lower = step_of[min(larger)]
            choices.append(((1, upper), (-1, lower)))
        else:
            choices.append(((1, upper),))
        step_of[var] = j

    new_labels = tuple(labels[v - 1] for v in sigma)
    terms = []
    for pick in product(*choices):
        sign = 1
        for s, _ in pick:
            sign *= s
        terms.append((sign, DecoratedForest(tuple(p for _, p in pick), new_labels)))
    return SignedForestSum(tuple(terms))
