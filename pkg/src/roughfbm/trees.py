"""Decorated rooted forests, admissible cuts, coproduct splits and word shuffles.

A forest on ``n`` vertices is stored as one parent map.  Vertices are the
integers ``1..n`` and ``parent[v - 1]`` is either ``0`` (the vertex is a root)
or a vertex strictly smaller than ``v``.  Integer order is therefore a total
order compatible with the tree order, roots sitting below the vertices that
connect to them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product

ROOT = 0


@dataclass(frozen=True)
class DecoratedForest:
    """Rooted forest with labelled vertices ``1..n``.

    ``parent[v-1]`` is the vertex directly below ``v`` (``ROOT`` for roots)
    and ``labels[v-1]`` the path component attached to ``v``.
    """

    parent: tuple[int, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent", tuple(int(p) for p in self.parent))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.parent) != len(self.labels):
            raise ValueError("parent and labels must have the same length")
        for v, p in enumerate(self.parent, start=1):
            if not 0 <= p < v:
                raise ValueError(f"vertex {v} has parent {p}; need 0 <= parent < vertex")
        if any(x < 1 for x in self.labels):
            raise ValueError("labels must be positive component indices")

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    @cached_property
    def roots(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if self.parent[v - 1] == ROOT)

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {v: [] for v in range(self.n + 1)}
        for v in self.vertices:
            kids[self.parent[v - 1]].append(v)
        return {v: tuple(c) for v, c in kids.items()}

    @cached_property
    def _above(self) -> dict[int, frozenset[int]]:
        up: dict[int, set[int]] = {v: set() for v in self.vertices}
        for v in reversed(self.vertices):
            p = self.parent[v - 1]
            if p != ROOT:
                up[p] |= up[v] | {v}
        return {v: frozenset(s) for v, s in up.items()}

    def above(self, v: int) -> frozenset[int]:
        """Vertices strictly above ``v``, i.e. those connecting down to it."""
        self._check_vertex(v)
        return self._above[v]

    def root_of(self, v: int) -> int:
        while self.parent[v - 1] != ROOT:
            v = self.parent[v - 1]
        return v

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        """Vertex sets of the connected components, ordered by root."""
        return tuple(tuple(sorted((r,) + tuple(self._above[r]))) for r in self.roots)

    @property
    def is_tree(self) -> bool:
        return len(self.roots) == 1

    def comparable(self, v: int, w: int) -> bool:
        return v == w or w in self._above[v] or v in self._above[w]

    def induced(self, vertices) -> DecoratedForest:
        """Sub-forest on ``vertices`` keeping labels, internal edges and order."""
        vs = sorted(set(vertices))
        for v in vs:
            self._check_vertex(v)
        pos = {v: i for i, v in enumerate(vs, start=1)}
        parent = []
        for v in vs:
            p = self.parent[v - 1]
            parent.append(pos.get(p, ROOT))
        return DecoratedForest(tuple(parent), tuple(self.labels[v - 1] for v in vs))

    def serialize(self) -> str:
        return f"{self.n}; {','.join(map(str, self.parent))}; {','.join(map(str, self.labels))}"

    @classmethod
    def parse(cls, text: str) -> DecoratedForest:
        parts = [p.strip() for p in text.split(";")]
        if len(parts) != 3:
            raise ValueError(f"expected 'n; parents; labels', got {text!r}")
        n = int(parts[0])
        parent = tuple(int(x) for x in parts[1].split(",") if x.strip())
        labels = tuple(int(x) for x in parts[2].split(",") if x.strip())
        if len(parent) != n:
            raise ValueError(f"declared {n} vertices but found {len(parent)} parents")
        return cls(parent, labels)

    def __str__(self) -> str:
        return self.serialize()

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise ValueError(f"unknown vertex {v} (forest has {self.n})")


EMPTY = DecoratedForest((), ())


@dataclass(frozen=True, order=True)
class Cut:
    """Admissible cut: a nonempty antichain, stored sorted."""

    vertices: tuple[int, ...]

    def __post_init__(self) -> None:
        vs = tuple(sorted(set(int(v) for v in self.vertices)))
        if not vs:
            raise ValueError("a cut must be nonempty")
        object.__setattr__(self, "vertices", vs)


@dataclass(frozen=True)
class TensorSplit:
    """``left`` is the root part, ``right`` the part above the cut.

    ``left_vertices`` and ``right_vertices`` record the original vertex ids;
    both sub-forests are renumbered in the inherited order.
    """

    left: DecoratedForest
    right: DecoratedForest
    left_vertices: tuple[int, ...] = field(default=())
    right_vertices: tuple[int, ...] = field(default=())


def trunk_tree(labels) -> DecoratedForest:
    """Chain ``n -> n-1 -> ... -> 1`` rooted at 1, vertex j labelled ``labels[j-1]``."""
    labels = tuple(labels)
    if not labels:
        raise ValueError("trunk tree needs a nonempty word")
    return DecoratedForest(tuple(range(len(labels))), labels)


def _antichains(forest: DecoratedForest):
    """All nonempty antichains, each as a sorted tuple."""
    out = []

    def grow(current: list[int], start: int) -> None:
        for v in range(start, forest.n + 1):
            if all(not forest.comparable(v, w) for w in current):
                current.append(v)
                out.append(tuple(current))
                grow(current, v + 1)
                current.pop()

    grow([], 1)
    return out


def is_admissible(forest: DecoratedForest, cut: Cut) -> bool:
    vs = cut.vertices
    if any(not 1 <= v <= forest.n for v in vs):
        return False
    if any(forest.comparable(a, b) for a, b in combinations(vs, 2)):
        return False
    return vs != forest.roots


def admissible_cuts(forest: DecoratedForest) -> list[Cut]:
    """Every admissible cut once, in lexicographic order of sorted vertex sets.

    Per tree the cut meets either nothing, the root alone, or a nonempty
    antichain of non-root vertices; the all-empty and all-roots choices are
    excluded.  This is exactly the set of nonempty antichains other than the
    set of roots.
    """
    if forest.n == 0:
        raise ValueError("empty forest has no cuts")
    return sorted(Cut(a) for a in _antichains(forest) if a != forest.roots)


def _upper_closure(forest: DecoratedForest, vs) -> frozenset[int]:
    top = set(vs)
    for v in vs:
        top |= forest.above(v)
    return frozenset(top)


def split_at_cut(forest: DecoratedForest, cut: Cut) -> TensorSplit:
    if not is_admissible(forest, cut):
        raise ValueError(f"cut {cut.vertices} is not admissible for {forest}")
    top = _upper_closure(forest, cut.vertices)
    right = tuple(sorted(top))
    left = tuple(v for v in forest.vertices if v not in top)
    return TensorSplit(forest.induced(left), forest.induced(right), left, right)


def coproduct(forest: DecoratedForest) -> list[TensorSplit]:
    """Trivial splits ``(empty, F)`` and ``(F, empty)`` followed by all cut splits."""
    if forest.n == 0:
        raise ValueError("coproduct of the empty forest is not defined here")
    everything = tuple(forest.vertices)
    splits = [
        TensorSplit(EMPTY, forest, (), everything),
        TensorSplit(forest, EMPTY, everything, ()),
    ]
    splits.extend(split_at_cut(forest, c) for c in admissible_cuts(forest))
    return splits


def vertex_weight(forest: DecoratedForest, v: int) -> int:
    return 1 + len(forest.above(v))


def shuffles(w1, w2) -> list[tuple[int, ...]]:
    """All order-preserving interleavings of two words, with multiplicity."""
    w1, w2 = tuple(w1), tuple(w2)
    n = len(w1) + len(w2)
    out = []
    for slots in combinations(range(n), len(w1)):
        chosen = set(slots)
        it1, it2 = iter(w1), iter(w2)
        out.append(tuple(next(it1) if i in chosen else next(it2) for i in range(n)))
    return out


def increasing_forests(n: int, label: int = 1):
    """Every forest on ``n`` vertices with ``parent(v) < v`` (there are n! of them)."""
    for parent in product(*(range(v) for v in range(1, n + 1))):
        yield DecoratedForest(parent, (label,) * n)
