"""Exact arithmetic and Følner boxes for the free abelian group Z^r.

Elements are plain tuples of Python ints. Sets of elements are any iterable
of such tuples; operations that need an order use lexicographic order.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DomainError, FolnerCapExceeded, StructuralError

Element = tuple

DEFAULT_RADIUS_CAP = 100_000


@dataclass(frozen=True)
class GroupSpec:
    rank: int

    def __post_init__(self):
        if not isinstance(self.rank, (int, np.integer)) or self.rank < 1:
            raise DomainError(f"rank must be a positive integer, got {self.rank!r}")

    def identity(self) -> Element:
        return (0,) * self.rank

    def element(self, *coords) -> Element:
        if len(coords) == 1 and not isinstance(coords[0], (int, np.integer)):
            coords = tuple(coords[0])
        return as_element(coords, self.rank)

    def generators(self) -> list:
        """The standard generators e_1..e_r."""
        return [tuple(int(i == j) for j in range(self.rank)) for i in range(self.rank)]


def as_element(g, rank: int | None = None) -> Element:
    try:
        out = tuple(int(c) for c in g)
    except TypeError:
        out = (int(g),)
    if rank is not None and len(out) != rank:
        raise StructuralError(f"element {out} has arity {len(out)}, expected {rank}")
    return out


def _check_ranks(g, h):
    if len(g) != len(h):
        raise StructuralError(f"rank mismatch: {g} vs {h}")


def multiply(g: Element, h: Element) -> Element:
    _check_ranks(g, h)
    return tuple(a + b for a, b in zip(g, h))


def inverse(g: Element) -> Element:
    return tuple(-a for a in g)


def identity(rank: int) -> Element:
    return GroupSpec(rank).identity()


def max_norm(g: Element) -> int:
    return max((abs(c) for c in g), default=0)


def product_set(E: Iterable, F: Iterable) -> set:
    E, F = list(E), list(F)
    return {multiply(a, b) for a in E for b in F}


def element_rank(elements) -> int:
    ranks = {len(g) for g in elements}
    if len(ranks) > 1:
        raise StructuralError(f"mixed ranks in element set: {sorted(ranks)}")
    return ranks.pop() if ranks else 0


def sorted_elements(elements) -> list:
    return sorted(set(as_element(g) for g in elements))


@dataclass(frozen=True)
class FolnerBox:
    """The cube {-L..L}^r, with elements listed lexicographically."""

    rank: int
    radius: int
    elements: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        GroupSpec(self.rank)
        if self.radius < 0:
            raise DomainError("box radius must be nonnegative")
        span = range(-self.radius, self.radius + 1)
        object.__setattr__(self, "elements", tuple(itertools.product(span, repeat=self.rank)))

    def __len__(self):
        return (2 * self.radius + 1) ** self.rank

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g):
        return len(g) == self.rank and max_norm(g) <= self.radius

    def index(self, g) -> int:
        """Position of g in lexicographic order."""
        if g not in self:
            raise KeyError(g)
        side = 2 * self.radius + 1
        idx = 0
        for c in g:
            idx = idx * side + (c + self.radius)
        return idx

    def as_array(self) -> np.ndarray:
        return np.array(self.elements, dtype=np.int64).reshape(len(self), self.rank)


def box(rank: int, radius: int) -> FolnerBox:
    return FolnerBox(rank, radius)


def _as_array(elements, rank=None) -> np.ndarray:
    if isinstance(elements, FolnerBox):
        return elements.as_array()
    arr = np.array([as_element(g, rank) for g in elements], dtype=np.int64)
    return arr.reshape(len(arr), -1)


def _unique_rows(a: np.ndarray) -> np.ndarray:
    return np.unique(a, axis=0) if len(a) else a


def boundary_ratio(E, F) -> Fraction:
    """|EF △ F| / |F| by exact enumeration, returned as an exact fraction."""
    Fa = _unique_rows(_as_array(F))
    if len(Fa) == 0:
        raise DomainError("F must be nonempty")
    Ea = _unique_rows(_as_array(E))
    if len(Ea) == 0:
        return Fraction(len(Fa), len(Fa))
    if Ea.shape[1] != Fa.shape[1]:
        raise StructuralError("E and F have different ranks")
    EF = _unique_rows((Ea[:, None, :] + Fa[None, :, :]).reshape(-1, Fa.shape[1]))
    both = np.concatenate([EF, Fa])
    _, counts = np.unique(both, axis=0, return_counts=True)
    sym = int(np.sum(counts == 1))
    return Fraction(sym, len(Fa))


def choose_folner_radius(spec: GroupSpec, E, bound: float, max_radius: int = DEFAULT_RADIUS_CAP) -> FolnerBox:
    """Smallest box with boundary ratio at most ``bound`` that also contains E·E."""
    if not bound > 0:
        raise DomainError("bound must be positive")
    E = [as_element(g, spec.rank) for g in E]
    start = max((max_norm(g) for g in E), default=0) * 2
    for L in range(start, max_radius + 1):
        if boundary_ratio(E, box(spec.rank, L)) <= bound:
            return box(spec.rank, L)
    raise FolnerCapExceeded(f"no radius up to {max_radius} achieves boundary ratio {bound}")


def symmetric_interval(rank: int, radius: int) -> list:
    """All elements of max-norm at most radius, lexicographic (a box as a list)."""
    return list(box(rank, radius).elements)


def elements_to_json(elements) -> str:
    return json.dumps([list(g) for g in sorted_elements(elements)])


def elements_from_json(text: str, rank: int | None = None) -> list:
    return [as_element(g, rank) for g in json.loads(text)]
