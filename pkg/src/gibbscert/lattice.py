"""Finite boxes of the d-dimensional integer lattice.

Sites are plain tuples of ints. Boxes carry a deterministic (lexicographic)
site ordering so downstream matrices and CSV outputs are reproducible.
Distances are Euclidean throughout the package.
"""

from __future__ import annotations

import itertools
import math

Site = tuple[int, ...]


class LatticeBox:
    """An ordered, duplicate-free finite set of lattice sites with an index.

    The index is a bijection site <-> {0..n-1} following the stored order.
    Immutable after construction; safe for shared concurrent reads.
    """

    def __init__(self, dimension: int, sites):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        sites = tuple(tuple(int(c) for c in s) for s in sites)
        for s in sites:
            if len(s) != dimension:
                raise ValueError(f"site {s} does not have dimension {dimension}")
        index = {}
        for k, s in enumerate(sites):
            if s in index:
                raise ValueError(f"duplicate site {s}")
            index[s] = k
        self.dimension = dimension
        self.sites = sites
        self._index = index

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self._index

    def site_id(self, site) -> int:
        s = tuple(site)
        if s not in self._index:
            raise KeyError(f"site {s} not in box")
        return self._index[s]

    def site(self, k: int) -> Site:
        return self.sites[k]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LatticeBox)
            and self.dimension == other.dimension
            and self.sites == other.sites
        )

    def __repr__(self) -> str:
        return f"LatticeBox(d={self.dimension}, n={len(self.sites)})"


def make_box(d: int, lower, upper) -> LatticeBox:
    """Axis-aligned box of integer points, ordered lexicographically."""
    lower = tuple(int(c) for c in lower)
    upper = tuple(int(c) for c in upper)
    if len(lower) != d or len(upper) != d:
        raise ValueError(
            f"corner dimensions {len(lower)}/{len(upper)} do not match d={d}"
        )
    if any(lo > up for lo, up in zip(lower, upper)):
        raise ValueError(f"empty box: lower {lower} exceeds upper {upper}")
    ranges = [range(lo, up + 1) for lo, up in zip(lower, upper)]
    return LatticeBox(d, itertools.product(*ranges))


def distance(i, j) -> float:
    """Euclidean distance |i - j| between two sites."""
    if len(i) != len(j):
        raise ValueError(f"dimension mismatch: {i} vs {j}")
    return math.dist(i, j)


def sublattice(box: LatticeBox, K: int) -> list[Site]:
    """Sites of the box whose coordinates are all divisible by K."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return [s for s in box.sites if all(c % K == 0 for c in s)]
