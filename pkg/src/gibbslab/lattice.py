"""Geometry of the integer lattice: sites, finite shapes, boxes, boundaries,
and Delone packings.

Sites are integer tuples of a fixed dimension d (1 <= d <= 3 supported).
A Shape is a finite set of sites kept in canonical lexicographic order,
which makes iteration deterministic everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Iterable, Iterator

Site = tuple[int, ...]


def add(g: Site, h: Site) -> Site:
    return tuple(a + b for a, b in zip(g, h))


def sub(g: Site, h: Site) -> Site:
    return tuple(a - b for a, b in zip(g, h))


def neg(g: Site) -> Site:
    return tuple(-a for a in g)


def as_site(g: int | Iterable[int]) -> Site:
    """Coerce an int (dimension 1) or an iterable of ints to a Site."""
    if isinstance(g, int):
        return (g,)
    return tuple(int(c) for c in g)


@dataclass(frozen=True)
class Shape:
    """Finite set of sites of a common dimension, lexicographically sorted.

    Construct through ``Shape.of`` (or the named constructors below); the
    raw constructor trusts its arguments.
    """

    sites: tuple[Site, ...]
    dim: int

    @staticmethod
    def of(sites: Iterable[int | Iterable[int]], dim: int | None = None) -> "Shape":
        pts = sorted({as_site(g) for g in sites})
        if pts:
            dims = {len(g) for g in pts}
            if len(dims) != 1:
                raise ValueError(f"mixed site dimensions {dims}")
            d = dims.pop()
            if dim is not None and dim != d:
                raise ValueError(f"declared dim {dim} != site dim {d}")
            dim = d
        elif dim is None:
            raise ValueError("empty shape needs an explicit dim")
        return Shape(tuple(pts), dim)

    @staticmethod
    def empty(dim: int) -> "Shape":
        return Shape((), dim)

    @staticmethod
    def interval(a: int, b: int) -> "Shape":
        """Contiguous 1D shape {a, ..., b} (inclusive)."""
        if b < a:
            return Shape((), 1)
        return Shape(tuple((i,) for i in range(a, b + 1)), 1)

    @staticmethod
    def box(lo: Iterable[int], hi: Iterable[int]) -> "Shape":
        """Product box prod_i [lo_i, hi_i] (inclusive corners)."""
        lo, hi = as_site(lo), as_site(hi)
        ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
        return Shape(tuple(sorted(_iproduct(*ranges))), len(lo))

    @staticmethod
    def ball(r: int, dim: int) -> "Shape":
        """Closed sup-norm ball of radius r around the origin."""
        return Shape.box((-r,) * dim, (r,) * dim)

    @staticmethod
    def origin(dim: int) -> "Shape":
        return Shape(((0,) * dim,), dim)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, g: Site) -> bool:
        return g in self._site_set

    def __le__(self, other: "Shape") -> bool:
        return self._site_set <= other._site_set

    def __or__(self, other: "Shape") -> "Shape":
        return Shape.of(self.sites + other.sites, dim=self.dim)

    def __and__(self, other: "Shape") -> "Shape":
        return Shape(tuple(sorted(self._site_set & other._site_set)), self.dim)

    def __sub__(self, other: "Shape") -> "Shape":
        return Shape(tuple(sorted(self._site_set - other._site_set)), self.dim)

    @property
    def _site_set(self) -> frozenset:
        # cached lazily on the instance; frozen dataclass requires object.__setattr__
        cached = self.__dict__.get("_cache_set")
        if cached is None:
            cached = frozenset(self.sites)
            object.__setattr__(self, "_cache_set", cached)
        return cached

    def translate(self, g: int | Iterable[int]) -> "Shape":
        g = as_site(g)
        return Shape(tuple(add(s, g) for s in self.sites), self.dim)

    def reflect(self) -> "Shape":
        """The shape -A = {-a : a in A}."""
        return Shape(tuple(sorted(neg(s) for s in self.sites)), self.dim)

    def minkowski(self, other: "Shape") -> "Shape":
        """Minkowski sum A + B."""
        return Shape.of(
            (add(a, b) for a in self.sites for b in other.sites), dim=self.dim
        )

    def dilate(self, r: int) -> "Shape":
        """Minkowski sum with the sup-norm ball of radius r."""
        if r == 0 or not self.sites:
            return self
        return self.minkowski(Shape.ball(r, self.dim))

    def difference_set(self) -> "Shape":
        """The difference set A A^{-1} = {a - b : a, b in A}."""
        return Shape.of(
            (sub(a, b) for a in self.sites for b in self.sites), dim=self.dim
        )

    def bounding_box(self) -> tuple[Site, Site]:
        if not self.sites:
            raise ValueError("empty shape has no bounding box")
        lo = tuple(min(s[i] for s in self.sites) for i in range(self.dim))
        hi = tuple(max(s[i] for s in self.sites) for i in range(self.dim))
        return lo, hi

    def serializable(self) -> list[list[int]]:
        """Sorted array of integer vectors, the model file form."""
        return [list(s) for s in self.sites]


def translate(s: Shape, g: int | Iterable[int]) -> Shape:
    """Translate of a shape: gA = {g + a : a in A}."""
    return s.translate(g)


@dataclass(frozen=True)
class FolnerBox:
    """Centered box F_n = [-n, n]^d, the fixed Folner sequence."""

    n: int
    dim: int

    def shape(self) -> Shape:
        return Shape.ball(self.n, self.dim)

    def __len__(self) -> int:
        return (2 * self.n + 1) ** self.dim


def folner_box(n: int, dim: int) -> Shape:
    return Shape.ball(n, dim)


def inner_boundary(F: Shape, B: Shape) -> Shape:
    """Sites of F whose B-translate escapes F: {g in F : g + B not in F}."""
    inside = F._site_set
    out = [g for g in F if any(add(g, b) not in inside for b in B)]
    return Shape(tuple(out), F.dim)


@dataclass(frozen=True)
class DeloneSet:
    """Finite point set packing translates of P and covering through C.

    Packing: the translates d + P for d in points are pairwise disjoint.
    Covering: certified for the C-interior of the region only, i.e. for
    every g with g + C inside the region, (g + C) meets the points; sites
    nearer the region boundary may be uncovered.
    """

    points: Shape
    packing: Shape
    covering: Shape
    region: Shape

    def is_packing(self) -> bool:
        seen: set = set()
        for d in self.points:
            blk = {add(d, p) for p in self.packing}
            if blk & seen:
                return False
            seen |= blk
        return True

    def covering_defects(self) -> Shape:
        """C-interior sites g of the region with (g + C) disjoint from points."""
        pts = self.points._site_set
        reg = self.region._site_set
        bad = []
        for g in self.region:
            nbhd = [add(g, c) for c in self.covering]
            if any(s not in reg for s in nbhd):
                continue  # not C-interior; uncertified
            if not any(s in pts for s in nbhd):
                bad.append(g)
        return Shape(tuple(bad), self.region.dim)

    def is_covering(self) -> bool:
        return len(self.covering_defects()) == 0


def delone_greedy(P: Shape, C: Shape, region: Shape) -> DeloneSet:
    """Greedy Delone construction: scan the region in lexicographic order
    and admit g whenever g + P is disjoint from every admitted translate.

    Requires C to contain the difference set P P^{-1}; this makes the
    greedy output covering (every rejected site is within C of an admitted
    one) as well as packing.
    """
    if not (P.difference_set() <= C):
        raise ValueError("covering shape C must contain the difference set P P^-1")
    occupied: set = set()
    admitted: list[Site] = []
    for g in region:
        blk = [add(g, p) for p in P]
        if any(s in occupied for s in blk):
            continue
        occupied.update(blk)
        admitted.append(g)
    return DeloneSet(Shape(tuple(admitted), region.dim), P, C, region)


def lower_density(D: DeloneSet, radii: Iterable[int]) -> float:
    """Minimum of |D intersect box| / |box| over all placements of the boxes
    F_n, n in radii, that fit inside the region.

    Raises if no placement of some requested box fits.
    """
    pts = D.points._site_set
    reg = D.region._site_set
    lo, hi = D.region.bounding_box()
    d = D.region.dim
    best = None
    for n in radii:
        box = Shape.ball(n, d)
        size = len(box)
        centers = _iproduct(*[range(lo[i] + n, hi[i] - n + 1) for i in range(d)])
        found = False
        for g in centers:
            cells = [add(g, b) for b in box]
            if any(s not in reg for s in cells):
                continue
            found = True
            frac = sum(1 for s in cells if s in pts) / size
            if best is None or frac < best:
                best = frac
        if not found:
            raise ValueError(f"region too small for box radius {n}")
    assert best is not None
    return best
