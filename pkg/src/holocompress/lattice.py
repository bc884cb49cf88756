"""
Finite hypercubic lattices, regions and thickened boundaries.

Sites are numbered in row-major order over the coordinate tuple, so for a
lattice with extents ``(L0, L1, ...)`` the last axis varies fastest.  Two
sites are adjacent when their coordinates differ by one step along a single
axis (von Neumann neighbourhood); the lattice distance is the graph distance
of that adjacency, i.e. the L1 distance with wrap-around on periodic axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Lattice",
    "Region",
    "lattice_distance",
    "thickened_boundary",
    "boundary_width_function",
    "parse_region",
]

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class Lattice:
    """Finite hypercubic lattice.

    Parameters
    ----------
    dimensions : tuple of int
        Extent along each axis.
    boundary : tuple of str
        ``"open"`` or ``"periodic"`` per axis.  A single string is broadcast.
    """

    dimensions: tuple[int, ...]
    boundary: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(self.dimensions))
        if not dims or any(n < 1 for n in dims):
            raise ValueError(f"lattice extents must be positive, got {dims}")
        bc = self.boundary
        if isinstance(bc, str):
            bc = (bc,) * len(dims)
        elif len(bc) == 0:
            bc = (OPEN,) * len(dims)
        bc = tuple(bc)
        if len(bc) != len(dims):
            raise ValueError("one boundary condition per axis is required")
        for b in bc:
            if b not in (OPEN, PERIODIC):
                raise ValueError(f"unknown boundary condition {b!r}")
        object.__setattr__(self, "dimensions", dims)
        object.__setattr__(self, "boundary", bc)

    @classmethod
    def chain(cls, length: int, bc: str = OPEN) -> "Lattice":
        return cls((length,), (bc,))

    @classmethod
    def grid(cls, rows: int, cols: int, bc: str = OPEN) -> "Lattice":
        return cls((rows, cols), (bc, bc))

    @property
    def ndim(self) -> int:
        return len(self.dimensions)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dimensions))

    def __len__(self):
        return self.n_sites

    def _check(self, i):
        i = np.asarray(i)
        if np.any((i < 0) | (i >= self.n_sites)):
            raise IndexError(f"site index out of range [0, {self.n_sites})")
        return i

    def coordinates(self, i):
        """Coordinate tuple(s) of site index/indices ``i``."""
        i = self._check(i)
        return np.stack(np.unravel_index(i, self.dimensions), axis=-1)

    def index(self, coords) -> np.ndarray:
        """Site index of coordinate array ``coords`` (last axis = lattice axis)."""
        coords = np.asarray(coords)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.dimensions)

    @cached_property
    def _coords(self) -> np.ndarray:
        return self.coordinates(np.arange(self.n_sites))

    def _axis_delta(self, delta: np.ndarray) -> np.ndarray:
        delta = np.abs(delta)
        for ax, (n, b) in enumerate(zip(self.dimensions, self.boundary)):
            if b == PERIODIC:
                delta[..., ax] = np.minimum(delta[..., ax], n - delta[..., ax])
        return delta

    def distance(self, i, j):
        """Lattice distance between site indices (broadcasting)."""
        ci = self.coordinates(i)
        cj = self.coordinates(j)
        return self._axis_delta(ci - cj).sum(axis=-1)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        c = self._coords
        d = self._axis_delta(c[:, None, :] - c[None, :, :]).sum(axis=-1)
        d.setflags(write=False)
        return d

    def neighbors(self, i: int) -> list[int]:
        """Sites adjacent to ``i``."""
        (c,) = self.coordinates([i])
        out = set()
        for ax, (n, b) in enumerate(zip(self.dimensions, self.boundary)):
            for step in (-1, 1):
                cc = c.copy()
                cc[ax] += step
                if b == PERIODIC:
                    cc[ax] %= n
                elif not 0 <= cc[ax] < n:
                    continue
                j = int(self.index(cc))
                if j != i:
                    out.add(j)
        return sorted(out)

    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour pairs ``(i, j)`` with ``i < j``, each listed once."""
        return sorted({(min(i, j), max(i, j)) for i in range(self.n_sites) for j in self.neighbors(i)})

    @property
    def diameter(self) -> int:
        return int(sum(n // 2 if b == PERIODIC else n - 1 for n, b in zip(self.dimensions, self.boundary)))

    def box(self, lo: Sequence[int], hi: Sequence[int]) -> "Region":
        """Axis-aligned box region, ``lo`` inclusive and ``hi`` exclusive per axis."""
        lo = np.atleast_1d(lo)
        hi = np.atleast_1d(hi)
        if len(lo) != self.ndim or len(hi) != self.ndim:
            raise ValueError("box corners must have one entry per lattice axis")
        if np.any(lo < 0) or np.any(hi > np.array(self.dimensions)) or np.any(lo > hi):
            raise ValueError(f"box lo={list(lo)} hi={list(hi)} does not fit lattice {self.dimensions}")
        inside = np.all((self._coords >= lo) & (self._coords < hi), axis=1)
        return Region(self, np.flatnonzero(inside))

    def region(self, sites: Iterable[int]) -> "Region":
        return Region(self, sites)


@dataclass(frozen=True)
class Region:
    """A set of lattice sites, stored as a sorted index array."""

    lattice: Lattice
    sites: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        s = np.unique(np.asarray(list(self.sites) if not isinstance(self.sites, np.ndarray) else self.sites, dtype=int))
        if s.size and (s[0] < 0 or s[-1] >= self.lattice.n_sites):
            raise IndexError("region contains sites outside the lattice")
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)

    def __len__(self):
        return int(self.sites.size)

    def __iter__(self):
        return iter(self.sites.tolist())

    def __contains__(self, i):
        return bool(np.isin(i, self.sites))

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return self.lattice == other.lattice and np.array_equal(self.sites, other.sites)

    def __hash__(self):
        return hash((self.lattice, self.sites.tobytes()))

    def __repr__(self):
        return f"Region({self.sites.tolist()})"

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.lattice.n_sites, dtype=bool)
        m[self.sites] = True
        return m

    def complement(self) -> "Region":
        return Region(self.lattice, np.flatnonzero(~self.mask))

    @property
    def is_empty(self) -> bool:
        return self.sites.size == 0

    @property
    def is_full(self) -> bool:
        return self.sites.size == self.lattice.n_sites

    def distance_to_complement(self) -> np.ndarray:
        """``dist(x, A^c)`` for each site ``x`` of the region (in ``self.sites`` order)."""
        if self.is_full:
            raise ValueError("region covers the whole lattice; it has no complement")
        comp = ~self.mask
        return self.lattice.distance_matrix[np.ix_(self.sites, np.flatnonzero(comp))].min(axis=1)

    def boundary(self, l: int = 1) -> "Region":
        return thickened_boundary(self, l)

    def bulk(self, l: int) -> "Region":
        """Sites of the region outside the thickened boundary of width ``l``."""
        b = thickened_boundary(self, l)
        return Region(self.lattice, np.setdiff1d(self.sites, b.sites))

    def shell_sizes(self) -> np.ndarray:
        """``|∂_l A|`` for ``l = 0, 1, ..., max distance``."""
        d = self.distance_to_complement()
        counts = np.bincount(d, minlength=int(d.max()) + 1 if d.size else 1)
        return np.cumsum(counts)


def lattice_distance(lattice: Lattice, i: int, j: int) -> int:
    """Graph distance between two sites under nearest-neighbour adjacency."""
    return int(lattice.distance(i, j))


def thickened_boundary(A: Region, l: int) -> Region:
    """Sites of ``A`` within lattice distance ``l`` of the complement.

    Returns an empty region when ``A`` is empty or covers the whole lattice.
    """
    if l < 1:
        raise ValueError("boundary width must be >= 1")
    if A.is_empty or A.is_full:
        return Region(A.lattice, [])
    d = A.distance_to_complement()
    return Region(A.lattice, A.sites[d <= l])


def boundary_width_function(A: Region, k: float):
    """Smallest width ``l`` with ``|∂_l A| >= k |∂_1 A|``.

    ``k`` is a real number and is not rounded.  Returns ``None`` when even the
    whole region is too small to satisfy the inequality.
    """
    if A.is_full:
        raise ValueError("region covers the whole lattice; it has no boundary")
    if A.is_empty:
        raise ValueError("empty region has no boundary")
    if not k > 0:
        raise ValueError("k must be positive")
    shells = A.shell_sizes()
    target = k * shells[1]
    hits = np.flatnonzero(shells[1:] >= target)
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def parse_region(lattice: Lattice, spec) -> Region:
    """Build a region from a config literal.

    Accepted forms: a list of site indices, a mapping ``{"lo": [...], "hi": [...]}``
    describing a box (``hi`` exclusive), a mapping ``{"sites": [...]}``, or a
    string ``"a:b"`` (1D slice), ``"a-b"`` (inclusive range) or ``"i,j,k"``.
    """
    if isinstance(spec, Region):
        return spec
    if isinstance(spec, dict):
        if "sites" in spec:
            return parse_region(lattice, list(spec["sites"]))
        if "lo" in spec and "hi" in spec:
            return lattice.box(spec["lo"], spec["hi"])
        raise ValueError(f"region mapping needs 'sites' or 'lo'/'hi' keys, got {sorted(spec)}")
    if isinstance(spec, str):
        s = spec.strip()
        try:
            if s.startswith(("{", "[")):
                import yaml

                return parse_region(lattice, yaml.safe_load(s))
            if ":" in s:
                a, b = s.split(":")
                if lattice.ndim != 1:
                    raise ValueError("slice syntax is only defined for 1D lattices")
                return lattice.box([int(a)], [int(b)])
            if "-" in s.lstrip("-") and "," not in s:
                a, b = s.split("-")
                return Region(lattice, range(int(a), int(b) + 1))
            return Region(lattice, [int(x) for x in s.split(",") if x.strip()])
        except (ValueError, TypeError) as exc:
            raise ValueError(f"cannot parse region {spec!r}: {exc}") from exc
    try:
        sites = [int(x) for x in spec]
        return Region(lattice, sites)
    except (TypeError, ValueError, IndexError) as exc:
        raise ValueError(f"cannot parse region {spec!r}: {exc}") from exc
