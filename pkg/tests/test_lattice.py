from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holocompress.lattice import (
    Lattice,
    Region,
    boundary_width_function,
    lattice_distance,
    parse_region,
    thickened_boundary,
)


def bfs_distances(lattice, source):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in lattice.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return np.array([dist[i] for i in range(lattice.n_sites)])


_BFS_CACHE = {}


def bfs_matrix(lattice):
    if lattice not in _BFS_CACHE:
        _BFS_CACHE[lattice] = np.array([bfs_distances(lattice, s) for s in range(lattice.n_sites)])
    return _BFS_CACHE[lattice]


def brute_boundary(A, l):
    comp = np.flatnonzero(~A.mask)
    D = bfs_matrix(A.lattice)
    return {int(x) for x in A.sites if D[x, comp].min() <= l}


LATTICES = [
    Lattice.chain(8),
    Lattice.chain(8, "periodic"),
    Lattice.grid(4, 5),
    Lattice.grid(4, 4, "periodic"),
    Lattice((3, 2, 4), ("open", "periodic", "open")),
]


def test_chain_distances():
    lat = Lattice.chain(8)
    assert lattice_distance(lat, 2, 2) == 0
    assert lattice_distance(lat, 1, 5) == 4
    assert lattice_distance(Lattice.chain(8, "periodic"), 0, 6) == 2


def test_invalid_site_raises():
    with pytest.raises((ValueError, IndexError)):
        lattice_distance(Lattice.chain(4), 0, 4)


@pytest.mark.parametrize("lat", LATTICES, ids=lambda l: f"{l.dimensions}-{l.boundary}")
def test_distance_matrix_matches_bfs(lat):
    D = lat.distance_matrix
    for s in range(lat.n_sites):
        np.testing.assert_array_equal(D[s], bfs_distances(lat, s))


@pytest.mark.parametrize("lat", LATTICES, ids=lambda l: f"{l.dimensions}-{l.boundary}")
def test_index_coordinate_roundtrip(lat):
    for i in range(lat.n_sites):
        assert lat.index(lat.coordinates(i)) == i


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(LATTICES), st.data())
def test_distance_is_a_metric(lat, data):
    n = lat.n_sites
    i, j, k = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    d = lattice_distance
    assert d(lat, i, j) >= 0
    assert (d(lat, i, j) == 0) == (i == j)
    assert d(lat, i, j) == d(lat, j, i)
    assert d(lat, i, k) <= d(lat, i, j) + d(lat, j, k)


def test_thickened_boundary_chain_examples():
    lat = Lattice.chain(10)
    A = Region(lat, range(5))
    assert thickened_boundary(A, 1).sites.tolist() == [4]
    assert thickened_boundary(A, 2).sites.tolist() == [3, 4]
    assert thickened_boundary(A, 50) == A


def test_thickened_boundary_corner_block():
    lat = Lattice.grid(6, 6)
    A = lat.box([0, 0], [4, 4])
    b = thickened_boundary(A, 1)
    assert len(b) == 7
    assert set(b.sites.tolist()) == brute_boundary(A, 1)


def test_degenerate_regions():
    lat = Lattice.chain(5)
    assert thickened_boundary(Region(lat, []), 1).is_empty
    assert thickened_boundary(Region(lat, range(5)), 1).is_empty
    with pytest.raises(ValueError):
        thickened_boundary(Region(lat, [0]), 0)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(LATTICES + [Lattice.grid(8, 8)]), st.data())
def test_thickened_boundary_matches_brute_force(lat, data):
    mask = data.draw(st.lists(st.booleans(), min_size=lat.n_sites, max_size=lat.n_sites))
    A = Region(lat, np.flatnonzero(mask))
    if A.is_empty or A.is_full:
        return
    prev = set()
    for l in range(1, 5):
        got = set(thickened_boundary(A, l).sites.tolist())
        assert got == brute_boundary(A, l)
        assert prev <= got <= set(A.sites.tolist())
        prev = got
    assert A.bulk(2) == Region(lat, np.setdiff1d(A.sites, thickened_boundary(A, 2).sites))
    assert A.complement().complement() == A


def test_boundary_one_is_adjacent_sites():
    lat = Lattice.grid(5, 5)
    A = lat.box([1, 1], [4, 3])
    adjacent = {x for x in A.sites if any(y not in A for y in lat.neighbors(int(x)))}
    assert set(A.boundary(1).sites.tolist()) == adjacent


def test_half_chain_shell_sizes():
    lat = Lattice.chain(100)
    A = Region(lat, range(50))
    shells = A.shell_sizes()
    for l in range(1, 60):
        assert len(thickened_boundary(A, l)) == min(l, 50)
    assert shells[-1] == 50


def test_boundary_width_examples():
    A = Region(Lattice.chain(100), range(50))
    assert boundary_width_function(A, 3) == 3
    assert boundary_width_function(A, 1e-9) == 1
    grid = Lattice.grid(30, 30)
    B = grid.box([10, 10], [20, 20])
    assert [len(B.boundary(l)) for l in (1, 2, 3)] == [36, 64, 84]
    assert boundary_width_function(B, 2) == 3


def test_boundary_width_sentinel_and_errors():
    A = Region(Lattice.chain(100), range(50))
    assert boundary_width_function(A, 51) is None
    with pytest.raises(ValueError):
        boundary_width_function(Region(A.lattice, range(100)), 1)
    with pytest.raises(ValueError):
        boundary_width_function(A, 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 20), st.floats(0.01, 20))
def test_boundary_width_monotone_in_k(k1, k2):
    A = Lattice.grid(12, 12).box([2, 2], [10, 9])
    lo, hi = sorted((k1, k2))
    a, b = boundary_width_function(A, lo), boundary_width_function(A, hi)
    if b is not None:
        assert a is not None and a <= b


def test_parse_region_forms():
    chain = Lattice.chain(10)
    assert parse_region(chain, "2:5").sites.tolist() == [2, 3, 4]
    assert parse_region(chain, "2-5").sites.tolist() == [2, 3, 4, 5]
    assert parse_region(chain, "1,3,7").sites.tolist() == [1, 3, 7]
    assert parse_region(chain, [0, 1]).sites.tolist() == [0, 1]
    assert parse_region(chain, {"sites": [4]}).sites.tolist() == [4]
    grid = Lattice.grid(4, 4)
    assert len(parse_region(grid, {"lo": [0, 0], "hi": [2, 2]})) == 4
    assert len(parse_region(grid, "{lo: [1, 1], hi: [3, 4]}")) == 6


@pytest.mark.parametrize("bad", ["0:x", "a,b", {"top": 1}, "[99]", 3.5])
def test_parse_region_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_region(Lattice.chain(10), bad)
