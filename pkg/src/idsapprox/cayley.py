"""Group arithmetic, word metric, balls, boundaries and tilings.

Two concrete groups are provided: the free abelian lattice Z^d and the
discrete Heisenberg group H3.  Elements are plain integer tuples; all group
structure lives on the model object.  The word metric is oriented so that
right translations g -> g*t are isometries (distance(g, h) is the word
length of g*h^-1), which is the orientation under which tile translates,
boundary cardinalities and pattern translations are all compatible.

Word lengths are memoised per model in an expanding breadth-first table;
set-heavy operations (boundaries, diameters, tile covers) run on packed
int64 coordinate arrays when the dimension allows it.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

Element = tuple[int, ...]

_PACK_BITS = 21
_PACK_BOUND = 1 << (_PACK_BITS - 1)  # coordinates must satisfy |c| < 2^20


class GroupModelError(ValueError):
    """Raised for operations on incompatible group elements."""


class GroupModel:
    """Base class for a finitely generated group with a symmetric generator set."""

    dim: int
    generators: tuple[Element, ...]

    def __init__(self) -> None:
        self.identity: Element = (0,) * self.dim
        self._lock = threading.Lock()
        # word-length table: packed keys (sorted), distances, per-level coords
        self._wl_keys = np.empty(0, dtype=np.int64)
        self._wl_dist = np.empty(0, dtype=np.int32)
        self._levels: list[np.ndarray] = []
        self._ball_cache: dict[int, "FiniteSet"] = {}
        if self.pack_capable:
            e = np.array([self.identity], dtype=np.int64)
            self._wl_keys = self._pack(e)
            self._wl_dist = np.zeros(1, dtype=np.int32)
            self._levels = [e]

    # -- group structure ----------------------------------------------------

    def multiply(self, g: Element, h: Element) -> Element:
        raise NotImplementedError

    def inverse(self, g: Element) -> Element:
        raise NotImplementedError

    def rmul_array(self, coords: np.ndarray, s: Element) -> np.ndarray:
        """Right-multiply every row by the constant element s."""
        raise NotImplementedError

    def lmul_array(self, s: Element, coords: np.ndarray) -> np.ndarray:
        """Left-multiply every row by the constant element s."""
        raise NotImplementedError

    def check_element(self, g: Sequence[int]) -> Element:
        g = tuple(int(c) for c in g)
        if len(g) != self.dim:
            raise GroupModelError(
                f"element of length {len(g)} does not belong to {self.describe()}"
            )
        return g

    def describe(self) -> str:
        raise NotImplementedError

    # -- packing ------------------------------------------------------------

    @property
    def pack_capable(self) -> bool:
        return self.dim <= 3

    def _pack(self, coords: np.ndarray) -> np.ndarray:
        """Pack coordinate rows into sortable int64 keys (lexicographic order)."""
        if coords.size and np.abs(coords).max() >= _PACK_BOUND:
            raise GroupModelError("coordinate out of packable range")
        key = np.zeros(len(coords), dtype=np.int64)
        for j in range(self.dim):
            key = (key << _PACK_BITS) | (coords[:, j] + _PACK_BOUND)
        return key

    def _unpack(self, keys: np.ndarray) -> np.ndarray:
        coords = np.empty((len(keys), self.dim), dtype=np.int64)
        k = keys.copy()
        mask = (1 << _PACK_BITS) - 1
        for j in range(self.dim - 1, -1, -1):
            coords[:, j] = (k & mask) - _PACK_BOUND
            k >>= _PACK_BITS
        return coords

    # -- word metric --------------------------------------------------------

    def _expand_level(self) -> bool:
        """Grow the BFS table by one radius; returns False once exhausted."""
        frontier = self._levels[-1]
        if frontier.size == 0:
            return False
        cands = np.concatenate([self.rmul_array(frontier, s) for s in self.generators])
        keys = self._pack(cands)
        keys, first = np.unique(keys, return_index=True)
        idx = np.searchsorted(self._wl_keys, keys)
        idx_c = np.minimum(idx, len(self._wl_keys) - 1)
        known = self._wl_keys[idx_c] == keys
        new_keys = keys[~known]
        new_coords = cands[first[~known]]
        radius = len(self._levels)
        merged = np.concatenate([self._wl_keys, new_keys])
        dists = np.concatenate(
            [self._wl_dist, np.full(len(new_keys), radius, dtype=np.int32)]
        )
        order = np.argsort(merged, kind="stable")
        self._wl_keys = merged[order]
        self._wl_dist = dists[order]
        self._levels.append(new_coords)
        return new_keys.size > 0

    def _lengths_packed(self, keys: np.ndarray) -> np.ndarray:
        """Word lengths for packed keys, expanding the table as needed."""
        if not self.pack_capable:
            raise GroupModelError("packed word lengths need dim <= 3")
        with self._lock:
            while True:
                idx = np.searchsorted(self._wl_keys, keys)
                idx_c = np.minimum(idx, len(self._wl_keys) - 1)
                if bool((self._wl_keys[idx_c] == keys).all()):
                    return self._wl_dist[idx_c].astype(np.int64)
                if not self._expand_level():
                    raise GroupModelError("generators do not reach requested element")

    def word_length(self, g: Element) -> int:
        """Minimal number of generators whose product equals g."""
        g = self.check_element(g)
        if self.pack_capable:
            arr = np.array([g], dtype=np.int64)
            return int(self._lengths_packed(self._pack(arr))[0])
        return self._word_length_slow(g)

    def _word_length_slow(self, g: Element) -> int:
        if g == self.identity:
            return 0
        seen = {self.identity}
        frontier = [self.identity]
        radius = 0
        while frontier:
            radius += 1
            nxt = []
            for h in frontier:
                for s in self.generators:
                    z = self.multiply(h, s)
                    if z not in seen:
                        if z == g:
                            return radius
                        seen.add(z)
                        nxt.append(z)
            frontier = nxt
        raise GroupModelError("generators do not reach requested element")

    def word_distance(self, g: Element, h: Element) -> int:
        """Word metric d(g, h): length of g * h^-1 (right-invariant)."""
        return self.word_length(self.multiply(g, self.inverse(h)))

    def ball(self, radius: int) -> "FiniteSet":
        """Closed ball of the given radius around the identity."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        cached = self._ball_cache.get(radius)
        if cached is not None:
            return cached
        if self.pack_capable:
            with self._lock:
                while len(self._levels) <= radius:
                    if not self._expand_level():
                        break
                levels = self._levels[: radius + 1]
            coords = np.concatenate(levels) if levels else np.empty((0, self.dim))
            out = FiniteSet(self, [tuple(int(c) for c in row) for row in coords])
        else:
            elems = {self.identity}
            frontier = [self.identity]
            for _ in range(radius):
                nxt = []
                for h in frontier:
                    for s in self.generators:
                        z = self.multiply(h, s)
                        if z not in elems:
                            elems.add(z)
                            nxt.append(z)
                frontier = nxt
            out = FiniteSet(self, elems)
        self._ball_cache[radius] = out
        return out

    # -- bulk helpers over finite sets ---------------------------------------

    def set_diameter(self, Q: "FiniteSet") -> int:
        if len(Q) == 0:
            raise ValueError("diameter of the empty set is undefined")
        if len(Q) == 1:
            return 0
        if not self.pack_capable:
            return max(
                self.word_distance(g, h) for g in Q.sorted_elements for h in Q.sorted_elements
            )
        coords = Q.coords
        chunks: list[np.ndarray] = []
        diffs = np.empty(0, dtype=np.int64)
        for row in coords:
            h_inv = self.inverse(tuple(int(c) for c in row))
            chunks.append(self._pack(self.rmul_array(coords, h_inv)))
            if len(chunks) * len(coords) > 4_000_000:
                diffs = np.unique(np.concatenate([diffs] + chunks))
                chunks = []
        diffs = np.unique(np.concatenate([diffs] + chunks))
        return int(self._lengths_packed(diffs).max())


class FreeAbelian(GroupModel):
    """Z^d with generators {+-e_1, ..., +-e_d}; the word metric is l^1."""

    def __init__(self, d: int) -> None:
        if d < 1:
            raise ValueError("dimension must be positive")
        self.dim = d
        gens = []
        for i in range(d):
            e = [0] * d
            e[i] = 1
            gens.append(tuple(e))
            e = [0] * d
            e[i] = -1
            gens.append(tuple(e))
        self.generators = tuple(gens)
        super().__init__()

    def describe(self) -> str:
        return f"Z^{self.dim}"

    def multiply(self, g: Element, h: Element) -> Element:
        g = self.check_element(g)
        h = self.check_element(h)
        return tuple(a + b for a, b in zip(g, h))

    def inverse(self, g: Element) -> Element:
        g = self.check_element(g)
        return tuple(-a for a in g)

    def rmul_array(self, coords: np.ndarray, s: Element) -> np.ndarray:
        return coords + np.asarray(s, dtype=np.int64)

    def lmul_array(self, s: Element, coords: np.ndarray) -> np.ndarray:
        return coords + np.asarray(s, dtype=np.int64)


class Heisenberg3(GroupModel):
    """Discrete Heisenberg group: (a,b,c)(a',b',c') = (a+a', b+b', c+c'+b a')."""

    def __init__(self) -> None:
        self.dim = 3
        self.generators = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))
        super().__init__()

    def describe(self) -> str:
        return "H3"

    def multiply(self, g: Element, h: Element) -> Element:
        g = self.check_element(g)
        h = self.check_element(h)
        return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[1] * h[0])

    def inverse(self, g: Element) -> Element:
        a, b, c = self.check_element(g)
        return (-a, -b, a * b - c)

    def rmul_array(self, coords: np.ndarray, s: Element) -> np.ndarray:
        a, b, c = s
        out = np.empty_like(coords)
        out[:, 0] = coords[:, 0] + a
        out[:, 1] = coords[:, 1] + b
        out[:, 2] = coords[:, 2] + c + coords[:, 1] * a
        return out

    def lmul_array(self, s: Element, coords: np.ndarray) -> np.ndarray:
        a, b, c = s
        out = np.empty_like(coords)
        out[:, 0] = a + coords[:, 0]
        out[:, 1] = b + coords[:, 1]
        out[:, 2] = c + coords[:, 2] + b * coords[:, 0]
        return out


class FiniteSet:
    """Immutable finite subset of a group, with cached geometry."""

    __slots__ = (
        "model",
        "_elems",
        "_sorted",
        "_coords",
        "_packed",
        "_diameter",
        "_parts_cache",
        "_hash",
    )

    def __init__(self, model: GroupModel, elements: Iterable[Sequence[int]]) -> None:
        self.model = model
        self._elems = frozenset(model.check_element(g) for g in elements)
        self._sorted: Optional[tuple[Element, ...]] = None
        self._coords: Optional[np.ndarray] = None
        self._packed: Optional[np.ndarray] = None
        self._diameter: Optional[int] = None
        self._parts_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._hash: Optional[int] = None

    def __len__(self) -> int:
        return len(self._elems)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.sorted_elements)

    def __contains__(self, g: object) -> bool:
        return g in self._elems

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FiniteSet)
            and other.model is self.model
            and other._elems == self._elems
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((id(self.model), self._elems))
        return self._hash

    def __repr__(self) -> str:
        return f"FiniteSet({self.model.describe()}, n={len(self)})"

    @property
    def elements(self) -> frozenset[Element]:
        return self._elems

    @property
    def sorted_elements(self) -> tuple[Element, ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._elems))
        return self._sorted

    @property
    def coords(self) -> np.ndarray:
        if self._coords is None:
            if self._elems:
                self._coords = np.array(self.sorted_elements, dtype=np.int64)
            else:
                self._coords = np.empty((0, self.model.dim), dtype=np.int64)
        return self._coords

    @property
    def packed(self) -> np.ndarray:
        # lexicographic tuple order agrees with packed numeric order
        if self._packed is None:
            self._packed = self.model._pack(self.coords)
        return self._packed

    @property
    def diameter(self) -> int:
        if self._diameter is None:
            self._diameter = self.model.set_diameter(self)
        return self._diameter

    def right_translate(self, x: Sequence[int]) -> "FiniteSet":
        x = self.model.check_element(x)
        if not self._elems:
            return self
        return _from_coords(self.model, self.model.rmul_array(self.coords, x))

    def left_translate(self, s: Sequence[int]) -> "FiniteSet":
        s = self.model.check_element(s)
        if not self._elems:
            return self
        return _from_coords(self.model, self.model.lmul_array(s, self.coords))

    def union(self, other: "FiniteSet") -> "FiniteSet":
        return FiniteSet(self.model, self._elems | other._elems)

    def intersection(self, other: "FiniteSet") -> "FiniteSet":
        return FiniteSet(self.model, self._elems & other._elems)

    def difference(self, other: "FiniteSet") -> "FiniteSet":
        return FiniteSet(self.model, self._elems - other._elems)


def _from_coords(model: GroupModel, coords: np.ndarray) -> FiniteSet:
    return FiniteSet(model, [tuple(int(c) for c in row) for row in coords])


def _from_packed(model: GroupModel, keys: np.ndarray) -> FiniteSet:
    return _from_coords(model, model._unpack(keys))


# -- boundaries ----------------------------------------------------------------


def _in_sorted(haystack: np.ndarray, needles: np.ndarray) -> np.ndarray:
    """Membership mask of needles in a sorted unique array."""
    if haystack.size == 0:
        return np.zeros(len(needles), dtype=bool)
    idx = np.searchsorted(haystack, needles)
    idx = np.minimum(idx, len(haystack) - 1)
    return haystack[idx] == needles


def _boundary_parts(Q: FiniteSet, R: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Packed (interior boundary, exterior boundary, R-shrink) of Q.

    Both boundary shells are grown level by level with generator steps
    (multi-source BFS in the Cayley graph), so the cost is R sweeps over
    boundary-sized sets rather than one sweep per element of the ball B_R.
    For R = 0 both boundaries are empty.
    """
    if R < 0:
        raise ValueError("boundary radius must be >= 0")
    cached = Q._parts_cache.get(R)
    if cached is not None:
        return cached
    model = Q.model
    if not model.pack_capable:
        return _boundary_parts_slow(Q, R)
    empty = np.empty(0, dtype=np.int64)
    if len(Q) == 0 or R == 0:
        parts = (empty, empty, Q.packed.copy())
        Q._parts_cache[R] = parts
        return parts
    coords = Q.coords
    q_packed = Q.packed
    gens = [s for s in model.generators]

    def neighbours(level_coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cand = np.concatenate([model.lmul_array(s, level_coords) for s in gens])
        keys = model._pack(cand)
        keys, first = np.unique(keys, return_index=True)
        return keys, cand[first]

    # interior shells: points of Q at complement distance 1, 2, ..., R
    inside_mask = np.zeros(len(q_packed), dtype=bool)
    for s in gens:
        stepped = model._pack(model.lmul_array(s, coords))
        inside_mask |= ~_in_sorted(q_packed, stepped)
    level_idx = np.nonzero(inside_mask)[0]
    for _ in range(R - 1):
        if level_idx.size == 0:
            break
        keys, _ = neighbours(coords[level_idx])
        keys = keys[_in_sorted(q_packed, keys)]
        pos = np.searchsorted(q_packed, keys)
        fresh = np.unique(pos[~inside_mask[pos]])
        if fresh.size == 0:
            break
        inside_mask[fresh] = True
        level_idx = fresh
    interior_bdry = q_packed[inside_mask]
    shrunk = q_packed[~inside_mask]
    # exterior shells: complement points at distance 1, 2, ..., R from Q
    ext_keys = empty
    level_coords = coords
    for _ in range(R):
        keys, cand = neighbours(level_coords)
        outside = ~_in_sorted(q_packed, keys) & ~_in_sorted(ext_keys, keys)
        if not outside.any():
            break
        level_coords = cand[outside]
        ext_keys = np.union1d(ext_keys, keys[outside])
    parts = (interior_bdry, ext_keys, shrunk)
    Q._parts_cache[R] = parts
    return parts


def _boundary_parts_slow(Q: FiniteSet, R: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # dim > 3 fallback on plain sets; rarely used, kept for generality
    model = Q.model
    elems = Q.elements
    if len(Q) == 0 or R == 0:
        parts = (_obj(set()), _obj(set()), _obj(set(elems)))
    else:
        ball = model.ball(R)
        inter = set(elems)
        union = set(elems)
        for s in ball.sorted_elements:
            if s == model.identity:
                continue
            s_q = {model.multiply(s, q) for q in elems}
            inter &= s_q
            union |= s_q
        parts = (_obj(elems - inter), _obj(union - elems), _obj(inter))
    Q._parts_cache[R] = parts
    return parts


def _obj(elems: set) -> np.ndarray:
    arr = np.empty(len(elems), dtype=object)
    for i, e in enumerate(sorted(elems)):
        arr[i] = e
    return arr


def _as_set(Q: FiniteSet, packed_or_obj: np.ndarray) -> FiniteSet:
    if packed_or_obj.dtype == object:
        return FiniteSet(Q.model, list(packed_or_obj))
    return _from_packed(Q.model, packed_or_obj)


def boundary_int(Q: FiniteSet, R: int) -> FiniteSet:
    """Interior R-boundary: points of Q within distance R of the complement."""
    return _as_set(Q, _boundary_parts(Q, R)[0])


def boundary_int_size(Q: FiniteSet, R: int) -> int:
    return len(_boundary_parts(Q, R)[0])


def boundary_size(Q: FiniteSet, R: int) -> int:
    parts = _boundary_parts(Q, R)
    return len(parts[0]) + len(parts[1])


def boundary_ext(Q: FiniteSet, R: int) -> FiniteSet:
    """Exterior R-boundary: points outside Q within distance R of Q."""
    return _as_set(Q, _boundary_parts(Q, R)[1])


def boundary(Q: FiniteSet, R: int) -> FiniteSet:
    """Two-sided R-boundary of Q."""
    parts = _boundary_parts(Q, R)
    if parts[0].dtype == object:
        return FiniteSet(Q.model, list(parts[0]) + list(parts[1]))
    return _from_packed(Q.model, np.concatenate([parts[0], parts[1]]))


def shrink(Q: FiniteSet, R: int) -> FiniteSet:
    """Q_R = Q minus its two-sided R-boundary; may be empty."""
    return _as_set(Q, _boundary_parts(Q, R)[2])


def grow(Q: FiniteSet, R: int) -> FiniteSet:
    """Q^R = Q together with its two-sided R-boundary."""
    parts = _boundary_parts(Q, R)
    if parts[1].dtype == object:
        return FiniteSet(Q.model, set(Q.elements) | set(parts[1]))
    return _from_packed(Q.model, np.union1d(Q.packed, parts[1]))


# -- Folner tiles and grids ------------------------------------------------------


class TilingSpec:
    """A Folner tile Q_n together with its symmetric grid subgroup K_n.

    For Z^d the tile is the cube {0..n-1}^d with grid (nZ)^d; for H3 it is
    the box {(a,b,c) | a,b in [0,n), c in [0,n^2)} with grid
    {(a,b,c) | a,b in nZ, c in n^2 Z}.
    """

    def __init__(self, model: GroupModel, n: int) -> None:
        if n < 1:
            raise ValueError("tile index must be >= 1")
        self.model = model
        self.n = n
        self._bounding_diameter: Optional[int] = None
        if isinstance(model, Heisenberg3):
            elems = [
                (a, b, c)
                for a in range(n)
                for b in range(n)
                for c in range(n * n)
            ]
            self.grid_description = f"{{(a,b,c) | a,b in {n}Z, c in {n * n}Z}}"
        elif isinstance(model, FreeAbelian):
            rng = range(n)
            grids = np.stack(
                np.meshgrid(*([list(rng)] * model.dim), indexing="ij"), axis=-1
            ).reshape(-1, model.dim)
            elems = [tuple(int(c) for c in row) for row in grids]
            self.grid_description = f"({n}Z)^{model.dim}"
            self._bounding_diameter = model.dim * n
        else:
            raise GroupModelError("tilings are provided for Z^d and H3 only")
        self.tile = FiniteSet(model, elems)

    @property
    def bounding_diameter(self) -> int:
        """Radius used for diameter-sized boundaries in certificates.

        For Z^d this is the value d*n used throughout the lattice estimates
        (an upper bound for the true l^1 diameter d(n-1)); for H3 it is the
        exact BFS diameter of the tile.
        """
        if self._bounding_diameter is None:
            self._bounding_diameter = self.tile.diameter
        return self._bounding_diameter

    def grid_contains(self, g: Sequence[int]) -> bool:
        g = self.model.check_element(g)
        n = self.n
        if isinstance(self.model, Heisenberg3):
            return g[0] % n == 0 and g[1] % n == 0 and g[2] % (n * n) == 0
        return all(c % n == 0 for c in g)

    def decompose(self, g: Sequence[int]) -> tuple[Element, Element]:
        """Unique (q, gamma) with q in the tile, gamma in the grid, q*gamma = g."""
        g = self.model.check_element(g)
        arr = np.array([g], dtype=np.int64)
        q, gamma = self.decompose_array(arr)
        return tuple(int(c) for c in q[0]), tuple(int(c) for c in gamma[0])

    def decompose_array(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        if isinstance(self.model, Heisenberg3):
            a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
            alpha = a % n
            ga = a - alpha
            beta = b % n
            gb = b - beta
            t = c - beta * ga
            zeta = t % (n * n)
            gc = t - zeta
            q = np.stack([alpha, beta, zeta], axis=1)
            gamma = np.stack([ga, gb, gc], axis=1)
            return q, gamma
        q = coords % n
        return q, coords - q


def folner_set(model: GroupModel, n: int) -> TilingSpec:
    """The n-th symmetric tiling Folner set for the given group."""
    return TilingSpec(model, n)


def interval_folner(model: FreeAbelian, j: int, scale: int = 3, side: str = "positive") -> FiniteSet:
    """The Z^1 interval sequences U_j = {1..scale*j} / V_j = {-scale*j..-1}."""
    if model.dim != 1:
        raise GroupModelError("interval Folner sequences are one-dimensional")
    if j < 1:
        raise ValueError("index must be >= 1")
    if side == "positive":
        return FiniteSet(model, [(i,) for i in range(1, scale * j + 1)])
    if side == "negative":
        return FiniteSet(model, [(i,) for i in range(-scale * j, 0)])
    raise ValueError(f"unknown side {side!r}")


def grid_decompose(g: Sequence[int], spec: TilingSpec) -> tuple[Element, Element]:
    return spec.decompose(g)


@dataclass(frozen=True)
class GridCover:
    """Grid shifts whose tile translate meets A, split by containment in A."""

    interior: FiniteSet
    crossing: FiniteSet


def grid_cover(A: FiniteSet, x: Sequence[int], spec: TilingSpec) -> GridCover:
    """Tiles of the x-shifted grid meeting A.

    Every element a of A lies in exactly one translate Q_n*gamma with gamma
    in K_n x^-1; a shift is interior when its tile is contained in A, which
    happens exactly when all |Q_n| tile points land in A.
    """
    model = A.model
    x = model.check_element(x)
    if len(A) == 0:
        empty = FiniteSet(model, [])
        return GridCover(empty, empty)
    tile_size = len(spec.tile)
    shifted = model.rmul_array(A.coords, x)
    _, g0 = spec.decompose_array(shifted)
    gamma = model.rmul_array(g0, model.inverse(x))
    if model.pack_capable:
        keys = model._pack(gamma)
        uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
        inside = counts == tile_size
        interior = _from_coords(model, gamma[first[inside]])
        crossing = _from_coords(model, gamma[first[~inside]])
        return GridCover(interior, crossing)
    tallies: dict[Element, int] = {}
    for row in gamma:
        g = tuple(int(c) for c in row)
        tallies[g] = tallies.get(g, 0) + 1
    interior_elems = [g for g, c in tallies.items() if c == tile_size]
    crossing_elems = [g for g, c in tallies.items() if c < tile_size]
    return GridCover(FiniteSet(model, interior_elems), FiniteSet(model, crossing_elems))


def admissible_positions(tile: FiniteSet, U: FiniteSet) -> FiniteSet:
    """All x with tile*x contained in U (not restricted to the grid)."""
    model = tile.model
    if len(tile) == 0:
        raise ValueError("tile must be non-empty")
    if len(U) == 0:
        return FiniteSet(model, [])
    if model.pack_capable:
        out: Optional[np.ndarray] = None
        for q in tile.sorted_elements:
            shifted = np.sort(model._pack(model.lmul_array(model.inverse(q), U.coords)))
            out = shifted if out is None else np.intersect1d(out, shifted, assume_unique=True)
            if out.size == 0:
                break
        assert out is not None
        return _from_packed(model, out)
    result: Optional[set[Element]] = None
    for q in tile.sorted_elements:
        q_inv = model.inverse(q)
        shifted = {model.multiply(q_inv, u) for u in U.elements}
        result = shifted if result is None else (result & shifted)
        if not result:
            break
    return FiniteSet(model, result or set())
