"""Finite-range, colouring-invariant operators and their finite restrictions.

A local rule holds the kernel blocks of such an operator as a function of
the local colouring pattern.  The pattern is read on the ball of radius 2R
around the row point x (translated to the identity) and the column point is
addressed by the offset w = y * x^-1, so a rule is invariant under right
translations by construction.  Restrictions H[Q] read the ambient colouring;
they never re-evaluate patterns against Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse

from .cayley import Element, FiniteSet, GroupModel
from .colouring import Alphabet, Colouring


class OperatorError(ValueError):
    pass


class SymmetryError(OperatorError):
    """The kernel violates block symmetry; restrictions would not be selfadjoint."""


class LocalPattern:
    """Read-only view of a colouring around a base point, pulled back to e."""

    __slots__ = ("window", "symbols", "_index")

    def __init__(self, window: tuple[Element, ...], symbols: tuple[str, ...]) -> None:
        self.window = window
        self.symbols = symbols
        self._index = {q: i for i, q in enumerate(window)}

    def symbol_at(self, q: Element) -> str:
        return self.symbols[self._index[q]]


KernelFn = Callable[[LocalPattern, Element], object]


class LocalRule:
    """Kernel of a finite-range, colouring-invariant operator.

    ``kernel(pattern, offset)`` must return the k x k block p_y H i_x for
    y = offset * x, given the local pattern at x; it is only consulted for
    offsets of word length at most the hopping range M.  Blocks must satisfy
    kernel(pattern at y, offset^-1) == kernel(pattern at x, offset)^T, which
    is validated during assembly.
    """

    def __init__(
        self,
        model: GroupModel,
        k: int,
        range_m: int,
        invariance_n: int,
        kernel: KernelFn,
        name: str = "",
    ) -> None:
        if k < 1:
            raise OperatorError("internal dimension must be positive")
        if range_m < 1:
            raise OperatorError("hopping range must be positive")
        if invariance_n < 0:
            raise OperatorError("invariance radius must be >= 0")
        self.model = model
        self.k = k
        self.range_m = range_m
        self.invariance_n = invariance_n
        self.overall_range = max(range_m, invariance_n)
        self.kernel = kernel
        self.name = name or type(self).__name__
        self._window = model.ball(2 * self.overall_range).sorted_elements
        self._offsets = model.ball(range_m).sorted_elements
        # grows under the GIL; concurrent readers are fine
        self._block_cache: dict[tuple, np.ndarray] = {}

    # -- pattern and block access -------------------------------------------

    def local_pattern(self, C: Colouring, x: Element) -> LocalPattern:
        model = self.model
        symbols = tuple(C.colour(model.multiply(q, x)) for q in self._window)
        return LocalPattern(self._window, symbols)

    def _block_for(self, pattern: LocalPattern, w: Element) -> np.ndarray:
        key = (pattern.symbols, w)
        cached = self._block_cache.get(key)
        if cached is not None:
            return cached
        raw = np.asarray(self.kernel(pattern, w), dtype=np.float64).reshape(self.k, self.k)
        raw.setflags(write=False)
        self._block_cache[key] = raw
        return raw

    def block_at(self, C: Colouring, x: Element, y: Element) -> np.ndarray:
        """Kernel block p_y H i_x, zero beyond the hopping range."""
        model = self.model
        w = model.multiply(y, model.inverse(x))
        if model.word_length(w) > self.range_m:
            return np.zeros((self.k, self.k))
        return self._block_for(self.local_pattern(C, x), w)

    def seen_block_norms(self) -> list[float]:
        return [float(np.linalg.norm(b, 2)) for b in self._block_cache.values()]


@dataclass
class RestrictedMatrix:
    """Finite restriction H[Q] with a fixed, reproducible row order."""

    Q: FiniteSet
    order: tuple[Element, ...]
    k: int
    data: object  # dense ndarray or scipy.sparse matrix
    norm_hint: float = 0.0

    @property
    def dim(self) -> int:
        return self.k * len(self.order)

    def to_dense(self) -> np.ndarray:
        if scipy.sparse.issparse(self.data):
            return np.asarray(self.data.todense(), dtype=np.float64)
        return np.asarray(self.data, dtype=np.float64)

    def index_of(self, g: Element) -> int:
        return self.order.index(g)

    def to_coordinate_text(self) -> str:
        """Plain-text symmetric coordinate dump (upper triangle, 1-based)."""
        dense = self.to_dense()
        lines = [f"% symmetric {self.dim} {self.dim} k={self.k}"]
        rows, cols = np.nonzero(dense)
        for i, j in zip(rows, cols):
            if j < i:
                continue
            lines.append(f"{i + 1} {j + 1} {float(dense[i, j])!r}")
        return "\n".join(lines) + "\n"


DENSE_LIMIT = 2000


def restrict_operator(rule: LocalRule, C: Colouring, Q: FiniteSet) -> RestrictedMatrix:
    """Assemble H[Q] = p_Q H i_Q from the rule's kernel blocks.

    Blocks are assembled symmetrically from one orientation, and the kernel's
    transpose consistency is validated on every assembled pair.
    """
    model = rule.model
    order = Q.sorted_elements
    index = {g: i for i, g in enumerate(order)}
    k = rule.k
    dim = k * len(order)
    dense = dim <= DENSE_LIMIT
    if dense:
        mat = np.zeros((dim, dim))
        rows = cols = vals = None
    else:
        mat = None
        rows, cols, vals = [], [], []
    patterns: dict[Element, LocalPattern] = {}

    def pattern_at(g: Element) -> LocalPattern:
        pat = patterns.get(g)
        if pat is None:
            pat = rule.local_pattern(C, g)
            patterns[g] = pat
        return pat

    def put(i: int, j: int, block: np.ndarray) -> None:
        if dense:
            mat[i * k : (i + 1) * k, j * k : (j + 1) * k] = block
        else:
            for a in range(k):
                for b in range(k):
                    v = block[a, b]
                    if v != 0.0:
                        rows.append(i * k + a)
                        cols.append(j * k + b)
                        vals.append(v)

    identity = model.identity
    for i, x in enumerate(order):
        pat_x = pattern_at(x)
        for w in rule._offsets:
            y = model.multiply(w, x)
            j = index.get(y)
            if j is None or j < i:
                continue
            block = rule._block_for(pat_x, w)
            if j == i:
                if w != identity:
                    raise OperatorError("offset identity mismatch")
                if not np.array_equal(block, block.T):
                    raise SymmetryError(
                        f"diagonal block at {x} is not symmetric: {block}"
                    )
                put(i, i, block)
            else:
                mirrored = rule._block_for(pattern_at(y), model.inverse(w))
                if not np.array_equal(mirrored, block.T):
                    raise SymmetryError(
                        f"kernel blocks at ({x}, {y}) are not transpose-consistent"
                    )
                put(i, j, block)
                put(j, i, block.T)
    if dense:
        data: object = mat
    else:
        data = scipy.sparse.coo_matrix(
            (vals, (rows, cols)), shape=(dim, dim)
        ).tocsr()
    return RestrictedMatrix(Q, order, k, data, norm_hint=norm_bound(rule))


# -- concrete rules ---------------------------------------------------------------


def adjacency_rule(model: GroupModel) -> LocalRule:
    """Cayley-graph adjacency: block 1 at word distance one, else 0."""

    def kernel(pattern: LocalPattern, w: Element) -> float:
        return 0.0 if w == model.identity else 1.0

    return LocalRule(model, 1, 1, 1, kernel, name="adjacency")


def percolation_rule(
    model: GroupModel, alphabet: Alphabet, retained: Iterable[str]
) -> LocalRule:
    """Adjacency of the subgraph induced on retained-coloured vertices."""
    kept = tuple(sorted(set(retained)))
    if not kept:
        raise OperatorError("retained colour set must be non-empty")
    for s in kept:
        if s not in alphabet:
            raise OperatorError(f"retained symbol {s!r} not in alphabet")
    kept_set = frozenset(kept)
    e = model.identity

    def kernel(pattern: LocalPattern, w: Element) -> float:
        if w == e:
            return 0.0
        if pattern.symbol_at(e) in kept_set and pattern.symbol_at(w) in kept_set:
            return 1.0
        return 0.0

    return LocalRule(model, 1, 1, 1, kernel, name=f"percolation[{','.join(kept)}]")


def offset_table_rule(
    model: GroupModel, table: Mapping[Sequence[int], float], name: str = "hop_table"
) -> LocalRule:
    """Scalar translation-invariant rule from an explicit offset table.

    The table maps offsets w = y x^-1 to the entry H(x, y); it must be
    inversion-symmetric (table[w^-1] == table[w]) for selfadjointness.
    """
    entries = {model.check_element(w): float(v) for w, v in table.items()}
    for w, v in entries.items():
        if entries.get(model.inverse(w), 0.0) != v:
            raise SymmetryError(f"offset table not symmetric at {w}")
    hop = max((model.word_length(w) for w, v in entries.items() if v != 0.0), default=1)
    hop = max(hop, 1)

    def kernel(pattern: LocalPattern, w: Element) -> float:
        return entries.get(w, 0.0)

    return LocalRule(model, 1, hop, 1, kernel, name=name)


def laplacian_rule(base: LocalRule) -> LocalRule:
    """Graph Laplacian of a 0/1 adjacency-type rule: degree on the diagonal,
    minus the base block off the diagonal."""
    if base.k != 1 or base.range_m != 1:
        raise OperatorError("laplacian_rule needs a k=1 adjacency-type base rule")
    model = base.model
    e = model.identity
    gens = tuple(s for s in model.ball(1).sorted_elements if s != e)

    def kernel(pattern: LocalPattern, w: Element) -> float:
        if w == e:
            return float(sum(float(base.kernel(pattern, s)) for s in gens))
        return -float(base.kernel(pattern, w))

    return LocalRule(
        model, 1, 1, max(1, base.invariance_n), kernel, name=f"laplacian({base.name})"
    )


@dataclass(frozen=True)
class PeriodicCover:
    """A periodic graph presented as G x D with a G-invariant kernel.

    ``kernel((g, i), (h, j))`` is the matrix element between fibre point i
    over g and fibre point j over h; it must be invariant under right
    translation of both group coordinates and vanish whenever the word
    distance between g and h exceeds hop_range.
    """

    model: GroupModel
    fiber_size: int
    kernel: Callable[[tuple[Element, int], tuple[Element, int]], float]
    hop_range: int


def periodic_fold(cover: PeriodicCover) -> LocalRule:
    """Fold a periodic cover into a trivially-invariant rule with k = |D|."""
    model = cover.model
    d = cover.fiber_size
    if d < 1:
        raise OperatorError("fibre must be non-empty")
    e = model.identity
    # validate G-invariance and the finite range on deterministic samples
    probe = model.ball(min(cover.hop_range + 1, 3)).sorted_elements
    shifts = model.ball(2).sorted_elements
    for g in probe[:6]:
        for h in probe[:6]:
            v0 = cover.kernel((g, 0), (h, d - 1))
            for t in shifts[:5]:
                gt = model.multiply(g, t)
                ht = model.multiply(h, t)
                if cover.kernel((gt, 0), (ht, d - 1)) != v0:
                    raise OperatorError("cover kernel is not G-invariant")
    shell = [
        w
        for w in model.ball(cover.hop_range + 1).sorted_elements
        if model.word_length(w) == cover.hop_range + 1
    ]
    for w in shell[:25]:
        for i in range(d):
            for j in range(d):
                if cover.kernel((e, i), (w, j)) != 0.0:
                    raise OperatorError(
                        "cover kernel exceeds the declared hopping range"
                    )

    def kernel(pattern: LocalPattern, w: Element) -> np.ndarray:
        block = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                block[i, j] = cover.kernel((e, i), (w, j))
        return block

    return LocalRule(model, d, cover.hop_range, 0, kernel, name="periodic_fold")


# -- diagnostics -------------------------------------------------------------------


@dataclass
class InvarianceReport:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_invariance(
    rule: LocalRule, C: Colouring, samples: Iterable[tuple[Element, Element]]
) -> InvarianceReport:
    """Sampled check of colouring invariance.

    For sample pairs (x, t) whose local patterns at x and x*t agree, every
    block p_y H i_x within range must equal the block at the translated pair.
    Violations are collected, not raised (diagnostic).
    """
    model = rule.model
    report = InvarianceReport()
    for x, t in samples:
        x = model.check_element(x)
        t = model.check_element(t)
        xt = model.multiply(x, t)
        if rule.local_pattern(C, x).symbols != rule.local_pattern(C, xt).symbols:
            continue
        for w in rule._offsets:
            y = model.multiply(w, x)
            yt = model.multiply(y, t)
            report.checked += 1
            b1 = rule.block_at(C, x, y)
            b2 = rule.block_at(C, xt, yt)
            if not np.array_equal(b1, b2):
                report.violations.append((x, t, w))
    return report


def norm_bound(rule: LocalRule) -> float:
    """Operator-norm certificate c * |B_R| over the block values seen so far.

    c is the maximal spectral norm among the kernel blocks evaluated during
    assembly; the bound is an upper certificate relative to that enumeration,
    not the exact operator norm.
    """
    norms = rule.seen_block_norms()
    if not norms:
        return 0.0
    return max(norms) * len(rule.model.ball(rule.overall_range))
