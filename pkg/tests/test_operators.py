import random

import numpy as np
import pytest

from idsapprox.cayley import FiniteSet, FreeAbelian, folner_set, interval_folner, shrink
from idsapprox.colouring import (
    Alphabet,
    BLACK,
    HalfLineMod3,
    PercolationColouring,
    TrivialColouring,
)
from idsapprox.operators import (
    LocalRule,
    PeriodicCover,
    SymmetryError,
    adjacency_rule,
    check_invariance,
    laplacian_rule,
    norm_bound,
    offset_table_rule,
    percolation_rule,
    periodic_fold,
    restrict_operator,
)
from conftest import interval, random_subset


def test_zero_rule(z1):
    rule = offset_table_rule(z1, {}, name="zero")
    M = restrict_operator(rule, TrivialColouring(z1), interval(z1, 0, 5))
    assert np.all(M.to_dense() == 0.0)
    assert norm_bound(rule) == 0.0


def test_path_graph_tridiagonal(z1):
    rule = adjacency_rule(z1)
    M = restrict_operator(rule, TrivialColouring(z1), interval(z1, 0, 2)).to_dense()
    assert np.array_equal(M, np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))


def test_adjacency_properties(z2, h3):
    assert adjacency_rule(h3).overall_range == 1
    for model in (z2, h3):
        rule = adjacency_rule(model)
        C = TrivialColouring(model)
        Q = model.ball(2)
        M = restrict_operator(rule, C, Q).to_dense()
        assert np.array_equal(M, M.T)
        assert np.all(np.diag(M) == 0.0)
        # interior rows have full degree |S|
        inner = shrink(Q, 1)
        order = restrict_operator(rule, C, Q).order
        for g in inner.sorted_elements:
            assert M[order.index(g)].sum() == len(model.generators)


def test_percolation_all_retained_equals_adjacency(z2):
    C = PercolationColouring(z2, Alphabet(("a", "b")), seed=9)
    rule_p = percolation_rule(z2, C.alphabet, ["a", "b"])
    rule_a = adjacency_rule(z2)
    Q = folner_set(z2, 4).tile
    assert np.array_equal(
        restrict_operator(rule_p, C, Q).to_dense(),
        restrict_operator(rule_a, C, Q).to_dense(),
    )


def test_example_block_structure(z1):
    C = HalfLineMod3(z1)
    rule = percolation_rule(z1, C.alphabet, [BLACK])
    for j in (1, 4):
        U = interval_folner(z1, j, side="positive")
        assert np.all(restrict_operator(rule, C, U).to_dense() == 0.0)
        V = interval_folner(z1, j, side="negative")
        M = restrict_operator(rule, C, V).to_dense()
        # j disjoint 2x2 adjacency blocks plus j isolated zeros
        assert M.sum() == 2 * j
        assert np.all(M @ M @ M == M)  # A^3 = A for disjoint edges


def test_laplacian_full_lattice(z2):
    rule = laplacian_rule(adjacency_rule(z2))
    C = TrivialColouring(z2)
    Q = folner_set(z2, 3).tile
    M = restrict_operator(rule, C, Q).to_dense()
    order = restrict_operator(rule, C, Q).order
    assert all(M[i, i] == 4.0 for i in range(len(order)))
    i, j = order.index((0, 0)), order.index((0, 1))
    assert M[i, j] == -1.0


def test_laplacian_isolated_vertex(z1):
    C = HalfLineMod3(z1)
    rule = laplacian_rule(percolation_rule(z1, C.alphabet, [BLACK]))
    U = interval_folner(z1, 2, side="positive")  # all white: no edges, degree 0
    assert np.all(restrict_operator(rule, C, U).to_dense() == 0.0)


def test_laplacian_positive_semidefinite(z2):
    rng = random.Random(25)
    C = PercolationColouring(z2, Alphabet(("a", "b")), seed=31)
    rule = laplacian_rule(percolation_rule(z2, C.alphabet, ["a"]))
    for _ in range(6):
        Q = random_subset(z2, rng, radius=3, size=12)
        vals = np.linalg.eigvalsh(restrict_operator(rule, C, Q).to_dense())
        assert vals.min() >= -1e-9


def test_periodic_fold_singleton_reduces_to_adjacency(z1):
    model = z1

    def kern(a, b):
        (g, i), (h, j) = a, b
        return 1.0 if abs(g[0] - h[0]) == 1 else 0.0

    cover = PeriodicCover(model, 1, kern, 1)
    rule = periodic_fold(cover)
    C = TrivialColouring(model)
    Q = interval(model, 0, 5)
    assert np.array_equal(
        restrict_operator(rule, C, Q).to_dense(),
        restrict_operator(adjacency_rule(model), C, Q).to_dense(),
    )


def test_periodic_fold_alternating_chain_spectrum(z1):
    # period-2 chain with edge weights 1, 2: fold over D={0,1}
    def unfolded_entry(u, v):
        if abs(u - v) != 1:
            return 0.0
        return 1.0 if min(u, v) % 2 == 0 else 2.0

    def kern(a, b):
        (g, i), (h, j) = a, b
        return unfolded_entry(2 * g[0] + i, 2 * h[0] + j)

    rule = periodic_fold(PeriodicCover(z1, 2, kern, 1))
    assert rule.k == 2
    C = TrivialColouring(z1)
    m = 6
    Q = interval(z1, 0, m - 1)
    M = restrict_operator(rule, C, Q).to_dense()
    assert np.array_equal(M, M.T)
    # oracle: eigensolve the unfolded segment {0..2m-1}
    n = 2 * m
    A = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            A[u, v] = unfolded_entry(u, v)
    assert np.allclose(np.linalg.eigvalsh(M), np.linalg.eigvalsh(A), atol=1e-10)


def test_periodic_fold_rejects_noninvariant(z1):
    def kern(a, b):
        (g, i), (h, j) = a, b
        return float(g[0] == 0 and h[0] == 1)

    with pytest.raises(Exception):
        periodic_fold(PeriodicCover(z1, 1, kern, 1))


def test_check_invariance_clean_rules(z2):
    rng = random.Random(26)
    C = PercolationColouring(z2, Alphabet(("a", "b")), seed=17)
    pool = list(z2.ball(4).sorted_elements)
    samples = [(rng.choice(pool), rng.choice(pool)) for _ in range(200)]
    for rule in (adjacency_rule(z2), percolation_rule(z2, C.alphabet, ["a"])):
        report = check_invariance(rule, C, samples)
        assert report.ok
        assert report.checked > 0


def test_check_invariance_catches_broken_rule(z2):
    class Broken(LocalRule):
        def block_at(self, C, x, y):  # reads absolute coordinates
            base = super().block_at(C, x, y)
            return base * (1.0 + 0.1 * (x[0] % 3))

    rule = Broken(z2, 1, 1, 1, lambda pat, w: 0.0 if w == (0, 0) else 1.0)
    C = TrivialColouring(z2)
    pool = list(z2.ball(3).sorted_elements)
    samples = [(g, t) for g in pool[:10] for t in pool[:10]]
    report = check_invariance(rule, C, samples)
    assert not report.ok


def test_norm_bound_adjacency():
    for d in (1, 2, 3):
        model = FreeAbelian(d)
        rule = adjacency_rule(model)
        C = TrivialColouring(model)
        restrict_operator(rule, C, model.ball(2))
        bound = norm_bound(rule)
        assert bound == 2 * d + 1
        # true norm oracle: large restriction stays within the certificate
        big = restrict_operator(rule, C, folner_set(model, 8 if d < 3 else 5).tile)
        vals = np.linalg.eigvalsh(big.to_dense())
        assert np.abs(vals).max() <= bound
        assert bound >= 2 * d  # Fourier band edge of the lattice


def test_eigenvalues_within_norm_bound(h3):
    rule = adjacency_rule(h3)
    C = TrivialColouring(h3)
    M = restrict_operator(rule, C, folner_set(h3, 4).tile)
    vals = np.linalg.eigvalsh(M.to_dense())
    assert np.abs(vals).max() <= M.norm_hint


def test_decoupling_block_diagonal(z2):
    # restriction to a disjoint union of shrunk parts decouples exactly
    rng = random.Random(27)
    C = PercolationColouring(z2, Alphabet(("a", "b")), seed=23)
    rule = percolation_rule(z2, C.alphabet, ["a"])
    R = rule.overall_range
    for _ in range(5):
        q1 = random_subset(z2, rng, radius=2, size=8)
        offset = (rng.choice([7, -7]), rng.choice([7, -7]))
        q2 = q1.right_translate(offset)
        p1, p2 = shrink(q1, R), shrink(q2, R)
        if not len(p1) or not len(p2):
            continue
        union = FiniteSet(z2, p1.elements | p2.elements)
        M = restrict_operator(rule, C, union)
        dense = M.to_dense()
        idx1 = [M.order.index(g) for g in p1.sorted_elements]
        idx2 = [M.order.index(g) for g in p2.sorted_elements]
        assert np.all(dense[np.ix_(idx1, idx2)] == 0.0)
        sub1 = restrict_operator(rule, C, p1).to_dense()
        assert np.array_equal(dense[np.ix_(idx1, idx1)], sub1)


def test_restriction_consistency(z2):
    C = PercolationColouring(z2, Alphabet(("a", "b")), seed=29)
    rule = percolation_rule(z2, C.alphabet, ["a"])
    Q = folner_set(z2, 4).tile
    Qsub = folner_set(z2, 2).tile
    M = restrict_operator(rule, C, Q)
    sub = restrict_operator(rule, C, Qsub)
    idx = [M.order.index(g) for g in sub.order]
    assert np.array_equal(M.to_dense()[np.ix_(idx, idx)], sub.to_dense())


def test_exact_symmetry_bitwise(h3):
    C = TrivialColouring(h3)
    M = restrict_operator(adjacency_rule(h3), C, folner_set(h3, 3).tile).to_dense()
    assert np.array_equal(M, M.T)


def test_symmetry_violation_raises(z1):
    def bad_kernel(pat, w):
        if w == (0,):
            return 0.0
        return 1.0 if w == (1,) else 2.0  # kernel(w) != kernel(-w)

    rule = LocalRule(z1, 1, 1, 1, bad_kernel)
    with pytest.raises(SymmetryError):
        restrict_operator(rule, TrivialColouring(z1), interval(z1, 0, 3))


def test_offset_table_symmetry_validation(z1):
    with pytest.raises(SymmetryError):
        offset_table_rule(z1, {(1,): 1.0, (-1,): 2.0})


def test_sparse_storage_above_threshold(z1):
    import scipy.sparse

    rule = adjacency_rule(z1)
    C = TrivialColouring(z1)
    big = interval(z1, 0, 2500)
    M = restrict_operator(rule, C, big)
    assert scipy.sparse.issparse(M.data)
    assert M.to_dense().shape == (2501, 2501)


def test_coordinate_text_export(z1):
    rule = adjacency_rule(z1)
    M = restrict_operator(rule, TrivialColouring(z1), interval(z1, 0, 2))
    text = M.to_coordinate_text()
    lines = text.strip().splitlines()
    assert lines[0].startswith("%")
    assert "1 2 1.0" in text
