# Tests for sparsity patterns and function graphs
# Verifies thresholding, components, the profile preorder and cliques

import numpy as np
import pytest

from src.core.graphs import (
    BlockStructure,
    Comparison,
    SparsityPattern,
    component_patterns,
    connected_components,
    maximal_cliques,
    pattern_from_matrix_set,
    profile_preceq,
)
from src.errors import InvalidInputError
from src.testgen import haar_rotation, sparse_family


class TestSparsityPattern:
    """Tests for the SparsityPattern value type."""

    def test_pairs_are_normalized(self):
        """Test that (j, i) is stored as (i, j)."""
        p = SparsityPattern.from_edges(3, [(2, 0)], [1])
        assert p.off_diag == frozenset({(0, 2)})
        assert p.diag == frozenset({1})

    def test_counts(self):
        """Test unordered size and ordered count."""
        p = SparsityPattern.from_edges(4, [(0, 1), (2, 3)], [0])
        assert p.size == 3
        assert p.ordered_count == 5

    def test_invalid_pair_rejected(self):
        """Test that self-loops and out-of-range pairs are rejected."""
        with pytest.raises(InvalidInputError):
            SparsityPattern.from_edges(3, [(1, 1)])
        with pytest.raises(InvalidInputError):
            SparsityPattern.from_edges(3, [(0, 3)])

    def test_mask_is_symmetric(self):
        """Test the boolean mask."""
        mask = SparsityPattern.from_edges(3, [(0, 2)], [1]).to_mask()
        expected = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=bool)
        np.testing.assert_array_equal(mask, expected)

    def test_restrict_reindexes(self):
        """Test the induced sub-pattern on a group."""
        p = SparsityPattern.from_edges(5, [(1, 3), (3, 4), (0, 2)], [4])
        sub = p.restrict((1, 3, 4))
        assert sub.d == 3
        assert sub.off_diag == frozenset({(0, 1), (1, 2)})
        assert sub.diag == frozenset({2})


class TestPatternFromMatrixSet:
    """Tests for thresholding the mean absolute matrix."""

    def test_zero_matrix(self):
        """Test that the zero matrix gives the empty pattern."""
        p = pattern_from_matrix_set([np.zeros((3, 3))], 0.0)
        assert p.size == 0

    def test_single_pair(self):
        """Test the symmetric E12 + E21 example."""
        p = pattern_from_matrix_set([np.array([[0.0, 1.0], [1.0, 0.0]])], 0.5)
        assert p.off_diag == frozenset({(0, 1)})
        assert p.diag == frozenset()

    def test_empty_set_rejected(self):
        """Test the 'no matrices' error."""
        with pytest.raises(InvalidInputError, match="no matrices"):
            pattern_from_matrix_set([], 0.0)

    def test_negative_eta_rejected(self):
        with pytest.raises(InvalidInputError):
            pattern_from_matrix_set([np.eye(2)], -1.0)

    def test_rotation_back_recovers_support(self):
        """Test that conjugating H_R(J) with R^T recovers J."""
        rng = np.random.default_rng(3)
        J = SparsityPattern.from_edges(4, [(0, 1), (1, 3)], [2])
        base = sparse_family(J, 10, rng)
        R = haar_rotation(4, rng)
        rotated = np.einsum("ji,njk,kl->nil", R, base, R)
        back = np.einsum("ij,njk,lk->nil", R, rotated, R)
        assert pattern_from_matrix_set(back, 1e-9) == J

    def test_permutation_permutes_pattern(self):
        """Test that a permutation conjugation permutes the eta=0 pattern."""
        rng = np.random.default_rng(0)
        J = SparsityPattern.from_edges(4, [(0, 1), (2, 3)], [0, 3])
        mats = sparse_family(J, 5, rng)
        perm = [2, 0, 3, 1]
        P = np.eye(4)[:, perm]
        permuted = np.einsum("ji,njk,kl->nil", P, mats, P)
        assert pattern_from_matrix_set(permuted, 0.0) == J.permuted(perm)

    def test_monotone_in_eta(self):
        """Test that larger thresholds give smaller patterns."""
        mats = np.random.default_rng(1).standard_normal((6, 5, 5))
        mats = mats + np.swapaxes(mats, 1, 2)
        small = pattern_from_matrix_set(mats, 0.5)
        large = pattern_from_matrix_set(mats, 1.5)
        assert large.off_diag <= small.off_diag
        assert large.diag <= small.diag


class TestConnectedComponents:
    """Tests for connected components and their ordering."""

    def test_two_edges(self):
        p = SparsityPattern.from_edges(4, [(0, 1), (2, 3)])
        structure = connected_components(p)
        assert structure.groups == ((0, 1), (2, 3))
        assert structure.profile == (2, 2)

    def test_empty_graph(self):
        structure = connected_components(SparsityPattern(3))
        assert structure.groups == ((0,), (1,), (2,))
        assert structure.profile == (1, 1, 1)

    def test_path_with_isolated_vertices(self):
        p = SparsityPattern.from_edges(5, [(0, 1), (1, 2)])
        structure = connected_components(p)
        assert structure.groups == ((0, 1, 2), (3,), (4,))
        assert structure.profile == (3, 1, 1)

    def test_ordering_by_size_then_index(self):
        """Test that larger groups come first and ties go to the smaller index."""
        p = SparsityPattern.from_edges(6, [(4, 5), (0, 3), (1, 2), (2, 3)])
        assert connected_components(p).groups == ((0, 1, 2, 3), (4, 5))

    def test_idempotent_under_restriction(self):
        """Test that every group is a single component of its sub-pattern."""
        p = SparsityPattern.from_edges(7, [(0, 4), (4, 6), (1, 2), (3, 5)])
        for group, sub in component_patterns(p).items():
            assert connected_components(sub).groups == (tuple(range(len(group))),)

    def test_block_structure_must_partition(self):
        with pytest.raises(InvalidInputError):
            BlockStructure(3, ((0, 1),))

    def test_contiguous_layout(self):
        structure = BlockStructure(4, ((1, 3), (0, 2)))
        assert structure.permutation == (1, 3, 0, 2)
        assert structure.contiguous().groups == ((0, 1), (2, 3))
        assert structure.offsets == [0, 2]


class TestProfilePreceq:
    """Tests for the block-profile preorder."""

    def test_finer(self):
        assert profile_preceq((1, 1, 1, 1), (2, 2)) == Comparison.FINER

    def test_coarser(self):
        assert profile_preceq((2, 2), (1, 1, 1, 1)) == Comparison.COARSER

    def test_incomparable(self):
        assert profile_preceq((3, 1), (2, 2)) == Comparison.INCOMPARABLE

    def test_equal(self):
        assert profile_preceq((2, 2), (2, 2)) == Comparison.EQUAL

    def test_mismatched_totals(self):
        with pytest.raises(InvalidInputError):
            profile_preceq((2, 1), (2, 2))

    def test_preorder_axioms(self):
        """Test reflexivity and transitivity on random profile triples."""
        rng = np.random.default_rng(5)

        def random_profile(total):
            parts = []
            while total:
                k = int(rng.integers(1, total + 1))
                parts.append(k)
                total -= k
            return tuple(sorted(parts, reverse=True))

        finer = {Comparison.FINER, Comparison.EQUAL}
        for _ in range(30):
            a, b, c = (random_profile(8) for _ in range(3))
            assert profile_preceq(a, a) == Comparison.EQUAL
            if profile_preceq(a, b) in finer and profile_preceq(b, c) in finer:
                assert profile_preceq(a, c) in finer


class TestMaximalCliques:
    """Tests for maximal clique enumeration."""

    def test_triangle(self):
        p = SparsityPattern.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert maximal_cliques(p) == [(0, 1, 2)]

    def test_path(self):
        p = SparsityPattern.from_edges(3, [(0, 1), (1, 2)])
        assert sorted(maximal_cliques(p)) == [(0, 1), (1, 2)]

    def test_four_cycle(self):
        p = SparsityPattern.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert sorted(maximal_cliques(p)) == [(0, 1), (0, 3), (1, 2), (2, 3)]

    def test_cliques_are_maximal(self):
        """Test pairwise adjacency and that no clique contains another."""
        rng = np.random.default_rng(2)
        edges = [(i, j) for i in range(8) for j in range(i + 1, 8) if rng.random() < 0.4]
        p = SparsityPattern.from_edges(8, edges)
        cliques = maximal_cliques(p)
        for clique in cliques:
            for a in clique:
                for b in clique:
                    if a < b:
                        assert (a, b) in p.off_diag
        for a in cliques:
            for b in cliques:
                assert a == b or not set(a) < set(b)

    def test_dimension_cap(self):
        with pytest.raises(InvalidInputError):
            maximal_cliques(SparsityPattern(26))
