# Function graphs and sparsity patterns
# Patterns, connected components, maximal cliques and the block-profile preorder

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.core.matrix_set import as_matrix_set, mean_abs
from src.errors import InvalidInputError

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]

MAX_PROFILE_DIM = 20
MAX_CLIQUE_DIM = 25


def _normalize_pair(i: int, j: int) -> Pair:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class SparsityPattern:
    """
    Symmetric support of a matrix family (0-based indices).

    off_diag holds unordered pairs stored as (i, j) with i < j; diag holds the
    indices with nonzero diagonal support.
    """

    d: int
    off_diag: FrozenSet[Pair] = field(default_factory=frozenset)
    diag: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInputError(f"Dimension must be positive, got {self.d}")
        pairs = set()
        for i, j in self.off_diag:
            if i == j or not (0 <= i < self.d and 0 <= j < self.d):
                raise InvalidInputError(f"Invalid pair ({i}, {j}) for d={self.d}")
            pairs.add(_normalize_pair(int(i), int(j)))
        for i in self.diag:
            if not 0 <= i < self.d:
                raise InvalidInputError(f"Invalid diagonal index {i} for d={self.d}")
        object.__setattr__(self, "off_diag", frozenset(pairs))
        object.__setattr__(self, "diag", frozenset(int(i) for i in self.diag))

    @classmethod
    def from_edges(
        cls, d: int, edges: Iterable[Sequence[int]], diag: Iterable[int] = ()
    ) -> "SparsityPattern":
        return cls(d, frozenset(tuple(e) for e in edges), frozenset(diag))

    @property
    def size(self) -> int:
        """|J| counted as unordered off-diagonal pairs plus diagonal support."""
        return len(self.off_diag) + len(self.diag)

    @property
    def ordered_count(self) -> int:
        """Nonzero count of the corresponding symmetric matrix."""
        return 2 * len(self.off_diag) + len(self.diag)

    def to_mask(self) -> np.ndarray:
        """Boolean d x d support matrix."""
        mask = np.zeros((self.d, self.d), dtype=bool)
        for i, j in self.off_diag:
            mask[i, j] = mask[j, i] = True
        for i in self.diag:
            mask[i, i] = True
        return mask

    def to_graph(self) -> nx.Graph:
        """Undirected graph on all d vertices with the off-diagonal edges."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.d))
        graph.add_edges_from(self.off_diag)
        return graph

    def restrict(self, group: Iterable[int]) -> "SparsityPattern":
        """Sub-pattern induced on a group, re-indexed to 0..len(group)-1."""
        order = list(group)
        index = {v: k for k, v in enumerate(order)}
        edges = [
            (index[i], index[j]) for i, j in self.off_diag if i in index and j in index
        ]
        diag = [index[i] for i in self.diag if i in index]
        return SparsityPattern.from_edges(len(order), edges, diag)

    def permuted(self, perm: Sequence[int]) -> "SparsityPattern":
        """Pattern of P^T H P where P maps new index k to old index perm[k]."""
        inverse = {old: new for new, old in enumerate(perm)}
        edges = [(inverse[i], inverse[j]) for i, j in self.off_diag]
        return SparsityPattern.from_edges(self.d, edges, [inverse[i] for i in self.diag])


@dataclass(frozen=True)
class BlockStructure:
    """
    Ordered partition of range(d) into groups.

    permutation[k] is the original index placed at position k when the groups
    are laid out contiguously in order.
    """

    d: int
    groups: Tuple[Tuple[int, ...], ...]
    permutation: Tuple[int, ...] = ()

    def __post_init__(self):
        flat = [i for g in self.groups for i in g]
        if sorted(flat) != list(range(self.d)):
            raise InvalidInputError(f"Groups {self.groups} do not partition range({self.d})")
        if not self.permutation:
            object.__setattr__(self, "permutation", tuple(flat))

    @property
    def profile(self) -> Tuple[int, ...]:
        return tuple(sorted((len(g) for g in self.groups), reverse=True))

    @property
    def offsets(self) -> List[int]:
        """Start positions of each group in the contiguous layout."""
        starts, pos = [], 0
        for g in self.groups:
            starts.append(pos)
            pos += len(g)
        return starts

    def contiguous(self) -> "BlockStructure":
        """The same partition expressed in the permuted, contiguous frame."""
        groups, pos = [], 0
        for g in self.groups:
            groups.append(tuple(range(pos, pos + len(g))))
            pos += len(g)
        return BlockStructure(self.d, tuple(groups), tuple(range(self.d)))


class Comparison(str, Enum):
    """Outcome of comparing two block profiles"""

    FINER = "finer"
    COARSER = "coarser"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


# ==================== Operations ====================


def pattern_from_matrix_set(mats, eta: float) -> SparsityPattern:
    """
    Threshold the mean absolute matrix (1/N) sum |H_n|.

    A pair {i, j} is in the pattern iff the mean entry exceeds eta; the same
    rule applied to the diagonal gives the diagonal support.
    """
    if eta < 0:
        raise InvalidInputError(f"eta must be nonnegative, got {eta}")
    arr = as_matrix_set(mats)
    bar = mean_abs(arr)
    d = bar.shape[0]
    rows, cols = np.nonzero(np.triu(bar > eta, k=1))
    diag = np.nonzero(np.diag(bar) > eta)[0]
    return SparsityPattern.from_edges(d, zip(rows.tolist(), cols.tolist()), diag.tolist())


def order_groups(groups: Iterable[Iterable[int]]) -> Tuple[Tuple[int, ...], ...]:
    normalized = [tuple(sorted(g)) for g in groups]
    normalized.sort(key=lambda g: (-len(g), g[0]))
    return tuple(normalized)


def connected_components(p: SparsityPattern) -> BlockStructure:
    """
    Connected components of (range(d), off_diag).

    Groups are ordered by descending size, ties broken by the smallest index.
    """
    groups = order_groups(nx.connected_components(p.to_graph()))
    return BlockStructure(p.d, groups)


def _refines(finer: Sequence[int], coarser: Sequence[int]) -> bool:
    """Whether the parts of `finer` can be grouped to produce `coarser` sums."""
    items = sorted(finer, reverse=True)
    bins = list(coarser)

    def place(k: int) -> bool:
        if k == len(items):
            return all(b == 0 for b in bins)
        tried = set()
        for idx, remaining in enumerate(bins):
            if remaining >= items[k] and remaining not in tried:
                tried.add(remaining)
                bins[idx] -= items[k]
                if place(k + 1):
                    return True
                bins[idx] += items[k]
        return False

    return place(0)


def profile_preceq(a: Sequence[int], b: Sequence[int]) -> Comparison:
    """
    Compare two block profiles in the partition preorder.

    `a` is finer than `b` when a's entries can be grouped so that the group
    sums reproduce b.
    """
    if sum(a) != sum(b):
        raise InvalidInputError(f"Profiles sum to different totals: {sum(a)} vs {sum(b)}")
    if any(x <= 0 for x in list(a) + list(b)):
        raise InvalidInputError("Profiles must contain positive integers")
    if len(a) > MAX_PROFILE_DIM or len(b) > MAX_PROFILE_DIM:
        raise InvalidInputError(f"Profiles longer than {MAX_PROFILE_DIM} entries")

    a_finer = _refines(a, b)
    b_finer = _refines(b, a)
    if a_finer and b_finer:
        return Comparison.EQUAL
    if a_finer:
        return Comparison.FINER
    if b_finer:
        return Comparison.COARSER
    return Comparison.INCOMPARABLE


def maximal_cliques(p: SparsityPattern) -> List[Tuple[int, ...]]:
    """
    Maximal cliques of the function graph.

    Vertices are the diagonal support together with every edge endpoint.
    Enumeration is Bron-Kerbosch with pivoting.
    """
    if p.d > MAX_CLIQUE_DIM:
        raise InvalidInputError(f"Clique enumeration limited to d <= {MAX_CLIQUE_DIM}")
    graph = nx.Graph()
    graph.add_nodes_from(p.diag)
    graph.add_edges_from(p.off_diag)
    cliques = [tuple(sorted(c)) for c in nx.find_cliques(graph)]
    cliques.sort(key=lambda c: (-len(c), c))
    return cliques


def component_patterns(
    p: SparsityPattern, structure: Optional[BlockStructure] = None
) -> Dict[Tuple[int, ...], SparsityPattern]:
    """Sub-pattern of every group, keyed by the group."""
    structure = structure or connected_components(p)
    return {g: p.restrict(g) for g in structure.groups}
