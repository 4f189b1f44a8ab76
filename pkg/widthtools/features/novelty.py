# Standard imports
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Optional, Union

# Third party imports
import numpy as np

# Local imports
from widthtools.configuration.constants import DENSE_TABLE_LIMIT, INFINITE_DEPTH
from widthtools.utilities.exceptions import (
    CapacityViolationError,
    ConfigurationError,
    DegenerateInputError,
)

# Conjunction ranks are stored as int64
MAX_FEATURE_SPACE = (1 << 63) - 1

ID_DTYPE = np.int64


class FeatureSet:
    """Immutable sorted set of active feature ids over a feature space of fixed size.

    Members are kept in a read-only int64 array in ascending order, so iteration order
    only depends on the members themselves.
    """
    __slots__ = ('_members', '_capacity', '_hash')

    def __init__(self, members: np.ndarray, capacity: int):
        # trusted constructor: members must already be sorted, unique and in range
        members = np.asarray(members, dtype=ID_DTYPE)
        members.flags.writeable = False
        self._members = members
        self._capacity = int(capacity)
        self._hash: Optional[int] = None

    @classmethod
    def from_iterable(cls, ids: Union[Iterable[int], np.ndarray], capacity: int) -> 'FeatureSet':
        """Build a set from arbitrary ids, dropping duplicates and validating the range"""
        array = np.unique(np.fromiter(ids, dtype=ID_DTYPE) if not isinstance(ids, np.ndarray) else ids.astype(ID_DTYPE))
        if array.size and (array[0] < 0 or array[-1] >= capacity):
            offender = int(array[0]) if array[0] < 0 else int(array[-1])
            raise CapacityViolationError(offender, capacity)
        return cls(array, capacity)

    @classmethod
    def empty(cls, capacity: int) -> 'FeatureSet':
        return cls(np.empty(0, dtype=ID_DTYPE), capacity)

    @property
    def members(self) -> np.ndarray:
        return self._members

    @property
    def capacity(self) -> int:
        return self._capacity

    def __len__(self) -> int:
        return int(self._members.size)

    def __iter__(self) -> Iterator[int]:
        return (int(m) for m in self._members)

    def __contains__(self, feature: int) -> bool:
        position = int(np.searchsorted(self._members, feature))
        return position < self._members.size and int(self._members[position]) == feature

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return self._capacity == other._capacity and np.array_equal(self._members, other._members)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._capacity, self._members.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        shown = ', '.join(str(m) for m in self._members[:8])
        more = ', ...' if self._members.size > 8 else ''
        return f"FeatureSet({{{shown}{more}}}, capacity={self._capacity})"

    def union(self, other: 'FeatureSet') -> 'FeatureSet':
        return FeatureSet(np.union1d(self._members, other._members), max(self._capacity, other._capacity))

    def intersection(self, other: 'FeatureSet') -> 'FeatureSet':
        return FeatureSet(np.intersect1d(self._members, other._members, assume_unique=True), self._capacity)


def _check_range(members: np.ndarray, capacity: int) -> None:
    if members.size and (members[0] < 0 or members[-1] >= capacity):
        offender = int(members[0]) if members[0] < 0 else int(members[-1])
        raise CapacityViolationError(offender, capacity)


class NoveltyMarkTable:
    """Reached-marks per feature id. Marks are never cleared."""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.dense = self.capacity <= DENSE_TABLE_LIMIT
        self._marks = np.zeros(self.capacity, dtype=bool) if self.dense else set()
        self._count = 0

    def is_marked(self, feature: int) -> bool:
        if self.dense:
            return bool(self._marks[feature])
        return feature in self._marks

    @property
    def marked_count(self) -> int:
        return self._count

    def mark(self, members: np.ndarray) -> int:
        """Mark all members, returning how many were unmarked before"""
        _check_range(members, self.capacity)
        if self.dense:
            fresh = members[~self._marks[members]]
            self._marks[fresh] = True
            newly = int(fresh.size)
        else:
            fresh = set(members.tolist()) - self._marks
            self._marks.update(fresh)
            newly = len(fresh)
        self._count += newly
        return newly


class DepthTable:
    """Minimum depth reached per feature id; unreached features report INFINITE_DEPTH.

    The dense backend stores depth + 1 with zero meaning infinity, so a fresh table is
    a zero-filled allocation regardless of the feature-space size.
    """

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.dense = self.capacity <= DENSE_TABLE_LIMIT
        self._store = np.zeros(self.capacity, dtype=np.uint32) if self.dense else {}

    def depth_of(self, feature: int) -> int:
        if self.dense:
            stored = int(self._store[feature])
            return INFINITE_DEPTH if stored == 0 else stored - 1
        return self._store.get(feature, INFINITE_DEPTH)

    def depths(self, members: np.ndarray) -> np.ndarray:
        _check_range(members, self.capacity)
        if self.dense:
            values = self._store[members].astype(np.int64) - 1
            values[values < 0] = INFINITE_DEPTH
            return values
        return np.fromiter((self._store.get(m, INFINITE_DEPTH) for m in members.tolist()),
                           dtype=np.int64, count=members.size)

    def assign(self, members: np.ndarray, depth: int) -> None:
        if depth < 0 or depth >= INFINITE_DEPTH - 1:
            raise ValueError(f"Depth {depth} outside the representable range")
        if self.dense:
            self._store[members] = depth + 1
        else:
            for member in members.tolist():
                self._store[member] = depth

    def reached(self) -> int:
        """Number of features with a finite depth"""
        if self.dense:
            return int(np.count_nonzero(self._store))
        return len(self._store)


class PartitionedTable:
    """Independent novelty tables keyed by an integer partition value (may be negative)"""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.tables: dict[int, NoveltyMarkTable] = {}

    def table(self, key: int) -> NoveltyMarkTable:
        table = self.tables.get(key)
        if table is None:
            table = NoveltyMarkTable(self.capacity)
            self.tables[key] = table
        return table

    @property
    def keys(self) -> list[int]:
        return sorted(self.tables)


class PartitionedDepthTable:
    """Depth tables keyed by an integer partition value, created on first use"""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.tables: dict[int, DepthTable] = {}

    def table(self, key: int) -> DepthTable:
        table = self.tables.get(key)
        if table is None:
            table = DepthTable(self.capacity)
            self.tables[key] = table
        return table

    @property
    def keys(self) -> list[int]:
        return sorted(self.tables)


class NoveltyKind(Enum):
    NOVEL = 'novel'  # some feature reached at a strictly smaller depth
    KNOWN = 'known'  # no improvement, but some feature sits exactly at its recorded depth
    STALE = 'stale'  # every feature was reached earlier elsewhere


@dataclass(frozen=True)
class NoveltyClass:
    kind: NoveltyKind
    feature: int


def mark_and_test_novel1(table: NoveltyMarkTable, s: FeatureSet) -> tuple[bool, int]:
    """Mark every member of s; the state is novel iff at least one mark is new"""
    newly = table.mark(s.members)
    return newly > 0, newly


def partition_mark_and_test(pt: PartitionedTable, key: int, s: FeatureSet) -> tuple[bool, int]:
    return mark_and_test_novel1(pt.table(key), s)


def classify_novelty(n_features: FeatureSet, n_depth: int, d: DepthTable) -> NoveltyClass:
    """Classify a node against the depth table. Ties go to the lowest feature id."""
    if not len(n_features):
        raise DegenerateInputError('classify_novelty')
    members = n_features.members
    depths = d.depths(members)

    novel = np.flatnonzero(n_depth < depths)
    if novel.size:
        return NoveltyClass(NoveltyKind.NOVEL, int(members[novel[0]]))
    known = np.flatnonzero(n_depth == depths)
    if known.size:
        return NoveltyClass(NoveltyKind.KNOWN, int(members[known[0]]))
    return NoveltyClass(NoveltyKind.STALE, int(members[0]))


def update_depths(d: DepthTable, s: FeatureSet, depth: int) -> FeatureSet:
    """Lower d[f] to depth for every f in s; returns the ids that strictly improved"""
    if depth < 0:
        raise ValueError(f"Depth must be non-negative, got {depth}")
    members = s.members
    improved = members[depth < d.depths(members)]
    if improved.size:
        d.assign(improved, depth)
    return FeatureSet(improved, d.capacity)


def conjunction_capacity(n_features: int, k: int) -> int:
    capacity = comb(n_features, k)
    if capacity > MAX_FEATURE_SPACE:
        raise CapacityViolationError(capacity, MAX_FEATURE_SPACE)
    return capacity


def rank_conjunction(components: Iterable[int]) -> int:
    """Combinatorial-number-system rank of a strictly increasing tuple of ids"""
    return sum(comb(c, i + 1) for i, c in enumerate(components))


def unrank_conjunction(rank: int, k: int) -> tuple[int, ...]:
    components = []
    for i in range(k, 0, -1):
        c = i - 1
        while comb(c + 1, i) <= rank:
            c += 1
        components.append(c)
        rank -= comb(c, i)
    return tuple(reversed(components))


def lift_conjunctions(s: FeatureSet, k: int) -> FeatureSet:
    """Map s to the set of its size-k conjunctions over the space C(|F|, k)"""
    if k < 1:
        raise ConfigurationError(f"conjunction width must be at least 1, got {k}")
    if k == 1:
        return s
    capacity = conjunction_capacity(s.capacity, k)
    if k > len(s):
        return FeatureSet.empty(capacity)
    ranks = [rank_conjunction(combo) for combo in combinations(s.members.tolist(), k)]
    return FeatureSet(np.sort(np.asarray(ranks, dtype=ID_DTYPE)), capacity)
