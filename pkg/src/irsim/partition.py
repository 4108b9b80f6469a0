"""Subgroup partitions and the sign matrices that resolve them over blocks.

Each group of L adjacent elements starts as a single subgroup and is split
once per block until every subgroup is a single element.  The accompanying
subgroup training matrix for block i is an i x i matrix of +/-1 coefficients
built by a replicate-and-negate recursion that keeps it invertible at every
block, so the stacked per-group effective channels can always be solved for
the subgroup aggregated channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("symmetric", "asymmetric")


def _check_scheme(scheme: str):
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


class CannotRefineError(ValueError):
    """All subgroups are singletons; no further split is possible."""


@dataclass(frozen=True)
class SplitEvent:
    """One refinement: the parent at position ``parent`` (1-based) splits
    into children at positions ``parent`` and ``parent + 1`` of ``block``."""

    block: int
    parent: int


@dataclass(frozen=True)
class PartitionState:
    """Ordered subgroups of one group's local element indices 1..L.

    Invariants: subgroups are disjoint, nonempty, ascending, cover 1..L, and
    their count equals the block index.
    """

    group_size: int
    subgroups: tuple
    lineage: tuple = ()

    @property
    def block(self) -> int:
        return len(self.subgroups)

    def sizes(self) -> tuple:
        return tuple(len(s) for s in self.subgroups)


@dataclass(frozen=True)
class SubgroupTrainingMatrix:
    """The +/-1 coefficients applied per subgroup, one row per block."""

    block: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.block, self.block):
            raise ValueError(f"matrix must be {self.block}x{self.block}, got {m.shape}")
        if not np.all(np.abs(m) == 1.0):
            raise ValueError("matrix entries must be +1 or -1")
        object.__setattr__(self, "matrix", m)


def initial_partition(group_size: int) -> PartitionState:
    """Block-1 partition: one subgroup holding the whole group."""
    if group_size < 1:
        raise ValueError(f"group size must be >= 1, got {group_size}")
    return PartitionState(group_size, (tuple(range(1, group_size + 1)),))


def refine_partition(state: PartitionState, scheme: str) -> PartitionState:
    """Split the largest subgroup (ties: smallest position) into two children.

    The symmetric scheme splits into ceil/floor halves; the asymmetric scheme
    carves off a single element.  The first child keeps the leading indices,
    so the singleton child of an asymmetric split takes the parent's largest
    index.
    """
    _check_scheme(scheme)
    sizes = state.sizes()
    largest = max(sizes)
    if largest < 2:
        raise CannotRefineError("all subgroups are singletons")
    k_star = sizes.index(largest)  # first occurrence = smallest position
    parent = state.subgroups[k_star]
    first = -(-largest // 2) if scheme == "symmetric" else largest - 1
    children = (parent[:first], parent[first:])
    subgroups = state.subgroups[:k_star] + children + state.subgroups[k_star + 1:]
    event = SplitEvent(block=state.block + 1, parent=k_star + 1)
    return PartitionState(state.group_size, subgroups, state.lineage + (event,))


def partition_sequence(group_size: int, scheme: str) -> list:
    """Partitions for blocks 1..L, refining one subgroup per block."""
    _check_scheme(scheme)
    states = [initial_partition(group_size)]
    while states[-1].block < group_size:
        states.append(refine_partition(states[-1], scheme))
    return states


def extend_matrix(psi: SubgroupTrainingMatrix, k_star: int) -> np.ndarray:
    """Duplicate column ``k_star`` (1-based) in place, yielding i x (i+1).

    Replicates the parent subgroup's past coefficients onto both children, so
    previously measured effective channels stay expressible over the refined
    subgroups.
    """
    if not 1 <= k_star <= psi.block:
        raise ValueError(f"k_star must be in 1..{psi.block}, got {k_star}")
    m = psi.matrix
    return np.insert(m, k_star, m[:, k_star - 1], axis=1)


def next_reflection_vector(psi: SubgroupTrainingMatrix, k_star: int) -> np.ndarray:
    """Coefficients for the next block: last row extended, with the new
    child's entry negated relative to its parent.

    Flipping exactly one replicated entry is what keeps the extended square
    matrix full rank.
    """
    if not 1 <= k_star <= psi.block:
        raise ValueError(f"k_star must be in 1..{psi.block}, got {k_star}")
    row = psi.matrix[-1]
    out = np.insert(row, k_star, -row[k_star - 1])
    return out


def matrix_sequence(group_size: int, scheme: str) -> list:
    """Subgroup training matrices for blocks 1..L under the given scheme."""
    _check_scheme(scheme)
    if group_size < 1:
        raise ValueError(f"group size must be >= 1, got {group_size}")
    states = partition_sequence(group_size, scheme)
    psis = [SubgroupTrainingMatrix(1, np.array([[1.0]]))]
    for state in states[1:]:
        k_star = state.lineage[-1].parent
        prev = psis[-1]
        extended = extend_matrix(prev, k_star)
        new_row = next_reflection_vector(prev, k_star)
        psis.append(SubgroupTrainingMatrix(prev.block + 1, np.vstack([extended, new_row])))
    return psis


def training_schedule(group_size: int, scheme: str):
    """(partitions, matrices) for blocks 1..L, paired by construction."""
    return partition_sequence(group_size, scheme), matrix_sequence(group_size, scheme)


def broadcast_to_elements(coefficients, state: PartitionState) -> np.ndarray:
    """Element-level reflection vector: each subgroup's coefficient repeated
    over its member elements (local order 1..L)."""
    coefficients = np.asarray(coefficients)
    if coefficients.shape != (state.block,):
        raise ValueError(
            f"need one coefficient per subgroup ({state.block}), got {coefficients.shape}"
        )
    out = np.empty(state.group_size, dtype=coefficients.dtype)
    for coef, members in zip(coefficients, state.subgroups):
        for n in members:
            out[n - 1] = coef
    return out
