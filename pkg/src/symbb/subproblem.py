"""Reduced subproblems obtained by fixing variables to 0 or 1.

Fixing I1 to one and I0 to zero leaves a cardinality-constrained problem on
the free set F with matrix ``B_FF`` plus a diagonal correction ``2 * sum over
I1 of B[k, i]`` (cross terms with fixed ones fold into the diagonal because
the free variables are binary), a constant offset ``sum of B over I1 x I1``
and residual cardinality ``m - |I1|``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .instance import BqopInstance
from .symmetry import PermutationGroup, automorphisms


@dataclass(frozen=True)
class FixSets:
    """Disjoint index sets fixed to 0 and 1; the free set is the complement."""

    i0: tuple[int, ...]
    i1: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "i0", tuple(sorted(set(int(i) for i in self.i0))))
        object.__setattr__(self, "i1", tuple(sorted(set(int(i) for i in self.i1))))
        if set(self.i0) & set(self.i1):
            raise ValueError("I0 and I1 overlap")

    def free(self, n: int) -> tuple[int, ...]:
        fixed = set(self.i0) | set(self.i1)
        if fixed and (min(fixed) < 0 or max(fixed) >= n):
            raise ValueError("fixed index out of range")
        return tuple(i for i in range(n) if i not in fixed)

    def with_zeros(self, extra) -> "FixSets":
        return FixSets(i0=self.i0 + tuple(extra), i1=self.i1)

    def with_one(self, j: int) -> "FixSets":
        return FixSets(i0=self.i0, i1=self.i1 + (j,))


@dataclass(frozen=True)
class Subproblem:
    """A reduced problem: minimize y^T reduced_B y + offset over binary y on
    the free indices with sum(y) = residual_m."""

    inst: BqopInstance
    fix: FixSets
    free: tuple[int, ...]
    reduced_B: np.ndarray
    offset: int
    residual_m: int

    @property
    def ell(self) -> int:
        return len(self.free)

    def lift(self, y) -> np.ndarray:
        """Map a reduced solution back to a full-length solution vector."""
        x = np.zeros(self.inst.n, dtype=np.int64)
        x[list(self.fix.i1)] = 1
        x[list(self.free)] = np.asarray(y, dtype=np.int64)
        return x


def reduce(inst: BqopInstance, fix: FixSets) -> Subproblem:
    """Build the reduced subproblem for the given fixing."""
    free = fix.free(inst.n)
    i1 = list(fix.i1)
    B = inst.B
    fr = list(free)
    reduced = B[np.ix_(fr, fr)].copy()
    if i1:
        corr = 2 * B[np.ix_(i1, fr)].sum(axis=0)
        reduced[np.diag_indices_from(reduced)] += corr
        offset = int(B[np.ix_(i1, i1)].sum())
    else:
        offset = 0
    reduced.setflags(write=False)
    return Subproblem(inst=inst, fix=fix, free=free, reduced_B=reduced,
                      offset=offset, residual_m=inst.m - len(i1))


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class SolvedLeaf:
    value: int
    witness: np.ndarray  # full-length solution vector


@dataclass(frozen=True)
class Open:
    pass


def feasibility_status(sub: Subproblem, leaf_threshold: int = 20,
                       leaf_band: int = 3):
    """Classify a subproblem as Infeasible, SolvedLeaf or Open.

    Leaves with a unique completion (residual 0 or |F|) are solved directly.
    Small leaves (|F| <= leaf_threshold and the residual within ``leaf_band``
    of either end) are solved by enumerating all feasible supports.
    """
    r, ell = sub.residual_m, sub.ell
    if r < 0 or r > ell:
        return Infeasible()
    if r == 0:
        return SolvedLeaf(value=sub.offset, witness=sub.lift(np.zeros(ell, dtype=np.int64)))
    if r == ell:
        y = np.ones(ell, dtype=np.int64)
        return SolvedLeaf(value=sub.offset + int(y @ sub.reduced_B @ y), witness=sub.lift(y))
    if ell <= leaf_threshold and (r <= leaf_band or r >= ell - leaf_band):
        best_val, best_y = None, None
        for support in itertools.combinations(range(ell), r):
            idx = np.array(support)
            val = int(sub.reduced_B[np.ix_(idx, idx)].sum())
            if best_val is None or val < best_val:
                best_val = val
                best_y = idx
        y = np.zeros(ell, dtype=np.int64)
        y[best_y] = 1
        return SolvedLeaf(value=sub.offset + best_val, witness=sub.lift(y))
    return Open()


def subgroup(sub: Subproblem, root_group: PermutationGroup | None = None,
             element_cap: int = 1_000_000) -> PermutationGroup:
    """The automorphism group of the reduced matrix, acting on reduced indices.

    With no fixing the reduction is the identity and the precomputed root
    group is reused when supplied; otherwise the group is recomputed on the
    reduced matrix, which yields the largest group valid for orbital merging.
    """
    if not sub.fix.i0 and not sub.fix.i1 and root_group is not None:
        return root_group
    return automorphisms(sub.reduced_B, element_cap=element_cap)


def subproblem_to_json(sub: Subproblem) -> str:
    """Debug / audit-log dump of the fixing (1-based), offset and residual."""
    return json.dumps({
        "i0": [i + 1 for i in sub.fix.i0],
        "i1": [i + 1 for i in sub.fix.i1],
        "offset": sub.offset,
        "residual_m": sub.residual_m,
        "free_count": sub.ell,
    })
