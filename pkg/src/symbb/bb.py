"""Target-lower-bound branch and bound with orbital branching and
isomorphism pruning.

The search is level-synchronous breadth first.  Each iteration bounds every
active node of the current depth with the Newton-bracketing procedure (early
exit against the target), branches the survivors on the highest-scoring orbit
of their reduced-matrix automorphism group, and sweeps the newly created
level for subproblems isomorphic to an already seen one.  No upper bounding
is performed: the run either proves that the optimum is at least the target,
or refutes the target with an exactly solved leaf below it.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dnn import NbParams, assemble, default_lambda, nb_bound
from .instance import BqopInstance, objective
from .subproblem import (FixSets, Infeasible, SolvedLeaf, Subproblem,
                         feasibility_status, reduce, subgroup)
from .symmetry import Orbit, PermutationGroup, automorphisms, orbits


@dataclass(frozen=True)
class BbParams:
    workers: int = 1
    iso_pruning: bool = True
    lambda_scale: float = 1e8
    lam: float | None = None            # overrides lambda_scale / ||B(I0,I1)||
    leaf_threshold: int = 20
    leaf_band: int = 3
    nb: NbParams = field(default_factory=NbParams)
    group_cap: int = 1_000_000
    iso_node_cap: int = 1_000_000
    node_budget: int | None = None
    time_budget: float | None = None    # seconds
    audit: bool = False                 # small-n only: re-check merges by enumeration
    checkpoint_path: str | None = None


@dataclass
class Node:
    id: int
    depth: int
    fix: FixSets
    status: str            # Active | PrunedByBound | PrunedByIsomorphism |
                           # Branched | Infeasible | Leaf
    parent_id: int | None
    sub: Subproblem | None = None
    fingerprint: tuple | None = None
    lb_interval: tuple[float, float] | None = None
    leaf_value: int | None = None
    leaf_witness: np.ndarray | None = None


@dataclass(frozen=True)
class Certificate:
    outcome: str           # Proved | Refuted | Inconclusive
    target: int
    node_count: int
    per_depth: tuple[dict, ...]
    wall_time: float
    witness: np.ndarray | None = None
    witness_value: int | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "outcome": self.outcome,
            "target": self.target,
            "node_count": self.node_count,
            "per_depth": list(self.per_depth),
        }
        if self.witness is not None:
            obj["witness"] = "".join(str(int(v)) for v in self.witness)
            obj["witness_value"] = self.witness_value
        obj["timing"] = {"wall_time_seconds": self.wall_time}
        return obj


def fingerprint(sub: Subproblem) -> tuple:
    """Invariants of a subproblem under the isomorphism relation; equality is
    necessary for two subproblems to merge."""
    R = sub.reduced_B
    diag = np.diagonal(R)
    return (
        len(sub.fix.i0),
        len(sub.fix.i1),
        sub.offset,
        int(diag.sum()),
        int(R.sum()),
        int(diag.max()) if diag.size else 0,
        int(R.min()) if R.size else 0,
        tuple(sorted(int(v) for v in diag)),
        tuple(sorted(int(v) for v in R.sum(axis=1))),
    )


def isomorphic(sub_a: Subproblem, sub_b: Subproblem,
               node_cap: int = 1_000_000) -> np.ndarray | None:
    """Permutation witness p with B_b[i, j] == B_a[p(i), p(j)] for all i, j,
    or None.  Requires matching fix-set sizes and offsets first; the
    permutation search is backtracking with row-multiset candidate pruning
    and a node cap (cap exhaustion counts as non-isomorphic, which is sound:
    a missed merge only costs extra work)."""
    if fingerprint(sub_a) != fingerprint(sub_b):
        return None
    A = sub_a.reduced_B
    Bm = sub_b.reduced_B
    d = A.shape[0]
    if d == 0:
        return np.zeros(0, dtype=np.int64)
    rows_a = np.sort(A, axis=1)
    rows_b = np.sort(Bm, axis=1)
    cand0 = (np.diagonal(Bm)[:, None] == np.diagonal(A)[None, :]) & \
        (rows_b[:, None, :] == rows_a[None, :, :]).all(axis=2)

    image = np.full(d, -1, dtype=np.int64)
    assigned = np.zeros(d, dtype=bool)
    budget = [node_cap]

    def search(cand: np.ndarray, n_assigned: int) -> bool:
        if n_assigned == d:
            return True
        open_idx = np.flatnonzero(~assigned)
        counts = cand[open_idx].sum(axis=1)
        if np.any(counts == 0):
            return False
        i = int(open_idx[int(np.argmin(counts))])
        for j in np.flatnonzero(cand[i]):
            if budget[0] <= 0:
                return False
            budget[0] -= 1
            j = int(j)
            image[i] = j
            assigned[i] = True
            new_cand = cand & (Bm[:, i][:, None] == A[:, j][None, :])
            new_cand[:, j] = False
            new_cand[i, :] = False
            if search(new_cand, n_assigned + 1):
                return True
            assigned[i] = False
            image[i] = -1
        return False

    if search(cand0, 0):
        return image.copy()
    return None


def orbit_scores(sub: Subproblem, orbs) -> list[float]:
    """Score each orbit by the average objective value of the child fixing
    its representative to one: x has ones on I1 and the representative, the
    fractional fill (m - |I1| - 1) / (|F| - 1) on the remaining free indices,
    zeros elsewhere, evaluated as x^T B x on the full matrix."""
    inst = sub.inst
    B = np.asarray(inst.B, dtype=float)
    base = np.zeros(inst.n)
    base[list(sub.fix.i1)] = 1.0
    scores = []
    for orb in orbs:
        rep = sub.free[orb.representative]
        x = base.copy()
        x[rep] = 1.0
        rest = [i for i in sub.free if i != rep]
        if rest:
            x[rest] = (inst.m - len(sub.fix.i1) - 1) / (sub.ell - 1)
        scores.append(float(x @ B @ x))
    return scores


def choose_orbit(sub: Subproblem, group: PermutationGroup) -> Orbit:
    """The orbit with the largest child-average score; ties break toward the
    smallest representative."""
    orbs = orbits(group, range(sub.ell))
    if not orbs:
        raise ValueError("no orbits to branch on")
    if len(orbs) == 1:
        return orbs[0]
    scores = orbit_scores(sub, orbs)
    best = max(range(len(orbs)),
               key=lambda k: (scores[k], -orbs[k].representative))
    return orbs[best]


def branch(fix: FixSets, orbit: Orbit, free) -> tuple[FixSets, FixSets]:
    """Children of a fixing: all orbit members to zero, or the representative
    to one.  Orbit indices are reduced; ``free`` maps them back."""
    members = tuple(free[i] for i in orbit.members)
    return fix.with_zeros(members), fix.with_one(members[0])


def _brute_force_optimum(sub: Subproblem, combo_cap: int = 200_000):
    """Exhaustive optimum of a subproblem; audit use only."""
    r, ell = sub.residual_m, sub.ell
    if r < 0 or r > ell:
        return None
    if math.comb(ell, r) > combo_cap:
        raise ValueError("subproblem too large for audit enumeration")
    best = None
    for support in itertools.combinations(range(ell), r):
        idx = np.array(support, dtype=np.int64)
        val = sub.offset + int(sub.reduced_B[np.ix_(idx, idx)].sum())
        if best is None or val < best:
            best = val
    return best


def solve_target(inst: BqopInstance, target: int, params: BbParams = BbParams()) -> Certificate:
    """Prove optimum >= target, or refute the target with a witness."""
    t_start = time.monotonic()
    nodes: dict[int, Node] = {}
    next_id = [0]
    per_depth: list[dict] = []
    # history of retained subproblems for the isomorphism sweep,
    # bucketed by fingerprint
    history: dict[tuple, list[tuple[int, Subproblem]]] = {}

    def new_node(fix: FixSets, depth: int, parent: int | None) -> Node:
        sub = reduce(inst, fix)
        status = feasibility_status(sub, params.leaf_threshold, params.leaf_band)
        node = Node(id=next_id[0], depth=depth, fix=fix, status="Active",
                    parent_id=parent, sub=sub, fingerprint=fingerprint(sub))
        next_id[0] += 1
        if isinstance(status, Infeasible):
            node.status = "Infeasible"
        elif isinstance(status, SolvedLeaf):
            node.status = "Leaf"
            node.leaf_value = status.value
            node.leaf_witness = status.witness
        nodes[node.id] = node
        return node

    def finish(outcome, witness=None, value=None) -> Certificate:
        return Certificate(outcome=outcome, target=target,
                           node_count=len(nodes), per_depth=tuple(per_depth),
                           wall_time=time.monotonic() - t_start,
                           witness=witness, witness_value=value)

    def checkpoint(frontier):
        if params.checkpoint_path is None:
            return
        state = {
            "target": target,
            "frontier": [{"i0": [i + 1 for i in nd.fix.i0],
                          "i1": [i + 1 for i in nd.fix.i1],
                          "depth": nd.depth} for nd in frontier],
            "per_depth": per_depth,
        }
        with open(params.checkpoint_path, "w") as fh:
            json.dump(state, fh, indent=1)

    def bound_one(node: Node):
        lam = params.lam if params.lam is not None else \
            default_lambda(node.sub, params.lambda_scale)
        prob = assemble(node.sub, lam)
        return node.id, nb_bound(prob, target, params.nb)

    # Root: branched unconditionally, without bounding.
    root = new_node(FixSets((), ()), depth=0, parent=None)
    root_group = automorphisms(inst.B, element_cap=params.group_cap)
    root_grp_sub = subgroup(root.sub, root_group=root_group,
                            element_cap=params.group_cap)
    orb = choose_orbit(root.sub, root_grp_sub)
    fix0, fix1 = branch(root.fix, orb, root.sub.free)
    root.status = "Branched"
    frontier = [new_node(fix0, 1, root.id), new_node(fix1, 1, root.id)]

    depth = 1
    while True:
        created = len(frontier)
        # Isomorphism sweep over the newly created level, ascending id.
        pruned_iso = 0
        if params.iso_pruning:
            for node in frontier:
                if node.status != "Active":
                    continue
                bucket = history.setdefault(node.fingerprint, [])
                merged = None
                for sid, ssub in bucket:
                    witness = isomorphic(ssub, node.sub, params.iso_node_cap)
                    if witness is not None:
                        merged = sid
                        break
                if merged is not None:
                    if params.audit:
                        assert _brute_force_optimum(node.sub) == \
                            _brute_force_optimum(nodes[merged].sub), \
                            f"unsound merge of node {node.id} into {merged}"
                    node.status = "PrunedByIsomorphism"
                    pruned_iso += 1
                else:
                    bucket.append((node.id, node.sub))

        infeasible = sum(1 for nd in frontier if nd.status == "Infeasible")
        leaves = [nd for nd in frontier if nd.status == "Leaf"]
        open_nodes = [nd for nd in frontier if nd.status == "Active"]
        generated = created - pruned_iso

        stats = {"depth": depth, "created": created, "generated": generated,
                 "pruned_iso": pruned_iso, "infeasible": infeasible,
                 "leaf_solved": len(leaves), "active": 0, "pruned_bound": 0,
                 "reduction_rate": generated / created if created else 1.0}
        per_depth.append(stats)

        # Exactly solved leaves refute or are pruned.
        for nd in sorted(leaves, key=lambda x: x.id):
            if nd.leaf_value < target:
                witness = nd.leaf_witness
                value = objective(inst, witness)
                assert value == nd.leaf_value < target
                return finish("Refuted", witness=witness, value=value)
        stats["pruned_bound"] += len(leaves)

        # Bound phase (parallel over nodes, results keyed by id).
        results = {}
        if open_nodes:
            if params.workers > 1:
                with ThreadPoolExecutor(max_workers=params.workers) as pool:
                    for nid, res in pool.map(bound_one, open_nodes):
                        results[nid] = res
            else:
                for nid, res in map(bound_one, open_nodes):
                    results[nid] = res

        active = []
        for nd in open_nodes:
            res = results[nd.id]
            nd.lb_interval = (res.a, res.b)
            if params.audit and math.isfinite(res.a):
                opt = _brute_force_optimum(nd.sub)
                assert opt is None or res.a + nd.sub.offset <= opt, \
                    f"invalid bound at node {nd.id}: {res.a + nd.sub.offset} > {opt}"
            if res.status == "Pruned" or (
                    res.status == "Converged" and res.lb_integer is not None
                    and res.lb_integer >= target):
                nd.status = "PrunedByBound"
                stats["pruned_bound"] += 1
            else:
                # Branchable, unresolved Converged, and IterLimit all branch;
                # branching an undecided node is always sound.
                active.append(nd)
        stats["active"] = len(active)

        if not active:
            return finish("Proved")
        if params.node_budget is not None and len(nodes) > params.node_budget:
            checkpoint(active)
            return finish("Inconclusive")
        if params.time_budget is not None and \
                time.monotonic() - t_start > params.time_budget:
            checkpoint(active)
            return finish("Inconclusive")

        # Branch phase (sequential, ascending id, deterministic child ids).
        children = []
        for nd in active:
            grp = subgroup(nd.sub, element_cap=params.group_cap)
            orb = choose_orbit(nd.sub, grp)
            fix0, fix1 = branch(nd.fix, orb, nd.sub.free)
            nd.status = "Branched"
            c0 = new_node(fix0, depth + 1, nd.id)
            c1 = new_node(fix1, depth + 1, nd.id)
            if params.audit:
                parent_opt = _brute_force_optimum(nd.sub)
                child_opts = [v for v in (_brute_force_optimum(c.sub)
                                          for c in (c0, c1)) if v is not None]
                assert child_opts and parent_opt == min(child_opts), \
                    f"branching at node {nd.id} lost the optimum {parent_opt}"
            children.append(c0)
            children.append(c1)

        # History retention: nodes with fewer ones fixed than every future
        # node can never match again.
        if params.iso_pruning:
            f1_min = min(len(nd.fix.i1) for nd in children)
            for key in list(history):
                kept = [(sid, s) for sid, s in history[key]
                        if len(s.fix.i1) >= f1_min]
                if kept:
                    history[key] = kept
                else:
                    del history[key]

        frontier = children
        depth += 1


def stats_csv_rows(cert: Certificate) -> list[dict]:
    """Per-depth statistics rows for CSV emission."""
    rows = []
    for rec in cert.per_depth:
        rows.append({
            "depth": rec["depth"],
            "generated": rec["generated"],
            "active": rec["active"],
            "pruned_bound": rec["pruned_bound"],
            "pruned_iso": rec["pruned_iso"],
            "reduction_rate": rec["reduction_rate"],
        })
    return rows
