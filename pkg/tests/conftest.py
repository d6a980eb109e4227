"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own algorithms: optima come
from exhaustive enumeration, automorphism groups from brute force over all
permutations, and cone distances from alternating projections.
"""

import itertools

import numpy as np
import pytest

from symbb.instance import BqopInstance


# --- instance factories ----------------------------------------------------

def random_bqop(rng, n, m, low=-10, high=30):
    """Random symmetric integer instance with zero diagonal."""
    B = rng.integers(low, high, (n, n))
    B = B + B.T
    np.fill_diagonal(B, 0)
    return BqopInstance(n=n, B=B.astype(np.int64), m=m)


def planted_bqop(rng, blocks, block_size, m, low=-5, high=12):
    """Instance with a planted cyclic symmetry in every block.

    Index (a, i) denotes position i of block a; entries depend only on the
    block pair and the circular offset i - j, so the simultaneous rotation of
    all blocks is an automorphism by construction.
    """
    r = block_size
    W = rng.integers(low, high, (blocks, blocks, r)).astype(np.int64)
    for a in range(blocks):
        for c in range(a, blocks):
            for t in range(r):
                W[c, a, (-t) % r] = W[a, c, t]
    n = blocks * r
    B = np.zeros((n, n), dtype=np.int64)
    for a in range(blocks):
        for c in range(blocks):
            for i in range(r):
                for j in range(r):
                    B[a * r + i, c * r + j] = W[a, c, (i - j) % r]
    np.fill_diagonal(B, 0)
    assert np.array_equal(B, B.T)
    return BqopInstance(n=n, B=B, m=m)


def planted_rotation(blocks, block_size):
    """The simultaneous one-step rotation planted by planted_bqop."""
    sigma = np.empty(blocks * block_size, dtype=np.int64)
    for a in range(blocks):
        for i in range(block_size):
            sigma[a * block_size + i] = a * block_size + (i + 1) % block_size
    return sigma


# --- oracles ---------------------------------------------------------------

def brute_optimum(inst):
    """Exact BQOP optimum by enumerating all m-subsets."""
    B = inst.B
    best = None
    for support in itertools.combinations(range(inst.n), inst.m):
        idx = np.array(support)
        val = int(B[np.ix_(idx, idx)].sum())
        if best is None or val < best:
            best = val
    return best


def brute_sub_optimum(sub):
    """Exact optimum of a reduced subproblem (offset included); None if
    infeasible."""
    r, ell = sub.residual_m, sub.ell
    if r < 0 or r > ell:
        return None
    best = None
    for support in itertools.combinations(range(ell), r):
        idx = np.array(support, dtype=np.int64)
        val = sub.offset + int(sub.reduced_B[np.ix_(idx, idx)].sum())
        if best is None or val < best:
            best = val
    return best


def brute_automorphisms(B):
    """All permutations preserving B, by exhaustive search (d <= 8)."""
    B = np.asarray(B)
    d = B.shape[0]
    found = []
    for perm in itertools.permutations(range(d)):
        p = np.array(perm)
        if np.array_equal(B[np.ix_(p, p)], B):
            found.append(p)
    return found


def alternating_projection_distance(M, tol=1e-11, max_iter=200_000):
    """Distance of M to K* = PSD + Nonneg via alternating projections.

    Minimizes ||M - Y1 - Y2|| by block-coordinate projection: Y1 onto the PSD
    cone given Y2, then Y2 onto the nonnegative cone given Y1.  Independent of
    the package's APG formulation.
    """
    M = np.asarray(M, dtype=float)
    Y1 = np.zeros_like(M)
    Y2 = np.zeros_like(M)
    prev = np.inf
    for _ in range(max_iter):
        w, V = np.linalg.eigh(M - Y2)
        Y1 = (V * np.maximum(w, 0.0)) @ V.T
        Y2 = np.maximum(M - Y1, 0.0)
        g = float(np.linalg.norm(M - Y1 - Y2))
        if abs(prev - g) <= tol * max(1.0, g):
            break
        prev = g
    return g


# --- fixtures --------------------------------------------------------------

@pytest.fixture
def bqop6():
    rng = np.random.default_rng(42)
    return random_bqop(rng, 6, 3)


@pytest.fixture
def cycle6():
    """Weighted 6-cycle adjacency matrix; automorphism group is dihedral of
    order 12."""
    B = np.zeros((6, 6), dtype=np.int64)
    for i in range(6):
        B[i, (i + 1) % 6] = B[(i + 1) % 6, i] = 5
    return B
