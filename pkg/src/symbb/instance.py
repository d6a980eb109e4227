"""Problem instances: QAPLIB parsing, QAP-to-BQOP conversion, objectives,
penalty QUBO transform and feasible-solution sampling.

All matrices are kept in 64-bit signed integer arithmetic; objective values of
instances in the intended range (including tai256c) fit comfortably.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np


class InstanceError(ValueError):
    """Malformed instance data."""


@dataclass(frozen=True)
class QapInstance:
    """A QAP with flow matrix A and distance matrix B, both n x n symmetric."""

    n: int
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        for name in ("A", "B"):
            M = np.asarray(getattr(self, name), dtype=np.int64)
            if M.shape != (self.n, self.n):
                raise InstanceError(f"{name} has shape {M.shape}, expected ({self.n}, {self.n})")
            if not np.array_equal(M, M.T):
                raise InstanceError(f"{name} is not symmetric")
            M.setflags(write=False)
            object.__setattr__(self, name, M)
        if self.n < 1:
            raise InstanceError("dimension must be positive")


@dataclass(frozen=True)
class BqopInstance:
    """Minimize x^T B x over binary x with sum(x) = m."""

    n: int
    B: np.ndarray
    m: int

    def __post_init__(self):
        B = np.asarray(self.B, dtype=np.int64)
        if B.shape != (self.n, self.n):
            raise InstanceError(f"B has shape {B.shape}, expected ({self.n}, {self.n})")
        if not np.array_equal(B, B.T):
            raise InstanceError("B is not symmetric")
        if np.any(np.diagonal(B) != 0):
            raise InstanceError("B must have zero diagonal")
        if not (0 < self.m <= self.n):
            raise InstanceError(f"cardinality target m={self.m} out of range for n={self.n}")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)


def parse_qaplib(text: str) -> QapInstance:
    """Parse a QAPLIB .dat stream: n, then n*n entries of A, then n*n of B.

    The token stream is whitespace-agnostic; line breaks carry no meaning.
    """
    tokens = text.split()
    if not tokens:
        raise InstanceError("empty input")
    pos = 0

    def take(count: int, what: str) -> np.ndarray:
        nonlocal pos
        chunk = tokens[pos : pos + count]
        if len(chunk) < count:
            raise InstanceError(f"truncated input while reading {what}: "
                                f"expected {count} entries, found {len(chunk)}")
        pos += count
        try:
            return np.array([int(t) for t in chunk], dtype=np.int64)
        except ValueError as exc:
            raise InstanceError(f"non-numeric token while reading {what}: {exc}") from None

    n_arr = take(1, "dimension")
    n = int(n_arr[0])
    if n < 1:
        raise InstanceError(f"invalid dimension {n}")
    A = take(n * n, "flow matrix").reshape(n, n)
    B = take(n * n, "distance matrix").reshape(n, n)
    if pos != len(tokens):
        raise InstanceError(f"{len(tokens) - pos} trailing tokens after both matrices")
    return QapInstance(n=n, A=A, B=B)


def format_qaplib(qap: QapInstance) -> str:
    """Serialize back to QAPLIB .dat text (round-trips through parse_qaplib)."""
    lines = [str(qap.n), ""]
    for M in (qap.A, qap.B):
        lines.extend(" ".join(str(v) for v in row) for row in M)
        lines.append("")
    return "\n".join(lines)


def _rank_one_binary_factor(A: np.ndarray) -> np.ndarray:
    """Return the 0/1 vector f with A = f f^T, allowing A_ii = 0 where
    (f f^T)_ii would be 1 (the zero-diagonal convention).  Raises if A does
    not factor this way."""
    n = A.shape[0]
    if np.any(A < 0) or np.any((A != 0) & (A != 1)):
        raise InstanceError("flow matrix is not 0/1 valued, not rank-one with binary factor")
    nz_rows = np.flatnonzero(A.any(axis=1))
    if nz_rows.size == 0:
        raise InstanceError("flow matrix is zero: not rank-one with nonempty support")
    i = int(nz_rows[0])
    f = (A[i] != 0).astype(np.int64)
    # Row i itself belongs to the support in either diagonal convention.
    f[i] = 1
    outer = np.outer(f, f)
    mismatch = A != outer
    # Diagonal entries may be zeroed out by convention.
    mismatch[np.diag_indices(n)] &= np.diagonal(A) != 0
    if mismatch.any():
        raise InstanceError("flow matrix is not rank-one: A != f f^T for the derived 0/1 factor")
    return f


def qap_to_bqop(qap: QapInstance) -> BqopInstance:
    """Convert a QAP whose flow matrix is f f^T (f binary) to the equivalent
    cardinality-constrained BQOP: minimize x^T B x subject to sum(x) = |f|."""
    f = _rank_one_binary_factor(qap.A)
    m = int(f.sum())
    if m >= qap.n:
        raise InstanceError("flow factor has full support; the cardinality constraint is vacuous")
    return BqopInstance(n=qap.n, B=qap.B, m=m)


def as_solution(x, n: int) -> np.ndarray:
    """Validate and normalize a binary solution vector."""
    x = np.asarray(x, dtype=np.int64).ravel()
    if x.size != n:
        raise InstanceError(f"solution has {x.size} entries, expected {n}")
    if np.any((x != 0) & (x != 1)):
        raise InstanceError("solution entries must be 0 or 1")
    return x


def objective(inst: BqopInstance, x) -> int:
    """x^T B x for a binary vector x."""
    x = as_solution(x, inst.n)
    return int(x @ inst.B @ x)


def to_penalty_qubo(inst: BqopInstance, lam) -> tuple[np.ndarray, int]:
    """Return (Q, c) with x^T Q x + c == x^T B x + lam*(sum(x) - m)^2 for all
    binary x, where c = lam*m**2.  Linear terms are folded into the diagonal
    using x_i^2 = x_i.  Exact in integer arithmetic when lam is an integer."""
    if lam <= 0:
        raise InstanceError("penalty parameter must be positive")
    n, m = inst.n, inst.m
    if isinstance(lam, int):
        Q = inst.B + lam * (np.ones((n, n), dtype=np.int64) - 2 * m * np.eye(n, dtype=np.int64))
    else:
        Q = inst.B + lam * (np.ones((n, n)) - 2 * m * np.eye(n))
    return Q, lam * m * m


@dataclass(frozen=True)
class ScaledDistribution:
    """Scaled objective values of sampled feasible solutions plus a histogram
    summary (bin edges and probabilities)."""

    values: np.ndarray
    bin_edges: np.ndarray
    probabilities: np.ndarray
    seed: int | None = None
    exhaustive: bool = False

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def sample_scaled_distribution(
    inst: BqopInstance,
    count: int,
    optimum: int,
    seed: int = 0,
    bins: int = 50,
    exhaustive: bool = False,
) -> ScaledDistribution:
    """Scaled values (obj - optimum)/|optimum| over feasible supports.

    Supports are drawn uniformly over the m-subsets of {1..n}; each sample's
    RNG stream is derived from (seed, sample index) so the result is
    deterministic regardless of evaluation order.  With ``exhaustive`` every
    m-subset is enumerated instead (small n only).
    """
    if optimum == 0:
        raise InstanceError("optimum must be nonzero for scaling")
    if inst.m > inst.n:
        raise InstanceError("m exceeds n")
    B = inst.B
    vals = []
    if exhaustive:
        for support in itertools.combinations(range(inst.n), inst.m):
            idx = np.array(support)
            vals.append(int(B[np.ix_(idx, idx)].sum()))
    else:
        if count < 1:
            raise InstanceError("sample count must be positive")
        for i in range(count):
            rng = np.random.default_rng([seed, i])
            idx = rng.choice(inst.n, size=inst.m, replace=False)
            vals.append(int(B[np.ix_(idx, idx)].sum()))
    scaled = (np.array(vals, dtype=np.float64) - optimum) / abs(optimum)
    probs, edges = np.histogram(scaled, bins=bins)
    probs = probs / scaled.size
    return ScaledDistribution(values=scaled, bin_edges=edges, probabilities=probs,
                              seed=None if exhaustive else seed, exhaustive=exhaustive)


# --- serialization ---------------------------------------------------------

def bqop_to_json(inst: BqopInstance) -> str:
    """JSON with fields n, m and the row-major lower triangle of B."""
    tri = [int(inst.B[i, j]) for i in range(inst.n) for j in range(i + 1)]
    return json.dumps({"n": inst.n, "m": inst.m, "B_lower": tri})


def bqop_from_json(text: str) -> BqopInstance:
    data = json.loads(text)
    n, m, tri = data["n"], data["m"], data["B_lower"]
    if len(tri) != n * (n + 1) // 2:
        raise InstanceError("lower triangle has wrong length")
    B = np.zeros((n, n), dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1):
            B[i, j] = B[j, i] = tri[k]
            k += 1
    return BqopInstance(n=n, B=B, m=m)


def parse_solution(text: str, n: int) -> np.ndarray:
    """Parse a solution file: either one line of n characters '0'/'1', or a
    whitespace-separated list of 1-based support indices."""
    tokens = text.split()
    if not tokens:
        raise InstanceError("empty solution file")
    if len(tokens) == 1 and len(tokens[0]) == n and set(tokens[0]) <= {"0", "1"}:
        return np.array([int(c) for c in tokens[0]], dtype=np.int64)
    x = np.zeros(n, dtype=np.int64)
    for tok in tokens:
        try:
            i = int(tok)
        except ValueError:
            raise InstanceError(f"non-numeric token {tok!r} in solution file") from None
        if not (1 <= i <= n):
            raise InstanceError(f"support index {i} out of range 1..{n}")
        x[i - 1] = 1
    return x
