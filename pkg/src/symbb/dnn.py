"""Lagrangian DNN lower bounds via Newton bracketing.

A subproblem (minimize y^T C y over binary y with sum(y) = b) is lifted to a
quadratic form in (u, v, s) of order 2*ell + 1, where v is the complement
slack for u and s the homogenizing scalar.  With penalty weight lam the
lifted matrix is

    Q = Q_obj + lam * Q_pen,

where Q_obj carries u^T C u and Q_pen carries sum_j (u_j + v_j - s)^2 +
sum_j u_j v_j + (sum_j u_j - b s)^2.  The dual of the conic relaxation asks
for the largest y with Q - H y in K* (PSD + entrywise-nonnegative matrices,
H the corner selector); that largest zero y* of the distance function

    g(y) = dist(Q - H y, K*)

equals the relaxation value, is approached from above by Newton steps on g,
and every iterate yields a validated lower bracket through an eigenvalue
correction.  The distance itself is computed by an accelerated proximal
gradient (APG) method splitting Q - H y into an approximately-PSD part Y1
and an exactly nonnegative part Y2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .subproblem import Subproblem


@dataclass(frozen=True)
class ApgParams:
    step: float = 1.0           # gradient step; the projection gradient is 1-Lipschitz
    rel_tol: float = 1e-12      # stop on relative objective change below this
    max_iter: int = 20000


@dataclass(frozen=True)
class NbParams:
    gap_tol: float = 1e-6       # converged when b - a <= gap_tol * max(1, |b|)
    max_iter: int = 60
    dprime_floor: float = 1e-12
    g_floor: float = 1e-11      # g below this counts as "already in the cone"
    apg: ApgParams = field(default_factory=ApgParams)


@dataclass(frozen=True)
class DnnProblem:
    """Lifted matrices for one subproblem, plus bookkeeping for bound
    reporting (offset, integrality, initial Newton point)."""

    ell: int
    q_obj: np.ndarray
    q_pen: np.ndarray
    lam: float
    offset: int
    integral: bool
    y_init: float

    @property
    def q_lam(self) -> np.ndarray:
        return self.q_obj + self.lam * self.q_pen

    @property
    def corner(self) -> int:
        return 2 * self.ell


@dataclass(frozen=True)
class ConeDistanceResult:
    g: float
    gprime: float
    y1: np.ndarray
    y2: np.ndarray
    min_eig_y1: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class NbResult:
    status: str                 # Pruned | Branchable | Converged | IterLimit
    a: float
    b: float
    iterations: int
    lb_integer: int | None
    trace: tuple = ()


def lifted_form(prob: DnnProblem, u, v, s: float) -> float:
    """Evaluate z^T (Q_obj + lam Q_pen) z at z = (u, v, s)."""
    z = np.concatenate([np.asarray(u, dtype=float), np.asarray(v, dtype=float), [s]])
    return float(z @ prob.q_lam @ z)


def penalty_value(u, v, s: float, b: float) -> float:
    """Direct evaluation of the penalty terms; oracle for ``assemble``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.sum((u + v - s) ** 2) + np.sum(u * v) + (u.sum() - b * s) ** 2)


def assemble(sub: Subproblem, lam: float) -> DnnProblem:
    """Build the lifted matrices of order 2*ell + 1 for a subproblem."""
    ell = sub.ell
    if ell == 0:
        raise ValueError("cannot assemble a DNN problem with no free variables")
    if lam <= 0:
        raise ValueError("lam must be positive")
    d = 2 * ell + 1
    s = d - 1
    C = np.asarray(sub.reduced_B, dtype=float)
    b = float(sub.residual_m)

    q_obj = np.zeros((d, d))
    q_obj[:ell, :ell] = C

    q_pen = np.zeros((d, d))
    iu = np.arange(ell)
    iv = np.arange(ell, 2 * ell)
    # sum_j (u_j + v_j - s)^2
    q_pen[iu, iu] += 1.0
    q_pen[iv, iv] += 1.0
    q_pen[s, s] += ell
    q_pen[iu, iv] += 1.0
    q_pen[iv, iu] += 1.0
    q_pen[iu, s] += -1.0
    q_pen[s, iu] += -1.0
    q_pen[iv, s] += -1.0
    q_pen[s, iv] += -1.0
    # complementarity sum_j u_j v_j
    q_pen[iu, iv] += 0.5
    q_pen[iv, iu] += 0.5
    # cardinality residual (sum_j u_j - b s)^2
    q_pen[:ell, :ell] += 1.0
    q_pen[iu, s] += -b
    q_pen[s, iu] += -b
    q_pen[s, s] += b * b

    return DnnProblem(ell=ell, q_obj=q_obj, q_pen=q_pen, lam=float(lam),
                      offset=sub.offset, integral=True, y_init=initial_upper(sub))


def default_lambda(sub: Subproblem, scale: float = 1e8) -> float:
    """scale divided by the Frobenius norm of the reduced matrix."""
    norm = float(np.linalg.norm(np.asarray(sub.reduced_B, dtype=float)))
    if norm == 0.0:
        raise ValueError("reduced matrix is zero; no natural penalty scale")
    return scale / norm


def initial_upper(sub: Subproblem) -> float:
    """A value strictly above the reduced subproblem optimum: the objective of
    the completion using the residual_m smallest free indices, plus one."""
    y = np.zeros(sub.ell, dtype=np.int64)
    y[: sub.residual_m] = 1
    return float(y @ sub.reduced_B @ y) + 1.0


def cone_distance(M: np.ndarray, params: ApgParams = ApgParams(),
                  warm_start: np.ndarray | None = None,
                  corner: int | None = None) -> ConeDistanceResult:
    """Distance of a symmetric matrix to K* = PSD + Nonneg.

    Minimizes 0.5 * || negpart(M - Y2) ||^2 over entrywise-nonnegative Y2 by
    APG (projection gradient, Lipschitz constant 1, Nesterov momentum with
    adaptive restart).  The returned decomposition keeps Y2 >= 0 exact and
    Y1 = PSD projection of M - Y2, so that g = ||M - Y1 - Y2||; min_eig_y1
    is the raw minimum eigenvalue of M - Y2 used by the validated bracket.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if corner is None:
        corner = d - 1
    Y = np.zeros_like(M) if warm_start is None else warm_start.copy()
    Z = Y.copy()
    t = 1.0
    f_prev = math.inf
    converged = False
    iterations = 0
    for k in range(params.max_iter):
        iterations = k + 1
        X = M - Z
        w, V = np.linalg.eigh(X)
        wneg = np.minimum(w, 0.0)
        f_z = 0.5 * float(np.sum(wneg * wneg))
        neg = (V * wneg) @ V.T
        Y_new = np.maximum(Z + params.step * neg, 0.0)
        if f_z > f_prev:
            # objective increased at the momentum point: restart momentum
            t = 1.0
            Z = Y.copy()
            f_prev = math.inf
            continue
        if abs(f_prev - f_z) <= params.rel_tol * max(1.0, abs(f_z)):
            Y = Y_new
            converged = True
            break
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Z = Y_new + ((t - 1.0) / t_new) * (Y_new - Y)
        Y = Y_new
        t = t_new
        f_prev = f_z

    X = M - Y
    w, V = np.linalg.eigh(X)
    wpos = np.maximum(w, 0.0)
    Y1 = (V * wpos) @ V.T
    R = X - Y1
    g = float(np.linalg.norm(R))
    gprime = -float(R[corner, corner]) / g if g > 0 else 0.0
    return ConeDistanceResult(g=g, gprime=gprime, y1=Y1, y2=Y,
                              min_eig_y1=float(w[0]), converged=converged,
                              iterations=iterations)


def _safe_ceil(value: float) -> int:
    # Guard against a bound sitting a few ulps above an integer.
    return math.ceil(value - 1e-9 * max(1.0, abs(value)))


def nb_bound(prob: DnnProblem, target: float | None,
             params: NbParams = NbParams()) -> NbResult:
    """Newton bracketing on the cone-distance function.

    Maintains a validated lower bracket ``a`` (running maximum of eigenvalue
    corrected iterates) and an upper bracket ``b`` (running minimum of Newton
    iterates whose APG solve converged).  With a target, terminates early with
    Pruned once the integer lower bound reaches the target, or Branchable
    once even the upper bracket proves the relaxation cannot reach it.
    """
    Q = prob.q_lam
    c = prob.corner
    d = Q.shape[0]
    dim_factor = 2 * prob.ell + 1
    y = prob.y_init
    a = -math.inf
    b = y
    warm = None
    trace = []
    status = "IterLimit"
    iterations = 0
    for k in range(params.max_iter):
        iterations = k + 1
        M = Q.copy()
        M[c, c] -= y
        res = cone_distance(M, params.apg, warm_start=warm, corner=c)
        warm = res.y2
        # The minimum eigenvalue carries roundoff of order d * eps * ||M||;
        # subtract an explicit slack so a stays a valid lower bound.
        eig_slack = 16.0 * d * np.finfo(float).eps * float(np.linalg.norm(M))
        a = max(a, y + dim_factor * min(0.0, res.min_eig_y1 - eig_slack))
        if res.converged:
            b = min(b, y)
        trace.append({"k": k, "y": y, "a": a, "b": b, "g": res.g,
                      "gprime": res.gprime, "apg_iterations": res.iterations,
                      "apg_converged": res.converged})
        if target is not None:
            if prob.integral:
                if _safe_ceil(a + prob.offset) >= target:
                    status = "Pruned"
                    break
                if _safe_ceil(b + prob.offset) < target:
                    status = "Branchable"
                    break
            else:
                if a + prob.offset >= target:
                    status = "Pruned"
                    break
                if b + prob.offset < target:
                    status = "Branchable"
                    break
        if b - a <= params.gap_tol * max(1.0, abs(b)):
            status = "Converged"
            break
        # Newton step whenever the derivative is usable; bisection fallbacks
        # otherwise.  Only the eigenvalue-corrected update above counts toward
        # a — a small nonzero g with a tiny derivative can sit well above y*.
        if res.gprime >= params.dprime_floor:
            y_new = y - res.g / res.gprime
            if math.isfinite(a) and y_new <= a:
                y_new = 0.5 * (a + y)
            y = y_new
        elif res.g <= params.g_floor * max(1.0, float(np.linalg.norm(M))):
            # y is (numerically) at or below y*: move back up inside [y, b].
            y = 0.5 * (y + b)
        else:
            y = 0.5 * (a + y) if math.isfinite(a) else y - max(1.0, abs(y)) * 1e-3

    lb_integer = _safe_ceil(a + prob.offset) if prob.integral and math.isfinite(a) else None
    return NbResult(status=status, a=a, b=b, iterations=iterations,
                    lb_integer=lb_integer, trace=tuple(trace))
