"""Semidefinite relaxation of a QCQP: build, solve, extract.

Replaces x x^T by a PSD matrix X to get the convex problem

    min  <Q0, X>   s.t.  <Qp, X> <= b_p,  X PSD,

a lower bound on the QCQP.  When the optimal X has numerical rank 1 the
relaxation is exact and the optimizer x* is read off its leading eigenpair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import QcqpInstance
from .sdp import (
    DEFAULT_TOL,
    SdpProblem,
    SolverStatus,
    dual_slack,
    solve,
)

DEFAULT_RANK_TOL = 1e-6


@dataclass
class RelaxationResult:
    status: SolverStatus
    X_star: np.ndarray
    y_star: np.ndarray
    S_of_y: np.ndarray  # Q0 + sum_p y_p Qp
    primal_value: float
    dual_value: float
    numeric_rank: int
    x_star: np.ndarray | None  # populated when numeric_rank <= 1
    gap: float | None  # signed: x*^T Q0 x* - <Q0, X*>
    message: str = ""


def build_relaxation(inst: QcqpInstance) -> SdpProblem:
    """Relaxation data: C = Q0, one linear inequality per constraint."""
    return SdpProblem(
        C=inst.objective,
        A=list(inst.constraint_matrices),
        b=inst.rhs.copy(),
    )


def numerical_rank(X: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of eigenvalues above rank_tol * max(largest eigenvalue, 1).

    The absolute floor of 1 keeps the threshold meaningful for matrices
    that are small in norm (e.g. X ~ 0 has rank 0, not n).
    """
    lam = np.linalg.eigvalsh(X)
    return int(np.sum(lam > rank_tol * max(lam[-1], 1.0)))


def extract_rank1(X: np.ndarray) -> np.ndarray:
    """Factor a numerically rank-1 PSD matrix as x x^T and return x.

    x = sqrt(lambda_1) * v_1 with the sign fixed so the first nonzero
    coordinate is positive (the QCQP is homogeneous, so both signs of x
    are optimizers).
    """
    if numerical_rank(X) != 1:
        raise ValueError("matrix does not have numerical rank 1")
    lam, V = np.linalg.eigh(X)
    x = np.sqrt(lam[-1]) * V[:, -1]
    nz = np.flatnonzero(np.abs(x) > 1e-12 * np.abs(x).max())
    if len(nz) and x[nz[0]] < 0:
        x = -x
    return x


def complementarity_residual(
    inst: QcqpInstance, X: np.ndarray, y: np.ndarray
) -> float:
    """||X * S(y)||_F where S(y) = Q0 + sum_p y_p Qp."""
    S = dual_slack(build_relaxation(inst), y)
    return float(np.linalg.norm(X @ S, "fro"))


def solve_relaxation(
    inst: QcqpInstance,
    tol: float = DEFAULT_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> RelaxationResult:
    """Solve the relaxation and, when rank-1, extract the QCQP optimizer.

    Rank 0 (X* ~ O) also counts as extractable: x* = 0 is then feasible
    and optimal for the QCQP.  An unbounded relaxation is reported via
    status DualInfeasible.
    """
    prob = build_relaxation(inst)
    sol = solve(prob, tol=tol)
    S = dual_slack(prob, sol.y)
    if sol.status is not SolverStatus.OPTIMAL:
        return RelaxationResult(
            status=sol.status,
            X_star=sol.X,
            y_star=sol.y,
            S_of_y=S,
            primal_value=sol.primal_obj,
            dual_value=sol.dual_obj,
            numeric_rank=0,
            x_star=None,
            gap=None,
            message=sol.message or f"relaxation not solved: {sol.status.value}",
        )
    rank = numerical_rank(sol.X, rank_tol)
    x_star = None
    gap = None
    if rank == 1:
        x_star = extract_rank1(sol.X)
    elif rank == 0:
        x_star = np.zeros(inst.n)
    if x_star is not None:
        gap = float(x_star @ inst.objective @ x_star - sol.primal_obj)
    return RelaxationResult(
        status=sol.status,
        X_star=sol.X,
        y_star=sol.y,
        S_of_y=S,
        primal_value=sol.primal_obj,
        dual_value=sol.dual_obj,
        numeric_rank=rank,
        x_star=x_star,
        gap=gap,
        message=sol.message,
    )
