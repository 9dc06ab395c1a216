"""Tests for the interior-point engine and the LMI-form helper problems."""

import numpy as np
import pytest

from biparsdp import (
    DualSideEmpty,
    QcqpInstance,
    SdpProblem,
    SolverStatus,
    max_min_eigen_combination,
    minimize_linear_functional_over_dual_cone,
    solve,
)
from biparsdp.sdp import smat, svec

from conftest import CYCLE4_MU


def test_svec_smat_round_trip():
    """svec is an isometry and smat inverts it."""
    rng = np.random.default_rng(0)
    for n in (1, 2, 5):
        X = rng.standard_normal((n, n))
        X = X + X.T
        v = svec(X)
        assert abs(np.linalg.norm(v) - np.linalg.norm(X, "fro")) < 1e-12
        assert np.allclose(smat(v, n), X, atol=1e-14)
        Y = rng.standard_normal((n, n))
        Y = Y + Y.T
        assert abs(v @ svec(Y) - np.sum(X * Y)) < 1e-10


def test_trivial_minimum_zero():
    """min <I, X> s.t. trace X <= 5 is 0 at X = O."""
    prob = SdpProblem(C=np.eye(3), A=[np.eye(3)], b=np.array([5.0]))
    sol = solve(prob)
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.primal_obj) < 1e-7
    assert np.linalg.norm(sol.X) < 1e-6


def test_trace_bound_active():
    """min <-I, X> s.t. trace X <= 3 is -3 with the bound tight."""
    prob = SdpProblem(C=-np.eye(2), A=[np.eye(2)], b=np.array([3.0]))
    sol = solve(prob)
    assert sol.status is SolverStatus.OPTIMAL
    assert abs(sol.primal_obj + 3.0) < 1e-7
    assert abs(np.trace(sol.X) - 3.0) < 1e-7


def test_scalar_family_against_closed_form():
    """min c*x11 s.t. x11 <= u, x11 >= 0 equals min(0, c*u)."""
    rng = np.random.default_rng(42)
    for _ in range(20):
        c = float(rng.uniform(-2, 2))
        u = float(rng.uniform(0.5, 4))
        prob = SdpProblem(
            C=np.array([[c]]), A=[np.array([[1.0]])], b=np.array([u])
        )
        sol = solve(prob)
        assert sol.status is SolverStatus.OPTIMAL
        assert abs(sol.primal_obj - min(0.0, c * u)) < 1e-6 * (1 + abs(c * u))


def test_primal_infeasible_detected():
    """trace X <= -1 with X PSD has no solution."""
    prob = SdpProblem(C=np.eye(2), A=[np.eye(2)], b=np.array([-1.0]))
    sol = solve(prob)
    assert sol.status is SolverStatus.PRIMAL_INFEASIBLE


def test_unbounded_detected():
    """min <diag(1, -1), X> with only x11 bounded is unbounded below."""
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    prob = SdpProblem(C=np.diag([1.0, -1.0]), A=[e11], b=np.array([1.0]))
    sol = solve(prob)
    assert sol.status is SolverStatus.DUAL_INFEASIBLE


def test_weak_duality_and_kkt_invariants():
    """On random solvable problems: feasibility, gap and ||X S|| <= 10*tol*n."""
    rng = np.random.default_rng(0)
    tol = 1e-8
    solved = 0
    for _ in range(40):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        C = rng.standard_normal((n, n))
        C = C + C.T
        A = []
        for _ in range(m):
            G = rng.standard_normal((n, n))
            # PSD + identity keeps the feasible set bounded and the problem solvable
            A.append(G @ G.T + np.eye(n))
        b = rng.uniform(0.5, 3.0, size=m)
        sol = solve(SdpProblem(C=C, A=A, b=b), tol=tol)
        assert sol.status is SolverStatus.OPTIMAL
        pfeas, dfeas, compl = sol.residuals
        assert pfeas < 1e-7
        assert dfeas < 1e-7
        assert compl <= 10 * tol * n
        # weak duality with room for the feasibility error
        assert sol.dual_obj <= sol.primal_obj + 1e-6
        assert np.all(sol.y >= -1e-9)
        solved += 1
    assert solved == 40


def test_bundled_instances_reach_machine_complementarity(small, cycle4):
    """The terminal refinement drives ||X S|| far below the solver tolerance."""
    for inst in (small, cycle4):
        prob = SdpProblem(
            C=inst.objective,
            A=list(inst.constraint_matrices),
            b=inst.rhs.copy(),
        )
        sol = solve(prob)
        assert sol.status is SolverStatus.OPTIMAL
        assert sol.residuals[2] < 1e-10


def test_tol_validation():
    prob = SdpProblem(C=np.eye(1), A=[np.eye(1)], b=np.array([1.0]))
    with pytest.raises(ValueError):
        solve(prob, tol=0.0)
    with pytest.raises(ValueError):
        solve(prob, tol=1e-3)


def test_edge_functional_reference_values(cycle4):
    """Minimal S(y)_{kl} over the dual feasible set matches reference values."""
    for (k, ell), ref in CYCLE4_MU.items():
        mu, attained, y = minimize_linear_functional_over_dual_cone(cycle4, k, ell)
        assert attained
        assert abs(mu - ref) < 5e-3
        assert np.all(y >= -1e-9)
        # the reported y is feasible and realizes the value
        S = cycle4.objective + sum(
            yp * Q for yp, Q in zip(y, cycle4.constraint_matrices)
        )
        assert np.linalg.eigvalsh(S)[0] > -1e-6
        assert abs(S[k, ell] - mu) < 1e-6


def test_edge_functional_small_closed_form(small):
    """For the 2-variable instance mu* = 15 + 6*sqrt(6)."""
    mu, attained, _ = minimize_linear_functional_over_dual_cone(small, 0, 1)
    assert attained
    assert abs(mu - (15.0 + 6.0 * np.sqrt(6.0))) < 1e-6


def test_edge_functional_maximize(small):
    """The maximum of S(y)_{01} is unbounded and hits the box."""
    mu_max, attained, _ = minimize_linear_functional_over_dual_cone(
        small, 0, 1, maximize=True, y_cap=1e3
    )
    assert not attained
    assert mu_max > 1e3


def test_edge_functional_box_monotone(small):
    """Enlarging the y box never increases the reported minimum."""
    vals = []
    for cap in (1e2, 1e4, 1e6):
        mu, _, _ = minimize_linear_functional_over_dual_cone(small, 0, 1, y_cap=cap)
        vals.append(mu)
    assert vals[0] >= vals[1] - 1e-6
    assert vals[1] >= vals[2] - 1e-6


def test_dual_side_empty_raises():
    """An instance with no PSD S(y) raises DualSideEmpty."""
    inst = QcqpInstance(
        objective=np.array([[-1.0, 0.5], [0.5, -1.0]]),
        constraint_matrices=(np.diag([1.0, -1.0]),),
        rhs=np.array([1.0]),
    )
    with pytest.raises(DualSideEmpty):
        minimize_linear_functional_over_dual_cone(inst, 0, 1)


def test_max_min_eigen_identity():
    """With Q1 = I the best combination is trivially t* = 1."""
    inst = QcqpInstance(
        objective=np.zeros((3, 3)),
        constraint_matrices=(np.eye(3),),
        rhs=np.array([1.0]),
    )
    t, y = max_min_eigen_combination(inst)
    assert abs(t - 1.0) < 1e-6
    S = sum(yp * Q for yp, Q in zip(y, inst.constraint_matrices))
    assert np.linalg.eigvalsh(S)[0] > 1.0 - 1e-6


def test_max_min_eigen_indefinite():
    """An indefinite single constraint cannot give a positive t*."""
    inst = QcqpInstance(
        objective=np.zeros((2, 2)),
        constraint_matrices=(np.diag([1.0, -1.0]),),
        rhs=np.array([1.0]),
    )
    t, _ = max_min_eigen_combination(inst)
    assert t < 1e-6


def test_max_min_eigen_reference(cycle4):
    """The optimal combination reaches lambda_min about 0.0370 > 0."""
    t, y = max_min_eigen_combination(cycle4)
    assert t > 0.02
    assert abs(t - 0.0370) < 2e-3
    # y is rescaled so that the combination dominates the identity
    S = sum(yp * Q for yp, Q in zip(y, cycle4.constraint_matrices))
    assert np.linalg.eigvalsh(S)[0] > 1.0 - 1e-5


def test_fixed_combination_reference_eigenvalue(cycle4):
    """lambda_min(3*Q1 + 4*Q2) is about 0.1577."""
    Q1, Q2 = cycle4.constraint_matrices
    lam = np.linalg.eigvalsh(3.0 * Q1 + 4.0 * Q2)[0]
    assert abs(lam - 0.1577) < 5e-4


def test_against_cvxpy_if_available():
    """Optimal values agree with an independent solver on random problems."""
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(123)
    for _ in range(5):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        C = rng.standard_normal((n, n))
        C = C + C.T
        A = []
        for _ in range(m):
            G = rng.standard_normal((n, n))
            A.append(G @ G.T + np.eye(n))
        b = rng.uniform(0.5, 3.0, size=m)
        sol = solve(SdpProblem(C=C, A=A, b=b))
        X = cp.Variable((n, n), PSD=True)
        cons = [cp.trace(Ap @ X) <= bp for Ap, bp in zip(A, b)]
        cvx = cp.Problem(cp.Minimize(cp.trace(C @ X)), cons)
        cvx.solve()
        assert abs(sol.primal_obj - cvx.value) < 1e-5 * (1 + abs(cvx.value))
