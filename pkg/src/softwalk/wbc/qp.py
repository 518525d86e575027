"""Dense convex QP interface for the whole-body controller.

min 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq,  A_in x <= b_in.

Most control steps have no active inequality, so a direct KKT solve of the
equality-constrained problem is tried first; when its solution violates an
inequality the problem is handed to cvxopt's interior-point solver. Both
paths are deterministic functions of the inputs.
"""

from dataclasses import dataclass

import numpy as np

_INEQ_TOL = 1e-9
_EQ_TOL = 1e-7


class QpInfeasibleError(RuntimeError):
    pass


@dataclass
class QpSolution:
    x: np.ndarray
    cost: float
    max_violation: float
    used_fallback: bool


def _empty(n_cols):
    return np.zeros((0, n_cols)), np.zeros(0)


def solve_qp(H, g, A_eq=None, b_eq=None, A_in=None, b_in=None):
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    n = g.shape[0]
    if A_eq is None or len(A_eq) == 0:
        A_eq, b_eq = _empty(n)
    else:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    if A_in is None or len(A_in) == 0:
        A_in, b_in = _empty(n)
    else:
        A_in = np.asarray(A_in, dtype=float).reshape(-1, n)
        b_in = np.asarray(b_in, dtype=float).reshape(-1)

    x = _solve_equality_kkt(H, g, A_eq, b_eq)
    if x is not None:
        violation = float(np.max(A_in @ x - b_in)) if A_in.shape[0] else 0.0
        if violation <= _INEQ_TOL:
            return QpSolution(x, _cost(H, g, x), max(violation, 0.0), False)

    x = _solve_cvxopt(H, g, A_eq, b_eq, A_in, b_in)
    violation = float(np.max(A_in @ x - b_in)) if A_in.shape[0] else 0.0
    return QpSolution(x, _cost(H, g, x), max(violation, 0.0), True)


def _cost(H, g, x):
    return float(0.5 * x @ H @ x + g @ x)


def _solve_equality_kkt(H, g, A_eq, b_eq):
    """Direct KKT solve; None when the factorization is unusable.

    Contradictory equality rows surface as an unsolvable/singular system
    and are reported as infeasibility.
    """
    m = A_eq.shape[0]
    n = g.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    K[:n, n:] = A_eq.T
    K[n:, :n] = A_eq
    rhs = np.concatenate([-g, b_eq])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x = sol[:n]
    if not np.all(np.isfinite(x)):
        return None
    if m:
        scale = max(1.0, float(np.max(np.abs(b_eq))))
        if float(np.max(np.abs(A_eq @ x - b_eq))) > _EQ_TOL * scale:
            raise QpInfeasibleError("equality constraints are inconsistent")
    return x


def _solve_cvxopt(H, g, A_eq, b_eq, A_in, b_in):
    from cvxopt import matrix, solvers

    options = {
        "show_progress": False,
        "abstol": 1e-10,
        "reltol": 1e-10,
        "feastol": 1e-9,
        "maxiters": 200,
    }
    kwargs = {}
    if A_in.shape[0]:
        kwargs["G"] = matrix(A_in)
        kwargs["h"] = matrix(b_in)
    if A_eq.shape[0]:
        kwargs["A"] = matrix(A_eq)
        kwargs["b"] = matrix(b_eq)
    try:
        sol = solvers.qp(matrix(H), matrix(g), options=options, **kwargs)
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        raise QpInfeasibleError(f"QP solver failed: {exc}") from exc
    x = np.array(sol["x"]).reshape(-1)
    if sol["status"] != "optimal":
        # Accept a numerically converged but unconfirmed point only if it
        # is primal feasible; otherwise report failure.
        eq_ok = A_eq.shape[0] == 0 or np.max(np.abs(A_eq @ x - b_eq)) < 1e-6
        in_ok = A_in.shape[0] == 0 or np.max(A_in @ x - b_in) < 1e-6
        if not (eq_ok and in_ok and np.all(np.isfinite(x))):
            raise QpInfeasibleError(f"QP solver status: {sol['status']}")
    return x
