"""Small dense linear-algebra and time-stepping kernel.

Matrices are plain 2-D ``float64`` numpy arrays; vectors are 1-D arrays.
The operations here add the shape checks and failure modes the rest of
the package relies on.
"""
import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError, IntegrationError, SingularMatrixError

PIVOT_RTOL = 1e-12


def as_matrix(a, name="matrix"):
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def mat_mul(a, b):
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by "
                             f"{b.shape[0]}x{b.shape[1]}")
    return a @ b


def transpose(a):
    return as_matrix(a).T.copy()


def solve_linear(a, rhs):
    """Solve ``a @ x = rhs`` by LU with partial pivoting.

    ``rhs`` may be a vector or a matrix; the result has the same rank.
    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-12 * max|a|``.
    """
    a = as_matrix(a, "coefficient matrix")
    rhs = np.asarray(rhs, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"coefficient matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    if rhs.shape[0] != n:
        raise DimensionError(f"right-hand side has {rhs.shape[0]} rows, expected {n}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("coefficient matrix is identically zero")
    with warnings.catch_warnings():
        # exact zero pivots are reported below with a condition estimate
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_RTOL * scale:
        cond = np.linalg.cond(a)
        raise SingularMatrixError(
            f"matrix is singular to working precision (min pivot {pivots.min():.3e}, "
            f"max entry {scale:.3e}, cond ~ {cond:.3e})")
    return scipy.linalg.lu_solve((lu, piv), rhs)


def frobenius_norm(a):
    return float(np.sqrt(np.sum(np.square(np.asarray(a, dtype=float)))))


def rk4_step(f, x, t, dt):
    """Advance ``dx/dt = f(t, x)`` by one classical Runge-Kutta step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)

    def deriv(tt, xx):
        d = np.asarray(f(tt, xx), dtype=float)
        if not np.all(np.isfinite(d)):
            raise IntegrationError(f"non-finite derivative at t={tt!r}", t=tt)
        return d

    h2 = 0.5 * dt
    k1 = deriv(t, x)
    k2 = deriv(t + h2, x + h2 * k1)
    k3 = deriv(t + h2, x + h2 * k2)
    k4 = deriv(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(a, dt):
    """One RK4 step of ``x' = a x + c`` written as ``x + = M x + N c``.

    For a linear time-invariant field the four stages collapse into the
    truncated exponential series, so ``M = sum_{k<=4} (dt a)^k / k!`` and
    ``N = dt * sum_{k<=3} (dt a)^k / (k+1)!``. ``a`` may carry leading batch
    dimensions.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    eye = np.eye(n)
    ha = dt * a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    ha4 = ha3 @ ha
    m = eye + ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0
    nmat = dt * (eye + ha / 2.0 + ha2 / 6.0 + ha3 / 24.0)
    return m, nmat
