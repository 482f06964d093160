"""Continuous algebraic Riccati equation and LQR gain.

The stabilizing solution of ``A'P + PA - P B R^-1 B' P + Q = 0`` is found
by integrating the Riccati differential equation from ``P = 0`` until its
right-hand side vanishes, then polishing with Newton-Kleinman steps whose
Lyapunov equations are solved directly in Kronecker form.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, SolverError, ValidationError
from .numkern import as_matrix, frobenius_norm, solve_linear
from .simkit import FeedbackGain

RDE_STEP = 0.002
RDE_TOL = 1e-10
MAX_RDE_STEPS = 10_000_000
MAX_NEWTON_STEPS = 50
CHUNK = 50_000
PSD_SHIFT = 1e-10

# Gain printed for the LQR-PI design of the 2 x 2000 MW system.
PAPER_LQR_PI_GAIN = np.array([
    [0.4896, 1.0873, 2.3995, 0.7172, 0.026, 0.0026, 0.1621, 0.053, 0.823, 1, 0],
    [0.026, 0.0026, 0.1621, 0.053, 0.4896, 1.0873, 2.3995, 0.7172, 0.823, 0, 1],
])


def paper_lqr_pi_gain():
    return FeedbackGain(PAPER_LQR_PI_GAIN.copy(), "full")


@dataclass(frozen=True, eq=False)
class CareSolution:
    p: np.ndarray
    residual: float
    iterations: int
    newton_steps: int = 0


def _check(a, b, q, r):
    a, b, q, r = (as_matrix(x, n) for x, n in ((a, "a"), (b, "b"), (q, "q"), (r, "r")))
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"a must be square, got {a.shape}")
    if b.shape[0] != n:
        raise DimensionError(f"b has {b.shape[0]} rows, a is {n}x{n}")
    m = b.shape[1]
    if q.shape != (n, n):
        raise DimensionError(f"q must be {n}x{n}, got {q.shape}")
    if r.shape != (m, m):
        raise DimensionError(f"r must be {m}x{m}, got {r.shape}")
    return a, b, q, r


def _validate_weights(q, r):
    if np.max(np.abs(q - q.T)) > 1e-12 * max(1.0, np.max(np.abs(q))):
        raise ValidationError("q must be symmetric")
    if np.min(np.linalg.eigvalsh(q)) < -1e-12 * max(1.0, np.max(np.abs(q))):
        raise ValidationError("q must be positive semidefinite")
    if np.max(np.abs(r - r.T)) > 1e-12 * max(1.0, np.max(np.abs(r))):
        raise ValidationError("r must be symmetric")
    try:
        np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        raise ValidationError("r must be positive definite") from None


def care_residual(a, b, q, r, p):
    a, b, q, r = _check(a, b, q, r)
    p = np.asarray(p, dtype=float)
    rinv_bt_p = solve_linear(r, b.T @ p)
    return frobenius_norm(a.T @ p + p @ a - p @ b @ rinv_bt_p + q)


def solve_lyapunov(ac, c):
    """Solve ``ac' X + X ac + c = 0`` via the Kronecker-product linear system."""
    n = ac.shape[0]
    eye = np.eye(n)
    lhs = np.kron(eye, ac.T) + np.kron(ac.T, eye)
    x = solve_linear(lhs, -np.asarray(c, dtype=float).reshape(-1, order="F"))
    x = x.reshape(n, n, order="F")
    return 0.5 * (x + x.T)


def is_psd(p, shift=PSD_SHIFT):
    try:
        np.linalg.cholesky(p + shift * np.eye(p.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def _newton_refine(a, b, q, r, p, max_steps):
    best, best_res = p, care_residual(a, b, q, r, p)
    k = solve_linear(r, b.T @ p)
    steps = 0
    for steps in range(1, max_steps + 1):
        ac = a - b @ k
        if np.max(np.linalg.eigvals(ac).real) >= 0:
            break
        pn = solve_lyapunov(ac, q + k.T @ r @ k)
        res = care_residual(a, b, q, r, pn)
        delta = frobenius_norm(pn - p)
        p = pn
        k = solve_linear(r, b.T @ p)
        if res < best_res:
            best, best_res = p, res
        if delta <= 1e-14 * (1.0 + frobenius_norm(p)):
            break
    return best, best_res, steps


def solve_care(a, b, q, r, *, dtau=RDE_STEP, tol=RDE_TOL, max_steps=MAX_RDE_STEPS,
               refine=True, max_newton=MAX_NEWTON_STEPS, cancel=None):
    """Return the stabilizing CARE solution.

    ``cancel`` is an optional zero-argument callable polled between chunks
    of RDE steps; a truthy return aborts with :class:`SolverError`.
    """
    a, b, q, r = _check(a, b, q, r)
    _validate_weights(q, r)
    s = b @ solve_linear(r, b.T)
    s = 0.5 * (s + s.T)
    p = np.zeros_like(a)
    done = 0
    nrm = np.inf
    while done < max_steps:
        if cancel is not None and cancel():
            raise SolverError(f"CARE solve cancelled after {done} steps", residual=nrm)
        chunk = min(CHUNK, max_steps - done)
        steps, nrm = kernels.riccati_flow(a, s, q, p, dtau, chunk, tol)
        done += steps
        if not np.isfinite(nrm) or not np.all(np.isfinite(p)):
            raise SolverError(f"Riccati flow blew up after {done} steps (dtau={dtau})",
                              residual=nrm)
        if steps < chunk:
            break
    else:
        raise SolverError(f"Riccati flow did not converge in {max_steps} steps; "
                          f"last residual {nrm:.3e}", residual=nrm)
    newton = 0
    if refine:
        p, residual, newton = _newton_refine(a, b, q, r, p, max_newton)
    else:
        residual = care_residual(a, b, q, r, p)
    p = 0.5 * (p + p.T)
    if residual > 1e-8 * (1.0 + frobenius_norm(p)):
        raise SolverError(f"CARE residual {residual:.3e} above tolerance", residual=residual)
    if not is_psd(p):
        raise SolverError("Riccati solution is not positive semidefinite", residual=residual)
    return CareSolution(p=p, residual=residual, iterations=done, newton_steps=newton)


def lqr_gain(sol, b, r):
    """``K = R^-1 B' P`` as a full-mask feedback gain."""
    b = as_matrix(b, "b")
    r = as_matrix(r, "r")
    if b.shape[0] != sol.p.shape[0] or r.shape != (b.shape[1], b.shape[1]):
        raise DimensionError(f"b {b.shape} / r {r.shape} do not match P {sol.p.shape}")
    return FeedbackGain(solve_linear(r, b.T @ sol.p), "full")


def lqr(model, q=None, r=None, **kwargs):
    """Convenience: CARE + gain for a two-area model. Defaults Q = I, R = I."""
    n, m = model.b.shape
    q = np.eye(n) if q is None else np.asarray(q, dtype=float)
    r = np.eye(m) if r is None else np.asarray(r, dtype=float)
    sol = solve_care(model.a, model.b, q, r, **kwargs)
    return sol, lqr_gain(sol, model.b, r)
