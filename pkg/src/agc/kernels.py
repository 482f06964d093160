"""Hot loops: closed-loop propagation and Riccati-flow integration.

Each kernel exists twice: an explicit-loop version compiled by numba and a
vectorized numpy version. The public functions pick one according to
``agc._jit.USE_NUMBA``; both are importable directly for comparison.

The propagation kernels step ``x[k+1] = M x[k] + g`` from ``x[0] = 0``,
where ``M``/``g`` come from :func:`agc.numkern.rk4_propagator`.
"""
import numpy as np

from . import _jit
from ._jit import njit


@njit(cache=True, nogil=True)
def batch_ise_numba(m, g, dt, nsteps, limit, c0, c1):
    npart, n = g.shape
    ise = np.zeros(npart)
    tdiv = np.full(npart, -1.0)
    x = np.empty(n)
    y = np.empty(n)
    for p in range(npart):
        for i in range(n):
            x[i] = 0.0
        acc = 0.0
        prev = 0.0
        for k in range(nsteps):
            big = 0.0
            for i in range(n):
                s = g[p, i]
                for j in range(n):
                    s += m[p, i, j] * x[j]
                y[i] = s
                if abs(s) > big or s != s:
                    big = abs(s) if s == s else np.inf
            if not big <= limit:
                tdiv[p] = (k + 1) * dt
                break
            cur = 0.5 * (y[c0] * y[c0] + y[c1] * y[c1])
            acc += 0.5 * dt * (prev + cur)
            prev = cur
            for i in range(n):
                x[i] = y[i]
        ise[p] = acc
    return ise, tdiv


def batch_ise_numpy(m, g, dt, nsteps, limit, c0, c1):
    npart, n = g.shape
    x = np.zeros((npart, n))
    ise = np.zeros(npart)
    prev = np.zeros(npart)
    tdiv = np.full(npart, -1.0)
    live = np.ones(npart, dtype=bool)
    for k in range(nsteps):
        y = np.einsum("pij,pj->pi", m, x) + g
        with np.errstate(invalid="ignore"):
            bad = live & ~(np.max(np.abs(y), axis=1) <= limit)
        if bad.any():
            tdiv[bad] = (k + 1) * dt
            live &= ~bad
            if not live.any():
                break
        y[~live] = 0.0
        cur = 0.5 * (y[:, c0] ** 2 + y[:, c1] ** 2)
        ise += np.where(live, 0.5 * dt * (prev + cur), 0.0)
        prev = cur
        x = y
    return ise, tdiv


@njit(cache=True, nogil=True)
def trajectory_numba(m, g, nsteps, limit, out):
    """Fill ``out[0..nsteps]`` with states; return the diverging step or -1."""
    n = g.shape[0]
    for i in range(n):
        out[0, i] = 0.0
    for k in range(nsteps):
        big = 0.0
        for i in range(n):
            s = g[i]
            for j in range(n):
                s += m[i, j] * out[k, j]
            out[k + 1, i] = s
            if abs(s) > big or s != s:
                big = abs(s) if s == s else np.inf
        if not big <= limit:
            return k + 1
    return -1


def trajectory_numpy(m, g, nsteps, limit, out):
    out[0] = 0.0
    x = out[0]
    for k in range(nsteps):
        x = m @ x + g
        out[k + 1] = x
        if not np.max(np.abs(x)) <= limit:
            return k + 1
    return -1


@njit(cache=True, nogil=True)
def _riccati_rhs(a, s, q, p):
    ap = a.T @ p
    return ap + ap.T - p @ s @ p + q


@njit(cache=True, nogil=True)
def riccati_flow_numba(a, s, q, p, dtau, max_steps, tol):
    """Integrate dP/dtau = A'P + PA - PSP + Q in place with RK4.

    Stops before stepping once ||dP/dtau||_F <= tol. Returns the number of
    steps taken and the last derivative norm.
    """
    h2 = 0.5 * dtau
    nrm = np.inf
    for step in range(max_steps):
        k1 = _riccati_rhs(a, s, q, p)
        nrm = np.sqrt(np.sum(k1 * k1))
        if nrm <= tol or nrm != nrm:
            return step, nrm
        k2 = _riccati_rhs(a, s, q, p + h2 * k1)
        k3 = _riccati_rhs(a, s, q, p + h2 * k2)
        k4 = _riccati_rhs(a, s, q, p + dtau * k3)
        p += (dtau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        p[:, :] = 0.5 * (p + p.T)
    return max_steps, nrm


def riccati_flow_numpy(a, s, q, p, dtau, max_steps, tol):
    def rhs(pp):
        ap = a.T @ pp
        return ap + ap.T - pp @ s @ pp + q

    h2 = 0.5 * dtau
    nrm = np.inf
    for step in range(max_steps):
        k1 = rhs(p)
        nrm = float(np.sqrt(np.sum(k1 * k1)))
        if nrm <= tol or nrm != nrm:
            return step, nrm
        k2 = rhs(p + h2 * k1)
        k3 = rhs(p + h2 * k2)
        k4 = rhs(p + dtau * k3)
        p += (dtau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        p[:, :] = 0.5 * (p + p.T)
    return max_steps, nrm


def batch_ise(m, g, dt, nsteps, limit, c0, c1):
    m = np.ascontiguousarray(m, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    fn = batch_ise_numba if _jit.USE_NUMBA else batch_ise_numpy
    return fn(m, g, float(dt), int(nsteps), float(limit), int(c0), int(c1))


def trajectory(m, g, nsteps, limit):
    m = np.ascontiguousarray(m, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    out = np.zeros((nsteps + 1, g.shape[0]))
    fn = trajectory_numba if _jit.USE_NUMBA else trajectory_numpy
    kdiv = int(fn(m, g, int(nsteps), float(limit), out))
    return out, kdiv


def riccati_flow(a, s, q, p, dtau, max_steps, tol):
    fn = riccati_flow_numba if _jit.USE_NUMBA else riccati_flow_numpy
    steps, nrm = fn(np.ascontiguousarray(a), np.ascontiguousarray(s),
                    np.ascontiguousarray(q), p, float(dtau), int(max_steps), float(tol))
    return int(steps), float(nrm)
