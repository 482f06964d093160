"""Closed-loop step-response simulation and response metrics."""
import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import DimensionError, ValidationError
from .numkern import rk4_propagator
from .plant import DF1, DF2, N_INPUTS, N_STATES, STATE_LABELS, SWAP_PAIR, SWAP_STATES

DIVERGENCE_LIMIT = 1e6
DEFAULT_BAND = 0.0005
MASKS = ("full", "integral_only")
INTEGRAL_ENTRIES = ((0, 9), (1, 10))

CSV_HEADER = ("t",) + STATE_LABELS + ("u1", "u2")


@dataclass(frozen=True)
class Scenario:
    disturbance_area: int = 1
    disturbance_magnitude: float = 0.01
    horizon: float = 120.0
    dt: float = 0.005

    def __post_init__(self):
        if self.disturbance_area not in (1, 2):
            raise ValidationError(f"disturbance_area must be 1 or 2, got {self.disturbance_area!r}")
        if not np.isfinite(self.disturbance_magnitude):
            raise ValidationError("disturbance_magnitude must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.horizon) and self.horizon >= 10 * self.dt):
            raise ValidationError(f"horizon must be at least 10*dt, got {self.horizon!r}")

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    def disturbance(self):
        d = np.zeros(N_INPUTS)
        d[self.disturbance_area - 1] = self.disturbance_magnitude
        return d


@dataclass(frozen=True, eq=False)
class FeedbackGain:
    """State-feedback gain ``u = -k x``.

    With ``mask="integral_only"`` only the ACE-integral entries (1,10) and
    (2,11) may be nonzero.
    """

    k: np.ndarray
    mask: str = "full"

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        if k.ndim != 2:
            raise DimensionError(f"gain must be 2-D, got shape {k.shape}")
        if self.mask not in MASKS:
            raise ValidationError(f"unknown gain mask {self.mask!r}")
        if self.mask == "integral_only":
            if k.shape != (N_INPUTS, N_STATES):
                raise DimensionError("integral_only gains must be 2x11")
            allowed = np.zeros_like(k, dtype=bool)
            for r, c in INTEGRAL_ENTRIES:
                allowed[r, c] = True
            if np.any(k[~allowed] != 0):
                raise ValidationError("integral_only gain has nonzero proportional entries")
        if not np.all(np.isfinite(k)):
            raise ValidationError("gain has non-finite entries")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)

    @classmethod
    def zero(cls, mask="full"):
        return cls(np.zeros((N_INPUTS, N_STATES)), mask)

    @classmethod
    def integral(cls, ki1, ki2):
        k = np.zeros((N_INPUTS, N_STATES))
        k[0, 9] = ki1
        k[1, 10] = ki2
        return cls(k, "integral_only")

    @classmethod
    def from_vector(cls, vec, mask="full"):
        vec = np.asarray(vec, dtype=float)
        if mask == "integral_only":
            if vec.shape != (2,):
                raise DimensionError(f"integral_only vector must have 2 entries, got {vec.shape}")
            return cls.integral(vec[0], vec[1])
        if vec.shape != (N_INPUTS * N_STATES,):
            raise DimensionError(f"full gain vector must have 22 entries, got {vec.shape}")
        return cls(vec.reshape(N_INPUTS, N_STATES), mask)

    def to_vector(self):
        if self.mask == "integral_only":
            return np.array([self.k[r, c] for r, c in INTEGRAL_ENTRIES])
        return self.k.ravel().copy()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in self.k:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, mask=None):
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        k = np.array(rows)
        if k.shape != (N_INPUTS, N_STATES):
            raise DimensionError(f"gain file {path} must hold 2 rows x 11 columns, got {k.shape}")
        if mask is None:
            try:
                return cls(k, "integral_only")
            except ValidationError:
                mask = "full"
        return cls(k, mask)

    def __eq__(self, other):
        if not isinstance(other, FeedbackGain):
            return NotImplemented
        return self.mask == other.mask and np.array_equal(self.k, other.k)

    __hash__ = None


def swap_gain(g):
    """Gain expressed in area-swapped coordinates (see ``plant.area_swap``)."""
    return FeedbackGain(SWAP_PAIR @ g.k @ SWAP_STATES.T, g.mask)


def closed_loop_matrix(m, g):
    k = g.k if isinstance(g, FeedbackGain) else np.asarray(g, dtype=float)
    if k.shape != (m.b.shape[1], m.a.shape[0]):
        raise DimensionError(f"gain shape {k.shape} does not match model "
                             f"({m.b.shape[1]}x{m.a.shape[0]})")
    return m.a - m.b @ k


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    scenario: Optional[Scenario] = None
    diverged: bool = False
    divergence_time: Optional[float] = None
    labels: tuple = field(default=STATE_LABELS)

    def __len__(self):
        return len(self.times)

    def channel(self, ch):
        return self.states[:, _channel_index(ch)]

    @property
    def df1(self):
        return self.states[:, DF1]

    @property
    def df2(self):
        return self.states[:, DF2]

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def to_csv(self, path):
        data = np.column_stack([self.times, self.states, self.controls])
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def _channel_index(ch):
    if ch in (1, "df1", "delf1"):
        return DF1
    if ch in (2, "df2", "delf2"):
        return DF2
    raise ValidationError(f"unknown frequency channel {ch!r}; use 1/'df1' or 2/'df2'")


def simulate(m, g, s):
    """Step response from the zero state; load step applied at t = 0."""
    acl = closed_loop_matrix(m, g)
    mm, nn = rk4_propagator(acl, s.dt)
    forcing = nn @ (m.f @ s.disturbance())
    states, kdiv = kernels.trajectory(mm, forcing, s.steps, DIVERGENCE_LIMIT)
    times = np.arange(s.steps + 1) * s.dt
    diverged = kdiv >= 0
    if diverged:
        states = states[:kdiv + 1]
        times = times[:kdiv + 1]
    controls = -states @ g.k.T
    return Trajectory(times=times, states=states, controls=controls, scenario=s,
                      diverged=diverged, divergence_time=float(times[-1]) if diverged else None)


def batch_ise(m, gains, s):
    """ISE of many gains under one scenario without storing trajectories.

    ``gains`` is an array of shape (P, 2, 11). Returns ``(ise, tdiv)`` where
    ``tdiv`` is the divergence time or -1.
    """
    gains = np.asarray(gains, dtype=float)
    acl = m.a[None] - m.b[None] @ gains
    mm, nn = rk4_propagator(acl, s.dt)
    forcing = nn @ (m.f @ s.disturbance())
    return kernels.batch_ise(mm, forcing, s.dt, s.steps, DIVERGENCE_LIMIT, DF1, DF2)


def _trapezoid(y, dt):
    if len(y) < 2:
        return 0.0
    return float(dt * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def _require_settled(traj):
    if traj.diverged:
        raise ValidationError(
            f"trajectory diverged at t={traj.divergence_time}; use the penalty path instead")


def ise(traj):
    """Half the integral of df1^2 + df2^2 (trapezoid rule)."""
    _require_settled(traj)
    e = 0.5 * (traj.df1 ** 2 + traj.df2 ** 2)
    return _trapezoid(e, traj.dt)


def quadratic_cost(traj, q, r):
    """Half the integral of x'Qx + u'Ru (trapezoid rule)."""
    _require_settled(traj)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    n, mu = traj.states.shape[1], traj.controls.shape[1]
    if q.shape != (n, n) or r.shape != (mu, mu):
        raise DimensionError(f"weights must be {n}x{n} and {mu}x{mu}, got {q.shape} and {r.shape}")
    for name, w in (("q", q), ("r", r)):
        if np.max(np.abs(w - w.T)) > 1e-12:
            raise ValidationError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(q)) < -1e-12:
        raise ValidationError("q must be positive semidefinite")
    if np.min(np.linalg.eigvalsh(r)) <= 0:
        raise ValidationError("r must be positive definite")
    x, u = traj.states, traj.controls
    integrand = 0.5 * (np.einsum("ti,ij,tj->t", x, q, x) + np.einsum("ti,ij,tj->t", u, r, u))
    return _trapezoid(integrand, traj.dt)


@dataclass(frozen=True)
class ResponseMetrics:
    peak_undershoot: float
    peak_overshoot: float
    settling_time: Optional[float]  # None: never stays inside the band
    ise: float

    @property
    def settled(self):
        return self.settling_time is not None


def settling_time(times, y, band):
    outside = np.nonzero(np.abs(y) > band)[0]
    if len(outside) == 0:
        return float(times[0])
    last = outside[-1]
    if last + 1 >= len(times):
        return None
    return float(times[last + 1])


def metrics(traj, channel, band=DEFAULT_BAND):
    if not band > 0:
        raise ValidationError(f"settling band must be positive, got {band!r}")
    _require_settled(traj)
    y = traj.channel(channel)
    return ResponseMetrics(
        peak_undershoot=min(float(np.min(y)), 0.0),
        peak_overshoot=max(float(np.max(y)), 0.0),
        settling_time=settling_time(traj.times, y, band),
        ise=ise(traj),
    )
