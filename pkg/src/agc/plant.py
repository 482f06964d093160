"""Two-area reheat-thermal plant in state-space form.

State order (11 states)::

    0 df1    area-1 frequency deviation, Hz
    1 dpt1   area-1 turbine output, p.u.
    2 dpr1   area-1 reheat output, p.u.
    3 dpg1   area-1 governor output, p.u.
    4 df2 .. 7 dpg2   same for area 2
    8 dptie  tie-line power flow 1 -> 2, p.u.
    9 iace1  integral of area-1 ACE, p.u. s
    10 iace2 integral of area-2 ACE, p.u. s

Inputs ``u = (u1, u2)`` drive the governors; disturbances ``d = (dPd1, dPd2)``
are load steps in p.u. on the 2000 MW base.
"""
from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError

STATE_LABELS = ("df1", "dpt1", "dpr1", "dpg1", "df2", "dpt2", "dpr2", "dpg2",
                "dptie", "iace1", "iace2")
N_STATES = 11
N_INPUTS = 2
DF1, DF2, DPTIE = 0, 4, 8

# signed permutation exchanging the two areas
_SWAP_ORDER = np.array([4, 5, 6, 7, 0, 1, 2, 3, 8, 10, 9])
_SWAP_SIGN = np.ones(N_STATES)
_SWAP_SIGN[DPTIE] = -1.0
SWAP_STATES = np.zeros((N_STATES, N_STATES))
SWAP_STATES[np.arange(N_STATES), _SWAP_ORDER] = _SWAP_SIGN
SWAP_PAIR = np.array([[0.0, 1.0], [1.0, 0.0]])


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PlantParams:
    """Per-area block-diagram constants (both areas identical).

    Defaults are the values implied by the published state matrix.
    """

    tp: float = 20.0
    kp: float = 120.0
    tt: float = 0.3
    tr: float = 10.0
    kr: float = 0.5
    tg: float = 0.08
    droop_r: float = 3.005
    bias_b: float = 2.0
    tie_coeff: float = 3.42

    def __post_init__(self):
        for name in ("tp", "tt", "tr", "tg"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive time constant, got {v!r}")
        if not (0 < self.kr <= 1):
            raise ValidationError(f"kr must lie in (0, 1], got {self.kr!r}")
        if not (np.isfinite(self.droop_r) and self.droop_r > 0):
            raise ValidationError(f"droop_r must be positive, got {self.droop_r!r}")
        if not (np.isfinite(self.tie_coeff) and self.tie_coeff >= 0):
            # zero is accepted so the areas can be studied decoupled
            raise ValidationError(f"tie_coeff must be non-negative, got {self.tie_coeff!r}")
        for name in ("kp", "bias_b"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True, eq=False)
class TwoAreaModel:
    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    c: np.ndarray
    state_labels: tuple = STATE_LABELS

    def __post_init__(self):
        for name, shape in (("a", (N_STATES, N_STATES)), ("b", (N_STATES, N_INPUTS)),
                            ("f", (N_STATES, N_INPUTS)), ("c", (2, N_STATES))):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise ValidationError(f"model.{name} must be {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"model.{name} has non-finite entries")
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, TwoAreaModel):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "abfc")

    __hash__ = None


def paper_model():
    """The published (rounded) matrices for the 2 x 2000 MW system."""
    a = np.zeros((N_STATES, N_STATES))
    a[0, [0, 1, 8]] = [-0.05, 6, -6]
    a[1, [1, 2]] = [-3.33, 3.33]
    a[2, [0, 2, 3]] = [-2.08, -0.1, -6.1]
    a[3, [0, 3]] = [-4.16, -12.5]
    a[4, [4, 5, 8]] = [-0.05, 6, 6]
    a[5, [5, 6]] = [-3.33, 3.33]
    a[6, [4, 6, 7]] = [-2.08, -0.1, -6.1]
    a[7, [4, 7]] = [-4.16, -12.5]
    a[8, [0, 4]] = [3.42, -3.42]
    a[9, [0, 8]] = [2, 1]
    a[10, [4, 8]] = [2, -1]
    b = np.zeros((N_STATES, N_INPUTS))
    b[[2, 3], 0] = [6.25, 12.5]
    b[[6, 7], 1] = [6.25, 12.5]
    f = np.zeros((N_STATES, N_INPUTS))
    f[DF1, 0] = -6.0
    f[DF2, 1] = -6.0
    return TwoAreaModel(a=a, b=b, f=f, c=_frequency_selector())


def _frequency_selector():
    c = np.zeros((2, N_STATES))
    c[0, DF1] = 1.0
    c[1, DF2] = 1.0
    return c


def from_params(p=None):
    """Build the model from block-diagram parameters (exact, unrounded)."""
    p = PlantParams() if p is None else p
    a = np.zeros((N_STATES, N_STATES))
    b = np.zeros((N_STATES, N_INPUTS))
    f = np.zeros((N_STATES, N_INPUTS))
    kp_tp = p.kp / p.tp
    for area, off in enumerate((0, 4)):
        df, pt, pr, pg = off, off + 1, off + 2, off + 3
        tie_sign = -1.0 if area == 0 else 1.0
        a[df, df] = -1.0 / p.tp
        a[df, pt] = kp_tp
        a[df, DPTIE] = tie_sign * kp_tp
        f[df, area] = -kp_tp
        a[pt, pt] = -1.0 / p.tt
        a[pt, pr] = 1.0 / p.tt
        a[pr, df] = -p.kr / (p.droop_r * p.tg)
        a[pr, pr] = -1.0 / p.tr
        a[pr, pg] = 1.0 / p.tr - p.kr / p.tg
        b[pr, area] = p.kr / p.tg
        a[pg, df] = -1.0 / (p.droop_r * p.tg)
        a[pg, pg] = -1.0 / p.tg
        b[pg, area] = 1.0 / p.tg
        a[9 + area, df] = p.bias_b
        a[9 + area, DPTIE] = -tie_sign
    a[DPTIE, DF1] = p.tie_coeff
    a[DPTIE, DF2] = -p.tie_coeff
    return TwoAreaModel(a=a, b=b, f=f, c=_frequency_selector())


def area_swap(m):
    """Relabel area 1 as area 2 and vice versa (tie flow changes sign)."""
    t = SWAP_STATES
    return TwoAreaModel(a=t @ m.a @ t.T, b=t @ m.b @ SWAP_PAIR, f=t @ m.f @ SWAP_PAIR,
                        c=SWAP_PAIR @ m.c @ t.T, state_labels=m.state_labels)
