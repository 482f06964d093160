"""Run configuration (TOML).

Every key is optional; an empty file reproduces the published setup::

    seed = 0
    settling_band = 0.0005      # Hz
    output_dir = "agc-out"

    [model]
    source = "paper"            # or "params", then any PlantParams field:
    # tp = 20.0  kp = 120.0  tt = 0.3  tr = 10.0  kr = 0.5
    # tg = 0.08  droop_r = 3.005  bias_b = 2.0  tie_coeff = 3.42

    [pso]                       # SwarmConfig defaults for every PSO controller
    population = 100
    iterations = 100
    c1 = 1.5
    c2 = 1.5
    range_lo = -3.0
    range_hi = 3.0
    vmax = 3.0
    penalty = 1e6
    inertia = 1.0
    horizon = 60.0
    dt = 0.005
    magnitude = 0.01
    objective = "symmetric"     # or "area1"

    [[controllers]]
    name = "integral"
    kind = "integral"           # PSO over (Ki1, Ki2); box defaults to [0, 3]

    [[controllers]]
    name = "lqr_pi"
    kind = "lqr_pi"
    q_diag = [1.0, ...]         # 11 entries, default all ones
    r_diag = [1.0, 1.0]

    [[controllers]]
    name = "pso_k"
    kind = "pso_k"
    # [controllers.pso] overrides the global [pso] table for this entry

    [[controllers]]
    name = "eq8"
    kind = "fixed"
    preset = "paper_lqr_pi"     # or gain_file = "k.csv"

    [[scenarios]]
    disturbance_area = 1
    disturbance_magnitude = 0.01
    horizon = 120.0
    dt = 0.005
    # name = "area1"
"""
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ValidationError
from .plant import N_INPUTS, N_STATES, PlantParams, from_params, paper_model
from .psoopt import SwarmConfig
from .simkit import DEFAULT_BAND, Scenario

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("integral", "lqr_pi", "pso_k", "fixed")
PRESETS = ("paper_lqr_pi",)
INTEGRAL_RANGE = (0.0, 3.0)

_TOP_KEYS = {"seed", "settling_band", "output_dir", "model", "pso", "controllers", "scenarios"}
_SWARM_KEYS = {f.name for f in fields(SwarmConfig)} - {"seed"}
_SCENARIO_KEYS = {f.name for f in fields(Scenario)} | {"name"}
_CONTROLLER_KEYS = {"name", "kind", "q_diag", "r_diag", "pso", "preset", "gain_file", "seed"}


@dataclass(frozen=True)
class ControllerSpec:
    name: str
    kind: str
    swarm: Optional[SwarmConfig] = None
    q_diag: tuple = (1.0,) * N_STATES
    r_diag: tuple = (1.0,) * N_INPUTS
    preset: Optional[str] = None
    gain_file: Optional[str] = None


@dataclass(frozen=True)
class NamedScenario:
    name: str
    scenario: Scenario


@dataclass(frozen=True)
class RunConfig:
    model_source: str = "paper"
    params: Optional[PlantParams] = None
    controllers: tuple = ()
    scenarios: tuple = ()
    settling_band: float = DEFAULT_BAND
    output_dir: str = "agc-out"
    seed: int = 0

    def model(self):
        return paper_model() if self.model_source == "paper" else from_params(self.params)

    def canonical(self):
        """JSON-able description of the resolved config (hashed into manifests)."""
        d = asdict(self)
        return json.loads(json.dumps(d, sort_keys=True, default=str))

    def digest(self):
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _unknown(table, allowed, where):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key {where}.{extra[0]}" if where else f"unknown key {extra[0]}")


def _table(value, where):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a table")
    return value


def _swarm(base, overrides, where):
    _unknown(overrides, _SWARM_KEYS | {"seed"}, where)
    try:
        return replace(base, **overrides)
    except ValidationError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _diag(value, n, where):
    try:
        arr = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of numbers") from None
    if len(arr) != n:
        raise ConfigError(f"{where} must have {n} entries, got {len(arr)}")
    return arr


def default_controllers(swarm):
    lo, hi = INTEGRAL_RANGE
    return (
        ControllerSpec("integral", "integral", swarm=replace(swarm, range_lo=lo, range_hi=hi)),
        ControllerSpec("lqr_pi", "lqr_pi"),
        ControllerSpec("pso_k", "pso_k", swarm=swarm),
    )


def config_from_dict(d, base_dir="."):
    """Validate a parsed TOML document and fill defaults."""
    d = dict(d)
    _unknown(d, _TOP_KEYS, "")
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    band = d.get("settling_band", DEFAULT_BAND)
    if not isinstance(band, (int, float)) or not band > 0:
        raise ConfigError("settling_band must be a positive number")

    model = _table(d.get("model", {}), "model")
    source = model.get("source", "paper")
    params = None
    if source == "paper":
        _unknown(model, {"source"}, "model")
    elif source == "params":
        _unknown(model, {"source"} | set(PlantParams.field_names()), "model")
        try:
            params = PlantParams(**{k: float(v) for k, v in model.items() if k != "source"})
        except ValidationError as exc:
            raise ConfigError(f"model: {exc}") from None
    else:
        raise ConfigError(f"model.source must be 'paper' or 'params', got {source!r}")

    swarm = _swarm(SwarmConfig(seed=seed), _table(d.get("pso", {}), "pso"), "pso")

    raw_ctrls = d.get("controllers")
    if raw_ctrls is None:
        controllers = default_controllers(swarm)
    else:
        if not isinstance(raw_ctrls, list) or not raw_ctrls:
            raise ConfigError("controllers must be a non-empty array of tables")
        controllers = tuple(_controller(_table(c, f"controllers[{i}]"), swarm, i, base_dir)
                            for i, c in enumerate(raw_ctrls))
    names = [c.name for c in controllers]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ConfigError(f"controller names must be unique; {dup[0]!r} repeats")

    raw_scen = d.get("scenarios")
    if raw_scen is None:
        raw_scen = [{"disturbance_area": 1}, {"disturbance_area": 2}]
    if not isinstance(raw_scen, list) or not raw_scen:
        raise ConfigError("scenarios must be a non-empty array of tables")
    scenarios = []
    for i, s in enumerate(raw_scen):
        s = dict(_table(s, f"scenarios[{i}]"))
        _unknown(s, _SCENARIO_KEYS, "scenario")
        name = s.pop("name", None)
        try:
            sc = Scenario(**s)
        except ValidationError as exc:
            key = str(exc).split()[0]
            raise ConfigError(f"scenario.{key}: {exc} (scenario {i + 1})") from None
        except TypeError as exc:
            raise ConfigError(f"scenario: {exc} (scenario {i + 1})") from None
        if name is None:
            name = f"area{sc.disturbance_area}"
            taken = {n.name for n in scenarios}
            k = 2
            while name in taken:
                name = f"area{sc.disturbance_area}_{k}"
                k += 1
        scenarios.append(NamedScenario(str(name), sc))
    snames = [s.name for s in scenarios]
    if len(set(snames)) != len(snames):
        raise ConfigError("scenario names must be unique")

    return RunConfig(model_source=source, params=params, controllers=controllers,
                     scenarios=tuple(scenarios), settling_band=float(band),
                     output_dir=str(d.get("output_dir", "agc-out")), seed=seed)


def _controller(c, swarm, i, base_dir):
    where = f"controllers[{i}]"
    _unknown(c, _CONTROLLER_KEYS, where)
    kind = c.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"{where}.kind must be one of {', '.join(KINDS)}; got {kind!r}")
    name = str(c.get("name", kind))
    overrides = dict(_table(c.get("pso", {}), f"{where}.pso"))
    if "seed" in c:
        overrides["seed"] = c["seed"]
    if kind == "integral":
        lo, hi = INTEGRAL_RANGE
        base = replace(swarm, range_lo=lo, range_hi=hi)
        return ControllerSpec(name, kind, swarm=_swarm(base, overrides, f"{where}.pso"))
    if kind == "pso_k":
        return ControllerSpec(name, kind, swarm=_swarm(swarm, overrides, f"{where}.pso"))
    if kind == "lqr_pi":
        q = _diag(c.get("q_diag", [1.0] * N_STATES), N_STATES, f"{where}.q_diag")
        r = _diag(c.get("r_diag", [1.0] * N_INPUTS), N_INPUTS, f"{where}.r_diag")
        if min(q) < 0 or min(r) <= 0:
            raise ConfigError(f"{where}: q_diag must be >= 0 and r_diag > 0")
        return ControllerSpec(name, kind, q_diag=q, r_diag=r)
    preset, gain_file = c.get("preset"), c.get("gain_file")
    if (preset is None) == (gain_file is None):
        raise ConfigError(f"{where}: fixed controllers need exactly one of preset / gain_file")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"{where}.preset must be one of {', '.join(PRESETS)}")
    if gain_file is not None:
        gain_file = str(Path(base_dir) / gain_file)
    return ControllerSpec(name, kind, preset=preset, gain_file=gain_file)


def load_config(path=None, seed=None):
    """Parse and validate a TOML run file; ``None`` gives the published setup.

    ``seed`` replaces the file's top-level seed (per-controller seeds win).
    """
    if path is None:
        return config_from_dict({} if seed is None else {"seed": seed})
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        line = getattr(exc, "lineno", None)
        if "line" not in msg:
            msg += f" (line {line if line is not None else text.count(chr(10)) + 1})"
        raise ConfigError(f"{path}: {msg}") from None
    if seed is not None:
        doc["seed"] = seed
    return config_from_dict(doc, base_dir=path.parent)


def q_r_matrices(spec):
    return np.diag(spec.q_diag), np.diag(spec.r_diag)
