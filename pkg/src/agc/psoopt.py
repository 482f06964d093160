"""Particle swarm search over feedback gains.

The swarm follows the canonical velocity rule without inertia damping
(``inertia`` defaults to 1.0), with per-coordinate uniform draws, a box
clamp on positions and a symmetric clamp on velocities.

Random numbers come from ``numpy.random.Generator(PCG64(seed))``. All draws
for an iteration are taken, in a fixed order, before any fitness is
evaluated, so results do not depend on how evaluations are spread across
workers.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, ValidationError
from .plant import N_INPUTS, N_STATES
from .simkit import FeedbackGain, Scenario, batch_ise


@dataclass(frozen=True)
class SwarmConfig:
    population: int = 100
    iterations: int = 100
    c1: float = 1.5
    c2: float = 1.5
    range_lo: float = -3.0
    range_hi: float = 3.0
    vmax: float = 3.0
    seed: int = 0
    penalty: float = 1e6
    inertia: float = 1.0
    # fitness scenario
    horizon: float = 60.0
    dt: float = 0.005
    magnitude: float = 0.01
    objective: str = "symmetric"  # or "area1"

    def __post_init__(self):
        # a one-particle swarm is allowed as a degenerate smoke case
        if self.population < 1:
            raise ValidationError("population must be >= 1")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if not self.range_lo < self.range_hi:
            raise ValidationError(f"range_lo ({self.range_lo}) must be below range_hi ({self.range_hi})")
        if not self.vmax > 0:
            raise ValidationError("vmax must be positive")
        if self.c1 < 0 or self.c2 < 0:
            raise ValidationError("c1 and c2 must be non-negative")
        if self.objective not in ("symmetric", "area1"):
            raise ValidationError(f"objective must be 'symmetric' or 'area1', got {self.objective!r}")

    @property
    def areas(self):
        return (1, 2) if self.objective == "symmetric" else (1,)

    def scenarios(self):
        return [Scenario(a, self.magnitude, self.horizon, self.dt) for a in self.areas]


@dataclass
class Swarm:
    """Swarm state; row ``i`` of each array belongs to particle ``i``."""

    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_fitness: np.ndarray

    @property
    def gbest_index(self):
        # first minimum wins ties, keeping the reduction order-independent
        return int(np.argmin(self.pbest_fitness))


@dataclass(frozen=True, eq=False)
class PsoResult:
    best_position: np.ndarray
    best_fitness: float
    history: np.ndarray
    evaluations: int
    best_gain: FeedbackGain = None
    mask: str = "full"
    config: SwarmConfig = field(default_factory=SwarmConfig)


def update_velocity(velocity, position, pbest, gbest, cfg, phi1, phi2):
    """Velocity rule, then clamp to ``[-vmax, vmax]``. Works row-wise on arrays."""
    velocity = np.asarray(velocity, dtype=float)
    shapes = {np.shape(position), np.shape(pbest), np.shape(phi1), np.shape(phi2), velocity.shape}
    if len(shapes) != 1 or np.shape(gbest) != velocity.shape[-1:]:
        raise DimensionError(f"velocity update operands disagree: {sorted(shapes)} / gbest {np.shape(gbest)}")
    v = (cfg.inertia * velocity
         + cfg.c1 * phi1 * (pbest - position)
         + cfg.c2 * phi2 * (gbest - position))
    return np.clip(v, -cfg.vmax, cfg.vmax)


def update_position(position, velocity, cfg):
    return np.clip(np.asarray(position, dtype=float) + velocity, cfg.range_lo, cfg.range_hi)


def gains_from_positions(positions, mask):
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    k = np.zeros((positions.shape[0], N_INPUTS, N_STATES))
    if mask == "integral_only":
        if positions.shape[1] != 2:
            raise DimensionError("integral_only positions must have 2 coordinates")
        k[:, 0, 9] = positions[:, 0]
        k[:, 1, 10] = positions[:, 1]
    elif mask == "full":
        if positions.shape[1] != N_INPUTS * N_STATES:
            raise DimensionError("full positions must have 22 coordinates")
        k[:] = positions.reshape(-1, N_INPUTS, N_STATES)
    else:
        raise ValidationError(f"unknown mask {mask!r}")
    return k


def mask_dimension(mask):
    return 2 if mask == "integral_only" else N_INPUTS * N_STATES


def fitness_batch(positions, mask, model, cfg=SwarmConfig(), workers=1):
    """Summed ISE over the configured load steps, one value per row.

    A candidate that diverges in any run scores ``penalty + (horizon - t)``
    with ``t`` the earliest divergence time.
    """
    gains = gains_from_positions(positions, mask)
    scenarios = cfg.scenarios()

    def evaluate(chunk):
        total = np.zeros(len(chunk))
        first_div = np.full(len(chunk), np.inf)
        for s in scenarios:
            val, tdiv = batch_ise(model, chunk, s)
            total += val
            hit = tdiv >= 0
            first_div[hit] = np.minimum(first_div[hit], tdiv[hit])
        diverged = np.isfinite(first_div)
        total[diverged] = cfg.penalty + (cfg.horizon - first_div[diverged])
        return total

    if workers <= 1 or len(gains) < 2:
        return evaluate(gains)
    chunks = np.array_split(gains, min(workers, len(gains)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(evaluate, chunks)))


def fitness(position, mask, model, cfg=SwarmConfig()):
    return float(fitness_batch(np.asarray(position, dtype=float)[None], mask, model, cfg)[0])


def init_swarm(cfg, dim, rng):
    """Particle 0 sits at the origin (clamped into the box) at rest; the rest
    are uniform in the box with small random velocities."""
    pop = cfg.population
    positions = np.empty((pop, dim))
    velocities = np.zeros((pop, dim))
    positions[0] = np.clip(0.0, cfg.range_lo, cfg.range_hi)
    if pop > 1:
        positions[1:] = rng.uniform(cfg.range_lo, cfg.range_hi, size=(pop - 1, dim))
        velocities[1:] = rng.uniform(-cfg.vmax / 10, cfg.vmax / 10, size=(pop - 1, dim))
    return positions, velocities


def minimize(objective, dim, cfg=SwarmConfig(), on_iteration=None):
    """Minimize a batch objective ``f(positions[P, dim]) -> fitness[P]``.

    Iteration 1 evaluates the initial swarm; each later iteration moves
    every particle once and re-evaluates, so exactly
    ``population * iterations`` evaluations are made.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    x, v = init_swarm(cfg, dim, rng)
    f = np.asarray(objective(x), dtype=float)
    swarm = Swarm(x, v, x.copy(), f.copy())
    history = np.empty(cfg.iterations)
    gi = swarm.gbest_index
    gbest, gbest_f = swarm.pbest_positions[gi].copy(), float(swarm.pbest_fitness[gi])
    history[0] = gbest_f
    if on_iteration is not None:
        on_iteration(1, gbest_f)
    shape = (cfg.population, dim)
    for it in range(1, cfg.iterations):
        phi1 = rng.random(shape)
        phi2 = rng.random(shape)
        swarm.velocities = update_velocity(swarm.velocities, swarm.positions,
                                           swarm.pbest_positions, gbest, cfg, phi1, phi2)
        swarm.positions = update_position(swarm.positions, swarm.velocities, cfg)
        f = np.asarray(objective(swarm.positions), dtype=float)
        better = f < swarm.pbest_fitness
        swarm.pbest_positions[better] = swarm.positions[better]
        swarm.pbest_fitness[better] = f[better]
        gi = swarm.gbest_index
        if swarm.pbest_fitness[gi] < gbest_f:
            gbest, gbest_f = swarm.pbest_positions[gi].copy(), float(swarm.pbest_fitness[gi])
        assert gbest_f <= history[it - 1]
        history[it] = gbest_f
        if on_iteration is not None:
            on_iteration(it + 1, gbest_f)
    return PsoResult(best_position=gbest, best_fitness=gbest_f, history=history,
                     evaluations=cfg.population * cfg.iterations, config=cfg)


def optimize(cfg, mask, model, workers=1, on_iteration=None):
    """Tune a gain for ``model`` under ``mask`` by swarm search on ISE."""
    dim = mask_dimension(mask)
    result = minimize(lambda pos: fitness_batch(pos, mask, model, cfg, workers),
                      dim, cfg, on_iteration)
    gain = FeedbackGain(gains_from_positions(result.best_position, mask)[0], mask)
    return replace(result, best_gain=gain, mask=mask)
