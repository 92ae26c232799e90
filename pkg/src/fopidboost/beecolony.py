"""Artificial bee colony search over box-bounded continuous parameters.

Employed bees perturb their own food source along one random dimension
toward a random partner, onlookers repeat the move on sources selected
with probability proportional to fitness 1/(1+cost), and sources whose
trial counter exceeds the limit are abandoned to scouts.  All random
draws for a phase are taken from a single coordinator stream before the
candidate evaluations fan out, and acceptances are applied in source
order afterwards, so the search trajectory is identical whether the
objective runs serially or on a thread pool.

The tuning entry points wire this to the converter loop: a position is a
controller parameter vector, the cost is the finite-horizon IAE, and
candidates whose simulation trips the breaker are charged a flat penalty.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .controller import FopidParams, build_fopid
from .converter import ConverterParams, PwmModulator
from .oustaloup import OraConfig
from .simloop import (DEFAULT_BREAK_THRESHOLD, Scenario, SimResult,
                      metrics_only, plant_timestep, simulate)

# flat cost for candidates whose simulation trips the breaker; dominates
# any feasible IAE on this plant by several orders of magnitude
PENALTY_COST = 1e6

# decision-variable boxes; FOPID positions are [kp, td, ti, lam, mu]
FOPID_BOUNDS = ((0.1, 10.0), (1e-4, 0.1), (1e-5, 1e-2), (0.1, 1.2), (0.1, 1.2))
PID_BOUNDS = FOPID_BOUNDS[:3]


class OptimizerError(ValueError):
    """Raised for invalid optimizer configuration."""


@dataclass(frozen=True)
class AbcConfig:
    bounds: tuple[tuple[float, float], ...]
    colony_size: int = 10
    max_iterations: int = 20
    limit: int | None = None  # defaults to colony_size * dimensions
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.colony_size < 2:
            raise OptimizerError(f"colony_size must be >= 2, got {self.colony_size}")
        if self.max_iterations < 1:
            raise OptimizerError(
                f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.limit is not None and self.limit < 1:
            raise OptimizerError(f"limit must be >= 1, got {self.limit}")
        if not self.bounds:
            raise OptimizerError("bounds must not be empty")
        for lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise OptimizerError(f"invalid bound [{lo}, {hi}]")

    @property
    def dimensions(self) -> int:
        return len(self.bounds)

    @property
    def scout_limit(self) -> int:
        return self.limit if self.limit is not None else self.colony_size * self.dimensions


@dataclass
class Candidate:
    position: np.ndarray
    cost: float
    trial_counter: int = 0


@dataclass
class OptimizeResult:
    best: Candidate
    history_best: np.ndarray   # global best cost after each iteration
    history_mean: np.ndarray   # mean food-source cost after each iteration
    n_evaluations: int


def _fitness(cost: float) -> float:
    if cost >= 0.0:
        return 1.0 / (1.0 + cost)
    return 1.0 + abs(cost)


def optimize(objective, cfg: AbcConfig, executor=None) -> OptimizeResult:
    """Minimize objective(position) -> cost over the configured box.

    `executor`, when given, must provide an order-preserving map(); the
    objective then needs to be thread-safe.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.colony_size
    dims = cfg.dimensions
    lo = np.array([b[0] for b in cfg.bounds], dtype=np.float64)
    hi = np.array([b[1] for b in cfg.bounds], dtype=np.float64)
    limit = cfg.scout_limit
    mapper = executor.map if executor is not None else map

    def evaluate(positions: list[np.ndarray]) -> list[float]:
        costs = [float(c) for c in mapper(objective, positions)]
        for c in costs:
            if math.isnan(c):
                raise OptimizerError("objective returned NaN")
        return costs

    positions = rng.uniform(lo, hi, size=(n, dims))
    costs = evaluate([positions[i].copy() for i in range(n)])
    sources = [Candidate(positions[i].copy(), costs[i]) for i in range(n)]
    n_evals = n

    best = min(sources, key=lambda s: s.cost)
    best = Candidate(best.position.copy(), best.cost)

    def note(position: np.ndarray, cost: float) -> None:
        nonlocal best
        if cost < best.cost:
            best = Candidate(position.copy(), cost)

    def neighbor(base_idx: int, partner_idx: int, dim: int, phi: float) -> np.ndarray:
        pos = sources[base_idx].position.copy()
        pos[dim] = pos[dim] + phi * (pos[dim] - sources[partner_idx].position[dim])
        return np.clip(pos, lo, hi)

    history_best = np.empty(cfg.max_iterations, dtype=np.float64)
    history_mean = np.empty(cfg.max_iterations, dtype=np.float64)

    for it in range(cfg.max_iterations):
        # employed phase: one proposal per source, all draws upfront
        dims_drawn = rng.integers(0, dims, size=n)
        partners = rng.integers(0, n - 1, size=n)
        partners = partners + (partners >= np.arange(n))
        phis = rng.uniform(-1.0, 1.0, size=n)
        proposals = [neighbor(i, int(partners[i]), int(dims_drawn[i]), float(phis[i]))
                     for i in range(n)]
        new_costs = evaluate(proposals)
        n_evals += n
        for i in range(n):
            note(proposals[i], new_costs[i])
            if new_costs[i] < sources[i].cost:
                sources[i] = Candidate(proposals[i], new_costs[i])
            else:
                sources[i].trial_counter += 1

        # onlooker phase: sources picked by roulette over fitness
        fits = np.array([_fitness(s.cost) for s in sources])
        cum = np.cumsum(fits / np.sum(fits))
        picks = np.searchsorted(cum, rng.random(n), side="right")
        picks = np.minimum(picks, n - 1)
        dims_drawn = rng.integers(0, dims, size=n)
        partners = rng.integers(0, n - 1, size=n)
        partners = partners + (partners >= picks)
        phis = rng.uniform(-1.0, 1.0, size=n)
        proposals = [neighbor(int(picks[m]), int(partners[m]), int(dims_drawn[m]),
                              float(phis[m])) for m in range(n)]
        new_costs = evaluate(proposals)
        n_evals += n
        for m in range(n):
            note(proposals[m], new_costs[m])
            s = int(picks[m])
            if new_costs[m] < sources[s].cost:
                sources[s] = Candidate(proposals[m], new_costs[m])
            else:
                sources[s].trial_counter += 1

        # scout phase: abandon exhausted sources
        violators = [i for i in range(n) if sources[i].trial_counter > limit]
        if violators:
            seeds = [rng.uniform(lo, hi) for _ in violators]
            seed_costs = evaluate(seeds)
            n_evals += len(violators)
            for i, pos, c in zip(violators, seeds, seed_costs):
                note(pos, c)
                sources[i] = Candidate(pos, c)

        history_best[it] = best.cost
        history_mean[it] = float(np.mean([s.cost for s in sources]))

    return OptimizeResult(best=best, history_best=history_best,
                          history_mean=history_mean, n_evaluations=n_evals)


def write_history_csv(result: OptimizeResult, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("iteration,best_cost,mean_cost\n")
        for it, (b, m) in enumerate(zip(result.history_best, result.history_mean)):
            fh.write(f"{it},{float(b)!r},{float(m)!r}\n")


# --- controller tuning objectives ---

@dataclass(frozen=True)
class TuningSetup:
    """Everything the IAE objective needs besides the candidate itself."""

    plant: ConverterParams = field(default_factory=ConverterParams)
    f_sw: float = 10e3
    pwm_phase: float = 0.0
    ora: OraConfig = OraConfig(order_nu=0.5, omega_l=1e-1, omega_h=1e6,
                               n_sections=8)
    scenario: Scenario = field(default_factory=Scenario)
    break_threshold: float = DEFAULT_BREAK_THRESHOLD
    u_min: float = 0.0
    u_max: float | None = None  # None: controller default ceiling


@dataclass
class TuningResult:
    best_params: FopidParams
    best_cost: float
    history_best: np.ndarray
    history_mean: np.ndarray
    n_evaluations: int
    best_sim: SimResult

    @property
    def feasible(self) -> bool:
        return self.best_cost < PENALTY_COST


def params_from_position(position, pid: bool = False) -> FopidParams:
    """Decode a decision vector; layout [kp, td, ti] plus [lam, mu] for FOPID."""
    if pid:
        kp, td, ti = position
        return FopidParams(kp=float(kp), ti=float(ti), td=float(td))
    kp, td, ti, lam, mu = position
    return FopidParams(kp=float(kp), ti=float(ti), td=float(td),
                       lam=float(lam), mu=float(mu))


def make_objective(setup: TuningSetup, pid: bool = False):
    """IAE-of-simulation cost; breaker trips map to the flat penalty."""
    modulator = PwmModulator(f_sw=setup.f_sw, phase=setup.pwm_phase)
    dt = plant_timestep(setup.f_sw)
    sparse = metrics_only(setup.scenario)
    kwargs = {} if setup.u_max is None else {"u_max": setup.u_max}

    def cost(position) -> float:
        params = params_from_position(position, pid=pid)
        ctrl = build_fopid(params, setup.ora, dt, u_min=setup.u_min, **kwargs)
        res = simulate(ctrl, setup.plant, modulator, sparse,
                       break_threshold=setup.break_threshold)
        return res.j_iae if res.stable else PENALTY_COST

    return cost


def _tune(setup: TuningSetup, abc: AbcConfig, pid: bool, workers: int) -> TuningResult:
    objective = make_objective(setup, pid=pid)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            opt = optimize(objective, abc, executor=pool)
    else:
        opt = optimize(objective, abc)

    params = params_from_position(opt.best.position, pid=pid)
    modulator = PwmModulator(f_sw=setup.f_sw, phase=setup.pwm_phase)
    dt = plant_timestep(setup.f_sw)
    kwargs = {} if setup.u_max is None else {"u_max": setup.u_max}
    ctrl = build_fopid(params, setup.ora, dt, u_min=setup.u_min, **kwargs)
    best_sim = simulate(ctrl, setup.plant, modulator, setup.scenario,
                        break_threshold=setup.break_threshold)
    return TuningResult(best_params=params, best_cost=opt.best.cost,
                        history_best=opt.history_best,
                        history_mean=opt.history_mean,
                        n_evaluations=opt.n_evaluations,
                        best_sim=best_sim)


def tune_fopid(setup: TuningSetup, abc: AbcConfig | None = None,
               rng_seed: int = 0, workers: int = 1) -> TuningResult:
    if abc is None:
        abc = AbcConfig(bounds=FOPID_BOUNDS, rng_seed=rng_seed)
    return _tune(setup, abc, pid=False, workers=workers)


def tune_pid(setup: TuningSetup, abc: AbcConfig | None = None,
             rng_seed: int = 0, workers: int = 1) -> TuningResult:
    if abc is None:
        abc = AbcConfig(bounds=PID_BOUNDS, rng_seed=rng_seed)
    return _tune(setup, abc, pid=True, workers=workers)
