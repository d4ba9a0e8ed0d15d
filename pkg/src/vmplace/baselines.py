"""Baseline solvers: genetic algorithm, particle swarm, first-fit decreasing, brute force."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .cuckoo import (
    Nest,
    ParetoArchive,
    SolveResult,
    _BestTracker,
    _decode0,
    _evaluate_rows,
    _single_server_result,
)
from .instance import Placement, PlacementProblem
from .objectives import (
    BatchObjectives,
    ObjectiveVector,
    ScalarWeights,
    batch_loads,
    batch_objectives,
    batch_scalarize,
)

__all__ = [
    "GaConfig",
    "PsoConfig",
    "BruteForceResult",
    "solve_ga",
    "solve_pso",
    "solve_ffd",
    "brute_force",
]

BRUTE_FORCE_LIMIT = 10_000_000


@dataclass(frozen=True)
class GaConfig:
    """Generational GA settings: tournament-2, single-point crossover, elitism of 1."""

    pop_size: int = 100
    generations: int = 500
    crossover_rate: float = 0.7
    mutation_rate: float = 0.05
    seed: int = 0
    weights: ScalarWeights = field(default_factory=ScalarWeights)
    archive_cap: int = 100

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.archive_cap < 1:
            raise ValueError("archive_cap must be at least 1")


@dataclass(frozen=True)
class PsoConfig:
    """Global-best PSO settings; ``v_max=None`` resolves to 0.5 * (m - 1)."""

    pop_size: int = 100
    iterations: int = 500
    inertia: float = 0.7
    c1: float = 1.5
    c2: float = 1.5
    v_max: float | None = None
    seed: int = 0
    weights: ScalarWeights = field(default_factory=ScalarWeights)
    archive_cap: int = 100

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.inertia < 0.0 or self.c1 < 0.0 or self.c2 < 0.0:
            raise ValueError("inertia, c1 and c2 must be non-negative")
        if self.v_max is not None and self.v_max <= 0.0:
            raise ValueError("v_max must be positive")
        if self.archive_cap < 1:
            raise ValueError("archive_cap must be at least 1")


def _offer_all(
    archive: ParetoArchive,
    X: np.ndarray,
    rows: np.ndarray,
    objs: BatchObjectives,
    scalars: np.ndarray,
) -> None:
    cand = np.stack((objs.utilization, objs.load_balance, objs.active_fraction), axis=1)
    rejected = archive.rejects(cand, objs.feasible)
    for i in np.flatnonzero(~rejected):
        vector = ObjectiveVector(
            float(objs.utilization[i]),
            float(objs.load_balance[i]),
            float(objs.active_fraction[i]),
            bool(objs.feasible[i]),
        )
        archive.offer(X[i], rows[i], vector, float(scalars[i]))


def _emit_trace(trace: TextIO | None, cycle: int, tracker: _BestTracker, archive: ParetoArchive) -> None:
    if trace is not None:
        trace.write(
            json.dumps({"cycle": cycle, "best_scalar": tracker.scalar, "archive_size": len(archive)})
            + "\n"
        )


def solve_ga(problem: PlacementProblem, config: GaConfig, trace: TextIO | None = None) -> SolveResult:
    """Generational GA over repaired assignments; deterministic for a fixed seed.

    Chromosomes store the repaired assignment itself, so repair improvements
    are inherited.  Each generation produces one child per tournament pair
    plus a single elite copy of the best individual.
    """
    t0 = time.perf_counter()
    m, n = problem.m, problem.n
    if m == 1:
        return _single_server_result(problem, config.weights, t0)

    rng = np.random.default_rng(config.seed)
    pop = config.pop_size
    weights = config.weights
    archive = ParetoArchive(config.archive_cap)
    tracker = _BestTracker()

    repair_cache: dict = {}
    rows = rng.integers(0, m, (pop, n))
    objs, scalars, _ = _evaluate_rows(problem, rows, weights, repair_cache)
    X = (rows + 1).astype(np.float64)
    tracker.update(X, rows, objs, scalars)
    _offer_all(archive, X, rows, objs, scalars)

    history: list[float] = []
    cols = np.arange(n)
    for generation in range(config.generations):
        elite = int(np.argmin(scalars))
        elite_row = rows[elite].copy()

        tours = rng.integers(0, pop, (pop - 1, 4))
        first = np.where(scalars[tours[:, 0]] <= scalars[tours[:, 1]], tours[:, 0], tours[:, 1])
        second = np.where(scalars[tours[:, 2]] <= scalars[tours[:, 3]], tours[:, 2], tours[:, 3])
        children = rows[first].copy()
        crossed = rng.random(pop - 1) < config.crossover_rate
        if n >= 2:
            points = rng.integers(1, n, pop - 1)
            take_second = crossed[:, None] & (cols[None, :] >= points[:, None])
            children[take_second] = rows[second][take_second]
        mutate = rng.random((pop - 1, n)) < config.mutation_rate
        resets = rng.integers(0, m, (pop - 1, n))
        children[mutate] = resets[mutate]

        child_objs, child_scalars, _ = _evaluate_rows(problem, children, weights, repair_cache)

        rows = np.vstack([elite_row[None, :], children])
        elite_objs = (objs.utilization[elite], objs.load_balance[elite],
                      objs.active_fraction[elite], objs.feasible[elite])
        objs = BatchObjectives(
            np.concatenate([[elite_objs[0]], child_objs.utilization]),
            np.concatenate([[elite_objs[1]], child_objs.load_balance]),
            np.concatenate([[elite_objs[2]], child_objs.active_fraction]),
            np.concatenate([[elite_objs[3]], child_objs.feasible]),
        )
        scalars = np.concatenate([[scalars[elite]], child_scalars])
        X = (rows + 1).astype(np.float64)

        tracker.update(X, rows, objs, scalars)
        _offer_all(archive, X, rows, objs, scalars)
        history.append(tracker.scalar)
        _emit_trace(trace, generation + 1, tracker, archive)

    return SolveResult(
        best=tracker.best_nest(),
        archive=archive.nests(),
        history=tuple(history),
        wall_time=time.perf_counter() - t0,
        cycles_run=config.generations,
    )


def solve_pso(
    problem: PlacementProblem,
    config: PsoConfig,
    trace: TextIO | None = None,
    initial_positions: np.ndarray | None = None,
) -> SolveResult:
    """Global-best PSO over continuous positions; deterministic for a fixed seed.

    Velocities start at zero.  A particle's best position snaps repaired
    coordinates onto their repaired server index, so recorded attractors
    always decode to the placement that earned their score.
    """
    t0 = time.perf_counter()
    m, n = problem.m, problem.n
    if m == 1:
        return _single_server_result(problem, config.weights, t0)

    rng = np.random.default_rng(config.seed)
    pop = config.pop_size
    weights = config.weights
    v_max = config.v_max if config.v_max is not None else 0.5 * (m - 1)
    archive = ParetoArchive(config.archive_cap)
    tracker = _BestTracker()

    if initial_positions is not None:
        X = np.array(initial_positions, dtype=np.float64)
        if X.shape != (pop, n):
            raise ValueError(f"initial_positions must have shape {(pop, n)}")
        X = np.clip(X, 1.0, float(m))
    else:
        X = rng.uniform(1.0, float(m), (pop, n))
    V = np.zeros((pop, n))

    repair_cache: dict = {}

    def evaluated(positions: np.ndarray):
        rows = _decode0(positions, m)
        before = rows.copy()
        objs, scalars, _ = _evaluate_rows(problem, rows, weights, repair_cache)
        snapped = np.where(rows != before, rows + 1.0, positions)
        return rows, objs, scalars, snapped

    rows, objs, scalars, snapped = evaluated(X)
    pbest_X = snapped.copy()
    pbest_scalars = scalars.copy()
    tracker.update(snapped, rows, objs, scalars)
    _offer_all(archive, snapped, rows, objs, scalars)
    gbest = snapped[int(np.argmin(scalars))].copy()
    gbest_scalar = float(scalars.min())

    history: list[float] = []
    for iteration in range(config.iterations):
        r1 = rng.random((pop, n))
        r2 = rng.random((pop, n))
        V = config.inertia * V + config.c1 * r1 * (pbest_X - X) + config.c2 * r2 * (gbest - X)
        np.clip(V, -v_max, v_max, out=V)
        X = np.clip(X + V, 1.0, float(m))

        rows, objs, scalars, snapped = evaluated(X)
        improved = scalars < pbest_scalars
        pbest_X[improved] = snapped[improved]
        pbest_scalars[improved] = scalars[improved]
        i = int(np.argmin(pbest_scalars))
        if pbest_scalars[i] < gbest_scalar:
            gbest = pbest_X[i].copy()
            gbest_scalar = float(pbest_scalars[i])

        tracker.update(snapped, rows, objs, scalars)
        _offer_all(archive, snapped, rows, objs, scalars)
        history.append(tracker.scalar)
        _emit_trace(trace, iteration + 1, tracker, archive)

    return SolveResult(
        best=tracker.best_nest(),
        archive=archive.nests(),
        history=tuple(history),
        wall_time=time.perf_counter() - t0,
        cycles_run=config.iterations,
    )


def solve_ffd(problem: PlacementProblem) -> Placement:
    """First-fit decreasing by combined normalized demand.

    VMs are placed largest first onto the lowest-indexed server with room in
    both resources; when none fits, the VM lands on the server with maximum
    combined slack, which may leave the result infeasible.
    """
    m = problem.m
    order = np.argsort(-problem.vm_demand_measure, kind="stable")
    cpu_used = np.zeros(m)
    mem_used = np.zeros(m)
    assign = np.empty(problem.n, dtype=np.int64)
    for v in order:
        fits = (cpu_used + problem.vm_cpu[v] <= problem.server_cpu) & (
            mem_used + problem.vm_mem[v] <= problem.server_mem
        )
        if fits.any():
            j = int(np.argmax(fits))
        else:
            slack = (
                problem.alpha * (problem.server_cpu - cpu_used) / problem.mean_cpu
                + problem.beta * (problem.server_mem - mem_used) / problem.mean_mem
            )
            j = int(np.argmax(slack))
        assign[v] = j
        cpu_used[j] += problem.vm_cpu[v]
        mem_used[j] += problem.vm_mem[v]
    return Placement(tuple(int(v) + 1 for v in assign))


@dataclass(frozen=True)
class BruteForceResult:
    """Exact scalar optimum plus one representative per non-dominated objective vector."""

    best: Placement
    objectives: ObjectiveVector
    scalar: float
    pareto: tuple[tuple[Placement, ObjectiveVector], ...]


def brute_force(problem: PlacementProblem, weights: ScalarWeights | None = None) -> BruteForceResult:
    """Exhaustively score every placement (no repair); exact scalar and Pareto optima.

    Refuses instances with more than ``BRUTE_FORCE_LIMIT`` placements.
    """
    weights = weights or ScalarWeights()
    m, n = problem.m, problem.n
    total = m**n
    if total > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for exhaustive search: {m}^{n} placements")

    radix = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    archive = ParetoArchive(cap=None)
    best_scalar = math.inf
    best_row: np.ndarray | None = None
    best_vector: ObjectiveVector | None = None

    chunk = 4096
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        rows = (ids[:, None] // radix) % m
        objs = batch_objectives(problem, *batch_loads(problem, rows))
        scalars = batch_scalarize(objs, weights)
        i = int(np.argmin(scalars))
        if scalars[i] < best_scalar:
            best_scalar = float(scalars[i])
            best_row = rows[i].copy()
            best_vector = ObjectiveVector(
                float(objs.utilization[i]),
                float(objs.load_balance[i]),
                float(objs.active_fraction[i]),
                bool(objs.feasible[i]),
            )
        for i in _pareto_candidates(archive, objs):
            vector = ObjectiveVector(
                float(objs.utilization[i]),
                float(objs.load_balance[i]),
                float(objs.active_fraction[i]),
                bool(objs.feasible[i]),
            )
            archive.offer((rows[i] + 1).astype(np.float64), rows[i], vector, float(scalars[i]))

    pareto = tuple((nest.decoded, nest.objectives) for nest in archive.nests())
    best = Placement(tuple(int(v) + 1 for v in best_row))
    return BruteForceResult(best, best_vector, best_scalar, pareto)


def _pareto_candidates(archive: ParetoArchive, objs: BatchObjectives) -> np.ndarray:
    """Indices of batch rows not already dominated by the current archive."""
    if not len(archive):
        return np.arange(objs.utilization.size)
    mat = archive._obj_matrix()
    feas_col = np.asarray(archive._feas)
    u, lb, af = objs.utilization, objs.load_balance, objs.active_fraction
    same_class = feas_col[:, None] == objs.feasible[None, :]
    ge = (
        (mat[:, 0:1] >= u[None, :])
        & (mat[:, 1:2] <= lb[None, :])
        & (mat[:, 2:3] <= af[None, :])
    )
    eq = (
        (mat[:, 0:1] == u[None, :])
        & (mat[:, 1:2] == lb[None, :])
        & (mat[:, 2:3] == af[None, :])
    )
    beaten = (feas_col[:, None] & ~objs.feasible[None, :]) | (same_class & ge & ~eq)
    return np.flatnonzero(~beaten.any(axis=0))
