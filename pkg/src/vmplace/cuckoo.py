"""Multi-objective cuckoo search over VM placements, guided by learning automata."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .automata import init_bank, sample_assignments, update_from_population
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
    "Nest",
    "SolverConfig",
    "SolveResult",
    "ParetoArchive",
    "decode",
    "levy_step",
    "repair",
    "solve",
]

LA_APPLIES_CHOICES = ("regenerated", "initial_population", "both")
ABANDON_CHOICES = ("worst_ranked", "random")


@dataclass(frozen=True)
class Nest:
    """One candidate: continuous position plus its decoded, evaluated placement."""

    position: np.ndarray
    decoded: Placement
    objectives: ObjectiveVector
    scalar: float

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=np.float64)
        position.flags.writeable = False
        object.__setattr__(self, "position", position)


@dataclass(frozen=True)
class SolverConfig:
    """Cuckoo-search settings; ``levy_scale=None`` resolves to 0.01 * (m - 1)."""

    pop_size: int = 100
    max_cycles: int = 500
    p_a: float = 0.25
    levy_beta: float = 1.5
    levy_scale: float | None = None
    seed: int = 0
    weights: ScalarWeights = field(default_factory=ScalarWeights)
    la_fraction: float = 0.5
    reward_a: float = 0.5
    penalty_b: float = 0.05
    la_applies_to: str = "both"
    abandon_strategy: str = "worst_ranked"
    archive_cap: int = 100

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.max_cycles < 0:
            raise ValueError("max_cycles must be non-negative")
        if not 0.0 <= self.p_a <= 1.0:
            raise ValueError("p_a must lie in [0, 1]")
        if not 1.0 < self.levy_beta <= 2.0:
            raise ValueError("levy_beta must lie in (1, 2]")
        if self.levy_scale is not None and self.levy_scale <= 0.0:
            raise ValueError("levy_scale must be positive")
        if not 0.0 <= self.la_fraction <= 1.0:
            raise ValueError("la_fraction must lie in [0, 1]")
        if self.la_applies_to not in LA_APPLIES_CHOICES:
            raise ValueError(f"la_applies_to must be one of {LA_APPLIES_CHOICES}")
        if self.abandon_strategy not in ABANDON_CHOICES:
            raise ValueError(f"abandon_strategy must be one of {ABANDON_CHOICES}")
        if self.archive_cap < 1:
            raise ValueError("archive_cap must be at least 1")


@dataclass(frozen=True)
class SolveResult:
    """Best nest, final non-dominated archive, and per-cycle best-so-far history."""

    best: Nest
    archive: tuple[Nest, ...]
    history: tuple[float, ...]
    wall_time: float
    cycles_run: int


def decode(position, m: int) -> Placement:
    """Round each coordinate half-up and clamp into the 1..m server range."""
    a0 = _decode0(np.asarray(position, dtype=np.float64), m)
    return Placement(tuple(int(v) + 1 for v in a0))


def _decode0(position: np.ndarray, m: int) -> np.ndarray:
    rounded = np.floor(position + 0.5)
    return np.clip(rounded, 1.0, float(m)).astype(np.int64) - 1


def _mantegna_sigma(beta: float) -> float:
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def _levy(rng: np.random.Generator, beta: float, shape: tuple[int, ...]) -> np.ndarray:
    if not 1.0 < beta <= 2.0:
        raise ValueError("levy beta must lie in (1, 2]")
    u = rng.normal(0.0, _mantegna_sigma(beta), shape)
    v = rng.normal(0.0, 1.0, shape)
    return u / np.abs(v) ** (1.0 / beta)


def levy_step(rng: np.random.Generator, beta: float, dim: int) -> np.ndarray:
    """Heavy-tailed step vector u / |v|^(1/beta) with the stable-matching sigma for u."""
    return _levy(rng, beta, (int(dim),))


def repair(problem: PlacementProblem, placement: Placement, rng=None) -> Placement:
    """Move VMs off overloaded servers onto the feasible server with most slack.

    Deterministic (``rng`` is accepted for interface symmetry and unused).
    Feasible input comes back unchanged; when some VM cannot be rehosted the
    placement is returned as-is, still infeasible.
    """
    placement.validate_for(problem)
    a0 = np.asarray(placement.assign, dtype=np.int64) - 1
    cpu_used, mem_used, counts = (arr[0].copy() for arr in batch_loads(problem, a0[None, :]))
    if _repair_row(problem, a0, cpu_used, mem_used, counts):
        return Placement(tuple(int(v) + 1 for v in a0))
    return placement


def _repair_row(
    problem: PlacementProblem,
    a0: np.ndarray,
    cpu_used: np.ndarray,
    mem_used: np.ndarray,
    counts: np.ndarray,
) -> bool:
    """In-place repair of one assignment row and its load accumulators.

    Each move evicts the largest-demand VM from the first overloaded server
    and rehosts it on the feasible server with maximum combined slack, so a
    VM moves at most once and the loop is bounded by n moves.
    """
    server_cpu, server_mem = problem.server_cpu, problem.server_mem
    vm_cpu, vm_mem = problem.vm_cpu, problem.vm_mem
    measure = problem.vm_demand_measure
    changed = False
    for _ in range(problem.n):
        over = cpu_used > server_cpu
        over |= mem_used > server_mem
        j = int(np.argmax(over))
        if not over[j]:
            break
        # largest hosted VM; masked argmax keeps the first-index tie-break
        v = int(np.argmax(np.where(a0 == j, measure, -np.inf)))
        old_cpu, old_mem = cpu_used[j], mem_used[j]
        cpu_used[j] -= vm_cpu[v]
        mem_used[j] -= vm_mem[v]
        counts[j] -= 1
        fits = cpu_used + vm_cpu[v] <= server_cpu
        fits &= mem_used + vm_mem[v] <= server_mem
        if not fits.any():
            # restore the saved values: subtract-then-add can drift by an ulp
            cpu_used[j] = old_cpu
            mem_used[j] = old_mem
            counts[j] += 1
            break
        slack = (
            problem.alpha * (server_cpu - cpu_used) / problem.mean_cpu
            + problem.beta * (server_mem - mem_used) / problem.mean_mem
        )
        slack[~fits] = -np.inf
        t = int(np.argmax(slack))
        a0[v] = t
        cpu_used[t] += vm_cpu[v]
        mem_used[t] += vm_mem[v]
        counts[t] += 1
        changed = True
    return changed


_CACHE_MISS = object()
_REPAIR_CACHE_LIMIT = 65536


def _evaluate_rows(
    problem: PlacementProblem,
    rows: np.ndarray,
    weights: ScalarWeights,
    cache: dict | None = None,
) -> tuple[BatchObjectives, np.ndarray, np.ndarray]:
    """Repair each row in place, then score the batch.

    Returns the objective columns, the scalar column, and a per-row bool mask
    of rows the repair modified.  Loads of modified rows are recomputed from
    scratch so scores match a from-scratch evaluation bit for bit.

    ``cache`` memoizes repair by row content; repair is a pure function of
    the row, so hits reproduce the miss path exactly.  Entries are ``None``
    for rows repair could not change.
    """
    cpu_used, mem_used, counts = batch_loads(problem, rows)
    bad = ~(
        (cpu_used <= problem.server_cpu).all(axis=1)
        & (mem_used <= problem.server_mem).all(axis=1)
    )
    changed = np.zeros(rows.shape[0], dtype=bool)
    for r in np.flatnonzero(bad):
        if cache is None:
            changed[r] = _repair_row(problem, rows[r], cpu_used[r], mem_used[r], counts[r])
            continue
        key = rows[r].tobytes()
        hit = cache.get(key, _CACHE_MISS)
        if hit is not _CACHE_MISS:
            if hit is not None:
                rows[r] = hit
                changed[r] = True
            continue
        moved = _repair_row(problem, rows[r], cpu_used[r], mem_used[r], counts[r])
        changed[r] = moved
        if len(cache) >= _REPAIR_CACHE_LIMIT:
            cache.clear()
        cache[key] = rows[r].copy() if moved else None
    if changed.any():
        idx = np.flatnonzero(changed)
        cpu_used[idx], mem_used[idx], counts[idx] = batch_loads(problem, rows[idx])
    objs = batch_objectives(problem, cpu_used, mem_used, counts)
    return objs, batch_scalarize(objs, weights), changed


class ParetoArchive:
    """Bounded set of mutually non-dominated entries; feasible trumps infeasible.

    At most one entry is kept per distinct objective vector.  When the cap is
    exceeded, the entry with the smallest nearest-neighbor distance in
    min-max-normalized objective space is dropped until the cap holds.
    """

    def __init__(self, cap: int | None):
        self.cap = cap
        self._positions: list[np.ndarray] = []
        self._rows: list[np.ndarray] = []
        self._objs: list[tuple[float, float, float]] = []
        self._feas: list[bool] = []
        self._scalars: list[float] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._objs)

    def _obj_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.array(self._objs, dtype=np.float64).reshape(len(self._objs), 3)
        return self._matrix

    def rejects(self, cand: np.ndarray, cand_feas: np.ndarray) -> np.ndarray:
        """Vectorized pre-check: True where a current member beats or equals the candidate.

        Offering a rejected candidate is a no-op, and rejection only grows as
        entries are accepted, so survivors of this check can be offered one by
        one with identical results.
        """
        if not self._objs:
            return np.zeros(len(cand_feas), dtype=bool)
        mat = self._obj_matrix()
        feas_col = np.asarray(self._feas)
        trump = feas_col[:, None] & ~cand_feas[None, :]
        same_class = feas_col[:, None] == cand_feas[None, :]
        ge = (
            (mat[:, 0][:, None] >= cand[:, 0])
            & (mat[:, 1][:, None] <= cand[:, 1])
            & (mat[:, 2][:, None] <= cand[:, 2])
        )
        return (trump | (same_class & ge)).any(axis=0)

    def offer(self, position: np.ndarray, row: np.ndarray, objs: ObjectiveVector, scalar: float) -> bool:
        """Insert if non-dominated; drops newly dominated members. True when inserted."""
        u, lb, af, feas = objs.utilization, objs.load_balance, objs.active_fraction, objs.feasible
        if self._objs:
            mat = self._obj_matrix()
            feas_col = np.asarray(self._feas)
            same_class = feas_col == feas
            ge = (mat[:, 0] >= u) & (mat[:, 1] <= lb) & (mat[:, 2] <= af)
            eq = (mat[:, 0] == u) & (mat[:, 1] == lb) & (mat[:, 2] == af)
            beats_candidate = (feas_col & ~feas) | (same_class & ge & ~eq)
            if beats_candidate.any() or (same_class & eq).any():
                return False
            le = (mat[:, 0] <= u) & (mat[:, 1] >= lb) & (mat[:, 2] >= af)
            beaten = (~feas_col & feas) | (same_class & le & ~eq)
            if beaten.any():
                keep = ~beaten
                self._positions = [p for p, k in zip(self._positions, keep) if k]
                self._rows = [r for r, k in zip(self._rows, keep) if k]
                self._objs = [o for o, k in zip(self._objs, keep) if k]
                self._feas = [f for f, k in zip(self._feas, keep) if k]
                self._scalars = [s for s, k in zip(self._scalars, keep) if k]
        self._positions.append(np.array(position, dtype=np.float64))
        self._rows.append(np.array(row, dtype=np.int64))
        self._objs.append((float(u), float(lb), float(af)))
        self._feas.append(bool(feas))
        self._scalars.append(float(scalar))
        self._matrix = None
        self._thin()
        return True

    def _thin(self) -> None:
        while self.cap is not None and len(self._objs) > self.cap:
            mat = self._obj_matrix()
            span = mat.max(axis=0) - mat.min(axis=0)
            span[span == 0.0] = 1.0
            norm = (mat - mat.min(axis=0)) / span
            diff = norm[:, None, :] - norm[None, :, :]
            dist = np.sqrt((diff * diff).sum(axis=2))
            np.fill_diagonal(dist, np.inf)
            drop = int(np.argmin(dist.min(axis=1)))
            del self._positions[drop], self._rows[drop], self._objs[drop]
            del self._feas[drop], self._scalars[drop]
            self._matrix = None

    def nests(self) -> tuple[Nest, ...]:
        return tuple(
            Nest(
                position,
                Placement(tuple(int(v) + 1 for v in row)),
                ObjectiveVector(o[0], o[1], o[2], f),
                s,
            )
            for position, row, o, f, s in zip(
                self._positions, self._rows, self._objs, self._feas, self._scalars
            )
        )


class _BestTracker:
    """Best-so-far snapshots by scalar, overall and feasible-only."""

    def __init__(self) -> None:
        self.scalar = math.inf
        self.snapshot: tuple | None = None
        self.feasible_scalar = math.inf
        self.feasible_snapshot: tuple | None = None

    def update(self, X: np.ndarray, rows: np.ndarray, objs: BatchObjectives, scalars: np.ndarray) -> None:
        i = int(np.argmin(scalars))
        if scalars[i] < self.scalar:
            self.scalar = float(scalars[i])
            self.snapshot = self._snap(X, rows, objs, scalars, i)
        feas = np.flatnonzero(objs.feasible)
        if feas.size:
            i = int(feas[np.argmin(scalars[feas])])
            if scalars[i] < self.feasible_scalar:
                self.feasible_scalar = float(scalars[i])
                self.feasible_snapshot = self._snap(X, rows, objs, scalars, i)

    @staticmethod
    def _snap(X, rows, objs, scalars, i) -> tuple:
        vector = ObjectiveVector(
            float(objs.utilization[i]),
            float(objs.load_balance[i]),
            float(objs.active_fraction[i]),
            bool(objs.feasible[i]),
        )
        return (X[i].copy(), rows[i].copy(), vector, float(scalars[i]))

    def best_nest(self) -> Nest:
        position, row, vector, scalar = self.feasible_snapshot or self.snapshot
        return Nest(position, Placement(tuple(int(v) + 1 for v in row)), vector, scalar)


def _single_server_result(problem: PlacementProblem, weights: ScalarWeights, t0: float) -> SolveResult:
    row = np.zeros(problem.n, dtype=np.int64)
    objs, scalars, _ = _evaluate_rows(problem, row[None, :], weights)
    vector = ObjectiveVector(
        float(objs.utilization[0]),
        float(objs.load_balance[0]),
        float(objs.active_fraction[0]),
        bool(objs.feasible[0]),
    )
    nest = Nest(np.ones(problem.n), Placement((1,) * problem.n), vector, float(scalars[0]))
    return SolveResult(nest, (nest,), (nest.scalar,), time.perf_counter() - t0, 0)


def solve(problem: PlacementProblem, config: SolverConfig, trace: TextIO | None = None) -> SolveResult:
    """Run the automata-guided cuckoo search; deterministic for a fixed seed.

    Each cycle: propose one Lévy step per nest against a uniformly random
    nest (all proposals from the cycle-start population), abandon the worst
    ``ceil(p_a * pop)`` nests and regenerate them (an ``la_fraction`` share
    from the automaton bank, the rest uniformly), update the bank with the
    cycle's scalar-best and scalar-worst placements, and offer the whole
    population to the non-dominated archive.
    """
    t0 = time.perf_counter()
    m, n = problem.m, problem.n
    if m == 1:
        return _single_server_result(problem, config.weights, t0)

    rng = np.random.default_rng(config.seed)
    pop = config.pop_size
    scale = config.levy_scale if config.levy_scale is not None else 0.01 * (m - 1)
    weights = config.weights
    bank = init_bank(n, m, config.reward_a, config.penalty_b)
    archive = ParetoArchive(config.archive_cap)
    tracker = _BestTracker()

    X = np.empty((pop, n), dtype=np.float64)
    seed_la = math.ceil(config.la_fraction * pop) if config.la_applies_to in ("initial_population", "both") else 0
    if seed_la:
        X[:seed_la] = sample_assignments(bank, seed_la, rng) + 1.0
    if seed_la < pop:
        X[seed_la:] = rng.uniform(1.0, float(m), (pop - seed_la, n))

    repair_cache: dict = {}
    rows = _decode0(X, m)
    before = rows.copy()
    objs, scalars, _ = _evaluate_rows(problem, rows, weights, repair_cache)
    X = np.where(rows != before, rows + 1.0, X)
    util, lb, af, feas = (col.copy() for col in objs)
    scalars = scalars.copy()

    def offer_population() -> None:
        rejected = archive.rejects(np.stack((util, lb, af), axis=1), feas)
        for i in np.flatnonzero(~rejected):
            archive.offer(X[i], rows[i], ObjectiveVector(util[i], lb[i], af[i], bool(feas[i])), scalars[i])

    tracker.update(X, rows, BatchObjectives(util, lb, af, feas), scalars)
    offer_population()

    history: list[float] = []
    for cycle in range(config.max_cycles):
        # 1. Lévy proposals, each judged against a uniformly random nest.
        gbest = X[int(np.argmin(scalars))].copy()
        steps = _levy(rng, config.levy_beta, (pop, n))
        P = np.clip(X + scale * steps * (X - gbest), 1.0, float(m))
        prop_rows = _decode0(P, m)
        before = prop_rows.copy()
        prop_objs, prop_scalars, _ = _evaluate_rows(problem, prop_rows, weights, repair_cache)
        P = np.where(prop_rows != before, prop_rows + 1.0, P)
        targets = rng.integers(0, pop, pop)
        for i in range(pop):
            j = targets[i]
            if prop_scalars[i] < scalars[j]:
                X[j] = P[i]
                rows[j] = prop_rows[i]
                util[j] = prop_objs.utilization[i]
                lb[j] = prop_objs.load_balance[i]
                af[j] = prop_objs.active_fraction[i]
                feas[j] = prop_objs.feasible[i]
                scalars[j] = prop_scalars[i]

        # 2. Abandonment and regeneration.
        n_abandon = math.ceil(config.p_a * pop)
        if n_abandon:
            if config.abandon_strategy == "random":
                doomed = rng.permutation(pop)[:n_abandon]
            else:
                doomed = np.argsort(scalars, kind="stable")[-n_abandon:][::-1]
            n_la = (
                math.ceil(config.la_fraction * n_abandon)
                if config.la_applies_to in ("regenerated", "both")
                else 0
            )
            la_rows, uni_rows = doomed[:n_la], doomed[n_la:]
            if la_rows.size:
                X[la_rows] = sample_assignments(bank, la_rows.size, rng) + 1.0
            if uni_rows.size:
                X[uni_rows] = rng.uniform(1.0, float(m), (uni_rows.size, n))
            fresh = _decode0(X[doomed], m)
            before = fresh.copy()
            new_objs, new_scalars, _ = _evaluate_rows(problem, fresh, weights, repair_cache)
            X[doomed] = np.where(fresh != before, fresh + 1.0, X[doomed])
            rows[doomed] = fresh
            util[doomed] = new_objs.utilization
            lb[doomed] = new_objs.load_balance
            af[doomed] = new_objs.active_fraction
            feas[doomed] = new_objs.feasible
            scalars[doomed] = new_scalars

        # 3. Bank update from the cycle's scalar-best and scalar-worst placements.
        best_i = int(np.argmin(scalars))
        worst_i = int(np.argmax(scalars))
        bank = update_from_population(
            bank,
            Placement(tuple(int(v) + 1 for v in rows[best_i])),
            Placement(tuple(int(v) + 1 for v in rows[worst_i])),
        )

        # 4. Archive and bookkeeping.
        tracker.update(X, rows, BatchObjectives(util, lb, af, feas), scalars)
        offer_population()
        history.append(tracker.scalar)
        if trace is not None:
            trace.write(
                json.dumps(
                    {"cycle": cycle + 1, "best_scalar": tracker.scalar, "archive_size": len(archive)}
                )
                + "\n"
            )

    return SolveResult(
        best=tracker.best_nest(),
        archive=archive.nests(),
        history=tuple(history),
        wall_time=time.perf_counter() - t0,
        cycles_run=config.max_cycles,
    )
