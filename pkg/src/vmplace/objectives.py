"""Objective evaluation: utilization, load balance, energy proxy, feasibility, dominance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .instance import Placement, PlacementProblem

__all__ = [
    "ServerLoad",
    "ObjectiveVector",
    "Violation",
    "ScalarWeights",
    "server_loads",
    "eval_utilization",
    "eval_load_balance",
    "eval_active_fraction",
    "eval_resource_waste",
    "utilization_sum",
    "check_feasible",
    "evaluate",
    "dominates",
    "scalarize",
]

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class ServerLoad:
    """Totals for one server under one placement."""

    cpu_used: float
    mem_used: float
    utilization: float
    active: bool


@dataclass(frozen=True)
class ObjectiveVector:
    """Mean active utilization (max), load-balance std-dev (min), active fraction (min)."""

    utilization: float
    load_balance: float
    active_fraction: float
    feasible: bool


class Violation(NamedTuple):
    server: int  # 1-based
    resource: str  # "cpu" or "mem"
    excess: float


@dataclass(frozen=True)
class ScalarWeights:
    """Convex weights collapsing the three criteria into one minimized score."""

    w_util: float = 1.0 / 3.0
    w_lb: float = 1.0 / 3.0
    w_active: float = 1.0 / 3.0
    infeasibility_penalty: float = 10.0

    def __post_init__(self) -> None:
        if min(self.w_util, self.w_lb, self.w_active) < 0.0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_util + self.w_lb + self.w_active - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        if self.infeasibility_penalty <= 0.0:
            raise ValueError("infeasibility_penalty must be positive")


class BatchObjectives(NamedTuple):
    """Objective columns for a batch of assignment rows (solver fast path)."""

    utilization: np.ndarray
    load_balance: np.ndarray
    active_fraction: np.ndarray
    feasible: np.ndarray


def _assign0(problem: PlacementProblem, placement: Placement) -> np.ndarray:
    placement.validate_for(problem)
    return np.asarray(placement.assign, dtype=np.int64) - 1


def batch_loads(problem: PlacementProblem, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-server cpu/mem totals and VM counts for each 0-based assignment row."""
    rows = np.atleast_2d(rows)
    k, n = rows.shape
    m = problem.m
    flat = (rows + np.arange(k)[:, None] * m).ravel()
    size = k * m
    cpu_used = np.bincount(flat, weights=np.broadcast_to(problem.vm_cpu, (k, n)).ravel(), minlength=size)
    mem_used = np.bincount(flat, weights=np.broadcast_to(problem.vm_mem, (k, n)).ravel(), minlength=size)
    counts = np.bincount(flat, minlength=size)
    return cpu_used.reshape(k, m), mem_used.reshape(k, m), counts.reshape(k, m)


def batch_objectives(
    problem: PlacementProblem,
    cpu_used: np.ndarray,
    mem_used: np.ndarray,
    counts: np.ndarray,
) -> BatchObjectives:
    util = problem.alpha * cpu_used / problem.server_cpu + problem.beta * mem_used / problem.server_mem
    active = counts > 0
    active_n = active.sum(axis=1)
    util_mean = (util * active).sum(axis=1) / active_n
    dev = (util - util_mean[:, None]) * active
    load_balance = np.sqrt((dev * dev).sum(axis=1) / active_n)
    active_fraction = active_n / problem.m
    feasible = (cpu_used <= problem.server_cpu).all(axis=1) & (mem_used <= problem.server_mem).all(axis=1)
    return BatchObjectives(util_mean, load_balance, active_fraction, feasible)


def batch_scalarize(objs: BatchObjectives, weights: ScalarWeights) -> np.ndarray:
    base = (
        weights.w_util * (1.0 - objs.utilization)
        + weights.w_lb * objs.load_balance
        + weights.w_active * objs.active_fraction
    )
    return base + np.where(objs.feasible, 0.0, weights.infeasibility_penalty)


def server_loads(problem: PlacementProblem, placement: Placement) -> list[ServerLoad]:
    """Per-server load summary; inactive servers report zero use and utilization."""
    a0 = _assign0(problem, placement)
    cpu_used, mem_used, counts = batch_loads(problem, a0[None, :])
    util = problem.alpha * cpu_used[0] / problem.server_cpu + problem.beta * mem_used[0] / problem.server_mem
    return [
        ServerLoad(float(c), float(mm), float(u), bool(k > 0))
        for c, mm, u, k in zip(cpu_used[0], mem_used[0], util, counts[0])
    ]


def _active_utils(loads: list[ServerLoad]) -> list[float]:
    utils = [load.utilization for load in loads if load.active]
    if not utils:
        raise ValueError("no active servers")
    return utils


def eval_utilization(loads: list[ServerLoad]) -> float:
    """Mean utilization over active servers."""
    return float(np.mean(_active_utils(loads)))


def eval_load_balance(loads: list[ServerLoad]) -> float:
    """Population standard deviation of utilization over active servers."""
    return float(np.std(_active_utils(loads)))


def eval_active_fraction(loads: list[ServerLoad]) -> float:
    """Fraction of servers hosting at least one VM."""
    return sum(load.active for load in loads) / len(loads)


def eval_resource_waste(loads: list[ServerLoad]) -> float:
    """Mean unused-capacity share over active servers: 1 - mean utilization."""
    return float(np.mean([1.0 - u for u in _active_utils(loads)]))


def utilization_sum(loads: list[ServerLoad]) -> float:
    """Unnormalized sum of per-server utilization across all servers (diagnostic)."""
    return float(sum(load.utilization for load in loads))


def check_feasible(problem: PlacementProblem, placement: Placement) -> tuple[bool, list[Violation]]:
    """Capacity check per server and resource; boundary-exact sums are feasible."""
    a0 = _assign0(problem, placement)
    cpu_used, mem_used, _ = batch_loads(problem, a0[None, :])
    violations: list[Violation] = []
    for j in range(problem.m):
        if cpu_used[0, j] > problem.servers[j].cpu:
            violations.append(Violation(j + 1, "cpu", float(cpu_used[0, j] - problem.servers[j].cpu)))
        if mem_used[0, j] > problem.servers[j].mem:
            violations.append(Violation(j + 1, "mem", float(mem_used[0, j] - problem.servers[j].mem)))
    return (not violations, violations)


def evaluate(problem: PlacementProblem, placement: Placement) -> ObjectiveVector:
    """All three objectives plus feasibility for one placement (pure)."""
    a0 = _assign0(problem, placement)
    objs = batch_objectives(problem, *batch_loads(problem, a0[None, :]))
    return ObjectiveVector(
        float(objs.utilization[0]),
        float(objs.load_balance[0]),
        float(objs.active_fraction[0]),
        bool(objs.feasible[0]),
    )


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Pareto dominance; any feasible solution dominates any infeasible one."""
    if a.feasible != b.feasible:
        return a.feasible
    at_least = (
        a.utilization >= b.utilization
        and a.load_balance <= b.load_balance
        and a.active_fraction <= b.active_fraction
    )
    strictly = (
        a.utilization > b.utilization
        or a.load_balance < b.load_balance
        or a.active_fraction < b.active_fraction
    )
    return at_least and strictly


def scalarize(objs: ObjectiveVector, weights: ScalarWeights) -> float:
    """Weighted single score, lower is better; infeasibility adds a flat penalty."""
    base = (
        weights.w_util * (1.0 - objs.utilization)
        + weights.w_lb * objs.load_balance
        + weights.w_active * objs.active_fraction
    )
    return base + (0.0 if objs.feasible else weights.infeasibility_penalty)
