"""Per-VM learning automata over the server action set, linear reward with optional penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Placement

__all__ = [
    "Automaton",
    "AutomatonBank",
    "init_bank",
    "reward",
    "penalize",
    "sample_placement",
    "sample_assignments",
    "update_from_population",
]

_SIMPLEX_TOL = 1e-9
_RENORM_TOL = 1e-12


@dataclass(frozen=True)
class Automaton:
    """Action-probability vector over the m candidate servers."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if probs.min() < 0.0:
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValueError("probabilities must sum to 1")
        probs.flags.writeable = False

    @property
    def m(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class AutomatonBank:
    """One automaton per VM; all share the same m-server action set."""

    automata: tuple[Automaton, ...]
    reward_a: float = 0.5
    penalty_b: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "automata", tuple(self.automata))
        if not self.automata:
            raise ValueError("bank needs at least one automaton")
        m = self.automata[0].m
        if any(auto.m != m for auto in self.automata):
            raise ValueError("all automata must share one action set size")
        if not 0.0 < self.reward_a < 1.0:
            raise ValueError("reward_a must lie in (0, 1)")
        if not 0.0 <= self.penalty_b < 1.0:
            raise ValueError("penalty_b must lie in [0, 1)")

    @property
    def n(self) -> int:
        return len(self.automata)

    @property
    def m(self) -> int:
        return self.automata[0].m

    def to_jsonable(self) -> dict:
        """Plain-dict dump of the bank state for debugging."""
        return {
            "reward_a": self.reward_a,
            "penalty_b": self.penalty_b,
            "probs": [auto.probs.tolist() for auto in self.automata],
        }


def init_bank(n: int, m: int, reward_a: float = 0.5, penalty_b: float = 0.05) -> AutomatonBank:
    """Bank of n automata, each uniform over m actions."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 automata and m >= 1 actions")
    uniform = np.full(m, 1.0 / m)
    return AutomatonBank(tuple(Automaton(uniform.copy()) for _ in range(n)), reward_a, penalty_b)


def _renormalized(q: np.ndarray) -> Automaton:
    total = q.sum()
    if abs(total - 1.0) > _RENORM_TOL:
        q = q / total
    return Automaton(q)


def _check_action(action: int, m: int) -> int:
    i = int(action) - 1
    if not 0 <= i < m:
        raise IndexError(f"action {action} out of range 1..{m}")
    return i


def reward(auto: Automaton, action: int, a: float) -> Automaton:
    """Shift probability mass toward ``action`` (1-based): p_i += a(1 - p_i), rest scaled by 1 - a."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("reward factor must lie in [0, 1]")
    i = _check_action(action, auto.m)
    q = auto.probs * (1.0 - a)
    q[i] += a
    return _renormalized(q)


def penalize(auto: Automaton, action: int, b: float) -> Automaton:
    """Shift mass away from ``action`` (1-based): p_i scaled by 1 - b, rest gain b/(m-1) each."""
    if not 0.0 <= b <= 1.0:
        raise ValueError("penalty factor must lie in [0, 1]")
    i = _check_action(action, auto.m)
    if auto.m == 1:
        return auto
    q = auto.probs * (1.0 - b) + b / (auto.m - 1)
    q[i] = (1.0 - b) * auto.probs[i]
    return _renormalized(q)


def sample_assignments(bank: AutomatonBank, k: int, rng: np.random.Generator) -> np.ndarray:
    """k placements drawn from the bank as a (k, n) array of 0-based server indices."""
    matrix = np.stack([auto.probs for auto in bank.automata])
    cum = np.cumsum(matrix, axis=1)
    u = rng.random((k, bank.n))
    idx = (cum[None, :, :] <= u[:, :, None]).sum(axis=2)
    return np.minimum(idx, bank.m - 1)


def sample_placement(bank: AutomatonBank, rng: np.random.Generator) -> Placement:
    """One placement drawn action-by-action from the bank's current probabilities."""
    row = sample_assignments(bank, 1, rng)[0]
    return Placement(tuple(int(v) + 1 for v in row))


def update_from_population(bank: AutomatonBank, best: Placement, worst: Placement) -> AutomatonBank:
    """Reward each VM's server in ``best``, then penalize its server in ``worst``."""
    if len(best) != bank.n or len(worst) != bank.n:
        raise ValueError("placement length must match bank size")
    automata = []
    for auto, good, bad in zip(bank.automata, best.assign, worst.assign):
        updated = reward(auto, good, bank.reward_a)
        updated = penalize(updated, bad, bank.penalty_b)
        automata.append(updated)
    return AutomatonBank(tuple(automata), bank.reward_a, bank.penalty_b)
