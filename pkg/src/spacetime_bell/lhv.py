"""Local hidden-variable models for the (alpha, beta) -> (a, s) CHSH scenario.

With binary inputs and outputs, every factorized model is a mixture of the 16
deterministic response pairs, so the classical CHSH bound can be certified by
exhaustion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .distribution import SHAPE, JointDistribution
from .stats import chsh


@dataclass(frozen=True)
class DeterministicStrategy:
    a_map: tuple[int, int]  # Alice's output for alpha = 0, 1
    s_map: tuple[int, int]  # geometry bit for beta = 0, 1

    def table(self) -> np.ndarray:
        t = np.zeros((2, 2, 2, 2))
        for al, be in itertools.product((0, 1), repeat=2):
            t[self.a_map[al], self.s_map[be], al, be] = 1.0
        return t


def all_strategies() -> list[DeterministicStrategy]:
    return [DeterministicStrategy((a0, a1), (s0, s1))
            for a0, a1, s0, s1 in itertools.product((0, 1), repeat=4)]


@dataclass(frozen=True)
class LHVModel:
    strategies: tuple[DeterministicStrategy, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.strategies),):
            raise ValueError("one weight per strategy")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "weights", w)

    @classmethod
    def random(cls, rng: np.random.Generator) -> LHVModel:
        strategies = all_strategies()
        return cls(tuple(strategies), rng.dirichlet(np.ones(len(strategies))))


def model_distribution(m: LHVModel) -> np.ndarray:
    """P_AS(a, s | alpha, beta) of the mixture; axes (a, s, alpha, beta)."""
    return sum(w * st.table() for st, w in zip(m.strategies, m.weights))


def to_joint(table: np.ndarray) -> JointDistribution:
    """Embed an (a, s, alpha, beta) table as a full joint distribution.

    Bob's reported bit is fixed to 0 and the primed inputs are ignored, so the
    embedding carries exactly the locality structure of the table.
    """
    t = np.asarray(table, dtype=float)
    p = np.zeros(SHAPE)
    p[:, 0, :, :, :, :, :] = t[:, :, :, None, :, None]
    return JointDistribution(p)


@dataclass(frozen=True)
class CHSHExtrema:
    max_I: float
    min_I: float
    argmax: tuple[DeterministicStrategy, ...]
    argmin: tuple[DeterministicStrategy, ...]

    def to_dict(self) -> dict:
        fmt = lambda s: {"a_map": list(s.a_map), "s_map": list(s.s_map)}  # noqa: E731
        return {"max_I": self.max_I, "min_I": self.min_I,
                "argmax": [fmt(s) for s in self.argmax], "argmin": [fmt(s) for s in self.argmin]}


def max_deterministic_chsh(strategies: Sequence[DeterministicStrategy] | None = None) -> CHSHExtrema:
    strategies = all_strategies() if strategies is None else list(strategies)
    values = [chsh(st.table()).I for st in strategies]
    hi, lo = max(values), min(values)
    return CHSHExtrema(hi, lo,
                       tuple(s for s, v in zip(strategies, values) if v == hi),
                       tuple(s for s, v in zip(strategies, values) if v == lo))


@dataclass(frozen=True)
class FitResult:
    model: LHVModel
    distance: float  # input-averaged total variation distance


def best_lhv_fit(target: np.ndarray) -> FitResult:
    """Closest LHV mixture to ``target`` in input-averaged total variation.

    Solved as a linear program over the 16 weights plus one slack per table
    entry bounding ``|mixture - target|``.
    """
    t = np.asarray(target, dtype=float)
    if t.shape != (2, 2, 2, 2):
        raise ValueError(f"expected an (a, s, alpha, beta) table, got shape {t.shape}")
    if np.any(t < -1e-12) or np.any(np.abs(t.sum(axis=(0, 1)) - 1.0) > 1e-9):
        raise ValueError("target must be a normalized conditional distribution")
    strategies = all_strategies()
    k = len(strategies)
    D = np.array([st.table().ravel() for st in strategies]).T  # (16 entries, k)
    n = D.shape[0]
    tv = t.ravel()
    # minimize (1/4) * (1/2) * sum(slack) over [w, slack]
    cost = np.concatenate([np.zeros(k), np.full(n, 0.125)])
    A_ub = np.block([[D, -np.eye(n)], [-D, -np.eye(n)]])
    b_ub = np.concatenate([tv, -tv])
    A_eq = np.concatenate([np.ones(k), np.zeros(n)])[None, :]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (k + n), method="highs")
    if not res.success:
        raise RuntimeError(f"LP solver failed: {res.message}")
    w = np.clip(res.x[:k], 0.0, None)
    w /= w.sum()
    model = LHVModel(tuple(strategies), w)
    fitted = model_distribution(model)
    distance = 0.125 * float(np.abs(fitted - t).sum())
    return FitResult(model, distance)
