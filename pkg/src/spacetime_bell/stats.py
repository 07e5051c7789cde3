"""Bell statistics: marginals, CHSH correlators, estimation from samples, signalling audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .distribution import SHAPE, JointDistribution, input_tuples

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
EXACT_TOL = 1e-12
DEFAULT_DELTA = 0.01


@dataclass(frozen=True)
class Marginals:
    """Pairwise outcome marginals, each of shape (2, 2, 2, 2, 2, 2).

    Axes are the two kept outcomes followed by (alpha, alpha', beta, beta').
    """

    AB: np.ndarray
    AS: np.ndarray
    BS: np.ndarray


def marginals(P: JointDistribution) -> Marginals:
    p = P.probs
    return Marginals(AB=p.sum(axis=2), AS=p.sum(axis=1), BS=p.sum(axis=0))


def chsh_slice(P: JointDistribution, alpha_p: int = 1, beta_p: int = 1) -> np.ndarray:
    """P_AS(a, s | alpha, beta) at fixed alpha', beta'; axes (a, s, alpha, beta)."""
    return marginals(P).AS[:, :, :, alpha_p, :, beta_p]


def correlators(table: np.ndarray) -> np.ndarray:
    """E[alpha, beta] = P(a = s) - P(a != s) from a (a, s, alpha, beta) table."""
    t = np.asarray(table, dtype=float)
    return t[0, 0] + t[1, 1] - t[0, 1] - t[1, 0]


@dataclass(frozen=True)
class CHSHReport:
    I: float
    E: np.ndarray = field(repr=False)
    ci_halfwidth: float = 0.0
    classical_bound: float = CLASSICAL_BOUND
    tsirelson: float = TSIRELSON_BOUND

    @property
    def verdict(self) -> str:
        low = abs(self.I) - self.ci_halfwidth
        if low <= self.classical_bound + EXACT_TOL:
            return "classical-compatible"
        if low <= self.tsirelson + EXACT_TOL:
            return "quantum"
        return "superquantum-flag"

    def to_dict(self) -> dict:
        return {
            "I": self.I,
            "E": {f"{al}{be}": float(self.E[al, be]) for al in (0, 1) for be in (0, 1)},
            "ci_halfwidth": self.ci_halfwidth,
            "classical_bound": self.classical_bound,
            "tsirelson": self.tsirelson,
            "verdict": self.verdict,
        }


def chsh(table: np.ndarray, ci_halfwidth: float = 0.0) -> CHSHReport:
    """CHSH value E(0,0) + E(0,1) - E(1,0) + E(1,1) of an (a, s, alpha, beta) table."""
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2, 2, 2):
        raise ValueError(f"expected an (a, s, alpha, beta) table of shape (2, 2, 2, 2), got {t.shape}")
    E = correlators(t)
    I = float(E[0, 0] + E[0, 1] - E[1, 0] + E[1, 1])
    return CHSHReport(I, E, ci_halfwidth)


def hoeffding_halfwidth(n: int, delta: float = DEFAULT_DELTA) -> float:
    """Half-width used for CHSH estimates: 4 sqrt(ln(2/delta) / 2n)."""
    if n <= 0:
        return math.inf
    return 4.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


@dataclass(frozen=True)
class Estimate:
    distribution: JointDistribution
    counts: np.ndarray = field(repr=False)  # trials per input tuple, shape (2, 2, 2, 2)
    chsh: CHSHReport | None
    n_min: int
    empty_inputs: tuple[tuple[int, ...], ...]
    n: int

    def to_dict(self) -> dict:
        return {
            "trials": self.n,
            "n_min": self.n_min,
            "empty_inputs": [list(t) for t in self.empty_inputs],
            "chsh": None if self.chsh is None else self.chsh.to_dict(),
        }


def tabulate(records: Iterable) -> np.ndarray:
    """Outcome counts with the axis layout of a JointDistribution."""
    counts = np.zeros(SHAPE, dtype=np.int64)
    for r in records:
        i = r.inputs
        counts[r.a, r.b, r.s, i.alpha, i.alpha_p, i.beta, i.beta_p] += 1
    return counts


def estimate(records: Sequence, delta: float = DEFAULT_DELTA,
             alpha_p: int = 1, beta_p: int = 1) -> Estimate:
    """Empirical conditional table and CHSH estimate from trial records.

    The confidence half-width uses the smallest count among the four
    (alpha, beta) cells of the CHSH slice. Unobserved input tuples stay NaN
    and are listed in ``empty_inputs``; if any CHSH cell is empty no CHSH
    estimate is returned.
    """
    if len(records) == 0:
        raise ValueError("no trial records to estimate from")
    counts = tabulate(records)
    per_input = counts.sum(axis=(0, 1, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = counts / per_input
    empty = tuple(i for i in input_tuples() if per_input[i] == 0)
    dist = JointDistribution(probs, allow_missing=True)
    cells = per_input[:, alpha_p, :, beta_p]
    n_min = int(cells.min())
    report = None
    if n_min > 0:
        report = chsh(chsh_slice(dist, alpha_p, beta_p), hoeffding_halfwidth(n_min, delta))
    return Estimate(dist, per_input, report, n_min, empty, len(records))


@dataclass(frozen=True)
class AuditReport:
    alice_discrepancy: float  # spread of Alice's marginal over Bob's inputs
    bob_discrepancy: float  # spread of Bob's (b, s) marginal over Alice's inputs
    tolerance: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.alice_discrepancy, self.bob_discrepancy)

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "alice_discrepancy": self.alice_discrepancy,
            "bob_discrepancy": self.bob_discrepancy,
            "max_discrepancy": self.max_discrepancy,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _spread(arr: np.ndarray, axes: tuple[int, ...]) -> float:
    with np.errstate(invalid="ignore"):
        hi = np.nanmax(arr, axis=axes)
        lo = np.nanmin(arr, axis=axes)
    spread = hi - lo
    return float(np.nanmax(spread)) if np.any(np.isfinite(spread)) else 0.0


def no_signalling_audit(P: JointDistribution, tolerance: float = EXACT_TOL) -> AuditReport:
    """Check that each wing's outcome marginal ignores the other wing's inputs.

    For empirical tables pass a statistical ``tolerance``, e.g. from
    :func:`signalling_envelope`.
    """
    p = P.probs
    alice = p.sum(axis=(1, 2))  # a, alpha, alpha', beta, beta'
    bob = p.sum(axis=0)  # b, s, alpha, alpha', beta, beta'
    return AuditReport(
        alice_discrepancy=_spread(alice, (3, 4)),
        bob_discrepancy=_spread(bob, (2, 3)),
        tolerance=tolerance,
    )


def signalling_envelope(n_min: int, delta: float = DEFAULT_DELTA, cells: int = 128) -> float:
    """Distribution-free bound on a marginal difference between two sampled input tuples.

    Each marginal is within sqrt(ln(2 cells / delta) / 2n) of its mean, so the
    difference of two is within twice that, simultaneously for all cells.
    """
    if n_min <= 0:
        return math.inf
    return 2.0 * math.sqrt(math.log(2.0 * cells / delta) / (2.0 * n_min))
