"""Causal geometry of the experiment in the reduction frame.

Everything is expressed in one inertial frame (the frame in which distant
state reduction completes), in SI units. Sites are points or balls; regions
are worldtubes: a spatial ball held fixed over a closed time window.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

C = 299_792_458.0  # m/s
G = 6.674e-11  # m^3 kg^-1 s^-2
H = 6.626e-34  # J s

LIGHTLIKE_EPS = 1e-9
DEFAULT_MARGIN = 100.0

IntervalClass = Literal["timelike", "spacelike", "lightlike"]


class BudgetError(ValueError):
    """A timing budget violates a named constraint."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"{constraint}: {detail}" if detail else constraint)


@dataclass(frozen=True)
class Event:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.x, self.y, self.z)):
            raise ValueError("event coordinates must be finite")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def interval_class(e1: Event, e2: Event, c: float = C, eps: float = LIGHTLIKE_EPS) -> IntervalClass:
    """Classify the separation of two events by the sign of c^2 dt^2 - |dx|^2.

    Values within ``eps`` of the larger of the two squared terms count as
    lightlike, so the decision does not depend on the choice of units.
    """
    ct2 = (c * (e2.t - e1.t)) ** 2
    dx2 = float(np.sum((e2.position - e1.position) ** 2))
    s2 = ct2 - dx2
    if abs(s2) <= eps * max(ct2, dx2):
        return "lightlike"
    return "timelike" if s2 > 0 else "spacelike"


@dataclass(frozen=True)
class Region:
    center: tuple[float, float, float]
    radius: float
    t_start: float
    t_end: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if len(self.center) != 3:
            raise ValueError("region center needs three coordinates")
        if self.radius < 0:
            raise ValueError("region radius must be non-negative")
        if self.t_start > self.t_end:
            raise ValueError("region window must satisfy t_start <= t_end")


def worst_case_events(r1: Region, r2: Region) -> tuple[Event, Event]:
    """The event pair of two worldtubes closest to being causally connected.

    That pair sits at the closest spatial approach of the two balls and at the
    two ends of the widest time span between the windows.
    """
    c1, c2 = np.array(r1.center), np.array(r2.center)
    gap = float(np.linalg.norm(c2 - c1))
    dist = max(0.0, gap - r1.radius - r2.radius)
    if r2.t_end - r1.t_start >= r1.t_end - r2.t_start:
        t1, t2 = r1.t_start, r2.t_end
    else:
        t1, t2 = r1.t_end, r2.t_start
    return Event(t1), Event(t2, dist)


def regions_spacelike(r1: Region, r2: Region, c: float = C) -> bool:
    return interval_class(*worst_case_events(r1, r2), c=c) == "spacelike"


@dataclass(frozen=True)
class TimingBudget:
    """Durations (s) and distances (m) fixing the experiment's timetable.

    ``T_extra`` and ``D_red`` default to the values implied by the other fields
    (sum of the four auxiliary durations, and ``c * T_red``); when given
    explicitly they are checked against those identities by
    :func:`validate_budget`.
    """

    T_rand: float
    T_rand_prime: float
    T_mic: float
    T_mac: float
    T_red: float
    T_geom: float
    T_mass: float
    D_ent: float
    D_red: float | None = None
    T_extra: float | None = None
    c: float = C

    def __post_init__(self):
        if self.T_extra is None:
            object.__setattr__(self, "T_extra", self.T_rand + self.T_rand_prime + self.T_mic + self.T_mac)
        if self.D_red is None:
            object.__setattr__(self, "D_red", self.c * self.T_red)

    def required_separation(self) -> float:
        return self.c * (self.T_red + self.T_geom + self.T_extra)


def reference_budget(D_ent: float = 3.4 * C, **overrides) -> TimingBudget:
    """Reference scenario: 0.1 s randomness and reduction, 0.5 s Bob operations, 2 s geometry probe."""
    base = TimingBudget(T_rand=0.1, T_rand_prime=0.1, T_mic=0.5, T_mac=0.5, T_red=0.1,
                        T_geom=2.0, T_mass=2.5, D_ent=D_ent)
    return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class ConstraintResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class BudgetReport:
    constraints: tuple[ConstraintResult, ...]
    required_D_ent: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.constraints)

    @property
    def failures(self) -> list[ConstraintResult]:
        return [c for c in self.constraints if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "required_D_ent_m": self.required_D_ent,
            "constraints": [vars(c) for c in self.constraints],
        }


_DURATIONS = ("T_rand", "T_rand_prime", "T_mic", "T_mac", "T_red", "T_geom", "T_mass")


def validate_budget(budget: TimingBudget) -> BudgetReport:
    b = budget
    out = []
    bad = [n for n in _DURATIONS + ("T_extra",) if not (getattr(b, n) > 0 and math.isfinite(getattr(b, n)))]
    out.append(ConstraintResult("positive_durations", not bad,
                                f"nonpositive or non-finite: {', '.join(bad)}" if bad else "all durations > 0"))
    parts = b.T_rand + b.T_rand_prime + b.T_mic + b.T_mac
    ok = math.isclose(b.T_extra, parts, rel_tol=1e-12, abs_tol=0.0)
    out.append(ConstraintResult("extra_time_sum", ok,
                                f"T_extra = {b.T_extra!r}, T_rand + T_rand' + T_mic + T_mac = {parts!r}"))
    need = b.required_separation()
    out.append(ConstraintResult("long_range_entanglement", b.D_ent > need,
                                f"D_ent = {b.D_ent!r} m must exceed c(T_red + T_geom + T_extra) = {need!r} m"))
    out.append(ConstraintResult("superposition_lifetime", b.T_mass > b.T_geom,
                                f"T_mass = {b.T_mass!r} s must exceed T_geom = {b.T_geom!r} s"))
    ok = math.isclose(b.T_red, b.D_red / b.c, rel_tol=1e-12, abs_tol=0.0)
    out.append(ConstraintResult("reduction_time", ok,
                                f"T_red = {b.T_red!r} s vs D_red / c = {b.D_red / b.c!r} s"))
    out.append(ConstraintResult("reduction_distance", b.D_red < b.D_ent,
                                f"D_red = {b.D_red!r} m must be below D_ent = {b.D_ent!r} m"))
    return BudgetReport(tuple(out), need)


@dataclass(frozen=True)
class Schedule:
    """Event times t_0..t_6 and the three regions they bound."""

    budget: TimingBudget
    times: tuple[float, ...]
    R_A: Region
    R_B: Region
    R_geom: Region

    def t(self, k: int) -> float:
        return self.times[k]

    @functools.cached_property
    def spacelike(self) -> bool:
        return regions_spacelike(self.R_A, self.R_B, c=self.budget.c)

    def to_rows(self) -> list[dict]:
        return [{"event": f"t_{k}", "time_s": t} for k, t in enumerate(self.times)]

    def to_dict(self) -> dict:
        return {
            "times_s": {f"t_{k}": t for k, t in enumerate(self.times)},
            "regions": {r.name: {"center_m": list(r.center), "radius_m": r.radius,
                                 "window_s": [r.t_start, r.t_end]}
                        for r in (self.R_A, self.R_B, self.R_geom)},
            "R_A_R_B_spacelike": self.spacelike,
        }


def build_schedule(budget: TimingBudget, alice_radius: float = 0.0, bob_radius: float = 0.0) -> Schedule:
    """Lay out the timetable; raises :class:`BudgetError` naming the first violated constraint."""
    report = validate_budget(budget)
    if not report.passed:
        bad = report.failures[0]
        raise BudgetError(bad.name, bad.detail)
    b = budget
    t0 = 0.0
    t1 = t0 + b.T_rand
    t2 = t1 + b.T_red
    t3 = t2 + b.T_mic
    t4 = t3 + b.T_geom
    t5 = t4 + b.T_rand_prime
    t6 = t5 + b.T_mac
    alice = (0.0, 0.0, 0.0)
    bob = (b.D_ent, 0.0, 0.0)
    return Schedule(
        budget=b,
        times=(t0, t1, t2, t3, t4, t5, t6),
        R_A=Region(alice, alice_radius, t0, t2, "R_A"),
        R_B=Region(bob, bob_radius, t0, t6, "R_B"),
        R_geom=Region(bob, bob_radius, t3, t4, "R_geom"),
    )


@dataclass(frozen=True)
class FeasibilityParams:
    """Source/probe masses and geometry for telling two classical geometries apart."""

    m_S: float
    m_P: float
    d: float
    d_prime: float
    T_geom: float
    dx_S: float
    dx_P: float
    dv_S: float
    dv_P: float
    G: float = G
    h: float = H

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class FeasibilityReport:
    K: float
    margin: float
    checks: tuple[ConstraintResult, ...] = field(default_factory=tuple)

    @property
    def distinguishable(self) -> bool:
        return all(c.passed for c in self.checks if not c.name.startswith("uncertainty"))

    @property
    def uncertainty_consistent(self) -> bool:
        return all(c.passed for c in self.checks if c.name.startswith("uncertainty"))

    @property
    def passed(self) -> bool:
        return self.distinguishable and self.uncertainty_consistent

    def to_dict(self) -> dict:
        return {
            "K_kg_m": self.K,
            "margin": self.margin,
            "distinguishable": self.distinguishable,
            "uncertainty_consistent": self.uncertainty_consistent,
            "passed": self.passed,
            "checks": [vars(c) for c in self.checks],
        }


def feasibility_check(p: FeasibilityParams, margin: float = DEFAULT_MARGIN) -> FeasibilityReport:
    """Newtonian-limit conditions for a probe mass to resolve the source's path.

    ``K = G m_S m_P T_geom^2 / d'^2`` is the momentum-times-time scale of the
    probe's gravitational deflection. "Much smaller than" is read as a ratio
    of at least ``margin``. For each of the source (S) and probe (P):

    * position spread: ``m dx * margin <= K``
    * velocity spread: ``m dv T_geom * margin <= K``
    * ordering: ``K < m d' < m d``
    * quantum limit: ``m dv dx >= h``

    Only the last check can be rescued by widening the spreads; the others
    form the ``distinguishable`` verdict, which widening never improves.
    """
    if not margin > 1:
        raise ValueError("margin must exceed 1")
    K = p.G * p.m_S * p.m_P * p.T_geom**2 / p.d_prime**2
    checks = []
    for who, m, dx, dv in (("S", p.m_S, p.dx_S, p.dv_S), ("P", p.m_P, p.dx_P, p.dv_P)):
        checks.append(ConstraintResult(f"position_spread_{who}", m * dx * margin <= K,
                                       f"m dx = {m * dx!r} vs K / margin = {K / margin!r}"))
        checks.append(ConstraintResult(f"velocity_spread_{who}", m * dv * p.T_geom * margin <= K,
                                       f"m dv T = {m * dv * p.T_geom!r} vs K / margin = {K / margin!r}"))
        checks.append(ConstraintResult(f"deflection_below_offset_{who}", K < m * p.d_prime,
                                       f"K = {K!r} vs m d' = {m * p.d_prime!r}"))
        checks.append(ConstraintResult(f"offset_ordering_{who}", m * p.d_prime < m * p.d,
                                       f"m d' = {m * p.d_prime!r} vs m d = {m * p.d!r}"))
        checks.append(ConstraintResult(f"uncertainty_{who}", m * dv * dx >= p.h,
                                       f"m dv dx = {m * dv * dx!r} vs h = {p.h!r}"))
    return FeasibilityReport(K, margin, tuple(checks))


# Passing tuple located by the grid scan in tests/test_spacetime.py.
REFERENCE_FEASIBLE = FeasibilityParams(
    m_S=1000.0, m_P=1000.0, d=2.0, d_prime=1.0, T_geom=2.0,
    dx_S=1e-9, dx_P=1e-9, dv_S=1e-10, dv_P=1e-10,
)
