"""The Bell experiment between Alice's qubit and Bob's spacetime probe.

Alice measures her half of a singlet in one of four bases chosen by two free
bits. Bob rotates his qubit, entangles it with the position of a massive
body, lets the body follow one of two classical worldlines while a geometry
measurement reads out which one (bit ``s``), and finally either measures the
worldline (bit ``b``) or uncomputes it and reports ``b = 0``.

Two hypotheses for what the geometry measurement does to a superposed body
are supported:

``NO_CHANGE``
    The state is left untouched. When Bob later measures the worldline, ``s``
    is assigned the value of ``b``; when he uncomputes, ``s`` is drawn from
    the Born distribution of the untouched register.
``BORN_REDUCE``
    The register collapses to ``|x_i(t_4)>`` and ``s = i`` with probability
    ``|C_i|^2``.

Amplitudes depend only on the order of operations. Times are carried as
bookkeeping so that records can be checked against the schedule.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import hilbert
from .distribution import SHAPE, JointDistribution, input_tuples
from .hilbert import QubitBasis, StateVector, UnitaryOp
from .spacetime import Schedule, build_schedule, reference_budget

QUBIT = (0, 1)
PAIR = tuple((x, y) for x in QUBIT for y in QUBIT)
CLASSICAL_TOL = 1e-12


class ProtocolOrderError(RuntimeError):
    """An operation was applied to Bob's register in the wrong stage."""


class SMHypothesis(enum.Enum):
    NO_CHANGE = "no-change"
    BORN_REDUCE = "born-reduce"


class GeometryLabel(enum.IntEnum):
    G0 = 0
    G1 = 1


class Stage(enum.Enum):
    MIC_INIT = "mic-init"
    PATH = "path"
    MIC_FIN = "mic-fin"


@dataclass(frozen=True)
class ModeTag:
    stage: Stage
    time: float | None = None

    @classmethod
    def path(cls, t: float) -> ModeTag:
        return cls(Stage.PATH, float(t))


MIC_INIT = ModeTag(Stage.MIC_INIT)
MIC_FIN = ModeTag(Stage.MIC_FIN)


@dataclass(frozen=True, eq=False)
class BobRegister:
    """Bob's qubit plus massive body.

    ``logical`` holds the two amplitudes; ``mode`` says whether they currently
    label the microscopic qubit (before entangling or after uncomputing) or the
    worldlines ``|x_0(t)>``, ``|x_1(t)>`` of the body.
    """

    logical: StateVector
    mode: ModeTag = MIC_INIT

    def __post_init__(self):
        if self.logical.labels != QUBIT:
            raise ValueError("Bob's register is two-dimensional with labels (0, 1)")

    def geometry(self) -> GeometryLabel | None:
        """The classical geometry sourced by the body, or None if superposed."""
        if self.mode.stage is not Stage.PATH:
            return None
        for i in QUBIT:
            if abs(self.logical.amps[i]) ** 2 >= 1.0 - CLASSICAL_TOL:
                return GeometryLabel(i)
        return None


@dataclass(frozen=True)
class TrialInputs:
    alpha: int
    alpha_p: int
    beta: int
    beta_p: int

    def __post_init__(self):
        for v in (self.alpha, self.alpha_p, self.beta, self.beta_p):
            if v not in (0, 1):
                raise ValueError("inputs are bits")

    @classmethod
    def random(cls, rng: np.random.Generator) -> TrialInputs:
        return cls(*(int(v) for v in rng.integers(0, 2, size=4)))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.alpha, self.alpha_p, self.beta, self.beta_p)


@dataclass(frozen=True)
class TrialRecord:
    inputs: TrialInputs
    a: int
    b: int
    s: int
    event_times: dict = field(default_factory=dict)


# states and operators ----------------------------------------------------------

def make_singlet() -> StateVector:
    r = 1 / math.sqrt(2)
    return StateVector(PAIR, [0.0, r, -r, 0.0])


@functools.lru_cache(maxsize=None)
def alice_basis(alpha: int, alpha_p: int) -> QubitBasis:
    """The measurement basis selected by Alice's two input bits."""
    c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
    r = 1 / math.sqrt(2)
    vecs = []
    for a in QUBIT:
        sign = (-1) ** a
        if (alpha, alpha_p) == (0, 0):
            amps = [1.0 - a, float(a)]
        elif (alpha, alpha_p) == (1, 0):
            amps = [r, sign * r]
        else:
            near, far = (c, s) if alpha == 0 else (s, c)
            amps = [0.0, 0.0]
            amps[a] = near
            amps[1 - a] = sign * far
        vecs.append(StateVector(QUBIT, amps))
    return QubitBasis(tuple(vecs))


@functools.lru_cache(maxsize=None)
def u_mic(beta: int) -> UnitaryOp:
    """Identity for beta = 0; otherwise maps the Hadamard basis onto the computational one.

    For beta = 1: ``|phi_10^a> -> (-1)^a |a>`` and ``|a> -> |phi_10^{1-a}>``.
    """
    if beta == 0:
        return UnitaryOp.identity(QUBIT)
    r = 1 / math.sqrt(2)
    return UnitaryOp(QUBIT, [[r, r], [-r, r]])


def u_mac(reg: BobRegister, schedule: Schedule) -> BobRegister:
    """``|a>|x_init> -> |x_a(t_3)>``: the qubit now steers the body's worldline."""
    if reg.mode != MIC_INIT:
        raise ProtocolOrderError(f"u_mac needs the initial microscopic stage, register is {reg.mode}")
    return BobRegister(reg.logical, ModeTag.path(schedule.t(3)))


def u_pos(reg: BobRegister, t: float, schedule: Schedule) -> BobRegister:
    """Free evolution along the worldlines: ``|x_a(t')> -> |x_a(t)>``."""
    if reg.mode.stage is not Stage.PATH:
        raise ProtocolOrderError(f"u_pos needs a worldline register, register is {reg.mode}")
    if not reg.mode.time <= t <= schedule.t(5):
        raise ProtocolOrderError(f"u_pos cannot move from t={reg.mode.time} to t={t} (limit t_5={schedule.t(5)})")
    return BobRegister(reg.logical, ModeTag.path(t))


def u_mac_prime(reg: BobRegister, schedule: Schedule) -> BobRegister:
    """``|x_a(t_5)> -> |a>|x_fin>``: disentangle the body again."""
    if reg.mode != ModeTag.path(schedule.t(5)):
        raise ProtocolOrderError(f"u_mac_prime needs the register at t_5, register is {reg.mode}")
    return BobRegister(reg.logical, MIC_FIN)


# measurements -------------------------------------------------------------------

class Outcome(NamedTuple):
    value: int | None
    probability: float
    state: object


def alice_branches(alpha: int, alpha_p: int, psi: StateVector | None = None) -> list[Outcome]:
    """Alice's measurement on the A half of ``psi``; each branch carries Bob's reduced qubit."""
    psi = make_singlet() if psi is None else psi
    rot = alice_basis(alpha, alpha_p).rotation().kron(UnitaryOp.identity(QUBIT))
    rotated = hilbert.apply(rot, psi)
    out = []
    for br in hilbert.measurement_branches(rotated, [PAIR[:2], PAIR[2:]]):
        bob = None
        if br.state is not None:
            rest = br.state.amps[2 * br.outcome: 2 * br.outcome + 2]
            bob = StateVector(QUBIT, rest / np.linalg.norm(rest))
        out.append(Outcome(br.outcome, br.probability, bob))
    return out


def sm_branches(reg: BobRegister, hyp: SMHypothesis, schedule: Schedule,
                defer: bool = False) -> list[Outcome]:
    """Possible results of the geometry measurement, as ``(s, probability, register)``.

    A classical register yields its geometry with certainty under either
    hypothesis. With ``defer`` set, a superposed register under ``NO_CHANGE``
    yields a single branch with ``s = None`` to be fixed later by the
    worldline measurement.
    """
    if reg.mode.stage is not Stage.PATH or not schedule.t(3) <= reg.mode.time <= schedule.t(4):
        raise ProtocolOrderError(f"geometry measurement needs a worldline register in [t_3, t_4], got {reg.mode}")
    geom = reg.geometry()
    if geom is not None:
        post = reg if hyp is SMHypothesis.NO_CHANGE else BobRegister(reg.logical, ModeTag.path(schedule.t(4)))
        return [Outcome(int(geom), 1.0, post)]
    if hyp is SMHypothesis.NO_CHANGE:
        if defer:
            return [Outcome(None, 1.0, reg)]
        return [Outcome(br.outcome, br.probability, reg)
                for br in hilbert.measurement_branches(reg.logical, [[0], [1]])]
    return [Outcome(br.outcome, br.probability,
                    None if br.state is None else BobRegister(br.state, ModeTag.path(schedule.t(4))))
            for br in hilbert.measurement_branches(reg.logical, [[0], [1]])]


def sm_measure(reg: BobRegister, hyp: SMHypothesis, rng: np.random.Generator,
               schedule: Schedule | None = None, defer: bool = False) -> tuple[int | None, BobRegister]:
    schedule = schedule or default_schedule()
    br = _sample(sm_branches(reg, hyp, schedule, defer), rng)
    return br.value, br.state


def path_branches(reg: BobRegister, schedule: Schedule) -> list[Outcome]:
    """Bob's worldline measurement at t_5."""
    if reg.mode != ModeTag.path(schedule.t(5)):
        raise ProtocolOrderError(f"worldline measurement happens at t_5, register is {reg.mode}")
    return [Outcome(br.outcome, br.probability, br.state)
            for br in hilbert.measurement_branches(reg.logical, [[0], [1]])]


def _sample_index(probabilities, rng: np.random.Generator) -> int:
    """Index of the cumulative interval containing one uniform draw."""
    u = float(rng.random())
    total = 0.0
    last = None
    for k, p in enumerate(probabilities):
        if p <= 0.0:
            continue
        total += p
        last = k
        if u < total:
            return k
    return last


def _sample(branches, rng: np.random.Generator) -> Outcome:
    return branches[_sample_index([br.probability for br in branches], rng)]


# the experiment -------------------------------------------------------------------

@functools.lru_cache(maxsize=1)
def default_schedule() -> Schedule:
    return build_schedule(reference_budget())


@functools.lru_cache(maxsize=None)
def _alice_cached(alpha: int, alpha_p: int) -> tuple[Outcome, ...]:
    return tuple(alice_branches(alpha, alpha_p))


@functools.lru_cache(maxsize=4096)
def _register_at_t3(alpha: int, alpha_p: int, a: int, beta: int, schedule: Schedule) -> BobRegister:
    bob = _alice_cached(alpha, alpha_p)[a].state
    return u_mac(BobRegister(hilbert.apply(u_mic(beta), bob)), schedule)


@functools.lru_cache(maxsize=4096)
def _sm_cached(alpha, alpha_p, a, beta, hyp, defer, schedule) -> tuple[Outcome, ...]:
    return tuple(sm_branches(_register_at_t3(alpha, alpha_p, a, beta, schedule), hyp, schedule, defer))


def _finish_branches(reg: BobRegister, s: int | None, beta_p: int, schedule: Schedule) -> list[tuple[float, int, int]]:
    """(probability, b, s) for the steps after the geometry measurement."""
    reg = u_pos(reg, schedule.t(5), schedule)
    if beta_p == 1:
        u_mac_prime(reg, schedule)
        return [(1.0, 0, s)]
    return [(br.probability, br.value, br.value if s is None else s)
            for br in path_branches(reg, schedule) if br.probability > 0.0]


@functools.lru_cache(maxsize=4096)
def _finish_cached(alpha, alpha_p, a, beta, beta_p, hyp, sm_index, schedule) -> tuple:
    sm = _sm_cached(alpha, alpha_p, a, beta, hyp, beta_p == 0, schedule)[sm_index]
    return tuple(_finish_branches(sm.state, sm.value, beta_p, schedule))


def run_trial(inputs: TrialInputs, hyp: SMHypothesis, rng: np.random.Generator,
              schedule: Schedule | None = None) -> TrialRecord:
    """One run of the experiment with given free inputs.

    ``schedule`` must come from :func:`spacetime.build_schedule`, which refuses
    budgets that do not keep the two wings spacelike separated.
    """
    schedule = schedule or default_schedule()
    if not schedule.spacelike:
        raise ValueError("schedule does not keep Alice's and Bob's regions spacelike separated")
    al, alp, be, bep = inputs.as_tuple()
    a = _sample(_alice_cached(al, alp), rng).value
    sms = _sm_cached(al, alp, a, be, hyp, bep == 0, schedule)
    k = _sample_index([br.probability for br in sms], rng)
    finals = _finish_cached(al, alp, a, be, bep, hyp, k, schedule)
    _, b, s = finals[_sample_index([f[0] for f in finals], rng)]
    times = {"a": schedule.t(2), "s": schedule.t(4), "b": schedule.t(6)}
    return TrialRecord(inputs, int(a), int(b), int(s), times)


def run_trials(n: int, hyp: SMHypothesis, rng: np.random.Generator,
               schedule: Schedule | None = None, **fixed: int) -> list[TrialRecord]:
    """``n`` trials with uniformly random inputs, except those pinned by keyword.

    Each trial's inputs are drawn before any of its outcomes.
    """
    schedule = schedule or default_schedule()
    names = ("alpha", "alpha_p", "beta", "beta_p")
    unknown = set(fixed) - set(names)
    if unknown:
        raise TypeError(f"unknown input names: {sorted(unknown)}")
    out = []
    for _ in range(n):
        drawn = TrialInputs.random(rng)
        inputs = TrialInputs(**{k: fixed.get(k, getattr(drawn, k)) for k in names})
        out.append(run_trial(inputs, hyp, rng, schedule))
    return out


def trial_branches(inputs: TrialInputs, hyp: SMHypothesis,
                   schedule: Schedule | None = None) -> Iterator[tuple[float, int, int, int]]:
    """Every measurement history of one trial as ``(probability, a, b, s)``."""
    schedule = schedule or default_schedule()
    al, alp, be, bep = inputs.as_tuple()
    for alice in _alice_cached(al, alp):
        if alice.probability <= 0.0:
            continue
        for sm in _sm_cached(al, alp, alice.value, be, hyp, bep == 0, schedule):
            if sm.probability <= 0.0:
                continue
            for p, b, s in _finish_branches(sm.state, sm.value, bep, schedule):
                yield alice.probability * sm.probability * p, alice.value, b, s


def exact_distribution(hyp: SMHypothesis, schedule: Schedule | None = None) -> JointDistribution:
    """Enumerate all measurement branches for every input tuple; no sampling."""
    p = np.zeros(SHAPE)
    for inputs in input_tuples():
        for prob, a, b, s in trial_branches(TrialInputs(*inputs), hyp, schedule):
            p[(a, b, s) + inputs] += prob
    return JointDistribution(p)


def closed_form_pas(a: int, s: int, alpha: int, alpha_p: int, beta: int) -> float:
    """Half the squared overlap of Alice's outcome vector with Bob's complementary vector."""
    amp = hilbert.inner(alice_basis(alpha, alpha_p)[a], alice_basis(beta, 0)[1 - s])
    return 0.5 * abs(amp) ** 2
