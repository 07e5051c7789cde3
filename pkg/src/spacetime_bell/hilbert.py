"""Small dense Hilbert spaces with labelled bases.

States and operators carry an explicit, ordered tuple of basis labels so that
subsystems can be combined with :func:`tensor` and measured by naming the
labels that span each outcome subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, NamedTuple, Sequence

import numpy as np

TOL = 1e-12

Label = Hashable


def _as_tuple(label: Label) -> tuple:
    return label if isinstance(label, tuple) else (label,)


def _product_labels(left: Sequence[Label], right: Sequence[Label]) -> tuple:
    labels = tuple(_as_tuple(x) + _as_tuple(y) for x in left for y in right)
    if len(set(labels)) != len(labels):
        raise ValueError("tensor product produces colliding basis labels")
    return labels


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over an ordered tuple of unique basis labels."""

    labels: tuple
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique")
        if amps.shape != (len(labels),):
            raise ValueError(f"expected {len(labels)} amplitudes, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, labels: Sequence[Label], label: Label) -> StateVector:
        labels = tuple(labels)
        amps = np.zeros(len(labels), dtype=complex)
        amps[labels.index(label)] = 1.0
        return cls(labels, amps)

    def __len__(self) -> int:
        return len(self.labels)

    def amplitude(self, label: Label) -> complex:
        return complex(self.amps[self.labels.index(label)])

    def probabilities(self) -> dict:
        return {lab: float(abs(c) ** 2) for lab, c in zip(self.labels, self.amps)}

    def reordered(self, labels: Sequence[Label]) -> StateVector:
        """Same state expressed in a permutation of its own basis labels."""
        labels = tuple(labels)
        if labels == self.labels:
            return self
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise ValueError("label sets differ")
        index = {lab: i for i, lab in enumerate(self.labels)}
        return StateVector(labels, self.amps[[index[lab] for lab in labels]])

    def allclose(self, other: StateVector, atol: float = TOL) -> bool:
        other = other.reordered(self.labels)
        return bool(np.allclose(self.amps, other.amps, rtol=0.0, atol=atol))

    def equal_up_to_phase(self, other: StateVector, atol: float = TOL) -> bool:
        return abs(abs(inner(self, other)) - 1.0) <= atol


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Square unitary matrix acting on the span of ``labels``."""

    labels: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        mat = np.array(self.matrix, dtype=complex)
        n = len(labels)
        if len(set(labels)) != n:
            raise ValueError("basis labels must be unique")
        if mat.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(n)))
        if err > TOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - 1| = {err:.3g})")
        mat.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, labels: Sequence[Label]) -> UnitaryOp:
        return cls(tuple(labels), np.eye(len(labels)))

    def dagger(self) -> UnitaryOp:
        return UnitaryOp(self.labels, self.matrix.conj().T)

    def kron(self, other: UnitaryOp) -> UnitaryOp:
        return UnitaryOp(_product_labels(self.labels, other.labels),
                         np.kron(self.matrix, other.matrix))

    def __matmul__(self, other: UnitaryOp) -> UnitaryOp:
        if other.labels != self.labels:
            raise ValueError("operators act on different bases")
        return UnitaryOp(self.labels, self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class QubitBasis:
    """Ordered orthonormal pair of two-dimensional states."""

    vectors: tuple[StateVector, StateVector]

    def __post_init__(self):
        if len(self.vectors) != 2:
            raise ValueError("a qubit basis has exactly two vectors")
        v0, v1 = self.vectors
        if len(v0) != 2 or v0.labels != v1.labels:
            raise ValueError("basis vectors must share one two-label basis")
        if abs(inner(v0, v1)) > TOL:
            raise ValueError("basis vectors are not orthogonal")
        object.__setattr__(self, "vectors", tuple(self.vectors))

    def __getitem__(self, k: int) -> StateVector:
        return self.vectors[k]

    @property
    def labels(self) -> tuple:
        return self.vectors[0].labels

    def rotation(self) -> UnitaryOp:
        """Unitary sending the k-th basis vector to the k-th label's basis state."""
        rows = np.array([v.amps.conj() for v in self.vectors])
        return UnitaryOp(self.labels, rows)


def tensor(u: StateVector, v: StateVector) -> StateVector:
    return StateVector(_product_labels(u.labels, v.labels), np.kron(u.amps, v.amps))


def apply(op: UnitaryOp, psi: StateVector) -> StateVector:
    if len(op.labels) != len(psi.labels):
        raise ValueError(f"dimension mismatch: operator {len(op.labels)}, state {len(psi.labels)}")
    psi = psi.reordered(op.labels)
    return StateVector(op.labels, op.matrix @ psi.amps)


def inner(u: StateVector, v: StateVector) -> complex:
    """<u|v>, conjugate-linear in ``u``."""
    if len(u.labels) != len(v.labels):
        raise ValueError(f"dimension mismatch: {len(u.labels)} vs {len(v.labels)}")
    v = v.reordered(u.labels)
    return complex(np.vdot(u.amps, v.amps))


class Branch(NamedTuple):
    outcome: int
    probability: float
    state: StateVector | None  # None for zero-probability outcomes


def measurement_branches(psi: StateVector, projectors: Sequence[Sequence[Label]]) -> list[Branch]:
    """All outcomes of a projective measurement, with Born probabilities.

    ``projectors[k]`` lists the basis labels spanning the k-th outcome
    subspace; together they must partition ``psi.labels``.
    """
    index = {lab: i for i, lab in enumerate(psi.labels)}
    seen: set = set()
    for subspace in projectors:
        for lab in subspace:
            if lab not in index:
                raise ValueError(f"unknown label {lab!r} in projector")
            if lab in seen:
                raise ValueError(f"label {lab!r} appears in more than one projector")
            seen.add(lab)
    if len(seen) != len(index):
        raise ValueError("projectors do not cover the whole basis")

    branches = []
    for k, subspace in enumerate(projectors):
        mask = np.zeros(len(psi.labels), dtype=bool)
        mask[[index[lab] for lab in subspace]] = True
        projected = np.where(mask, psi.amps, 0.0)
        prob = float(np.vdot(projected, projected).real)
        if prob <= 0.0:
            branches.append(Branch(k, 0.0, None))
            continue
        branches.append(Branch(k, prob, StateVector(psi.labels, projected / np.sqrt(prob))))
    return branches


def choose(branches: Sequence[Branch], u: float) -> Branch:
    """Pick the branch whose cumulative-probability interval contains ``u``."""
    total = 0.0
    last = None
    for br in branches:
        if br.probability <= 0.0:
            continue
        total += br.probability
        last = br
        if u < total:
            return br
    # u landed in the rounding gap above the final cumulative sum
    if last is None:
        raise ValueError("no branch has positive probability")
    return last


def measure(psi: StateVector, projectors: Sequence[Sequence[Label]],
            rng: np.random.Generator) -> tuple[int, StateVector, float]:
    """Sample a projective measurement; returns (outcome, post-state, probability)."""
    br = choose(measurement_branches(psi, projectors), float(rng.random()))
    return br.outcome, br.state, br.probability


def random_state(labels: Sequence[Label], rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    z = rng.normal(size=len(labels)) + 1j * rng.normal(size=len(labels))
    return StateVector(tuple(labels), z / np.linalg.norm(z))


def random_unitary(labels: Sequence[Label], rng: np.random.Generator) -> UnitaryOp:
    n = len(labels)
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return UnitaryOp(tuple(labels), q * (d / np.abs(d)))
