"""Conditional outcome tables P(a, b, s | alpha, alpha', beta, beta').

Tables are numpy arrays of shape ``(2,) * 7`` with axes ordered
``(a, b, s, alpha, alpha_p, beta, beta_p)``. Each input slice is a
conditional distribution; input priors are not stored.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass

import numpy as np

AXES = ("a", "b", "s", "alpha", "alpha_p", "beta", "beta_p")
OUTPUTS = AXES[:3]
INPUTS = AXES[3:]
SHAPE = (2,) * len(AXES)
TOL = 1e-12


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return format(float(x), ".17g")


def input_tuples():
    return itertools.product((0, 1), repeat=len(INPUTS))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Validated conditional outcome table.

    Empirical tables may leave unobserved input slices as NaN when built with
    ``allow_missing=True``; every other slice must be a distribution.
    """

    probs: np.ndarray
    allow_missing: bool = False

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != SHAPE:
            raise ValueError(f"expected shape {SHAPE}, got {p.shape}")
        for inputs in input_tuples():
            block = p[(Ellipsis, *inputs)]
            if np.all(np.isnan(block)) and self.allow_missing:
                continue
            if np.any(~np.isfinite(block)):
                raise ValueError(f"non-finite entries for inputs {inputs}")
            if np.any(block < 0):
                raise ValueError(f"negative probability for inputs {inputs}")
            total = block.sum()
            if abs(total - 1.0) > TOL:
                raise ValueError(f"slice for inputs {inputs} sums to {total!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __call__(self, a, b, s, alpha, alpha_p, beta, beta_p) -> float:
        return float(self.probs[a, b, s, alpha, alpha_p, beta, beta_p])

    def missing_inputs(self) -> list[tuple[int, ...]]:
        return [i for i in input_tuples() if np.all(np.isnan(self.probs[(Ellipsis, *i)]))]

    def total_variation(self, other: JointDistribution) -> float:
        """Largest total-variation distance between matching input slices."""
        diff = np.abs(self.probs - other.probs).reshape(8, 16)
        return float(0.5 * np.nanmax(diff.sum(axis=0)))

    # serialization ------------------------------------------------------

    def to_rows(self) -> list[dict]:
        # input-major ordering keeps each conditional slice contiguous
        rows = []
        for inputs in input_tuples():
            for outputs in itertools.product((0, 1), repeat=len(OUTPUTS)):
                rows.append({**dict(zip(INPUTS, inputs)), **dict(zip(OUTPUTS, outputs)),
                             "p": float(self.probs[outputs + inputs])})
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(INPUTS + OUTPUTS + ("p",))
        for row in self.to_rows():
            w.writerow([row[k] for k in INPUTS + OUTPUTS] + [fmt(row["p"])])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{**{k: row[k] for k in INPUTS + OUTPUTS}, "p": fmt(row["p"])} for row in self.to_rows()]
        return json.dumps({"axes": list(AXES), "allow_missing": self.allow_missing, "rows": rows}, indent=1) + "\n"

    @classmethod
    def _from_records(cls, records, allow_missing: bool) -> JointDistribution:
        p = np.full(SHAPE, np.nan)
        seen = set()
        for rec in records:
            idx = tuple(int(rec[ax]) for ax in AXES)
            if idx in seen:
                raise ValueError(f"duplicate row for {dict(zip(AXES, idx))}")
            seen.add(idx)
            p[idx] = float(rec["p"])
        if len(seen) != 2 ** len(AXES):
            raise ValueError(f"table has {len(seen)} rows, expected {2 ** len(AXES)}")
        return cls(p, allow_missing=allow_missing)

    @classmethod
    def from_csv(cls, text: str, allow_missing: bool = False) -> JointDistribution:
        return cls._from_records(csv.DictReader(io.StringIO(text)), allow_missing)

    @classmethod
    def from_json(cls, text: str) -> JointDistribution:
        doc = json.loads(text)
        if tuple(doc.get("axes", ())) != AXES:
            raise ValueError("unexpected axis order in distribution file")
        return cls._from_records(doc["rows"], bool(doc.get("allow_missing", False)))
