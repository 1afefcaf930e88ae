"""Probability tables over the three-party, four-outcome measurement scenario.

The central object is :class:`TriangleDistribution`, a normalized 4x4x4 array
P(a, b, c) with outcomes indexed 0..3 internally. All human-facing formats
(CSV columns, report labels) use 1-based outcome labels 1..4; the JSON format
stores the flat 0-based array.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError

NORMALIZATION_ATOL = 1e-9


class TriangleDistribution:
    """Immutable normalized distribution over outcome triples (a, b, c).

    Parameters
    ----------
    probabilities : array_like
        Shape (4, 4, 4), entries in [0, 1], summing to 1 within 1e-9.
    """

    __slots__ = ("_p",)

    def __init__(self, probabilities):
        arr = np.asarray(probabilities, dtype=np.float64)
        if arr.shape != (4, 4, 4):
            raise ValidationError(
                f"distribution must have shape (4, 4, 4), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("distribution entries must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError(
                "distribution entries must lie in [0, 1]; "
                f"range is [{arr.min()!r}, {arr.max()!r}]"
            )
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZATION_ATOL:
            raise ValidationError(
                f"distribution must sum to 1 within {NORMALIZATION_ATOL}, got {total!r}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        self._p = arr

    @property
    def p(self) -> np.ndarray:
        """Read-only (4, 4, 4) array of probabilities."""
        return self._p

    def __getitem__(self, key):
        return self._p[key]

    def __eq__(self, other):
        if not isinstance(other, TriangleDistribution):
            return NotImplemented
        return np.array_equal(self._p, other._p)

    def __hash__(self):
        return hash(self._p.tobytes())

    def __repr__(self):
        return f"TriangleDistribution(sum={float(self._p.sum())!r})"

    def allclose(self, other: "TriangleDistribution", atol: float = 1e-10) -> bool:
        return bool(np.allclose(self._p, other._p, rtol=0.0, atol=atol))

    @staticmethod
    def uniform() -> "TriangleDistribution":
        """The uniform distribution, 1/64 in every cell."""
        return TriangleDistribution(np.full((4, 4, 4), 1.0 / 64.0))

    # -- JSON format: {"outcomes": 4, "p": [64 floats]}, index = 16a + 4b + c --

    def to_json_dict(self) -> dict:
        return {"outcomes": 4, "p": [float(x) for x in self._p.reshape(64)]}

    @staticmethod
    def from_json_dict(obj: dict) -> "TriangleDistribution":
        if not isinstance(obj, dict):
            raise ValidationError("distribution JSON must be an object")
        if obj.get("outcomes") != 4:
            raise ValidationError('distribution JSON must declare "outcomes": 4')
        flat = obj.get("p")
        if not isinstance(flat, list) or len(flat) != 64:
            raise ValidationError('distribution JSON field "p" must list 64 numbers')
        return TriangleDistribution(np.asarray(flat, dtype=np.float64).reshape(4, 4, 4))

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @staticmethod
    def load_json(path) -> "TriangleDistribution":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
        return TriangleDistribution.from_json_dict(obj)

    # -- CSV format: header a,b,c,p with 1-based outcome labels --

    def save_csv(self, path) -> None:
        lines = ["a,b,c,p"]
        for a in range(4):
            for b in range(4):
                for c in range(4):
                    lines.append(f"{a + 1},{b + 1},{c + 1},{float(self._p[a, b, c])!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def load_csv(path) -> "TriangleDistribution":
        arr = _read_table_csv(path, value_column="p", parser=float)
        return TriangleDistribution(arr)


def _read_table_csv(path, value_column: str, parser):
    """Read a strict a,b,c,<value> table with 1-based labels.

    Every one of the 64 outcome triples must appear exactly once. Errors
    report the offending line number.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header = lines[0].strip()
    expected = f"a,b,c,{value_column}"
    if header != expected:
        raise ValidationError(f"{path}: line 1: header must be '{expected}', got '{header}'")
    arr = np.zeros((4, 4, 4), dtype=np.float64)
    seen = np.zeros((4, 4, 4), dtype=bool)
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValidationError(f"{path}: line {ln}: expected 4 comma-separated fields")
        try:
            a, b, c = (int(parts[i]) for i in range(3))
        except ValueError as exc:
            raise ValidationError(f"{path}: line {ln}: outcome labels must be integers") from exc
        if not all(1 <= x <= 4 for x in (a, b, c)):
            raise ValidationError(f"{path}: line {ln}: outcome labels must be in 1..4")
        try:
            value = parser(parts[3])
        except ValueError as exc:
            raise ValidationError(f"{path}: line {ln}: bad {value_column} value {parts[3]!r}") from exc
        if seen[a - 1, b - 1, c - 1]:
            raise ValidationError(f"{path}: line {ln}: duplicate cell ({a},{b},{c})")
        seen[a - 1, b - 1, c - 1] = True
        arr[a - 1, b - 1, c - 1] = value
    if not seen.all():
        missing = np.argwhere(~seen)[0] + 1
        raise ValidationError(
            f"{path}: missing cell ({missing[0]},{missing[1]},{missing[2]}); all 64 required"
        )
    return arr


def distance(p: TriangleDistribution, q: TriangleDistribution) -> float:
    """Euclidean distance between two distributions over all 64 cells."""
    return float(np.sqrt(np.sum((p.p - q.p) ** 2)))
