"""Finite statistics: event counts, Poisson resampling, synthetic data.

Real experiments report integer event counts per outcome triple, not
probabilities. This module holds the counts container, the normalization
step, a Poisson bootstrap for error bars on any scalar statistic, and a
generator of synthetic count tables from a model distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dist import TriangleDistribution, _read_table_csv
from .errors import EstimationError, ValidationError
from .visibility import apply_visibility

__all__ = [
    "CountsTable",
    "ResampleReport",
    "normalize",
    "poisson_resample",
    "synthesize_experiment",
]

DEFAULT_REPLICATES = 50


class CountsTable:
    """Immutable (4, 4, 4) table of nonnegative integer event counts."""

    __slots__ = ("_counts", "_metadata")

    def __init__(self, counts, metadata: dict | None = None):
        arr = np.asarray(counts)
        if arr.shape != (4, 4, 4):
            raise ValidationError(f"counts must have shape (4, 4, 4), got {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(rounded)) or np.any(rounded != np.floor(rounded)):
                raise ValidationError("counts must be integers")
            arr = rounded.astype(np.int64)
        else:
            arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValidationError("counts must be nonnegative")
        arr.flags.writeable = False
        self._counts = arr
        self._metadata = dict(metadata) if metadata else {}

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def metadata(self) -> dict:
        return dict(self._metadata)

    @property
    def total(self) -> int:
        return int(self._counts.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountsTable):
            return NotImplemented
        return bool(np.array_equal(self._counts, other._counts)) and self._metadata == other._metadata

    def __repr__(self) -> str:
        return f"CountsTable(total={self.total})"

    # -- JSON format: {"outcomes": 4, "counts": [64 ints], "total", "metadata"} --

    def to_json_dict(self) -> dict:
        return {
            "outcomes": 4,
            "counts": [int(x) for x in self._counts.reshape(64)],
            "total": self.total,
            "metadata": self._metadata,
        }

    @staticmethod
    def from_json_dict(obj: dict) -> "CountsTable":
        if not isinstance(obj, dict):
            raise ValidationError("counts JSON must be an object")
        if obj.get("outcomes") != 4:
            raise ValidationError('counts JSON must declare "outcomes": 4')
        counts = obj.get("counts")
        if not isinstance(counts, list) or len(counts) != 64:
            raise ValidationError('counts JSON must hold a "counts" list of 64 integers')
        table = CountsTable(np.asarray(counts).reshape(4, 4, 4),
                            metadata=obj.get("metadata") or {})
        if "total" in obj and int(obj["total"]) != table.total:
            raise ValidationError(
                f'declared total {obj["total"]} does not match the summed counts {table.total}'
            )
        return table

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @staticmethod
    def load_json(path) -> "CountsTable":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
        return CountsTable.from_json_dict(obj)

    # -- CSV format: header a,b,c,count with 1-based outcome labels --

    def save_csv(self, path) -> None:
        lines = ["a,b,c,count"]
        for a in range(4):
            for b in range(4):
                for c in range(4):
                    lines.append(f"{a + 1},{b + 1},{c + 1},{int(self._counts[a, b, c])}")
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def load_csv(path) -> "CountsTable":
        arr = _read_table_csv(path, value_column="count", parser=int)
        return CountsTable(arr)


def normalize(table: CountsTable) -> TriangleDistribution:
    """Relative frequencies of a counts table as a distribution."""
    total = table.total
    if total < 1:
        raise ValidationError("cannot normalize a counts table with zero events")
    return TriangleDistribution(table.counts.astype(np.float64) / total)


@dataclass(frozen=True)
class ResampleReport:
    """Bootstrap summary of a scalar statistic over resampled count tables.

    values holds the statistic on each successful replicate in replicate
    order; failures lists (replicate_index, reason) for replicates whose
    statistic raised or returned a non-finite value. Failed replicates are
    excluded from mean/std and flag the report, never silently dropped.
    Replicate r draws from the stream default_rng(seed + r).
    """

    statistic_values: tuple[float, ...]
    mean: float
    std: float
    replicates: int
    seed: int
    statistic_name: str = ""
    failures: tuple[tuple[int, str], ...] = ()
    flagged: bool = False
    metadata: dict = field(default_factory=dict, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "statistic": self.statistic_name,
            "values": list(self.statistic_values),
            "mean": self.mean,
            "std": self.std,
            "replicates": self.replicates,
            "seed": self.seed,
            "seed_rule": "replicate r uses seed + r",
            "failures": [{"replicate": r, "reason": msg} for r, msg in self.failures],
            "flagged": self.flagged,
            "metadata": self.metadata,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")


def poisson_resample(
    table: CountsTable,
    statistic,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    statistic_name: str = "",
) -> ResampleReport:
    """Propagate Poissonian counting noise through an arbitrary statistic.

    Each replicate r redraws every cell from Poisson(observed count) using
    its own stream default_rng(seed + r), normalizes the resampled table,
    and applies ``statistic`` (a callable taking a TriangleDistribution and
    returning a float). The report carries the per-replicate values, their
    mean, and the ddof=1 standard deviation.
    """
    if replicates < 2:
        raise ValidationError("replicates must be >= 2 to estimate a spread")
    if not callable(statistic):
        raise ValidationError("statistic must be callable")
    values = []
    failures = []
    for r in range(replicates):
        rng = np.random.default_rng(seed + r)
        resampled = CountsTable(rng.poisson(table.counts),
                                metadata={"replicate": r, "resampled_from_total": table.total})
        try:
            value = float(statistic(normalize(resampled)))
        except Exception as exc:  # statistic is arbitrary user code
            failures.append((r, f"{type(exc).__name__}: {exc}"))
            continue
        if not math.isfinite(value):
            failures.append((r, f"non-finite statistic value {value!r}"))
            continue
        values.append(value)
    if len(values) < 2:
        raise EstimationError(
            f"only {len(values)} of {replicates} replicates produced a finite statistic"
        )
    arr = np.asarray(values)
    return ResampleReport(
        statistic_values=tuple(values),
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)),
        replicates=replicates,
        seed=seed,
        statistic_name=statistic_name,
        failures=tuple(failures),
        flagged=bool(failures),
    )


def synthesize_experiment(
    p: TriangleDistribution,
    total_events: int,
    nu: float = 1.0,
    seed: int = 0,
) -> CountsTable:
    """Draw a synthetic counts table from a noisy version of ``p``.

    Applies visibility nu to the distribution, then draws ``total_events``
    outcomes multinomially with the stream default_rng(seed).
    """
    if total_events < 1:
        raise ValidationError("total_events must be >= 1")
    noisy = apply_visibility(p, nu)
    pv = noisy.p.reshape(64)
    pv = pv / pv.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(total_events, pv).reshape(4, 4, 4)
    return CountsTable(
        counts,
        metadata={"visibility": nu, "seed": seed, "total_events": total_events,
                  "source": "synthetic"},
    )
