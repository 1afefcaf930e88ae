"""Symmetry-penalized correlation functionals and their conjectured bounds.

For a distribution P over outcome triples, the 64 cells split into three
outcome classes: all-equal (4 cells), exactly-two-equal (36 cells), and
all-distinct (24 cells). The functional family

    f_w(P) = w * s111(P) - (1 - w) * delta(P)

combines the all-equal mass s111 with a squared-deviation penalty delta that
vanishes exactly when P is constant on each class. Each w comes with a
conjectured classical bound: distributions explainable by independent
per-edge randomness are believed to satisfy f_w(P) <= bound_w, so a positive
margin is evidence of nonclassicality.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dist import TriangleDistribution
from .errors import CounterexampleAlarm, ValidationError

# Tolerance granted to a Monte Carlo heuristic before its exceeding a
# conjectured bound is treated as an alarm.
HEURISTIC_BOUND_TOLERANCE = 1e-3

_IDX = np.indices((4, 4, 4))
MASK_ALL_EQUAL = (_IDX[0] == _IDX[1]) & (_IDX[1] == _IDX[2])
MASK_ALL_DISTINCT = (
    (_IDX[0] != _IDX[1]) & (_IDX[1] != _IDX[2]) & (_IDX[0] != _IDX[2])
)
MASK_TWO_EQUAL = ~MASK_ALL_EQUAL & ~MASK_ALL_DISTINCT
CLASS_MASKS = (MASK_ALL_EQUAL, MASK_TWO_EQUAL, MASK_ALL_DISTINCT)
CLASS_NAMES = ("all_equal", "two_equal", "all_distinct")
for _mask in CLASS_MASKS:
    _mask.flags.writeable = False


def outcome_classes() -> dict:
    """The three outcome classes as tuples of 0-based index triples."""
    return {
        name: tuple(map(tuple, np.argwhere(mask)))
        for name, mask in zip(CLASS_NAMES, CLASS_MASKS)
    }


def s111(p: TriangleDistribution) -> float:
    """Total probability of all-equal outcome triples, sum_k P(k,k,k)."""
    return math.fsum(float(p.p[k, k, k]) for k in range(4))


def delta(p: TriangleDistribution) -> float:
    """Squared deviation of P from its per-class means.

    delta(P) = sum over classes X of sum_{(a,b,c) in X} (P(a,b,c) - M_X)^2
    with M_X the mean of P over X. Nonnegative, and zero exactly when P is
    constant on each class. Summation is compensated so values near 1e-4
    survive rounding.
    """
    total = 0.0
    for mask in CLASS_MASKS:
        vals = p.p[mask]
        n = vals.size
        s = math.fsum(vals)
        sq = math.fsum(v * v for v in vals)
        total += sq - (s * s) / n
    # Roundoff can leave a tiny negative where the true value is zero.
    return max(total, 0.0)


def delta_gradient(p: np.ndarray) -> np.ndarray:
    """Entrywise gradient of delta: 2 (P(a,b,c) - M_X) on each class X."""
    g = np.empty((4, 4, 4), dtype=np.float64)
    for mask in CLASS_MASKS:
        vals = p[mask]
        g[mask] = 2.0 * (vals - vals.mean())
    return g


def f_w(p: TriangleDistribution, w: float) -> float:
    """The functional w * s111(P) - (1 - w) * delta(P)."""
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"w must be in [0, 1], got {w!r}")
    return w * s111(p) - (1.0 - w) * delta(p)


@dataclass(frozen=True)
class InequalityReport:
    """Evaluation of f_w against a classical bound."""

    w: float
    s111: float
    delta: float
    f_value: float
    bound: float
    margin: float
    classification: str

    def to_json_dict(self) -> dict:
        return {
            "w": self.w,
            "s111": self.s111,
            "delta": self.delta,
            "f_value": self.f_value,
            "bound": self.bound,
            "margin": self.margin,
            "classification": self.classification,
        }


def evaluate(p: TriangleDistribution, w: float, bound: float) -> InequalityReport:
    """Score a distribution against the bound for one w.

    margin = f_w(p) - bound; positive margin classifies as "violated".
    """
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"w must be in [0, 1], got {w!r}")
    s = s111(p)
    d = delta(p)
    value = w * s - (1.0 - w) * d
    margin = value - float(bound)
    return InequalityReport(
        w=float(w),
        s111=s,
        delta=d,
        f_value=value,
        bound=float(bound),
        margin=margin,
        classification="violated" if margin > 0.0 else "satisfied",
    )


@dataclass(frozen=True)
class SweepRow:
    """One w of a sweep, with the margin ratio against the ideal distribution."""

    report: InequalityReport
    ratio_vs_elegant: float | None


def sweep_w(p: TriangleDistribution, bounds) -> list[SweepRow]:
    """Evaluate f_w for every (w, bound) pair.

    Also reports margin(p, w) / margin(ideal, w) per w, where ideal is the
    exact tetrahedral-measurement distribution; the ratio is None where the
    ideal margin is not positive.
    """
    from .quantum import elegant_distribution

    entries = list(bounds)
    if not entries:
        raise ValidationError("bounds list must be nonempty")
    ideal = elegant_distribution()
    rows = []
    for entry in entries:
        w, bound = _coerce_bound_entry(entry)
        report = evaluate(p, w, bound)
        ideal_margin = f_w(ideal, w) - bound
        ratio = report.margin / ideal_margin if ideal_margin > 0.0 else None
        rows.append(SweepRow(report=report, ratio_vs_elegant=ratio))
    return rows


def _coerce_bound_entry(entry):
    if isinstance(entry, BoundEntry):
        return entry.w, entry.bound
    w, bound = entry[0], entry[1]
    return float(w), float(bound)


def sweep_to_csv(rows, path) -> None:
    """Write sweep rows as w,s111,delta,f_value,bound,margin,ratio_vs_elegant."""
    lines = ["w,s111,delta,f_value,bound,margin,ratio_vs_elegant"]
    for row in rows:
        r = row.report
        ratio = "" if row.ratio_vs_elegant is None else repr(float(row.ratio_vs_elegant))
        lines.append(
            f"{float(r.w)!r},{float(r.s111)!r},{float(r.delta)!r},"
            f"{float(r.f_value)!r},{float(r.bound)!r},{float(r.margin)!r},{ratio}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class BoundEntry:
    """One row of a bound table: the conjectured classical maximum at w.

    provenance is "published" for values taken from the literature and
    "heuristic" for values estimated by the gradient search in this package
    (recorded with their generation seed).
    """

    w: float
    bound: float
    provenance: str
    seed: int | None


def load_bound_table(path=None) -> list[BoundEntry]:
    """Read a bound table CSV (w,bound,provenance,seed); default is bundled."""
    if path is None:
        text = resources.files("trianglekit").joinpath("data/bounds.csv").read_text()
        name = "bundled bounds.csv"
    else:
        text = Path(path).read_text()
        name = str(path)
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != ["w", "bound", "provenance", "seed"]:
        raise ValidationError(f"{name}: header must be w,bound,provenance,seed")
    entries = []
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"{name}: line {ln}: expected 4 fields")
        try:
            w = float(row[0])
            bound = float(row[1])
            seed = None if row[3] == "" else int(row[3])
        except ValueError as exc:
            raise ValidationError(f"{name}: line {ln}: bad numeric field") from exc
        if not 0.0 <= w <= 1.0:
            raise ValidationError(f"{name}: line {ln}: w must be in [0, 1]")
        entries.append(BoundEntry(w=w, bound=bound, provenance=row[2], seed=seed))
    if not entries:
        raise ValidationError(f"{name}: no bound entries")
    return entries


def save_bound_table(entries, path) -> None:
    lines = ["w,bound,provenance,seed"]
    for e in entries:
        seed = "" if e.seed is None else str(e.seed)
        lines.append(f"{float(e.w)!r},{float(e.bound)!r},{e.provenance},{seed}")
    Path(path).write_text("\n".join(lines) + "\n")


def lookup_bound(entries, w: float, atol: float = 1e-9):
    """Find the bound entry whose w matches within atol, or None."""
    best = None
    for e in entries:
        if abs(e.w - w) <= atol and (best is None or abs(e.w - w) < abs(best.w - w)):
            best = e
    return best


def check_heuristic_against_bound(value: float, w: float, bound: float) -> bool:
    """Alarm if a heuristic local maximum exceeds the conjectured bound.

    Returns True (and emits CounterexampleAlarm) when value > bound + 1e-3.
    The value is reported as computed, never clipped.
    """
    if value > bound + HEURISTIC_BOUND_TOLERANCE:
        warnings.warn(
            CounterexampleAlarm(
                f"heuristic maximum {value!r} exceeds the conjectured classical "
                f"bound {bound!r} at w={w!r} by more than {HEURISTIC_BOUND_TOLERANCE}; "
                "this signals either an optimizer bug or a genuine counterexample"
            ),
            stacklevel=2,
        )
        return True
    return False
