"""Measurement-visibility noise model and critical-visibility estimation.

White noise on every party's measurement mixes each POVM element with I/4 at
weight (1 - nu). On the level of the outcome distribution this reduces to a
closed formula in the marginals of P, so no operators are needed:

    P_nu(i,j,k) = nu^3 P(i,j,k)
                + nu^2 (1-nu)/4 [sums of P over one index]
                + nu  ((1-nu)/4)^2 [sums of P over two indices]
                + ((1-nu)/4)^3

Sweeping nu and fitting the distance-to-classical-set curve near nu = 1 with
a line gives the critical visibility as the x-intercept.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dist import TriangleDistribution
from .errors import ComputationError, EstimationError, ValidationError

# Distances below this are reported as-is but flagged: the gradient search
# never returns exactly zero even for classical inputs.
DISTANCE_FLOOR = 3e-3

# Per-point seeds are derived as base_seed + SEED_STRIDE * point_index so
# neighboring points never share restart streams.
SEED_STRIDE = 100003

DEFAULT_NUS = (
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8,
    0.85, 0.875, 0.9, 0.925, 0.95, 0.975, 1.0,
)

DEFAULT_WINDOW = (0.9, 1.0)


def apply_visibility(p: TriangleDistribution, nu: float) -> TriangleDistribution:
    """Distribution observed when every party's measurement has visibility nu."""
    if not 0.0 <= nu <= 1.0:
        raise ValidationError(f"visibility must be in [0, 1], got {nu!r}")
    arr = p.p
    q = (1.0 - nu) / 4.0
    # one index summed out (pair marginals, broadcast back over the summed axis)
    m_ab = arr.sum(axis=2, keepdims=True)
    m_ac = arr.sum(axis=1, keepdims=True)
    m_bc = arr.sum(axis=0, keepdims=True)
    # two indices summed out (single-party marginals)
    m_a = arr.sum(axis=(1, 2), keepdims=True)
    m_b = arr.sum(axis=(0, 2), keepdims=True)
    m_c = arr.sum(axis=(0, 1), keepdims=True)
    out = (
        nu**3 * arr
        + nu**2 * q * (m_ab + m_ac + m_bc)
        + nu * q**2 * (m_a + m_b + m_c)
        + q**3
    )
    return TriangleDistribution(out)


@dataclass(frozen=True)
class LineFit:
    """Least-squares line over a visibility window, with its x-intercept."""

    slope: float
    intercept: float
    x_intercept: float
    window: tuple[float, float]

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "x_intercept": self.x_intercept,
            "window": [self.window[0], self.window[1]],
        }


@dataclass(frozen=True)
class VisibilityPoint:
    nu: float
    distance: float
    distance_std: float | None
    flag: str
    seed: int | None = None


@dataclass(frozen=True)
class VisibilityCurve:
    """Distance-to-classical-set versus measurement visibility."""

    points: tuple[VisibilityPoint, ...]
    fit: LineFit | None = None

    def __post_init__(self):
        nus = [pt.nu for pt in self.points]
        if any(b <= a for a, b in zip(nus, nus[1:])):
            raise ValidationError("visibility values must be strictly increasing")
        for pt in self.points:
            if math.isfinite(pt.distance) and pt.distance < 0.0:
                raise ValidationError("distances must be nonnegative")
        object.__setattr__(self, "points", tuple(self.points))


def _window_points(points, window):
    lo, hi = window
    if not lo < hi:
        raise ValidationError(f"fit window must satisfy lo < hi, got {window!r}")
    pts = []
    for pt in points:
        nu = pt[0] if isinstance(pt, tuple) else pt.nu
        dist = pt[1] if isinstance(pt, tuple) else pt.distance
        if lo <= nu <= hi and math.isfinite(dist):
            pts.append((nu, dist))
    return pts


def fit_line(points, window=DEFAULT_WINDOW) -> LineFit:
    """Least-squares line through the curve points inside the window.

    Raises EstimationError when fewer than two points fall in the window or
    the fitted slope is not positive (no x-intercept to the left).
    """
    pts = _window_points(points, window)
    if len(pts) < 2:
        raise EstimationError(
            f"need at least 2 finite points in window {window}, found {len(pts)}"
        )
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    if slope <= 0.0:
        raise EstimationError(
            f"fitted slope must be positive to locate a crossing, got {slope!r}"
        )
    return LineFit(
        slope=float(slope),
        intercept=float(intercept),
        x_intercept=float(-intercept / slope),
        window=(float(window[0]), float(window[1])),
    )


def critical_visibility(curve, window=DEFAULT_WINDOW) -> float:
    """Visibility at which the fitted distance line crosses zero.

    ``curve`` is a VisibilityCurve or an iterable of (nu, distance) pairs.
    """
    points = curve.points if isinstance(curve, VisibilityCurve) else list(curve)
    return fit_line(points, window).x_intercept


def visibility_sweep(
    p: TriangleDistribution,
    nus,
    lhv_config,
    window=DEFAULT_WINDOW,
    fit_window: bool = True,
) -> VisibilityCurve:
    """Fit the classical distance of the depolarized distribution per nu.

    Each point runs a full restart search against apply_visibility(p, nu)
    with seed = config.seed + 100003 * point_index; the per-point spread is
    the sample standard deviation over successful restarts. Points whose
    every restart failed are recorded with flag "fit_failed" and excluded
    from the line fit.
    """
    from . import lhv

    nus = [float(nu) for nu in nus]
    if any(b <= a for a, b in zip(nus, nus[1:])):
        raise ValidationError("visibility values must be strictly increasing")
    points = []
    for index, nu in enumerate(nus):
        seed = lhv_config.seed + SEED_STRIDE * index
        config = dataclasses.replace(
            lhv_config, seed=seed, objective="distance-to-target"
        )
        noisy = apply_visibility(p, nu)
        try:
            result = lhv.fit(noisy, config)
        except ComputationError:
            points.append(
                VisibilityPoint(nu=nu, distance=float("nan"), distance_std=None,
                                flag="fit_failed", seed=seed)
            )
            continue
        ok_values = [v for v in result.per_restart if math.isfinite(v)]
        std = float(np.std(ok_values, ddof=1)) if len(ok_values) >= 2 else None
        flag = "consistent_with_local" if result.best_value < DISTANCE_FLOOR else "ok"
        points.append(
            VisibilityPoint(nu=nu, distance=result.best_value, distance_std=std,
                            flag=flag, seed=seed)
        )
    fit = None
    if fit_window:
        try:
            fit = fit_line(points, window)
        except EstimationError:
            fit = None
    return VisibilityCurve(points=tuple(points), fit=fit)


def curve_to_csv(curve: VisibilityCurve, path) -> None:
    """Write curve points as nu,distance,distance_std,flag."""
    lines = ["nu,distance,distance_std,flag"]
    for pt in curve.points:
        std = "" if pt.distance_std is None else repr(float(pt.distance_std))
        lines.append(f"{float(pt.nu)!r},{float(pt.distance)!r},{std},{pt.flag}")
    Path(path).write_text("\n".join(lines) + "\n")


def fit_to_json(fit: LineFit, path) -> None:
    Path(path).write_text(json.dumps(fit.to_json_dict()) + "\n")
