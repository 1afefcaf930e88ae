"""Gradient-trained response-function models of triangle-classical correlations.

A classical explanation of a triangle distribution is three independent
hidden variables alpha, beta, gamma (uniform on [0,1] by default) and three
response functions: party A sees only (beta, gamma), B only (gamma, alpha),
C only (alpha, beta). Each response function is a small feed-forward network
mapping its two hidden values to a point on the 4-outcome simplex, and the
model distribution is the Monte Carlo average

    P(a,b,c) ~= (1/M) sum_i pA(a|beta_i,gamma_i) pB(b|gamma_i,alpha_i)
                             pC(c|alpha_i,beta_i).

Training minimizes the squared distance to a target distribution or,
alternatively, ascends the symmetry-penalized functional f_w. Because every
model is classical by construction, a trained value is always an inner
(achievable) estimate of what classical strategies can do.

Determinism contract
--------------------
Restart r owns the random stream ``default_rng(seed + r)``, consumed in a
fixed order: network initialization, then one (M, 3k) uniform block per
training step, then (EVAL_CHUNK, 3k) blocks for the final evaluation. Results
for a given restart are bit-identical no matter how many other restarts run
alongside it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dist import TriangleDistribution, distance
from .errors import ComputationError, ValidationError
from .inequality import (
    MASK_ALL_EQUAL,
    CLASS_MASKS,
    check_heuristic_against_bound,
    delta,
    lookup_bound,
    load_bound_table,
    s111,
)

__all__ = [
    "TrainingConfig",
    "ResponseNetwork",
    "LhvModel",
    "FitResult",
    "sample_hidden_triples",
    "model_distribution",
    "distance",
    "fit",
    "maximize_inequality",
    "gradient_check",
    "save_model",
    "load_model",
]

OBJECTIVE_DISTANCE = "distance-to-target"
OBJECTIVE_MAXIMIZE = "maximize-f_w"

ACTIVATIONS = ("tanh",)

# Fixed evaluation chunk length; part of the determinism contract above.
EVAL_CHUNK = 8192


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs of the restart search. Defaults are the desk-scale settings."""

    batch_size: int = 4000
    step_size: float = 0.08
    schedule: str = "cosine"
    steps: int = 10_000
    restarts: int = 20
    m_eval: int = 1_000_000
    seed: int = 0
    objective: str = OBJECTIVE_DISTANCE
    hidden: tuple[int, ...] = (32, 32)
    activation: str = "tanh"
    hidden_dim: int = 1
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.m_eval < self.batch_size:
            raise ValidationError("m_eval must be >= batch_size")
        if self.steps < 1 or self.restarts < 1:
            raise ValidationError("steps and restarts must be >= 1")
        if not (math.isfinite(self.step_size) and self.step_size > 0):
            raise ValidationError("step_size must be a positive finite real")
        if self.schedule not in ("cosine", "constant"):
            raise ValidationError(f"unknown schedule {self.schedule!r}")
        if self.objective not in (OBJECTIVE_DISTANCE, OBJECTIVE_MAXIMIZE):
            raise ValidationError(f"unknown objective {self.objective!r}")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValidationError("hidden widths must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.hidden_dim < 1:
            raise ValidationError("hidden_dim must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValidationError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (2 * self.hidden_dim,) + self.hidden + (4,)

    def to_json_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "step_size": self.step_size,
            "schedule": self.schedule,
            "steps": self.steps,
            "restarts": self.restarts,
            "m_eval": self.m_eval,
            "seed": self.seed,
            "objective": self.objective,
            "hidden": list(self.hidden),
            "activation": self.activation,
            "hidden_dim": self.hidden_dim,
            "dtype": self.dtype,
        }

    @staticmethod
    def from_json_dict(obj: dict) -> "TrainingConfig":
        if not isinstance(obj, dict):
            raise ValidationError("training config must be a JSON object")
        kwargs = dict(obj)
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(kwargs["hidden"])
        try:
            return TrainingConfig(**kwargs)
        except TypeError as exc:
            raise ValidationError(f"bad training config field: {exc}") from exc


@dataclass(frozen=True)
class ResponseNetwork:
    """One party's response function: [0,1]^(2k) -> 4-outcome simplex."""

    widths: tuple[int, ...]
    activation: str
    weights: tuple  # ((W, b) per layer), float64, read-only

    def __post_init__(self):
        if len(self.widths) < 2 or self.widths[-1] != 4:
            raise ValidationError("network must map its inputs to 4 outputs")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.widths) - 1:
            raise ValidationError("one (W, b) pair required per layer")
        frozen = []
        for li, (w, b) in enumerate(self.weights):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.shape != (self.widths[li], self.widths[li + 1]) or b.shape != (self.widths[li + 1],):
                raise ValidationError(f"layer {li} weight shapes do not match widths")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {li} weights must be finite")
            w = w.copy(); w.flags.writeable = False
            b = b.copy(); b.flags.writeable = False
            frozen.append((w, b))
        object.__setattr__(self, "weights", tuple(frozen))
        object.__setattr__(self, "widths", tuple(int(x) for x in self.widths))

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in self.weights)

    def probabilities(self, inputs) -> np.ndarray:
        """Forward pass: (n, 2k) hidden-variable pairs to (n, 4) probabilities."""
        u = np.asarray(inputs, dtype=np.float64)
        if u.ndim == 1:
            u = u[None, :]
        if u.ndim != 2 or u.shape[1] != self.widths[0]:
            raise ValidationError(f"inputs must have {self.widths[0]} columns")
        h = u
        last = len(self.weights) - 1
        for li, (w, b) in enumerate(self.weights):
            z = h @ w + b
            if li < last:
                h = np.tanh(z)
            else:
                z = z - z.max(axis=1, keepdims=True)
                e = np.exp(z)
                h = e / e.sum(axis=1, keepdims=True)
        return h


@dataclass(frozen=True)
class LhvModel:
    """Three response networks wired in the triangle pattern.

    Party A reads (beta, gamma), B reads (gamma, alpha), C reads
    (alpha, beta). The restriction is structural: a party's network has no
    input slot for the source it does not touch.
    """

    networks: tuple[ResponseNetwork, ResponseNetwork, ResponseNetwork]
    hidden_dim: int = 1

    def __post_init__(self):
        if len(self.networks) != 3:
            raise ValidationError("a model needs exactly three response networks")
        if self.hidden_dim < 1:
            raise ValidationError("hidden_dim must be >= 1")
        for net in self.networks:
            if net.widths[0] != 2 * self.hidden_dim:
                raise ValidationError(
                    f"networks must take {2 * self.hidden_dim} inputs for hidden_dim={self.hidden_dim}"
                )
        object.__setattr__(self, "networks", tuple(self.networks))

    def response(self, party: int, pair_inputs) -> np.ndarray:
        """Outcome probabilities of one party given its two hidden values."""
        if party not in (0, 1, 2):
            raise ValidationError("party must be 0 (A), 1 (B), or 2 (C)")
        return self.networks[party].probabilities(pair_inputs)


def sample_hidden_triples(count: int, seed: int, hidden_dim: int = 1) -> np.ndarray:
    """I.i.d. uniform hidden-variable triples, shape (count, 3) for scalar sources.

    For hidden_dim k > 1 the shape is (count, 3, k). Deterministic for a
    given seed.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    if hidden_dim < 1:
        raise ValidationError("hidden_dim must be >= 1")
    rng = np.random.default_rng(seed)
    if hidden_dim == 1:
        return rng.random((count, 3))
    return rng.random((count, 3, hidden_dim))


def party_inputs(samples: np.ndarray, party: int) -> np.ndarray:
    """Slice each party's visible hidden variables out of sampled triples.

    Column blocks are ordered (preceding source, following source) in the
    cyclic order of the triangle: A gets (beta, gamma), B (gamma, alpha),
    C (alpha, beta).
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 2:
        s = s[:, :, None]
    if s.ndim != 3 or s.shape[1] != 3:
        raise ValidationError("samples must have shape (n, 3) or (n, 3, k)")
    alpha, beta, gamma = s[:, 0], s[:, 1], s[:, 2]
    pairs = {0: (beta, gamma), 1: (gamma, alpha), 2: (alpha, beta)}[party]
    return np.concatenate(pairs, axis=1)


def model_distribution(model: LhvModel, samples) -> TriangleDistribution:
    """Monte Carlo estimate of the model's outcome distribution.

    Averages the product pA(a) pB(b) pC(c) over the supplied hidden-variable
    samples; the result is classical by construction.
    """
    s = np.asarray(samples, dtype=np.float64)
    n = s.shape[0] if s.ndim >= 2 else 0
    if n < 1:
        raise ValidationError("samples must be nonempty")
    probs = [model.response(party, party_inputs(s, party)) for party in range(3)]
    p = _average_product(probs[0], probs[1], probs[2])
    return TriangleDistribution(p)


def _average_product(pa: np.ndarray, pb: np.ndarray, pc: np.ndarray) -> np.ndarray:
    n = pa.shape[0]
    pbc = (pb[:, :, None] * pc[:, None, :]).reshape(n, 16)
    return (pa.T @ pbc).reshape(4, 4, 4) / n


@dataclass(frozen=True)
class FitResult:
    """Outcome of a restart search.

    per_restart holds one evaluated value per restart (NaN for restarts that
    went non-finite); failed lists (restart_index, first_bad_step). The best
    value is the min (distance objective) or max (f_w objective) over the
    surviving restarts, ties resolved toward the lowest restart index.
    """

    objective: str
    best_value: float
    best_index: int
    per_restart: tuple[float, ...]
    failed: tuple[tuple[int, int], ...]
    model: LhvModel
    distribution: TriangleDistribution
    config: TrainingConfig
    seed_provenance: dict = field(repr=False)
    w: float | None = None
    bound: float | None = None
    alarm: bool = False

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective,
            "w": self.w,
            "best_value": self.best_value,
            "best_index": self.best_index,
            "per_restart": [x if math.isfinite(x) else None for x in self.per_restart],
            "failed": [{"restart": r, "first_bad_step": s} for r, s in self.failed],
            "bound": self.bound,
            "alarm": self.alarm,
            "config": self.config.to_json_dict(),
            "seed_provenance": self.seed_provenance,
            "distribution": self.distribution.to_json_dict(),
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")


class _Search:
    """Restart-batched trainer. Parties are stacked on axis 0 as
    [A restarts | B restarts | C restarts] so every layer op is one batched
    matmul; per-restart slices never mix, keeping each restart's arithmetic
    identical to a standalone run."""

    def __init__(self, config: TrainingConfig):
        self.cfg = config
        self.R = config.restarts
        self.M = config.batch_size
        self.k = config.hidden_dim
        self.dtype = np.float32 if config.dtype == "float32" else np.float64
        self.widths = config.widths
        self.rngs = [np.random.default_rng(config.seed + r) for r in range(self.R)]
        R, L = self.R, len(self.widths) - 1
        self.W = [np.empty((3 * R, self.widths[i], self.widths[i + 1]), self.dtype) for i in range(L)]
        self.b = [np.zeros((3 * R, 1, self.widths[i + 1]), self.dtype) for i in range(L)]
        for r, rng in enumerate(self.rngs):
            for party in range(3):
                for li in range(L):
                    fan_in = self.widths[li]
                    self.W[li][party * R + r] = rng.normal(
                        0.0, 1.0 / math.sqrt(fan_in), self.W[li].shape[1:]
                    )
        self.mW = [np.zeros_like(w) for w in self.W]
        self.vW = [np.zeros_like(w) for w in self.W]
        self.mb = [np.zeros_like(v) for v in self.b]
        self.vb = [np.zeros_like(v) for v in self.b]
        # training buffers
        self.U = np.empty((3 * R, self.M, 2 * self.k), self.dtype)
        self.acts = [self.U] + [
            np.empty((3 * R, self.M, self.widths[i + 1]), self.dtype) for i in range(L)
        ]
        self.pairs = np.empty((3 * R, self.M, 16), self.dtype)
        self.dp = np.empty((3 * R, self.M, 4), self.dtype)
        self.tmp4 = np.empty((3 * R, self.M, 4), self.dtype)
        self.dx = [np.empty((3 * R, self.M, self.widths[i]), self.dtype) for i in range(1, L)]
        self.Gs = np.empty((3 * R, 16, 4), self.dtype)
        self.gW = [np.empty_like(w) for w in self.W]
        self.gb = [np.empty_like(v) for v in self.b]
        self.ones_row = np.ones((1, 1, self.M), self.dtype)
        self.first_bad_step = {}
        self.ok = np.ones(self.R, dtype=bool)

    # -- shared pieces ----------------------------------------------------

    def _fill_inputs(self, U, s):
        # s has shape (R, m, 3, k); axis 2 indexes the sources (alpha, beta, gamma)
        k, R = self.k, (U.shape[0] // 3)
        alpha, beta, gamma = s[:, :, 0, :], s[:, :, 1, :], s[:, :, 2, :]
        U[0 * R:1 * R, :, 0:k] = beta
        U[0 * R:1 * R, :, k:] = gamma
        U[1 * R:2 * R, :, 0:k] = gamma
        U[1 * R:2 * R, :, k:] = alpha
        U[2 * R:3 * R, :, 0:k] = alpha
        U[2 * R:3 * R, :, k:] = beta

    def _forward(self, acts, W, b):
        L = len(W)
        for li in range(L):
            z = acts[li + 1]
            np.matmul(acts[li], W[li], out=z)
            z += b[li]
            if li < L - 1:
                np.tanh(z, out=z)
            else:
                z -= z.max(axis=2, keepdims=True)
                np.exp(z, out=z)
                z /= z.sum(axis=2, keepdims=True)
        return acts[-1]

    def _distribution64(self, p, pairs, m):
        R = p.shape[0] // 3
        pa, pb, pc = p[0:R], p[R:2 * R], p[2 * R:3 * R]
        v = pairs.reshape(3 * R, m, 4, 4)
        np.multiply(pb[:, :, :, None], pc[:, :, None, :], out=v[0:R])
        np.multiply(pa[:, :, :, None], pc[:, :, None, :], out=v[R:2 * R])
        np.multiply(pa[:, :, :, None], pb[:, :, None, :], out=v[2 * R:3 * R])
        P = np.matmul(pa.transpose(0, 2, 1), pairs[0:R]).astype(np.float64)
        P /= m
        return P.reshape(R, 4, 4, 4)

    # -- one training step -------------------------------------------------

    def _loss_gradient(self, P, target, w):
        """dLoss/dP as (R,4,4,4) float64; loss is ||P-T||^2 or -f_w(P)."""
        if target is not None:
            return 2.0 * (P - target)
        G = np.empty_like(P)
        for mask in CLASS_MASKS:
            vals = P[:, mask]
            G[:, mask] = 2.0 * (vals - vals.mean(axis=1, keepdims=True))
        G *= (1.0 - w)
        G[:, MASK_ALL_EQUAL] -= w
        return G

    def _step(self, t, target, w):
        cfg = self.cfg
        if cfg.schedule == "cosine":
            lr = 0.5 * cfg.step_size * (1.0 + math.cos(math.pi * (t - 1) / cfg.steps))
        else:
            lr = cfg.step_size
        s = np.stack([rng.random((self.M, 3 * self.k)) for rng in self.rngs]).astype(self.dtype)
        self._fill_inputs(self.U, s.reshape(self.R, self.M, 3, self.k))
        p = self._forward(self.acts, self.W, self.b)
        P = self._distribution64(p, self.pairs, self.M)
        bad = ~np.isfinite(P.reshape(self.R, -1)).all(axis=1)
        for r in np.nonzero(bad & self.ok)[0]:
            self.ok[r] = False
            self.first_bad_step[int(r)] = t
        G = self._loss_gradient(P, target, w)
        G /= self.M
        R = self.R
        G32 = G.astype(self.dtype)
        self.Gs[0:R] = G32.reshape(R, 4, 16).transpose(0, 2, 1)
        self.Gs[R:2 * R] = G32.transpose(0, 1, 3, 2).reshape(R, 16, 4)
        self.Gs[2 * R:3 * R] = G32.reshape(R, 16, 4)
        np.matmul(self.pairs, self.Gs, out=self.dp)
        # softmax backward: dz = p * (dp - <dp, p>)
        np.multiply(self.dp, p, out=self.tmp4)
        rowsum = self.tmp4.sum(axis=2, keepdims=True)
        np.subtract(self.dp, rowsum, out=self.dp)
        np.multiply(p, self.dp, out=self.dp)
        dz = self.dp
        L = len(self.W)
        bc1 = 1.0 - 0.9 ** t
        bc2 = 1.0 - 0.999 ** t
        for li in range(L - 1, -1, -1):
            x = self.acts[li]
            np.matmul(x.transpose(0, 2, 1), dz, out=self.gW[li])
            np.matmul(self.ones_row, dz, out=self.gb[li])
            if li > 0:
                dxb = self.dx[li - 1]
                np.matmul(dz, self.W[li].transpose(0, 2, 1), out=dxb)
                # tanh backward reuses the activation buffer: x <- dx * (1 - x^2)
                np.multiply(x, x, out=x)
                np.subtract(1.0, x, out=x)
                np.multiply(dxb, x, out=x)
                dz = x
            self._adam(self.W[li], self.gW[li], self.mW[li], self.vW[li], lr, bc1, bc2)
            self._adam(self.b[li], self.gb[li], self.mb[li], self.vb[li], lr, bc1, bc2)

    @staticmethod
    def _adam(par, g, m, v, lr, bc1, bc2, eps=1e-8):
        m *= 0.9
        m += 0.1 * g
        v *= 0.999
        np.multiply(g, g, out=g)
        v += 0.001 * g
        np.divide(v, bc2, out=g)
        np.sqrt(g, out=g)
        g += eps
        np.divide(m, g, out=g)
        g *= lr / bc1
        par -= g

    # -- final evaluation (always float64) ---------------------------------

    def _evaluate(self, m_eval):
        R, k = self.R, self.k
        W64 = [w.astype(np.float64) for w in self.W]
        b64 = [v.astype(np.float64) for v in self.b]
        total = np.zeros((R, 4, 4, 4))
        done = 0
        acts = None
        while done < m_eval:
            m = min(EVAL_CHUNK, m_eval - done)
            if acts is None or acts[0].shape[1] != m:
                U = np.empty((3 * R, m, 2 * k))
                acts = [U] + [np.empty((3 * R, m, wd)) for wd in self.widths[1:]]
                pairs = np.empty((3 * R, m, 16))
            s = np.stack([rng.random((m, 3 * k)) for rng in self.rngs])
            self._fill_inputs(acts[0], s.reshape(R, m, 3, k))
            p = self._forward(acts, W64, b64)
            total += self._distribution64(p, pairs, m) * m
            done += m
        return total / m_eval

    def run(self, target: np.ndarray | None, w: float | None):
        cfg = self.cfg
        for t in range(1, cfg.steps + 1):
            self._step(t, target, w)
        P = self._evaluate(cfg.m_eval)
        finite = np.isfinite(P.reshape(self.R, -1)).all(axis=1)
        values = np.full(self.R, np.nan)
        for r in range(self.R):
            if not (self.ok[r] and finite[r]):
                self.first_bad_step.setdefault(r, cfg.steps)
                continue
            if target is not None:
                values[r] = math.sqrt(float(np.sum((P[r] - target) ** 2)))
            else:
                dist_r = TriangleDistribution(P[r])
                values[r] = w * s111(dist_r) - (1.0 - w) * delta(dist_r)
        if not np.isfinite(values).any():
            raise ComputationError("every restart diverged to non-finite values")
        best = int(np.nanargmin(values) if target is not None else np.nanargmax(values))
        model = self._extract_model(best)
        return values, best, TriangleDistribution(P[best]), model

    def _extract_model(self, r: int) -> LhvModel:
        nets = []
        for party in range(3):
            layers = []
            for li in range(len(self.W)):
                w = self.W[li][party * self.R + r].astype(np.float64)
                bias = self.b[li][party * self.R + r, 0].astype(np.float64)
                layers.append((w, bias))
            nets.append(
                ResponseNetwork(widths=self.widths, activation=self.cfg.activation,
                                weights=tuple(layers))
            )
        return LhvModel(networks=tuple(nets), hidden_dim=self.k)


def _seed_provenance(config: TrainingConfig) -> dict:
    return {
        "base_seed": config.seed,
        "restart_seed_rule": "base_seed + restart_index",
        "stream_order": "init, one batch per step, evaluation chunks",
        "eval_chunk": EVAL_CHUNK,
    }


def fit(target: TriangleDistribution, config: TrainingConfig) -> FitResult:
    """Search for the classical model closest to ``target``.

    Runs config.restarts independent trainings (restart r seeded with
    seed + r), each minimizing the squared Euclidean distance between the
    Monte Carlo model distribution (fresh batch per step) and the target.
    The reported distances use m_eval fresh samples in float64. Restarts
    whose loss goes non-finite are recorded in ``failed`` and excluded from
    the minimum, never silently dropped.
    """
    if not isinstance(target, TriangleDistribution):
        raise ValidationError("target must be a TriangleDistribution")
    if config.objective != OBJECTIVE_DISTANCE:
        raise ValidationError(f"fit requires objective {OBJECTIVE_DISTANCE!r}")
    search = _Search(config)
    values, best, dist_best, model = search.run(target.p, None)
    return FitResult(
        objective=config.objective,
        best_value=float(values[best]),
        best_index=best,
        per_restart=tuple(float(v) for v in values),
        failed=tuple(sorted((r, s) for r, s in search.first_bad_step.items())),
        model=model,
        distribution=dist_best,
        config=config,
        seed_provenance=_seed_provenance(config),
    )


def maximize_inequality(w: float, config: TrainingConfig, bound="auto") -> FitResult:
    """Ascend f_w over classical models; the best value is an inner estimate.

    ``bound`` controls the counterexample check: a number compares the best
    value against that conjectured bound, "auto" looks the bound up in the
    bundled table (exact w match), and None skips the check. A value more
    than 1e-3 above the bound raises the CounterexampleAlarm warning and
    sets ``alarm``; the value itself is reported unclipped either way.
    """
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"w must be in [0, 1], got {w!r}")
    if config.objective != OBJECTIVE_MAXIMIZE:
        raise ValidationError(f"maximize_inequality requires objective {OBJECTIVE_MAXIMIZE!r}")
    search = _Search(config)
    values, best, dist_best, model = search.run(None, float(w))
    bound_value = None
    if bound == "auto":
        try:
            entry = lookup_bound(load_bound_table(), w)
        except (FileNotFoundError, ValidationError):
            entry = None
        bound_value = entry.bound if entry is not None else None
    elif bound is not None:
        bound_value = float(bound)
    best_value = float(values[best])
    alarm = False
    if bound_value is not None:
        alarm = check_heuristic_against_bound(best_value, w, bound_value)
    return FitResult(
        objective=config.objective,
        best_value=best_value,
        best_index=best,
        per_restart=tuple(float(v) for v in values),
        failed=tuple(sorted((r, s) for r, s in search.first_bad_step.items())),
        model=model,
        distribution=dist_best,
        config=config,
        seed_provenance=_seed_provenance(config),
        w=float(w),
        bound=bound_value,
        alarm=alarm,
    )


# -- analytic gradients of the squared-distance loss (float64 reference) --

def _loss_value(model: LhvModel, target: np.ndarray, samples: np.ndarray) -> float:
    probs = [model.response(party, party_inputs(samples, party)) for party in range(3)]
    p = _average_product(*probs)
    return float(np.sum((p - target) ** 2))


def _loss_gradients(model: LhvModel, target: np.ndarray, samples: np.ndarray):
    """Analytic d/dparams of sum((P_model - target)^2) on fixed samples."""
    n = samples.shape[0]
    acts_all, probs = [], []
    for party in range(3):
        u = party_inputs(samples, party)
        acts = [u]
        h = u
        layers = model.networks[party].weights
        for li, (wmat, bias) in enumerate(layers):
            z = h @ wmat + bias
            if li < len(layers) - 1:
                h = np.tanh(z)
            else:
                z = z - z.max(axis=1, keepdims=True)
                e = np.exp(z)
                h = e / e.sum(axis=1, keepdims=True)
            acts.append(h)
        acts_all.append(acts)
        probs.append(h)
    pa, pb, pc = probs
    P = _average_product(pa, pb, pc)
    G = 2.0 * (P - target) / n
    pbc = (pb[:, :, None] * pc[:, None, :]).reshape(n, 16)
    pac = (pa[:, :, None] * pc[:, None, :]).reshape(n, 16)
    pab = (pa[:, :, None] * pb[:, None, :]).reshape(n, 16)
    dps = (
        pbc @ G.reshape(4, 16).T,
        pac @ G.transpose(0, 2, 1).reshape(16, 4),
        pab @ G.reshape(16, 4),
    )
    grads = []
    for party in range(3):
        acts = acts_all[party]
        p = probs[party]
        dp = dps[party]
        dz = p * (dp - (dp * p).sum(axis=1, keepdims=True))
        layers = model.networks[party].weights
        party_grads = [None] * len(layers)
        for li in range(len(layers) - 1, -1, -1):
            x = acts[li]
            party_grads[li] = (x.T @ dz, dz.sum(axis=0))
            if li > 0:
                dx = dz @ layers[li][0].T
                dz = dx * (1.0 - x * x)
        grads.append(party_grads)
    return grads


def gradient_check(
    model: LhvModel,
    target: TriangleDistribution,
    samples,
    subset_size: int = 64,
    seed: int = 0,
    step: float = 1e-6,
) -> float:
    """Compare analytic loss gradients against central finite differences.

    Both sides see the same fixed samples. Returns the maximum relative
    error over a random subset of parameter coordinates. Each comparison is
    normalized by max(|analytic|, |numeric|, 0.001 * scale) with scale the
    largest analytic gradient magnitude; the floor keeps finite-difference
    roundoff on numerically-negligible coordinates (which a step of 1e-6
    cannot resolve) from registering as disagreement.
    """
    s = np.asarray(samples, dtype=np.float64)
    tgt = target.p
    analytic = _loss_gradients(model, tgt, s)
    scale = max(
        (float(np.max(np.abs(arr))) for party in analytic for pair in party for arr in pair),
        default=0.0,
    )
    floor = max(1e-3 * scale, 1e-12)
    coords = []
    for party in range(3):
        for li, (wmat, bias) in enumerate(model.networks[party].weights):
            for idx in range(wmat.size):
                coords.append((party, li, 0, idx))
            for idx in range(bias.size):
                coords.append((party, li, 1, idx))
    rng = np.random.default_rng(seed)
    if subset_size < len(coords):
        picked = [coords[i] for i in rng.choice(len(coords), subset_size, replace=False)]
    else:
        picked = coords
    worst = 0.0
    for party, li, which, idx in picked:
        a = analytic[party][li][which].reshape(-1)[idx]
        bumped = []
        for sign in (+1.0, -1.0):
            nets = list(model.networks)
            layers = [list(pair) for pair in nets[party].weights]
            arr = layers[li][which].copy()
            arr.reshape(-1)[idx] += sign * step
            layers[li][which] = arr
            nets[party] = ResponseNetwork(
                widths=nets[party].widths,
                activation=nets[party].activation,
                weights=tuple(tuple(pair) for pair in layers),
            )
            bumped.append(_loss_value(LhvModel(tuple(nets), model.hidden_dim), tgt, s))
        numeric = (bumped[0] - bumped[1]) / (2.0 * step)
        rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        worst = max(worst, rel)
    return worst


# -- checkpoints -----------------------------------------------------------

def save_model(model: LhvModel, path, seed=None, objective=None) -> None:
    """Write a JSON checkpoint; floats round-trip exactly."""
    obj = {
        "format": "triangle-response-model",
        "version": 1,
        "hidden_dim": model.hidden_dim,
        "activation": model.networks[0].activation,
        "networks": [
            {
                "widths": list(net.widths),
                "layers": [
                    {"weights": [float(x) for x in w.reshape(-1)],
                     "bias": [float(x) for x in b]}
                    for w, b in net.weights
                ],
            }
            for net in model.networks
        ],
        "seed": seed,
        "objective": objective,
    }
    Path(path).write_text(json.dumps(obj) + "\n")


def load_model(path):
    """Read a checkpoint; returns (model, metadata)."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != "triangle-response-model":
        raise ValidationError(f"{path}: not a response-model checkpoint")
    try:
        nets = []
        for net_obj in obj.get("networks", []):
            widths = tuple(int(x) for x in net_obj["widths"])
            layers = []
            for li, layer in enumerate(net_obj["layers"]):
                w = np.asarray(layer["weights"], dtype=np.float64).reshape(
                    widths[li], widths[li + 1]
                )
                b = np.asarray(layer["bias"], dtype=np.float64)
                layers.append((w, b))
            nets.append(ResponseNetwork(widths=widths, activation=obj["activation"],
                                        weights=tuple(layers)))
        if len(nets) != 3:
            raise ValidationError(f"{path}: checkpoint must hold three networks")
        model = LhvModel(networks=tuple(nets), hidden_dim=int(obj.get("hidden_dim", 1)))
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed checkpoint: {exc}") from exc
    metadata = {"seed": obj.get("seed"), "objective": obj.get("objective")}
    return model, metadata
