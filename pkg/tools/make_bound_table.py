"""Generate the bundled classical bound table (src/trianglekit/data/bounds.csv).

For each w on the grid, runs the restart search that ascends f_w over
classical response-function models and records

    bound(w) = max(best found value + HEADROOM, w/16 + FLOOR_PAD)

The w/16 term is the value every uniform-outcome strategy attains, an
unconditional lower bound on the true classical maximum; flooring there
guarantees the table never classifies the uniform distribution as a
violator. HEADROOM absorbs seed-to-seed spread of the heuristic search so
that independent reruns stay below bound + 0.001.

Because f_w = w (s111 + Delta) - Delta increases pointwise in w for every
fixed distribution, the true classical maximum is monotone nondecreasing in
w. Raw per-row search results are not (a row can draw unlucky seeds), so a
final isotonic pass lifts every heuristic bound to at least its left
neighbor's; lifted rows keep their own seed, which then documents the search
value rather than the shipped bound.

The w = 0.0922 row is the published conjectured bound 0.0264 and is written
with provenance "published" and no seed. All other rows carry provenance
"heuristic" and the seed that generated them.

Run from the repository root:

    python3 tools/make_bound_table.py [--quick]

The full run takes roughly an hour on a single core; --quick shrinks the
search for format smoke tests only.
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trianglekit.inequality import BoundEntry, save_bound_table  # noqa: E402
from trianglekit.lhv import TrainingConfig, maximize_inequality  # noqa: E402

PUBLISHED_W = 0.0922
PUBLISHED_BOUND = 0.0264
HEADROOM = 0.002
FLOOR_PAD = 0.0005
BASE_SEED = 20_000


def w_grid() -> list:
    ws = {round(0.005 * k, 10) for k in range(0, 61)}  # 0 to 0.3
    # densify around the two regions the sweep figures care about
    ws.update(round(0.0025 * k, 10) for k in range(32, 45))   # 0.08 .. 0.11
    ws.update(round(0.0025 * k, 10) for k in range(58, 69))   # 0.145 .. 0.17
    ws.add(PUBLISHED_W)
    return sorted(ws)


def lift_monotone(entries: list) -> tuple[list, int]:
    """Raise each heuristic bound to the largest heuristic bound at smaller w.

    The true classical maximum is monotone nondecreasing in w, so a dip in
    the raw search results is seed shortfall, and a dipped row would flag
    spurious violations. The published row is neither lifted nor used as a
    lift source: its tight conjectured value plays by different rules than
    the headroom-padded heuristic rows around it.
    """
    out, lifted, running = [], 0, float("-inf")
    for e in sorted(entries, key=lambda e: e.w):
        if e.provenance == "heuristic":
            if e.bound < running:
                e = dataclasses.replace(e, bound=running)
                lifted += 1
            else:
                running = e.bound
        out.append(e)
    return out, lifted


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true",
                        help="tiny search, for format checks only")
    parser.add_argument("--out", default=None, help="output CSV (default: bundled path)")
    args = parser.parse_args()

    out = Path(args.out) if args.out else (
        Path(__file__).resolve().parent.parent / "src" / "trianglekit" / "data" / "bounds.csv"
    )
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.quick:
        config = TrainingConfig(steps=200, batch_size=500, restarts=2, m_eval=20_000,
                                objective="maximize-f_w")
    else:
        config = TrainingConfig(steps=2000, batch_size=2000, restarts=6, m_eval=200_000,
                                objective="maximize-f_w")
    print(f"search config: {config.to_json_dict()}", flush=True)

    entries = []
    t0 = time.time()
    for i, w in enumerate(w_grid()):
        if abs(w - PUBLISHED_W) <= 1e-12:
            entries.append(BoundEntry(w=PUBLISHED_W, bound=PUBLISHED_BOUND,
                                      provenance="published", seed=None))
            print(f"[{i:3d}] w={w:.4f}  published bound {PUBLISHED_BOUND}", flush=True)
            continue
        seed = BASE_SEED + i
        cfg = TrainingConfig(**{**config.to_json_dict(), "seed": seed})
        result = maximize_inequality(w, cfg, bound=None)
        bound = max(result.best_value + HEADROOM, w / 16.0 + FLOOR_PAD)
        entries.append(BoundEntry(w=w, bound=bound, provenance="heuristic", seed=seed))
        print(f"[{i:3d}] w={w:.4f}  best={result.best_value:.6f}  bound={bound:.6f}  "
              f"({time.time() - t0:.0f}s)", flush=True)

    entries, lifted = lift_monotone(entries)
    save_bound_table(entries, out)
    print(f"lifted {lifted} non-monotone rows")
    print(f"wrote {len(entries)} rows to {out} in {time.time() - t0:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
