"""Command-line front-end: one subcommand per pipeline, manifest per output.

Exit status contract: 0 on success (for ``inequality`` in single-w mode,
success means the inequality is violated, the grep-like "found it" outcome);
1 when the inequality is satisfied; 2 on validation or usage errors; 3 on
computation failures.

Thread control: ``--threads N`` (or the TRIANGLEKIT_THREADS environment
variable) caps the linear-algebra worker pools. It must act before the
numeric libraries load, which is why this module defers every heavy import
until after argument parsing.
"""

from __future__ import annotations

import argparse
import sys
import os
import time
from pathlib import Path

from . import __version__

_BLAS_VARS = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

_TRAIN_KEYS = (
    "steps", "batch_size", "step_size", "schedule", "restarts",
    "m_eval", "seed", "hidden", "dtype",
)


def _setup_threads(threads) -> None:
    value = threads if threads is not None else os.environ.get("TRIANGLEKIT_THREADS")
    if value:
        for var in _BLAS_VARS:
            os.environ[var] = str(value)


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals: {exc}")


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {exc}")


def _add_training_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training", "restart-search settings (defaults are heavy; "
                             "pass smaller --steps/--restarts for quick runs)")
    g.add_argument("--steps", type=int, help="gradient steps per restart")
    g.add_argument("--batch-size", type=int, help="fresh hidden-variable samples per step")
    g.add_argument("--step-size", type=float, help="initial optimizer step size")
    g.add_argument("--schedule", choices=["cosine", "constant"], help="step-size schedule")
    g.add_argument("--restarts", type=int, help="independent restarts")
    g.add_argument("--m-eval", type=int, help="samples for the final evaluation")
    g.add_argument("--seed", type=int, help="base seed; restart r uses seed + r")
    g.add_argument("--hidden", type=_int_list, metavar="W1,W2",
                   help="hidden layer widths, e.g. 32,32")
    g.add_argument("--dtype", choices=["float32", "float64"], help="training precision")


def _file_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    from .manifest import load_manifest

    obj = load_manifest(path)
    if "config" in obj and "command" in obj:
        obj = obj["config"]  # a run manifest; reuse its resolved configuration
    return obj


def _setting(args, file_cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in file_cfg and file_cfg[key] is not None:
        return file_cfg[key]
    return default


def _training_config(args, file_cfg: dict, objective: str):
    from .lhv import TrainingConfig

    base = dict(file_cfg.get("training") or {})
    for key in _TRAIN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    base["objective"] = objective
    return TrainingConfig.from_json_dict(base)


def _load_distribution(spec: str, man=None):
    """Resolve a distribution argument: 'elegant', 'uniform', or a file path."""
    from .dist import TriangleDistribution

    if spec == "elegant":
        from .quantum import elegant_distribution

        return elegant_distribution()
    if spec == "uniform":
        return TriangleDistribution.uniform()
    path = Path(spec)
    loaded = (TriangleDistribution.load_csv(path) if path.suffix == ".csv"
              else TriangleDistribution.load_json(path))
    if man is not None:
        man.add_input(path)
    return loaded


def _load_counts(spec: str, man=None):
    from .stats import CountsTable

    path = Path(spec)
    table = (CountsTable.load_csv(path) if path.suffix == ".csv"
             else CountsTable.load_json(path))
    if man is not None:
        man.add_input(path)
    return table


def _save_distribution(p, path: Path) -> None:
    if path.suffix == ".csv":
        p.save_csv(path)
    else:
        p.save_json(path)


def _new_manifest(command: str, config: dict, seeds: dict):
    from .manifest import RunManifest

    return RunManifest(command=command, version=__version__, config=config, seeds=seeds)


def _require(value, flag: str):
    from .errors import ValidationError

    if value is None:
        raise ValidationError(f"{flag} is required (flag or config file)")
    return value


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    from . import quantum

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    povm_spec = _setting(args, file_cfg, "povm", "ejm")
    rotation = _setting(args, file_cfg, "rotate_tetrahedron", None)
    out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
    config = {"povm": str(povm_spec), "rotate_tetrahedron": rotation, "out": str(out)}
    man = _new_manifest("simulate", config, seeds={})

    tetra = quantum.tetrahedron_default()
    if rotation is not None:
        tetra = quantum.rotate_tetrahedron(tetra, quantum.rotation_from_euler(rotation))
    s = quantum.singlet()
    if povm_spec == "ejm":
        basis = quantum.ejm_basis(tetra)
        p = quantum.triangle_distribution_pure([s, s, s], [basis, basis, basis])
    else:
        if povm_spec == "id":
            povm = quantum.identity_povm()
        else:
            povm = quantum.load_povm(povm_spec)
            man.add_input(povm_spec)
        state = quantum.triangle_state(s, s, s)
        p = quantum.triangle_distribution(state, povm, povm, povm)
    _save_distribution(p, out)
    man.add_output(out)
    man.duration_seconds = time.monotonic() - t0
    man.write(out)
    print(f"wrote {out}: P(1,1,1) = {p.p[0, 0, 0]:.8f}")
    return 0


def cmd_fit(args) -> int:
    from . import lhv

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    target_spec = _require(_setting(args, file_cfg, "target"), "--target")
    out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
    save_model = _setting(args, file_cfg, "save_model", None)
    cfg = _training_config(args, file_cfg, objective="distance-to-target")
    config = {"target": str(target_spec), "out": str(out),
              "save_model": None if save_model is None else str(save_model),
              "training": cfg.to_json_dict()}
    man = _new_manifest("fit", config,
                        seeds={"base_seed": cfg.seed, "restart_rule": "base_seed + restart_index"})

    target = _load_distribution(target_spec, man)
    result = lhv.fit(target, cfg)
    result.save_json(out)
    man.add_output(out)
    if save_model is not None:
        lhv.save_model(result.model, save_model, seed=cfg.seed + result.best_index,
                       objective={"objective": cfg.objective, "target": str(target_spec)})
        man.add_output(save_model)
    man.duration_seconds = time.monotonic() - t0
    man.write(out)
    n_failed = len(result.failed)
    extra = f", {n_failed} failed restart(s)" if n_failed else ""
    print(f"best distance {result.best_value:.6f} (restart {result.best_index} "
          f"of {cfg.restarts}{extra}); wrote {out}")
    return 0


def cmd_inequality(args) -> int:
    from . import inequality

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    target_spec = _require(_setting(args, file_cfg, "target"), "--target")
    bounds_path = _setting(args, file_cfg, "bounds", None)

    if _setting(args, file_cfg, "sweep", False):
        out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
        config = {"target": str(target_spec), "sweep": True,
                  "bounds": None if bounds_path is None else str(bounds_path),
                  "out": str(out)}
        man = _new_manifest("inequality", config, seeds={})
        p = _load_distribution(target_spec, man)
        entries = inequality.load_bound_table(bounds_path)
        if bounds_path is not None:
            man.add_input(bounds_path)
        rows = inequality.sweep_w(p, entries)
        inequality.sweep_to_csv(rows, out)
        man.add_output(out)
        man.duration_seconds = time.monotonic() - t0
        man.write(out)
        margins = [row.report.margin for row in rows]
        print(f"wrote {out}: {len(rows)} w values, max margin {max(margins):.6f}")
        return 0

    w = _setting(args, file_cfg, "w", None)
    w = float(_require(w, "--w (or --sweep)"))
    bound = _setting(args, file_cfg, "bound", None)
    if bound is None:
        entries = inequality.load_bound_table(bounds_path)
        entry = inequality.lookup_bound(entries, w)
        from .errors import ValidationError

        if entry is None:
            raise ValidationError(
                f"no tabulated bound for w={w!r}; pass --bound explicitly"
            )
        bound = entry.bound
    out = _setting(args, file_cfg, "out", None)
    config = {"target": str(target_spec), "w": w, "bound": float(bound),
              "bounds": None if bounds_path is None else str(bounds_path),
              "out": None if out is None else str(out)}
    man = _new_manifest("inequality", config, seeds={})
    p = _load_distribution(target_spec, man)
    report = inequality.evaluate(p, w, float(bound))
    print(f"f_{w} = {report.f_value:.6f}, bound {report.bound:.6f}, "
          f"margin {report.margin:+.6f}: {report.classification}")
    if out is not None:
        out = Path(out)
        import json as _json

        out.write_text(_json.dumps(report.to_json_dict(), indent=1) + "\n")
        man.add_output(out)
        man.duration_seconds = time.monotonic() - t0
        man.write(out)
    return 0 if report.classification == "violated" else 1


def cmd_visibility(args) -> int:
    from . import visibility

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    target_spec = _require(_setting(args, file_cfg, "target"), "--target")
    out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
    nus = _setting(args, file_cfg, "nus", list(visibility.DEFAULT_NUS))
    window = _setting(args, file_cfg, "window", list(visibility.DEFAULT_WINDOW))
    fit_out = _setting(args, file_cfg, "fit_out", None)
    fit_out = Path(fit_out) if fit_out is not None else out.with_suffix(".fit.json")
    cfg = _training_config(args, file_cfg, objective="distance-to-target")
    config = {"target": str(target_spec), "out": str(out), "fit_out": str(fit_out),
              "nus": [float(x) for x in nus], "window": [float(x) for x in window],
              "training": cfg.to_json_dict()}
    man = _new_manifest(
        "visibility", config,
        seeds={"base_seed": cfg.seed,
               "per_point_rule": f"base_seed + {visibility.SEED_STRIDE} * point_index"},
    )
    p = _load_distribution(target_spec, man)
    curve = visibility.visibility_sweep(p, nus, cfg, window=tuple(window))
    visibility.curve_to_csv(curve, out)
    man.add_output(out)
    if curve.fit is not None:
        visibility.fit_to_json(curve.fit, fit_out)
        man.add_output(fit_out)
        summary = f"fitted zero crossing at visibility {curve.fit.x_intercept:.4f}"
    else:
        summary = "line fit unavailable for this window"
    man.duration_seconds = time.monotonic() - t0
    man.write(out)
    print(f"wrote {out}: {len(curve.points)} points; {summary}")
    return 0


def cmd_resample(args) -> int:
    from . import inequality, stats

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    counts_spec = _require(_setting(args, file_cfg, "counts"), "--counts")
    name = _require(_setting(args, file_cfg, "statistic"), "--statistic")
    out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
    replicates = int(_setting(args, file_cfg, "replicates", stats.DEFAULT_REPLICATES))
    seed = int(_setting(args, file_cfg, "seed", 0))
    w = _setting(args, file_cfg, "w", None)
    bound = _setting(args, file_cfg, "bound", None)
    from .errors import ValidationError

    config = {"counts": str(counts_spec), "statistic": name, "replicates": replicates,
              "seed": seed, "w": w, "bound": bound, "out": str(out)}
    if name == "s111":
        statistic = inequality.s111
    elif name == "delta":
        statistic = inequality.delta
    elif name == "f_w":
        w = float(_require(w, "--w"))
        statistic = lambda q: inequality.f_w(q, w)
    elif name == "margin":
        w = float(_require(w, "--w"))
        bound = float(_require(bound, "--bound"))
        statistic = lambda q: inequality.f_w(q, w) - bound
    elif name == "fit-distance":
        import dataclasses

        from . import lhv

        cfg = _training_config(args, file_cfg, objective="distance-to-target")
        config["training"] = cfg.to_json_dict()
        # Shift the embedded fit into its own region of seed space so its
        # restart streams never coincide with the replicate streams.
        fit_cfg = dataclasses.replace(cfg, seed=cfg.seed + 700001)
        statistic = lambda q: lhv.fit(q, fit_cfg).best_value
    else:
        raise ValidationError(
            f"unknown statistic {name!r}; choose s111, delta, f_w, margin, or fit-distance"
        )
    seeds = {"base_seed": seed, "replicate_rule": "base_seed + replicate"}
    if name == "fit-distance":
        seeds["embedded_fit_rule"] = "training seed + 700001 + restart_index"
    man = _new_manifest("resample", config, seeds=seeds)
    table = _load_counts(counts_spec, man)
    report = stats.poisson_resample(table, statistic, replicates=replicates, seed=seed,
                                    statistic_name=name)
    report.save_json(out)
    man.add_output(out)
    man.duration_seconds = time.monotonic() - t0
    man.write(out)
    note = f" ({len(report.failures)} failed replicate(s))" if report.flagged else ""
    print(f"{name}: {report.mean:.6f} +/- {report.std:.6f} over "
          f"{len(report.statistic_values)} replicates{note}; wrote {out}")
    return 0


def cmd_synth(args) -> int:
    from . import stats

    t0 = time.monotonic()
    file_cfg = _file_config(args)
    dist_spec = _require(_setting(args, file_cfg, "dist"), "--dist")
    events = int(_require(_setting(args, file_cfg, "events"), "--events"))
    nu = float(_setting(args, file_cfg, "visibility", 1.0))
    seed = int(_setting(args, file_cfg, "seed", 0))
    out = Path(_require(_setting(args, file_cfg, "out"), "--out"))
    config = {"dist": str(dist_spec), "events": events, "visibility": nu,
              "seed": seed, "out": str(out)}
    man = _new_manifest("synth", config, seeds={"seed": seed})
    p = _load_distribution(dist_spec, man)
    table = stats.synthesize_experiment(p, events, nu=nu, seed=seed)
    if out.suffix == ".csv":
        table.save_csv(out)
    else:
        table.save_json(out)
    man.add_output(out)
    man.duration_seconds = time.monotonic() - t0
    man.write(out)
    print(f"wrote {out}: {table.total} events at visibility {nu}")
    return 0


# -- parser ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trianglekit",
        description="Triangle-network quantum correlations: simulate, fit "
                    "classical models, evaluate the asymmetry inequality, "
                    "sweep visibility, and propagate counting statistics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int,
                        help="cap linear-algebra threads (also TRIANGLEKIT_THREADS)")
    sub = parser.add_subparsers(dest="subcommand", metavar="command")

    p = sub.add_parser("simulate", help="write the quantum outcome distribution")
    p.add_argument("--out", help="output distribution file (.json or .csv)")
    p.add_argument("--povm", help="'ejm' (default), 'id', or a POVM JSON file")
    p.add_argument("--rotate-tetrahedron", type=_float_list, metavar="RX,RY,RZ",
                   help="extrinsic x-y-z rotation of the measurement directions, degrees")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="train classical models toward a target distribution")
    p.add_argument("--target", help="'elegant', 'uniform', or a distribution file")
    p.add_argument("--out", help="output result JSON")
    p.add_argument("--save-model", help="also write the best model checkpoint here")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    _add_training_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "inequality",
        help="evaluate the asymmetry functional against its classical bound",
        description="Single-w mode exits 0 when the inequality is violated and "
                    "1 when it is satisfied.",
    )
    p.add_argument("--target", help="'elegant', 'uniform', or a distribution file")
    p.add_argument("--w", type=float, help="weight in [0,1]")
    p.add_argument("--bound", type=float, help="classical bound (default: bundled table)")
    p.add_argument("--sweep", action="store_true", default=None,
                   help="evaluate every tabulated w")
    p.add_argument("--bounds", help="bound table CSV (default: bundled)")
    p.add_argument("--out", help="report JSON (single w) or sweep CSV")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    p.set_defaults(func=cmd_inequality)

    p = sub.add_parser("visibility", help="distance-to-classical versus measurement visibility")
    p.add_argument("--target", help="'elegant', 'uniform', or a distribution file")
    p.add_argument("--out", help="curve CSV output")
    p.add_argument("--fit-out", help="line-fit JSON (default: <out>.fit.json)")
    p.add_argument("--nus", type=_float_list, metavar="N1,N2,...",
                   help="visibility grid, strictly increasing")
    p.add_argument("--window", type=_float_list, metavar="LO,HI",
                   help="visibility window for the line fit (default 0.9,1.0)")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    _add_training_args(p)
    p.set_defaults(func=cmd_visibility)

    p = sub.add_parser("resample", help="Poisson bootstrap of a statistic over counts")
    p.add_argument("--counts", help="counts file (.csv or .json)")
    p.add_argument("--statistic", help="s111 | delta | f_w | margin | fit-distance")
    p.add_argument("--w", type=float, help="weight for f_w / margin statistics")
    p.add_argument("--bound", type=float, help="bound for the margin statistic")
    p.add_argument("--replicates", type=int, help="bootstrap replicates (default 50)")
    p.add_argument("--out", help="report JSON output")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    _add_training_args(p)  # --seed here is the replicate base seed as well
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("synth", help="draw a synthetic counts table from a distribution")
    p.add_argument("--dist", help="'elegant', 'uniform', or a distribution file")
    p.add_argument("--events", type=int, help="total events to draw")
    p.add_argument("--visibility", type=float, help="measurement visibility (default 1.0)")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--out", help="counts file output (.csv or .json)")
    p.add_argument("--config", help="config or manifest JSON to rerun")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    _setup_threads(args.threads)
    from .errors import ComputationError, ValidationError

    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
