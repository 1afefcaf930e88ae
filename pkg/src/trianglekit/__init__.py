"""Quantum correlations on the triangle network, and the tools to test them.

The package simulates the outcome distribution of three entangled pair
sources measured jointly at three nodes, trains classical (local hidden
variable) response-function models against any target distribution, evaluates
the symmetry-penalized inequality family f_w with its conjectured classical
bounds, models measurement visibility, and propagates Poissonian counting
statistics through any of these estimates.

Submodules load lazily: importing :mod:`trianglekit` is cheap, and the
command-line front-end can cap linear-algebra thread pools before the
numeric stack initializes.
"""

import importlib

__version__ = "0.1.0"

# public name -> submodule that defines it
_EXPORTS = {
    # errors
    "TriangleKitError": ".errors",
    "ValidationError": ".errors",
    "ComputationError": ".errors",
    "EstimationError": ".errors",
    "CounterexampleAlarm": ".errors",
    # distributions
    "TriangleDistribution": ".dist",
    "distance": ".dist",
    # quantum pipeline
    "EjmBasis": ".quantum",
    "Povm": ".quantum",
    "tetrahedron_default": ".quantum",
    "ejm_basis": ".quantum",
    "povm_from_basis": ".quantum",
    "identity_povm": ".quantum",
    "depolarize_povm": ".quantum",
    "singlet": ".quantum",
    "triangle_state": ".quantum",
    "triangle_distribution": ".quantum",
    "triangle_distribution_pure": ".quantum",
    "elegant_distribution": ".quantum",
    "attenuated_projection": ".quantum",
    "rotation_from_euler": ".quantum",
    "rotate_tetrahedron": ".quantum",
    # inequality
    "s111": ".inequality",
    "delta": ".inequality",
    "f_w": ".inequality",
    "evaluate_inequality": ".inequality",
    "sweep_w": ".inequality",
    "InequalityReport": ".inequality",
    "BoundEntry": ".inequality",
    "load_bound_table": ".inequality",
    "save_bound_table": ".inequality",
    "lookup_bound": ".inequality",
    # classical models
    "TrainingConfig": ".lhv",
    "ResponseNetwork": ".lhv",
    "LhvModel": ".lhv",
    "FitResult": ".lhv",
    "sample_hidden_triples": ".lhv",
    "model_distribution": ".lhv",
    "fit": ".lhv",
    "maximize_inequality": ".lhv",
    "gradient_check": ".lhv",
    "save_model": ".lhv",
    "load_model": ".lhv",
    # visibility
    "apply_visibility": ".visibility",
    "visibility_sweep": ".visibility",
    "VisibilityCurve": ".visibility",
    "LineFit": ".visibility",
    "fit_line": ".visibility",
    "critical_visibility": ".visibility",
    # statistics
    "CountsTable": ".stats",
    "ResampleReport": ".stats",
    "normalize": ".stats",
    "poisson_resample": ".stats",
    "synthesize_experiment": ".stats",
}

# names whose in-module definition differs from the exported alias
_ALIASES = {"evaluate_inequality": "evaluate"}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    target = _EXPORTS.get(name)
    if target is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    module = importlib.import_module(target, __name__)
    value = getattr(module, _ALIASES.get(name, name))
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
