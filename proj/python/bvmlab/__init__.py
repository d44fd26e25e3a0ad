"""Python access to the bvmlab forward model, posterior and sweep runner."""

import json

from ._bvmlab import (
    BoundsError,
    K_of_d,
    Posterior,
    default_truth,
    delta_n,
    eigenvalues_of_A,
    gaussian_ball_tail,
    jacobian,
    linearization_slope,
    solve,
    spectral_report,
)
from ._bvmlab import run_sweep_json as _run_sweep_json


def run_sweep(plan, output_dir=None):
    """Run a sweep described by a plan dict (same keys as plan.json); returns the parsed result."""
    plan = dict(plan)
    if output_dir is not None:
        plan["output_dir"] = str(output_dir)
    return json.loads(_run_sweep_json(json.dumps(plan)))


__all__ = [
    "BoundsError",
    "K_of_d",
    "Posterior",
    "default_truth",
    "delta_n",
    "eigenvalues_of_A",
    "gaussian_ball_tail",
    "jacobian",
    "linearization_slope",
    "run_sweep",
    "solve",
    "spectral_report",
]
