"""Dimensions of self-affine sets, measures and their orthogonal projections."""

import json as _json

from ._affdim import (
    affinity_dim,
    algebra_irreducible,
    box_count_dim,
    chaos_game,
    entropy,
    lyapunov,
    moran_root,
    pivot_vector,
    proj_affinity_dim,
    s_extremes,
    singular_values,
    svf,
)
from ._affdim import _run_json


def run(command, config=None, seed=None, q=None):
    """Run a CLI subcommand in-process and return the parsed result document.

    ``config`` is the same dictionary a JSON config file would hold; ``q`` is
    the exterior power for the ``irreducible`` command.
    """
    text = _json.dumps(config if config is not None else {})
    return _json.loads(_run_json(command, text, seed, q))


__all__ = [
    "affinity_dim",
    "algebra_irreducible",
    "box_count_dim",
    "chaos_game",
    "entropy",
    "lyapunov",
    "moran_root",
    "pivot_vector",
    "proj_affinity_dim",
    "run",
    "s_extremes",
    "singular_values",
    "svf",
]
