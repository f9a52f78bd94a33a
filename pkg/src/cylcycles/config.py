"""Numerical tolerances shared by all modules.

The defaults can be overridden through the ``CYLCYCLES_TOL`` environment
variable, which holds either a JSON object or the path of a JSON file mapping
field names of :class:`Tolerances` to new values.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

ENV_VAR = "CYLCYCLES_TOL"


@dataclass(frozen=True)
class Tolerances:
    # trigpoly
    coeff_rel: float = 1e-14
    unit_circle: float = 1e-8
    unit_circle_candidate: float = 1e-5
    zero_residual: float = 1e-12
    multiple_window: float = 1e-6
    # field
    threshold: float = 1e-13
    continuity: float = 1e-12
    # quadrature
    quad_atol: float = 1e-12
    quad_limit: int = 10_000
    # flow
    tangency: float = 1e-9
    touch: float = 1e-12
    event_xtol: float = 1e-14
    event_endpoint: float = 1e-11
    mesh_per_degree: int = 16
    # cycles
    displacement_zero: float = 1e-10
    dedup: float = 1e-8
    simple: float = 1e-8
    newton_tol: float = 1e-11
    newton_maxiter: int = 50
    newton_halvings: int = 20
    singular_det: float = 1e-12
    division_near_zero: float = 1e-10
    residual_cert: float = 1e-9
    default_grid: int = 2048


def load_tolerances(env: dict | None = None) -> Tolerances:
    """Build the tolerance bundle, applying ``CYLCYCLES_TOL`` overrides."""
    env = os.environ if env is None else env
    raw = env.get(ENV_VAR, "").strip()
    if not raw:
        return Tolerances()
    if not raw.startswith("{"):
        with open(raw, encoding="utf-8") as fh:
            raw = fh.read()
    overrides = json.loads(raw)
    names = {f.name: f.type for f in dataclasses.fields(Tolerances)}
    unknown = set(overrides) - set(names)
    if unknown:
        raise ValueError(f"unknown tolerance names in {ENV_VAR}: {sorted(unknown)}")
    base = Tolerances()
    cast = {k: type(getattr(base, k))(v) for k, v in overrides.items()}
    return dataclasses.replace(base, **cast)


TOL = load_tolerances()
