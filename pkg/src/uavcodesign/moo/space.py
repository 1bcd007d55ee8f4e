"""Discrete co-design space: encoding, enumeration, and point evaluation.

A design point couples policy hyperparameters with an accelerator
configuration. Evaluation runs the analytic stack (success surrogate or
database, latency model, power and mass models) and returns the three
canonical objectives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..perfmodel import AccelConfig, model_latency
from ..policy import ModelSpec, success_of
from ..powerweight import ComputeMass, accel_power, compute_mass, soc_power

SUBSAMPLE_LIMIT = 100_000

_MODEL_KEYS = ("conv_layers", "filters")
_ACCEL_KEYS = (
    "array_rows",
    "array_cols",
    "sram_ifmap",
    "sram_filter",
    "sram_ofmap",
    "dram_bandwidth",
    "dataflow",
)


@dataclass(frozen=True)
class Dimension:
    """One named discrete axis; value order fixes the unit-cube encoding."""

    name: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("dimension %r has no values" % self.name)
        if len(set(self.values)) != len(self.values):
            raise ValueError("dimension %r has duplicate values" % self.name)

    def to_unit(self, value) -> float:
        try:
            i = self.values.index(value)
        except ValueError:
            raise ValueError("%r not a value of dimension %r" % (value, self.name)) from None
        if len(self.values) == 1:
            return 0.5
        return i / (len(self.values) - 1)


@dataclass(frozen=True)
class ParamSpace:
    dimensions: tuple

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError("duplicate dimension names")
        if not self.dimensions:
            raise ValueError("empty parameter space")

    @property
    def names(self) -> tuple:
        return tuple(d.name for d in self.dimensions)

    @property
    def size(self) -> int:
        n = 1
        for d in self.dimensions:
            n *= len(d.values)
        return n

    def encode(self, params) -> np.ndarray:
        """Map a parameter dict to the unit hypercube, one coord per axis."""
        return np.array([d.to_unit(params[d.name]) for d in self.dimensions], dtype=float)

    def point_at(self, index: int) -> dict:
        if not 0 <= index < self.size:
            raise IndexError("point index %d out of range" % index)
        out = {}
        for d in reversed(self.dimensions):
            index, i = divmod(index, len(d.values))
            out[d.name] = d.values[i]
        return {d.name: out[d.name] for d in self.dimensions}

    def points(self):
        """All points in index order (last dimension varies fastest)."""
        for combo in itertools.product(*(d.values for d in self.dimensions)):
            yield dict(zip(self.names, combo))

    def candidate_indices(self, rng=None, limit: int = SUBSAMPLE_LIMIT) -> np.ndarray:
        """Indices to score per iteration: everything when the space is small,
        a uniform subsample without replacement above `limit`."""
        if self.size <= limit:
            return np.arange(self.size)
        if rng is None:
            rng = np.random.default_rng(0)
        return np.sort(rng.choice(self.size, size=limit, replace=False))


@dataclass(frozen=True)
class ObjectiveVector:
    """Native objectives. `to_min` flips success so the optimizer sees an
    all-minimize triple (-success, latency, power)."""

    success_rate: float
    latency_s: float
    power_w: float

    def to_min(self) -> tuple:
        return (-self.success_rate, self.latency_s, self.power_w)

    @classmethod
    def from_min(cls, t) -> "ObjectiveVector":
        return cls(success_rate=-t[0], latency_s=t[1], power_w=t[2])


@dataclass(frozen=True)
class DesignPoint:
    params: tuple  # ((name, value), ...) sorted by name
    model: ModelSpec
    accel: AccelConfig
    objectives: ObjectiveVector
    mass: ComputeMass
    success_source: str
    provenance: tuple = None  # (evaluation index, seed) once archived

    def as_dict(self) -> dict:
        return dict(self.params)


def evaluate(params, problem, provenance=None) -> DesignPoint:
    """Run the full analytic stack on one parameter assignment.

    `problem` supplies the environment, the policy template and optional
    record database, the energy table, and accelerator defaults (frequency,
    tech node). Only those attributes are touched, so any object with the
    right fields works.
    """
    params = dict(params)
    unknown = set(params) - set(_MODEL_KEYS) - set(_ACCEL_KEYS)
    if unknown:
        raise ValueError("unknown design parameters: %s" % sorted(unknown))

    template = dict(getattr(problem, "policy_template", {}) or {})
    model = ModelSpec(
        conv_layers=int(params["conv_layers"]),
        filters_per_layer=int(params["filters"]),
        **template,
    )

    defaults = dict(getattr(problem, "accel_defaults", {}) or {})
    accel_kwargs = {k: params[k] for k in _ACCEL_KEYS if k in params}
    for k in ("array_rows", "array_cols", "sram_ifmap", "sram_filter", "sram_ofmap", "dram_bandwidth"):
        if k in accel_kwargs:
            accel_kwargs[k] = int(accel_kwargs[k])
    accel = AccelConfig(**{**defaults, **accel_kwargs})

    profile = model_latency(model, accel)
    table = getattr(problem, "energy_table", None)
    if table is None:
        raise ValueError("problem has no energy_table")
    calib = getattr(problem, "calibration", None)
    db = getattr(problem, "policy_db", None)

    if calib is None:
        rec = success_of(db, model, problem.environment)
    else:
        rec = success_of(db, model, problem.environment, calib)
    accel_w = accel_power(profile, accel, table)
    soc = soc_power(accel_w)
    mass = compute_mass(soc.total)

    obj = ObjectiveVector(
        success_rate=rec.success_rate,
        latency_s=profile.latency,
        power_w=soc.total,
    )
    return DesignPoint(
        params=tuple((d, params[d]) for d in sorted(params)),
        model=model,
        accel=accel,
        objectives=obj,
        mass=mass,
        success_source=rec.source,
        provenance=provenance,
    )
