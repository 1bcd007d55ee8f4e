"""End-to-end policy template, parameter counting, and the success-rate surrogate.

The policy is a fixed-shape convnet template (N conv layers with a uniform
filter count, then fully connected layers); only the hyperparameters that the
search explores vary. Success rates come from a record database when one is
available and from a calibrated surrogate otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

# template defaults; overridable per problem config
DEFAULT_INPUT = (16, 16, 3)
DEFAULT_KERNEL = (3, 3)
DEFAULT_STRIDE = (1, 1)
DEFAULT_FC = (4, 4)

DEFAULT_CONV_RANGE = (3, 5, 7)
DEFAULT_FILTER_RANGE = (24, 32)


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Convnet hyperparameters. fc_layers includes the output head, so a
    conv-only net (fc_layers=()) emits filters_per_layer values."""

    conv_layers: int
    filters_per_layer: int
    input_shape: tuple[int, int, int] = DEFAULT_INPUT
    kernel: tuple[int, int] = DEFAULT_KERNEL
    stride: tuple[int, int] = DEFAULT_STRIDE
    fc_layers: tuple[int, ...] = DEFAULT_FC

    def __post_init__(self):
        object.__setattr__(self, "fc_layers", tuple(self.fc_layers))
        if self.conv_layers < 1:
            raise PolicyError("conv_layers must be >= 1")
        if self.filters_per_layer < 1:
            raise PolicyError("filters_per_layer must be >= 1")
        if any(w < 1 for w in self.fc_layers):
            raise PolicyError("fc widths must be >= 1")
        self.conv_shapes()  # raises if spatial dims collapse

    @property
    def outputs(self) -> int:
        return self.fc_layers[-1] if self.fc_layers else self.filters_per_layer

    def conv_shapes(self) -> list[tuple[int, int, int]]:
        """(h, w, channels) after each conv layer; no padding, floor division."""
        h, w, c = self.input_shape
        kh, kw = self.kernel
        sh, sw = self.stride
        out = []
        for i in range(self.conv_layers):
            h = (h - kh) // sh + 1
            w = (w - kw) // sw + 1
            c = self.filters_per_layer
            if h < 1 or w < 1:
                raise PolicyError(
                    "spatial dims collapse at conv layer %d (%dx%d input)" % (i + 1, *self.input_shape[:2])
                )
            out.append((h, w, c))
        return out


def param_count(model: ModelSpec) -> int:
    """Exact trainable parameter count (weights + biases)."""
    kh, kw = model.kernel
    c_in = model.input_shape[2]
    n = 0
    for _ in range(model.conv_layers):
        n += kh * kw * c_in * model.filters_per_layer + model.filters_per_layer
        c_in = model.filters_per_layer
    h, w, c = model.conv_shapes()[-1]
    width = h * w * c
    for fc in model.fc_layers:
        n += width * fc + fc
        width = fc
    return n


def enumerate_models(
    conv_range=DEFAULT_CONV_RANGE,
    filter_range=DEFAULT_FILTER_RANGE,
    **template,
) -> list[ModelSpec]:
    """Cartesian product of the discrete ranges, deduplicated, deterministic."""
    conv_range = tuple(conv_range)
    filter_range = tuple(filter_range)
    if not conv_range or not filter_range:
        raise PolicyError("empty hyperparameter range")
    seen = set()
    out = []
    for d in conv_range:
        for f in filter_range:
            m = ModelSpec(conv_layers=d, filters_per_layer=f, **template)
            if m not in seen:
                seen.add(m)
                out.append(m)
    return out


@dataclass(frozen=True)
class SurrogateCalibration:
    """Parameters of the success surrogate s = smax(env) * sigmoid(alpha*(ln p - beta(env))).

    smax(difficulty) = min(smax_cap, smax_base - smax_slope * difficulty)
    beta(difficulty) = beta0 + beta1 * difficulty
    Shipped values were fit so the default enumeration spans roughly
    [0.60, 0.91] across environments; see data/ config comments.
    """

    alpha: float = 30.0
    floor: float = 0.05
    smax_cap: float = 0.91
    smax_base: float = 0.93
    smax_slope: float = 0.10
    beta0: float = 9.2207
    beta1: float = 0.86

    def __post_init__(self):
        for name in ("alpha", "floor", "smax_cap", "smax_base", "smax_slope", "beta0", "beta1"):
            if not math.isfinite(getattr(self, name)):
                raise PolicyError("non-finite calibration parameter %s" % name)


DEFAULT_CALIBRATION = SurrogateCalibration()


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def surrogate_success(model: ModelSpec, env, calib: SurrogateCalibration = DEFAULT_CALIBRATION) -> float:
    """Deterministic saturating-monotone success estimate in [floor, smax_cap].

    env must expose .difficulty in [0, 1]. For z = alpha*(ln p - beta) above
    ~36.7 the sigmoid saturates to exactly 1.0 in float64, so sufficiently
    large nets in easy environments tie at smax; that plateau is intentional
    (success cannot exceed what the environment allows).
    """
    d = float(env.difficulty)
    smax = min(calib.smax_cap, calib.smax_base - calib.smax_slope * d)
    z = calib.alpha * (math.log(param_count(model)) - (calib.beta0 + calib.beta1 * d))
    return max(calib.floor, smax * _sigmoid(z))


@dataclass(frozen=True)
class PolicyRecord:
    model: ModelSpec
    env_class: str
    success_rate: float
    source: str  # "database" | "surrogate"

    def __post_init__(self):
        if not 0.0 <= self.success_rate <= 1.0:
            raise PolicyError("success_rate %r outside [0, 1]" % (self.success_rate,))
        if self.source not in ("database", "surrogate"):
            raise PolicyError("bad record source %r" % (self.source,))


@dataclass
class PolicyDatabase:
    """Success records keyed by (ModelSpec, environment class name)."""

    records: dict = field(default_factory=dict)

    def add(self, rec: PolicyRecord):
        key = (rec.model, rec.env_class)
        if key in self.records:
            raise PolicyError("duplicate policy record for %s/%s" % (rec.model, rec.env_class))
        self.records[key] = rec

    def lookup(self, model: ModelSpec, env_class: str):
        return self.records.get((model, env_class))

    def __len__(self):
        return len(self.records)


def ingest_database(path, **template) -> PolicyDatabase:
    """Read a policy record table.

    Comma-separated with a header row; columns conv_layers, filters,
    fc_widths (pipe-separated, e.g. "4|4"), env_class, success_rate.
    """
    db = PolicyDatabase()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"conv_layers", "filters", "fc_widths", "env_class", "success_rate"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise PolicyError("policy database needs columns %s" % sorted(required))
        for i, row in enumerate(reader, start=2):
            try:
                fc = tuple(int(w) for w in row["fc_widths"].split("|") if w != "")
                model = ModelSpec(
                    conv_layers=int(row["conv_layers"]),
                    filters_per_layer=int(row["filters"]),
                    fc_layers=fc,
                    **template,
                )
                rec = PolicyRecord(model, row["env_class"].strip(), float(row["success_rate"]), "database")
            except (KeyError, ValueError) as exc:
                raise PolicyError("%s line %d: %s" % (path, i, exc)) from exc
            db.add(rec)
    return db


def success_of(db, model: ModelSpec, env, calib: SurrogateCalibration = DEFAULT_CALIBRATION) -> PolicyRecord:
    """Database record when present, surrogate fallback otherwise."""
    env_class = getattr(env, "name", str(env))
    if db is not None:
        hit = db.lookup(model, env_class)
        if hit is not None:
            return hit
    return PolicyRecord(model, env_class, surrogate_success(model, env, calib), "surrogate")
