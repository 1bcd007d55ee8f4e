"""Problem specification: platform, sensor, environment, mission, and the
search setup, loaded from a TOML config and validated.

Values are plain frozen dataclasses; cross-field invariants live in
validate() so a malformed problem can be constructed in tests and still be
diagnosed with field paths. dump_problem re-emits a loaded problem such that
load(dump(load(f))) is a fixed point.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .f1model import PhysicsParams
from .moo.bayesopt import DEFAULT_REF_POINT, init_sample_count
from .moo.space import Dimension, ParamSpace
from .policy import DEFAULT_CALIBRATION, SurrogateCalibration, ingest_database
from .powerweight import DEFAULT_ENERGY_TABLE, EnergyTable, SramBin

SCHEMA_VERSION = 1
SIZE_CLASSES = ("nano", "micro", "mini")
ENV_CLASSES = ("low", "medium", "dense")

DEFAULT_BATTERY_VOLTAGE = 3.7  # volts per the usual 1S LiPo cell
DEFAULT_OTHER_POWER = 0.5  # watts, ESC + flight controller + misc
DEFAULT_CONTROL_LATENCY = 0.001  # seconds of flight-controller loop
DEFAULT_KNEE_EPSILON = 0.01


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Sensor:
    framerate: float  # frames/second
    mass: float  # grams
    power: float  # watts
    sensing_range: float  # meters
    latency: float  # seconds, photon to frame


@dataclass(frozen=True)
class UavPlatform:
    name: str
    size_class: str
    battery_capacity: float  # mAh
    battery_voltage: float  # volts
    base_mass: float  # grams: frame + battery + rotors + flight controller
    max_thrust: float  # newtons
    total_rotor_disk_area: float  # m^2
    other_power: float  # watts
    sensor: Sensor


@dataclass(frozen=True)
class EnvironmentClass:
    name: str  # low | medium | dense
    difficulty: float  # in [0, 1], consumed by the success surrogate


@dataclass(frozen=True)
class MissionSpec:
    distance: float  # meters, one way
    min_success_rate: float


@dataclass(frozen=True)
class ReferenceDesign:
    """Literal (fps, watts, grams) row for published or baseline designs."""

    name: str
    throughput_fps: float
    power_w: float
    mass_g: float
    success_rate: float = None


@dataclass(frozen=True)
class CoDesignProblem:
    platform: UavPlatform
    environment: EnvironmentClass
    mission: MissionSpec
    search_space: ParamSpace
    budget: int
    seed: int
    difficulty_table: dict = field(default_factory=dict)
    ref_point: tuple = DEFAULT_REF_POINT
    policy_template: dict = field(default_factory=dict)
    calibration: SurrogateCalibration = DEFAULT_CALIBRATION
    policy_db: object = None
    policy_db_path: str = None
    accel_defaults: dict = field(default_factory=dict)
    energy_table: EnergyTable = DEFAULT_ENERGY_TABLE
    physics: PhysicsParams = None
    control_latency: float = DEFAULT_CONTROL_LATENCY
    knee_epsilon: float = DEFAULT_KNEE_EPSILON
    reference_payload_g: float = 0.0
    baselines: tuple = ()
    schema_version: int = SCHEMA_VERSION


def _req(table, key, path):
    if key not in table:
        raise SpecError("%s: missing required key %r" % (path, key))
    return table[key]


def _num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError("%s: expected a number, got %r" % (path, v))
    return float(v)


def load_problem(path) -> CoDesignProblem:
    """Parse, default-fill, and validate one problem config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError("%s: parse error: %s" % (path, exc)) from exc

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecError("unsupported schema_version %r (tool speaks %d)" % (version, SCHEMA_VERSION))

    p = _req(raw, "platform", "config")
    s = _req(p, "sensor", "[platform]")
    sensor = Sensor(
        framerate=_num(_req(s, "framerate_fps", "[platform.sensor]"), "sensor.framerate_fps"),
        mass=_num(_req(s, "mass_g", "[platform.sensor]"), "sensor.mass_g"),
        power=_num(s.get("power_w", 0.0), "sensor.power_w"),
        sensing_range=_num(_req(s, "sensing_range_m", "[platform.sensor]"), "sensor.sensing_range_m"),
        latency=_num(s.get("latency_s", 0.0), "sensor.latency_s"),
    )
    platform = UavPlatform(
        name=str(_req(p, "name", "[platform]")),
        size_class=str(_req(p, "size_class", "[platform]")),
        battery_capacity=_num(_req(p, "battery_capacity_mah", "[platform]"), "platform.battery_capacity_mah"),
        battery_voltage=_num(p.get("battery_voltage_v", DEFAULT_BATTERY_VOLTAGE), "platform.battery_voltage_v"),
        base_mass=_num(_req(p, "base_mass_g", "[platform]"), "platform.base_mass_g"),
        max_thrust=_num(_req(p, "max_thrust_n", "[platform]"), "platform.max_thrust_n"),
        total_rotor_disk_area=_num(_req(p, "rotor_disk_area_m2", "[platform]"), "platform.rotor_disk_area_m2"),
        other_power=_num(p.get("other_power_w", DEFAULT_OTHER_POWER), "platform.other_power_w"),
        sensor=sensor,
    )

    e = _req(raw, "environment", "config")
    table = {k: _num(v, "environment.difficulty.%s" % k) for k, v in _req(e, "difficulty", "[environment]").items()}
    env_name = str(_req(e, "class", "[environment]"))
    if env_name not in table:
        raise SpecError("[environment]: class %r has no difficulty entry" % env_name)
    environment = EnvironmentClass(name=env_name, difficulty=table[env_name])

    m = _req(raw, "mission", "config")
    mission = MissionSpec(
        distance=_num(_req(m, "distance_m", "[mission]"), "mission.distance_m"),
        min_success_rate=_num(m.get("min_success_rate", 0.0), "mission.min_success_rate"),
    )

    sr = _req(raw, "search", "config")
    dims = []
    for i, d in enumerate(_req(sr, "dimension", "[search]")):
        name = str(_req(d, "name", "[[search.dimension]] #%d" % i))
        values = _req(d, "values", "[[search.dimension]] %s" % name)
        if not isinstance(values, list) or not values:
            raise SpecError("search.dimension.%s: values must be a nonempty array" % name)
        try:
            dims.append(Dimension(name=name, values=tuple(values)))
        except ValueError as exc:
            raise SpecError("search.dimension.%s: %s" % (name, exc)) from exc
    try:
        space = ParamSpace(dimensions=tuple(dims))
    except ValueError as exc:
        raise SpecError("[search]: %s" % exc) from exc
    budget = int(sr.get("budget", 200))
    seed = int(sr.get("seed", 0))

    moo = raw.get("moo", {})
    ref_point = tuple(_num(v, "moo.ref_point") for v in moo.get("ref_point", list(DEFAULT_REF_POINT)))
    if len(ref_point) != 3:
        raise SpecError("moo.ref_point: expected 3 components")

    pol = raw.get("policy", {})
    template = {
        "input_shape": tuple(int(v) for v in pol.get("input_shape", (16, 16, 3))),
        "kernel": tuple(int(v) for v in pol.get("kernel", (3, 3))),
        "stride": tuple(int(v) for v in pol.get("stride", (1, 1))),
        "fc_layers": tuple(int(v) for v in pol.get("fc_layers", (4, 4))),
    }
    if len(template["input_shape"]) != 3 or len(template["kernel"]) != 2 or len(template["stride"]) != 2:
        raise SpecError("[policy]: input_shape needs 3 entries, kernel/stride need 2")
    sur = pol.get("surrogate", {})
    try:
        calibration = SurrogateCalibration(
            alpha=_num(sur.get("alpha", DEFAULT_CALIBRATION.alpha), "policy.surrogate.alpha"),
            floor=_num(sur.get("floor", DEFAULT_CALIBRATION.floor), "policy.surrogate.floor"),
            smax_cap=_num(sur.get("smax_cap", DEFAULT_CALIBRATION.smax_cap), "policy.surrogate.smax_cap"),
            smax_base=_num(sur.get("smax_base", DEFAULT_CALIBRATION.smax_base), "policy.surrogate.smax_base"),
            smax_slope=_num(sur.get("smax_slope", DEFAULT_CALIBRATION.smax_slope), "policy.surrogate.smax_slope"),
            beta0=_num(sur.get("beta0", DEFAULT_CALIBRATION.beta0), "policy.surrogate.beta0"),
            beta1=_num(sur.get("beta1", DEFAULT_CALIBRATION.beta1), "policy.surrogate.beta1"),
        )
    except ValueError as exc:
        raise SpecError("[policy.surrogate]: %s" % exc) from exc
    db = None
    db_path = pol.get("database")
    if db_path is not None:
        db_path = os.path.abspath(os.path.join(os.path.dirname(os.path.abspath(path)), db_path))
        # each CSV row carries its own fc widths, the rest comes from the template
        shared = {k: v for k, v in template.items() if k != "fc_layers"}
        try:
            db = ingest_database(db_path, **shared)
        except (OSError, ValueError) as exc:
            raise SpecError("policy.database: %s" % exc) from exc

    acc = raw.get("accel", {})
    accel_defaults = {
        "frequency": _num(acc.get("frequency_hz", 200e6), "accel.frequency_hz"),
        "tech_node": _num(acc.get("tech_node_nm", 28.0), "accel.tech_node_nm"),
        "bytes_per_element": int(acc.get("bytes_per_element", 1)),
    }

    en = raw.get("energy")
    if en is None:
        energy = DEFAULT_ENERGY_TABLE
    else:
        bins = []
        for i, b in enumerate(_req(en, "sram_bin", "[energy]")):
            bins.append(SramBin(
                max_bytes=_num(_req(b, "max_bytes", "[[energy.sram_bin]] #%d" % i), "energy.sram_bin.max_bytes"),
                read_j_per_byte=_num(_req(b, "read_j_per_byte", "[[energy.sram_bin]]"), "energy.sram_bin.read_j_per_byte"),
                write_j_per_byte=_num(_req(b, "write_j_per_byte", "[[energy.sram_bin]]"), "energy.sram_bin.write_j_per_byte"),
            ))
        try:
            energy = EnergyTable(
                pe_energy=_num(_req(en, "pe_j", "[energy]"), "energy.pe_j"),
                sram_bins=tuple(bins),
                dram_access=_num(_req(en, "dram_j_per_byte", "[energy]"), "energy.dram_j_per_byte"),
                leakage_per_pe=_num(_req(en, "leakage_w_per_pe", "[energy]"), "energy.leakage_w_per_pe"),
                reference_node=_num(en.get("reference_node_nm", 28.0), "energy.reference_node_nm"),
                scaling_exponent=_num(en.get("scaling_exponent", 2.0), "energy.scaling_exponent"),
            )
        except ValueError as exc:
            raise SpecError("[energy]: %s" % exc) from exc

    ph = raw.get("physics", {})
    control_latency = _num(ph.get("control_latency_s", DEFAULT_CONTROL_LATENCY), "physics.control_latency_s")
    try:
        physics = PhysicsParams(
            sensing_range=sensor.sensing_range,
            fixed_latency=sensor.latency + control_latency,
            disk_area=platform.total_rotor_disk_area,
            figure_of_merit=_num(ph.get("figure_of_merit", 0.7), "physics.figure_of_merit"),
            air_density=_num(ph.get("air_density_kg_m3", 1.225), "physics.air_density_kg_m3"),
            gravity=_num(ph.get("gravity_m_s2", 9.81), "physics.gravity_m_s2"),
        )
    except ValueError as exc:
        raise SpecError("[physics]: %s" % exc) from exc
    knee_epsilon = _num(ph.get("knee_epsilon", DEFAULT_KNEE_EPSILON), "physics.knee_epsilon")
    reference_payload = _num(ph.get("reference_payload_g", 0.0), "physics.reference_payload_g")

    baselines = []
    for i, b in enumerate(raw.get("baseline", [])):
        baselines.append(ReferenceDesign(
            name=str(_req(b, "name", "[[baseline]] #%d" % i)),
            throughput_fps=_num(_req(b, "throughput_fps", "[[baseline]]"), "baseline.throughput_fps"),
            power_w=_num(_req(b, "power_w", "[[baseline]]"), "baseline.power_w"),
            mass_g=_num(_req(b, "mass_g", "[[baseline]]"), "baseline.mass_g"),
            success_rate=None if "success_rate" not in b else _num(b["success_rate"], "baseline.success_rate"),
        ))

    problem = CoDesignProblem(
        platform=platform,
        environment=environment,
        mission=mission,
        search_space=space,
        budget=budget,
        seed=seed,
        difficulty_table=table,
        ref_point=ref_point,
        policy_template=template,
        calibration=calibration,
        policy_db=db,
        policy_db_path=db_path,
        accel_defaults=accel_defaults,
        energy_table=energy,
        physics=physics,
        control_latency=control_latency,
        knee_epsilon=knee_epsilon,
        reference_payload_g=reference_payload,
        baselines=tuple(baselines),
        schema_version=version,
    )
    validate(problem)
    return problem


def validate(problem: CoDesignProblem) -> None:
    """Raise SpecError listing every violated invariant with its field path."""
    errors = []
    pf = problem.platform
    sn = pf.sensor
    if sn.framerate <= 0:
        errors.append("platform.sensor.framerate_fps: must be positive")
    if sn.sensing_range <= 0:
        errors.append("platform.sensor.sensing_range_m: must be positive")
    if sn.mass < 0:
        errors.append("platform.sensor.mass_g: must be non-negative")
    if sn.power < 0:
        errors.append("platform.sensor.power_w: must be non-negative")
    if sn.latency < 0:
        errors.append("platform.sensor.latency_s: must be non-negative")
    if pf.size_class not in SIZE_CLASSES:
        errors.append("platform.size_class: %r not one of %s" % (pf.size_class, list(SIZE_CLASSES)))
    if pf.battery_capacity <= 0:
        errors.append("platform.battery_capacity_mah: must be positive")
    if pf.battery_voltage <= 0:
        errors.append("platform.battery_voltage_v: must be positive")
    if pf.base_mass <= 0:
        errors.append("platform.base_mass_g: must be positive")
    if pf.max_thrust <= 9.81e-3 * pf.base_mass:
        errors.append("platform.max_thrust_n: cannot hover (thrust %.3f N <= base weight %.3f N)"
                      % (pf.max_thrust, 9.81e-3 * pf.base_mass))
    if pf.total_rotor_disk_area <= 0:
        errors.append("platform.rotor_disk_area_m2: must be positive")
    if pf.other_power < 0:
        errors.append("platform.other_power_w: must be non-negative")

    env = problem.environment
    if env.name not in ENV_CLASSES:
        errors.append("environment.class: %r not one of %s" % (env.name, list(ENV_CLASSES)))
    if not 0.0 <= env.difficulty <= 1.0:
        errors.append("environment.difficulty: %r outside [0, 1]" % env.difficulty)
    t = problem.difficulty_table
    if all(k in t for k in ENV_CLASSES) and not (t["low"] < t["medium"] < t["dense"]):
        errors.append("environment.difficulty: ordering must be low < medium < dense")

    if problem.mission.distance <= 0:
        errors.append("mission.distance_m: must be positive")
    if not 0.0 <= problem.mission.min_success_rate <= 1.0:
        errors.append("mission.min_success_rate: outside [0, 1]")

    space = problem.search_space
    need = min(init_sample_count(len(space.dimensions)), space.size)
    if problem.budget < need:
        errors.append("search.budget: %d below the initial sample count %d" % (problem.budget, need))
    if problem.seed < 0:
        errors.append("search.seed: must be non-negative")

    if not 0.0 < problem.knee_epsilon <= 0.2:
        errors.append("physics.knee_epsilon: must be in (0, 0.2]")
    if problem.reference_payload_g < 0:
        errors.append("physics.reference_payload_g: must be non-negative")

    for b in problem.baselines:
        if b.throughput_fps <= 0 or b.power_w < 0 or b.mass_g < 0:
            errors.append("baseline.%s: throughput must be positive, power/mass non-negative" % b.name)

    if errors:
        raise SpecError("\n".join(errors))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(v, (list, tuple)):
        return "[%s]" % ", ".join(_toml_value(x) for x in v)
    raise SpecError("cannot serialize %r" % (v,))


def _emit_table(lines, header, entries):
    lines.append(header)
    for k, v in entries:
        lines.append("%s = %s" % (k, _toml_value(v)))
    lines.append("")


def dump_problem(problem: CoDesignProblem) -> str:
    """TOML text whose load_problem result equals `problem` exactly.

    Only the restricted schema this module reads is emitted; defaults are
    written out explicitly so the dump is self-contained.
    """
    pf, sn = problem.platform, problem.platform.sensor
    lines = ["schema_version = %d" % problem.schema_version, ""]
    _emit_table(lines, "[platform]", [
        ("name", pf.name), ("size_class", pf.size_class),
        ("battery_capacity_mah", pf.battery_capacity),
        ("battery_voltage_v", pf.battery_voltage),
        ("base_mass_g", pf.base_mass), ("max_thrust_n", pf.max_thrust),
        ("rotor_disk_area_m2", pf.total_rotor_disk_area),
        ("other_power_w", pf.other_power),
    ])
    _emit_table(lines, "[platform.sensor]", [
        ("framerate_fps", sn.framerate), ("mass_g", sn.mass), ("power_w", sn.power),
        ("sensing_range_m", sn.sensing_range), ("latency_s", sn.latency),
    ])
    _emit_table(lines, "[environment]", [("class", problem.environment.name)])
    _emit_table(lines, "[environment.difficulty]", sorted(problem.difficulty_table.items()))
    _emit_table(lines, "[mission]", [
        ("distance_m", problem.mission.distance),
        ("min_success_rate", problem.mission.min_success_rate),
    ])
    _emit_table(lines, "[search]", [("budget", problem.budget), ("seed", problem.seed)])
    for d in problem.search_space.dimensions:
        _emit_table(lines, "[[search.dimension]]", [("name", d.name), ("values", list(d.values))])
    _emit_table(lines, "[moo]", [("ref_point", list(problem.ref_point))])

    tpl = problem.policy_template
    pol = [
        ("input_shape", list(tpl["input_shape"])), ("kernel", list(tpl["kernel"])),
        ("stride", list(tpl["stride"])), ("fc_layers", list(tpl["fc_layers"])),
    ]
    if problem.policy_db_path is not None:
        pol.append(("database", problem.policy_db_path))
    _emit_table(lines, "[policy]", pol)
    c = problem.calibration
    _emit_table(lines, "[policy.surrogate]", [
        ("alpha", c.alpha), ("floor", c.floor), ("smax_cap", c.smax_cap),
        ("smax_base", c.smax_base), ("smax_slope", c.smax_slope),
        ("beta0", c.beta0), ("beta1", c.beta1),
    ])
    ad = problem.accel_defaults
    _emit_table(lines, "[accel]", [
        ("frequency_hz", ad["frequency"]), ("tech_node_nm", ad["tech_node"]),
        ("bytes_per_element", ad["bytes_per_element"]),
    ])
    et = problem.energy_table
    _emit_table(lines, "[energy]", [
        ("pe_j", et.pe_energy), ("dram_j_per_byte", et.dram_access),
        ("leakage_w_per_pe", et.leakage_per_pe),
        ("reference_node_nm", et.reference_node),
        ("scaling_exponent", et.scaling_exponent),
    ])
    for b in et.sram_bins:
        _emit_table(lines, "[[energy.sram_bin]]", [
            ("max_bytes", b.max_bytes), ("read_j_per_byte", b.read_j_per_byte),
            ("write_j_per_byte", b.write_j_per_byte),
        ])
    ph = problem.physics
    _emit_table(lines, "[physics]", [
        ("control_latency_s", problem.control_latency),
        ("figure_of_merit", ph.figure_of_merit),
        ("air_density_kg_m3", ph.air_density), ("gravity_m_s2", ph.gravity),
        ("knee_epsilon", problem.knee_epsilon),
        ("reference_payload_g", problem.reference_payload_g),
    ])
    for b in problem.baselines:
        row = [("name", b.name), ("throughput_fps", b.throughput_fps),
               ("power_w", b.power_w), ("mass_g", b.mass_g)]
        if b.success_rate is not None:
            row.append(("success_rate", b.success_rate))
        _emit_table(lines, "[[baseline]]", row)
    return "\n".join(lines)
