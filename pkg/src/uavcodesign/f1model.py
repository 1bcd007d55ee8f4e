"""Cyber-physical selection layer: safe-velocity curve, knee point, mission
energy accounting, and design selection/fine-tuning.

The velocity model is a single-obstacle stopping-distance argument: the
vehicle must react (sensor + control + one inference interval) and then brake
to rest within its sensing range. That gives a saturating curve of safe
velocity versus action throughput whose ceiling is set by vehicle agility;
the knee of the curve is the cheapest throughput that still buys (almost) all
of the ceiling. Mission counts follow from hover power and a scalar battery
energy budget.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .moo.space import DesignPoint, ObjectiveVector
from .perfmodel import model_latency
from .powerweight import accel_power, compute_mass, soc_power

GRAVITY = 9.81  # m/s^2
AIR_DENSITY = 1.225  # kg/m^3, sea level
KNEE_GRID_FPS = 0.1  # knee search resolution


class F1Error(ValueError):
    pass


class CannotHoverError(F1Error):
    pass


@dataclass(frozen=True)
class PhysicsParams:
    """Reaction-and-braking constants for one platform.

    sensing_range is the fitted effective reactive range, not a camera spec;
    fixed_latency folds sensor readout and control-loop time. disk_area is
    carried here so rotor power needs no second argument.
    """

    sensing_range: float  # meters
    fixed_latency: float  # seconds
    disk_area: float  # m^2, total over rotors
    figure_of_merit: float = 0.7
    air_density: float = AIR_DENSITY
    gravity: float = GRAVITY

    def __post_init__(self):
        if self.sensing_range <= 0:
            raise F1Error("sensing_range must be positive")
        if self.fixed_latency < 0:
            raise F1Error("fixed_latency must be non-negative")
        if self.disk_area <= 0:
            raise F1Error("disk_area must be positive")
        if not 0 < self.figure_of_merit <= 1:
            raise F1Error("figure_of_merit must be in (0, 1]")


@dataclass(frozen=True)
class KneePoint:
    throughput: float  # frames/second
    v_safe: float  # m/s


@dataclass(frozen=True)
class F1Curve:
    samples: tuple  # ((throughput_fps, v_safe), ...)
    ceiling: float
    knee: KneePoint


@dataclass(frozen=True)
class MissionReport:
    v_safe: float
    t_mission: float
    p_rotors: float
    p_compute: float
    p_others: float
    e_mission: float
    e_battery: float
    n_missions: float

    @property
    def n_missions_floor(self) -> int:
        return int(math.floor(self.n_missions))


@dataclass(frozen=True)
class DesignAssessment:
    classification: str  # under_provisioned | optimal | over_provisioned
    margin: float  # compute throughput / knee throughput


def max_acceleration(platform, payload_mass: float, gravity: float = GRAVITY) -> float:
    """Peak forward acceleration with `payload_mass` grams of compute payload
    on board (sensor mass is charged automatically)."""
    m_kg = (platform.base_mass + platform.sensor.mass + payload_mass) / 1000.0
    if m_kg <= 0:
        raise F1Error("total mass must be positive")
    a = platform.max_thrust / m_kg - gravity
    if a <= 0:
        raise CannotHoverError(
            "cannot hover: thrust %.3f N < weight %.3f N" % (platform.max_thrust, m_kg * gravity)
        )
    return a


def safe_velocity(throughput: float, physics: PhysicsParams, a_max: float) -> float:
    """Largest v with v*t + v^2/(2*a_max) <= sensing_range, where the
    reaction time t is fixed_latency + one inference interval."""
    if throughput <= 0:
        raise F1Error("throughput must be positive")
    if a_max <= 0:
        raise F1Error("a_max must be positive")
    t = physics.fixed_latency + 1.0 / throughput
    return a_max * (-t + math.sqrt(t * t + 2.0 * physics.sensing_range / a_max))


def ceiling_velocity(physics: PhysicsParams, a_max: float) -> float:
    """Infinite-throughput limit of safe_velocity: only fixed_latency remains."""
    if a_max <= 0:
        raise F1Error("a_max must be positive")
    t = physics.fixed_latency
    return a_max * (-t + math.sqrt(t * t + 2.0 * physics.sensing_range / a_max))


def action_throughput(sensor_fps: float, compute_fps: float) -> float:
    if sensor_fps <= 0 or compute_fps <= 0:
        raise F1Error("throughputs must be positive")
    return min(sensor_fps, compute_fps)


def knee_point(physics: PhysicsParams, a_max: float, epsilon: float = 0.01) -> KneePoint:
    """Smallest throughput (0.1 FPS grid) whose safe velocity reaches
    (1 - epsilon) of the ceiling."""
    if not 0 < epsilon <= 0.2:
        raise F1Error("epsilon must be in (0, 0.2]")
    target = (1.0 - epsilon) * ceiling_velocity(physics, a_max)

    lo = KNEE_GRID_FPS
    if safe_velocity(lo, physics, a_max) >= target:
        return KneePoint(lo, safe_velocity(lo, physics, a_max))
    hi = 1.0
    while safe_velocity(hi, physics, a_max) < target:
        hi *= 2.0
        if hi > 1e7:
            raise F1Error("knee search failed to bracket (degenerate physics)")
    while hi - lo > 0.01 * KNEE_GRID_FPS:
        mid = 0.5 * (lo + hi)
        if safe_velocity(mid, physics, a_max) >= target:
            hi = mid
        else:
            lo = mid
    # snap up to the grid, then step back down while the previous grid point
    # still clears the target (the crossing can sit just below a grid line)
    steps = math.ceil(hi / KNEE_GRID_FPS - 1e-9)
    while steps > 1 and safe_velocity((steps - 1) * KNEE_GRID_FPS, physics, a_max) >= target:
        steps -= 1
    fps = steps * KNEE_GRID_FPS
    if safe_velocity(fps, physics, a_max) < target:
        fps = (steps + 1) * KNEE_GRID_FPS
    return KneePoint(fps, safe_velocity(fps, physics, a_max))


def f1_curve(physics: PhysicsParams, a_max: float, epsilon: float = 0.01, grid=None) -> F1Curve:
    """Sampled throughput -> v_safe curve with its ceiling and knee.

    Default grid: 1 to 300 FPS in 0.5 FPS steps.
    """
    if grid is None:
        grid = [i / 2.0 for i in range(2, 601)]
    samples = tuple((float(f), safe_velocity(f, physics, a_max)) for f in grid)
    return F1Curve(
        samples=samples,
        ceiling=ceiling_velocity(physics, a_max),
        knee=knee_point(physics, a_max, epsilon),
    )


def rotor_power(total_mass: float, physics: PhysicsParams) -> float:
    """Ideal hover-induced power for `total_mass` grams, divided by the rotor
    figure of merit: P = (m g)^1.5 / (FoM sqrt(2 rho A))."""
    if total_mass <= 0:
        raise F1Error("total mass must be positive")
    thrust = total_mass / 1000.0 * physics.gravity
    return thrust ** 1.5 / (physics.figure_of_merit * math.sqrt(2.0 * physics.air_density * physics.disk_area))


def battery_energy(platform) -> float:
    """Joules from the mAh rating: mAh * V * 3.6."""
    return platform.battery_capacity * platform.battery_voltage * 3.6


def design_throughput(design) -> float:
    """Compute-side inference rate of a design point or a literal (fps,
    watts, grams) reference row."""
    obj = getattr(design, "objectives", None)
    if obj is not None:
        return 1.0 / obj.latency_s
    return float(design.throughput_fps)


def design_power(design) -> float:
    obj = getattr(design, "objectives", None)
    if obj is not None:
        return obj.power_w
    return float(design.power_w)


def design_mass(design) -> float:
    m = getattr(design, "mass", None)
    if m is not None:
        return m.total
    return float(design.mass_g)


def mission_report(platform, env, mission, design, physics: PhysicsParams) -> MissionReport:
    """Energy budget accounting for one (platform, design) pairing.

    The decision rate is gated by the sensor; acceleration is derated by the
    design's compute payload. env is accepted for interface symmetry with
    selection; mission counts do not depend on it.
    """
    del env
    fps = action_throughput(platform.sensor.framerate, design_throughput(design))
    payload = design_mass(design)
    a = max_acceleration(platform, payload, physics.gravity)
    v = safe_velocity(fps, physics, a)
    t = mission.distance / v
    total_mass = platform.base_mass + platform.sensor.mass + payload
    p_rot = rotor_power(total_mass, physics)
    p_comp = design_power(design)
    p_oth = platform.other_power
    e_mission = (p_rot + p_comp + p_oth) * t
    e_batt = battery_energy(platform)
    return MissionReport(
        v_safe=v,
        t_mission=t,
        p_rotors=p_rot,
        p_compute=p_comp,
        p_others=p_oth,
        e_mission=e_mission,
        e_battery=e_batt,
        n_missions=e_batt / e_mission,
    )


def assess(design, knee: KneePoint, tolerance: float = 0.1) -> DesignAssessment:
    """Provisioning label from the compute rate alone (the knee already
    encodes the physics)."""
    if tolerance < 0:
        raise F1Error("tolerance must be non-negative")
    fps = design_throughput(design)
    margin = fps / knee.throughput
    if margin < 1.0 - tolerance:
        label = "under_provisioned"
    elif margin > 1.0 + tolerance:
        label = "over_provisioned"
    else:
        label = "optimal"
    return DesignAssessment(classification=label, margin=margin)


def select_design(archive, problem):
    """Pick the archived design with the most missions per charge.

    Candidates are filtered to mission.min_success_rate; when nothing
    qualifies the highest achieved success tier is used instead (with a
    warning). Ties fall to lower SoC power, then lower mass, then parameter
    order. Returns (DesignPoint, MissionReport).
    """
    points = list(archive.points)
    if not points:
        raise F1Error("empty archive")

    floor = problem.mission.min_success_rate
    kept = [p for p in points if p.objectives.success_rate >= floor]
    if not kept:
        best = max(p.objectives.success_rate for p in points)
        warnings.warn(
            "no design meets min_success_rate %.3f; falling back to the best "
            "achieved tier %.3f" % (floor, best),
            stacklevel=2,
        )
        kept = [p for p in points if p.objectives.success_rate == best]

    scored = []
    for p in kept:
        rep = mission_report(problem.platform, problem.environment, problem.mission, p, problem.physics)
        scored.append((p, rep))
    scored.sort(key=lambda pr: (-pr[1].n_missions, pr[0].objectives.power_w, pr[0].mass.total, pr[0].params))
    return scored[0]


def fine_tune(design: DesignPoint, knee: KneePoint, table, tolerance: float = 0.1,
              tech_node: float = None) -> DesignPoint:
    """Slow an over-provisioned design down to the knee by frequency scaling.

    Cycle counts are untouched; the clock is retargeted so the inference rate
    lands on the knee, and power/mass are re-estimated (optionally at a new
    technology node). Refuses designs that are not over-provisioned rather
    than silently returning them.
    """
    fps = design_throughput(design)
    label = assess(design, knee, tolerance).classification
    if label != "over_provisioned":
        raise F1Error("fine_tune requires an over-provisioned design (got %s at %.1f FPS, knee %.1f)"
                      % (label, fps, knee.throughput))

    accel = replace(design.accel, frequency=design.accel.frequency * knee.throughput / fps)
    if tech_node is not None:
        accel = replace(accel, tech_node=tech_node)
    profile = model_latency(design.model, accel)
    soc = soc_power(accel_power(profile, accel, table))
    mass = compute_mass(soc.total)
    obj = ObjectiveVector(
        success_rate=design.objectives.success_rate,
        latency_s=profile.latency,
        power_w=soc.total,
    )
    prov = (design.provenance or ()) + ("fine_tuned",)
    return DesignPoint(
        params=design.params,
        model=design.model,
        accel=accel,
        objectives=obj,
        mass=mass,
        success_source=design.success_source,
        provenance=prov,
    )
