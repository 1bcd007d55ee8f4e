"""Re-derive the nano scenario's calibration and check it against the
baseline table shipped inside the config.

The scenario quotes four reference designs (HP, AP, PO, LP). Everything
else (thrust, disk area, sensing range, latencies) was chosen so that the
knee of the safe-velocity curve lands at AP's framerate and the mission
ratios between the designs come out where the baseline table puts them.
This script recomputes both from first principles and prints the residuals,
so a config edit that silently breaks the calibration is easy to spot.

    python3 demos/calibration_fit.py
"""

import os

from uavcodesign import uavspec
from uavcodesign.f1model import (ceiling_velocity, knee_point,
                                 max_acceleration, mission_report)

CONFIG = os.path.join(os.path.dirname(uavspec.__file__), "data", "nano.toml")
KNEE_TARGET = 46.0  # AP's framerate: the knee should sit on it
RATIO_TARGETS = {"HP": 2.25, "LP": 1.8, "PO": 1.3}  # N(AP) / N(design)


def main():
    problem = uavspec.load_problem(CONFIG)
    platform = problem.platform

    total = platform.base_mass + platform.sensor.mass + problem.reference_payload_g
    a = max_acceleration(platform, problem.reference_payload_g, problem.physics.gravity)
    print("platform %s: %.0f g all-up, thrust %.2f N -> a_max %.2f m/s^2"
          % (platform.name, total, platform.max_thrust, a))
    print("sensing range %.2f m, fixed latency %.1f ms"
          % (problem.physics.sensing_range, 1e3 * problem.physics.fixed_latency))

    v_max = ceiling_velocity(problem.physics, a)
    knee = knee_point(problem.physics, a, problem.knee_epsilon)
    print("ceiling %.3f m/s, knee %.1f FPS (target %.0f, residual %+.1f)"
          % (v_max, knee.throughput, KNEE_TARGET, knee.throughput - KNEE_TARGET))

    reports = {}
    for b in problem.baselines:
        reports[b.name] = mission_report(platform, problem.environment,
                                         problem.mission, b, problem.physics)
    print("\ndesign   FPS      W      g   v_safe   missions")
    for b in problem.baselines:
        r = reports[b.name]
        print("%-6s %5.0f %6.2f %6.1f   %6.3f   %8.2f"
              % (b.name, b.throughput_fps, b.power_w, b.mass_g, r.v_safe, r.n_missions))

    n_ap = reports["AP"].n_missions
    print("\nmission ratios vs AP:")
    for name, target in RATIO_TARGETS.items():
        ratio = n_ap / reports[name].n_missions
        print("  N(AP)/N(%s) = %.3f (target %.2f, off by %+.0f%%)"
              % (name, ratio, target, 100 * (ratio / target - 1)))


if __name__ == "__main__":
    main()
