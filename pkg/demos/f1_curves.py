"""Print the safe-velocity curve for each shipped platform and mark the
knee. The curve saturates once the pipeline outruns the physics: past the
knee, extra throughput buys mass and power but no speed.

    python3 demos/f1_curves.py
"""

import os

from uavcodesign import uavspec
from uavcodesign.f1model import f1_curve, max_acceleration, safe_velocity

DATA = os.path.join(os.path.dirname(uavspec.__file__), "data")
SCENARIOS = ("nano.toml", "micro.toml", "mini-30fps.toml")
PROBE_FPS = (5, 10, 20, 30, 46, 60, 100, 200, 300)


def main():
    for name in SCENARIOS:
        problem = uavspec.load_problem(os.path.join(DATA, name))
        a = max_acceleration(problem.platform, problem.reference_payload_g,
                             problem.physics.gravity)
        curve = f1_curve(problem.physics, a, epsilon=problem.knee_epsilon)
        print("%s (%s, %.0f g payload): a_max %.2f m/s^2, ceiling %.2f m/s"
              % (problem.platform.name, problem.platform.size_class,
                 problem.reference_payload_g, a, curve.ceiling))
        for fps in PROBE_FPS:
            v = safe_velocity(fps, problem.physics, a)
            bar = "#" * int(round(40 * v / curve.ceiling))
            print("  %5.1f FPS  %6.3f m/s  %s" % (fps, v, bar))
        print("  knee: %.1f FPS at %.3f m/s (%.0f%% of ceiling)\n"
              % (curve.knee.throughput, curve.knee.v_safe,
                 100 * curve.knee.v_safe / curve.ceiling))
    print("for plots: uav-codesign f1 --config <scenario.toml> --svg --out <dir>")


if __name__ == "__main__":
    main()
