"""Walk the whole pipeline on the nano scenario: explore the joint space,
look at the front, pick the design that maximizes missions per charge, and
fine-tune it down to the knee.

Run from the repo root:

    python3 demos/explore_nano.py [--budget N] [--seed S]
"""

import argparse
import os

from uavcodesign import uavspec
from uavcodesign.f1model import (assess, fine_tune, knee_point,
                                 max_acceleration, mission_report,
                                 select_design)
from uavcodesign.moo.bayesopt import run_bayesopt

CONFIG = os.path.join(os.path.dirname(uavspec.__file__), "data", "nano.toml")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    problem = uavspec.load_problem(CONFIG)
    budget = problem.budget if args.budget is None else args.budget
    seed = problem.seed if args.seed is None else args.seed

    print("scenario %s: %d-point space, budget %d, seed %d"
          % (problem.platform.name, problem.search_space.size, budget, seed))
    archive = run_bayesopt(problem, budget=budget, seed=seed)
    front = archive.front()
    print("evaluated %d designs, %d on the front, hypervolume %.6f"
          % (len(archive), len(front), archive.hypervolume()))

    print("\nfront (success / FPS / W / g):")
    for p in sorted(front, key=lambda p: -p.objectives.success_rate):
        print("  %.4f  %8.1f  %6.3f  %5.1f   %s"
              % (p.objectives.success_rate, 1.0 / p.objectives.latency_s,
                 p.objectives.power_w, p.mass.total, dict(p.params)))

    a_ref = max_acceleration(problem.platform, problem.reference_payload_g,
                             problem.physics.gravity)
    knee = knee_point(problem.physics, a_ref, problem.knee_epsilon)
    chosen, rep = select_design(archive, problem)
    print("\nknee: %.1f FPS (payload %.0f g)" % (knee.throughput, problem.reference_payload_g))
    print("selected: %s" % dict(chosen.params))
    print("  %s, %.2f missions at %.2f m/s"
          % (assess(chosen, knee).classification, rep.n_missions, rep.v_safe))

    if assess(chosen, knee).classification == "over_provisioned":
        tuned = fine_tune(chosen, knee, problem.energy_table)
        rep2 = mission_report(problem.platform, problem.environment,
                              problem.mission, tuned, problem.physics)
        print("fine-tuned to %.1f FPS: %.3f W -> %.3f W, %.2f -> %.2f missions"
              % (1.0 / tuned.objectives.latency_s, chosen.objectives.power_w,
                 tuned.objectives.power_w, rep.n_missions, rep2.n_missions))


if __name__ == "__main__":
    main()
