"""Release gate: eleven numbered end-to-end checks, one printed PASS/FAIL
line each (run with -s to see them on success).

Each check is self-contained: it builds its own oracle (Monte-Carlo volume,
pairwise dominance scan, event-driven array simulation, exhaustive sweep)
and compares the shipped implementation against it, or reproduces the
calibrated scenario numbers end to end. Runtime-capped checks assert their
own wall-clock budget.
"""

import functools
import itertools
import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from uavcodesign import uavspec
from uavcodesign.cli import main
from uavcodesign.f1model import (KNEE_GRID_FPS, assess, fine_tune, knee_point,
                                 max_acceleration, mission_report,
                                 safe_velocity)
from uavcodesign.moo import gp_fit, gp_predict
from uavcodesign.moo.bayesopt import random_search, run_bayesopt
from uavcodesign.moo.hypervolume import hypervolume
from uavcodesign.moo.pareto import pareto_filter
from uavcodesign.moo.space import evaluate
from uavcodesign.perfmodel import (DATAFLOWS, AccelConfig, GemmShape,
                                   layer_cycles, oracle_simulate)
from uavcodesign.uavspec import (EnvironmentClass, MissionSpec,
                                 ReferenceDesign, Sensor, UavPlatform)

DATA = os.path.join(os.path.dirname(uavspec.__file__), "data")
NANO = os.path.join(DATA, "nano.toml")


def gate(label):
    """Emit one PASS/FAIL line per criterion, then let pytest do its thing."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print("%s: FAIL" % label, flush=True)
                raise
            print("%s: PASS" % label, flush=True)

        return wrapper

    return deco


def close(x, y, rel=1e-9):
    return abs(x - y) <= rel * max(abs(x), abs(y))


def reference_knee(problem):
    a = max_acceleration(problem.platform, problem.reference_payload_g,
                         problem.physics.gravity)
    return knee_point(problem.physics, a, problem.knee_epsilon)


# --- C1 ---------------------------------------------------------------

MC_SAMPLES = 10_000_000
MC_CHUNK = 1_000_000


def mc_hypervolume(points, ref, rng):
    """Monte-Carlo dominated volume, sampled inside the tight bounding box
    so the hit fraction stays large and the estimator stays sharp."""
    pts = np.asarray(points, dtype=np.float64)
    lo = pts.min(axis=0)
    span = np.asarray(ref, dtype=np.float64) - lo
    cols = [c.astype(np.float32) for c in pts.T]
    lo32, span32 = lo.astype(np.float32), span.astype(np.float32)
    hits, done = 0, 0
    while done < MC_SAMPLES:
        n = min(MC_CHUNK, MC_SAMPLES - done)
        done += n
        sample = [lo32[j] + span32[j] * rng.random(n, dtype=np.float32)
                  for j in range(pts.shape[1])]
        dominated = np.zeros(n, dtype=bool)
        for i in range(pts.shape[0]):
            m = sample[0] >= cols[0][i]
            for j in range(1, pts.shape[1]):
                m &= sample[j] >= cols[j][i]
            dominated |= m
        hits += int(dominated.sum())
    return float(np.prod(span)) * hits / MC_SAMPLES


@gate("C01 exact hypervolume vs 1e7-sample Monte-Carlo, 100 random fronts")
def test_c01_hypervolume_oracle():
    t0 = time.monotonic()
    assert hypervolume([(0.0, 0.0)], (1.0, 1.0)) == 1.0
    assert hypervolume([(0.0, 0.5), (0.5, 0.0)], (1.0, 1.0)) == 0.75

    rng = np.random.default_rng(1001)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        raw = [tuple(map(float, p)) for p in rng.random((n, 3))]
        front = [raw[i] for i in pareto_filter(raw)]
        exact = hypervolume(front, (1.0, 1.0, 1.0))
        estimate = mc_hypervolume(front, (1.0, 1.0, 1.0), rng)
        assert abs(exact - estimate) <= 0.01 * estimate
    assert time.monotonic() - t0 < 60.0


# --- C2 ---------------------------------------------------------------


def pairwise_front(vals):
    a = np.asarray(vals, dtype=np.float64)
    le = (a[:, None, :] <= a[None, :, :]).all(axis=2)
    lt = (a[:, None, :] < a[None, :, :]).any(axis=2)
    dominated = (le & lt).any(axis=0)
    return [i for i in range(len(vals)) if not dominated[i]]


@gate("C02 pareto_filter vs pairwise dominance oracle, 1000 random sets")
def test_c02_pareto_oracle():
    rng = np.random.default_rng(1002)
    for case in range(1000):
        n = int(rng.integers(1, 201))
        d = int(rng.integers(2, 4))
        if case % 2:
            pts = rng.random((n, d))
        else:
            pts = rng.integers(0, 5, size=(n, d)) / 4.0  # force ties
        vals = [tuple(map(float, p)) for p in pts]
        assert pareto_filter(vals) == pairwise_front(vals)


# --- C3 ---------------------------------------------------------------


@gate("C03 GP interpolation <= 1e-6 and non-negative variance on 1000 probes")
def test_c03_gp_sanity():
    rng = np.random.default_rng(3)
    x = rng.random((25, 2))
    y = np.sin(3 * x[:, 0]) + np.cos(2 * x[:, 1]) + 0.5 * x[:, 0] * x[:, 1]
    model = gp_fit(x, y, seed=0)
    mean, var = gp_predict(model, x)
    assert float(np.max(np.abs(mean - y))) <= 1e-6

    gx, gy = np.meshgrid(np.linspace(-0.3, 1.3, 25), np.linspace(-0.3, 1.3, 40))
    probes = np.column_stack([gx.ravel(), gy.ravel()])
    assert probes.shape[0] == 1000
    _, pvar = gp_predict(model, probes)
    assert float(pvar.min()) >= 0.0

    xw = np.linspace(0, 1, 12).reshape(-1, 1)
    yw = np.sin(6 * xw[:, 0])
    mw, _ = gp_predict(gp_fit(xw, yw, seed=0), xw)
    assert float(np.max(np.abs(mw - yw))) <= 1e-6


# --- C4 ---------------------------------------------------------------


@gate("C04 layer_cycles vs event-driven simulation, exhaustive small GEMMs")
def test_c04_latency_oracle():
    t0 = time.monotonic()
    memories = ((64, 64, 64, 4), (1 << 16, 1 << 16, 1 << 14, 16))
    for m, n, k in itertools.product(range(1, 9), repeat=3):
        g = GemmShape(m, n, k)
        for rows, cols in itertools.product(range(1, 5), repeat=2):
            for s_if, s_f, s_of, bw in memories:
                for flow in DATAFLOWS:
                    cfg = AccelConfig(array_rows=rows, array_cols=cols,
                                      sram_ifmap=s_if, sram_filter=s_f,
                                      sram_ofmap=s_of, dram_bandwidth=bw,
                                      dataflow=flow)
                    assert oracle_simulate(g, cfg) == layer_cycles(g, cfg)
    assert time.monotonic() - t0 < 60.0


# --- C5 ---------------------------------------------------------------


@gate("C05 BO >= 90% true hypervolume and >= random search, 16/20 seeds")
def test_c05_bo_effectiveness(nano_problem):
    t0 = time.monotonic()
    problem = nano_problem
    space = problem.search_space
    assert space.size <= 4096
    budget = problem.budget
    assert budget == round(0.1 * space.size)

    points = [evaluate(params, problem) for params in space.points()]
    mins = [p.objectives.to_min() for p in points]
    front = [mins[i] for i in pareto_filter(mins)]
    hv_true = hypervolume(front, problem.ref_point)
    assert hv_true > 0

    ok_fraction, ok_random = 0, 0
    for seed in range(20):
        hv_bo = run_bayesopt(problem, budget=budget, seed=seed).hypervolume()
        hv_rs = random_search(problem, budget=budget, seed=seed).hypervolume()
        ok_fraction += hv_bo >= 0.9 * hv_true
        ok_random += hv_bo >= hv_rs
    assert ok_fraction >= 16, "only %d/20 seeds reached 90%% of true HV" % ok_fraction
    assert ok_random >= 16, "only %d/20 seeds beat random search" % ok_random
    assert time.monotonic() - t0 < 300.0


# --- C6 ---------------------------------------------------------------


def random_mission_setup(rng):
    sensor = Sensor(framerate=float(rng.uniform(10, 120)),
                    mass=float(rng.uniform(0.5, 60)),
                    power=float(rng.uniform(0.0, 2.0)),
                    sensing_range=float(rng.uniform(0.5, 40)),
                    latency=float(rng.uniform(0.0, 0.02)))
    design = ReferenceDesign(name="x",
                             throughput_fps=float(rng.uniform(5, 400)),
                             power_w=float(rng.uniform(0.05, 10)),
                             mass_g=float(rng.uniform(1, 120)))
    base = float(rng.uniform(30, 2000))
    total_kg = (base + sensor.mass + design.mass_g) / 1000.0
    platform = UavPlatform(
        name="bench", size_class="nano",
        battery_capacity=float(rng.uniform(100, 6000)),
        battery_voltage=float(rng.uniform(3.7, 15.2)),
        base_mass=base,
        max_thrust=float(rng.uniform(1.3, 3.5)) * 9.81 * total_kg,
        total_rotor_disk_area=float(rng.uniform(0.001, 0.2)),
        other_power=float(rng.uniform(0.1, 5)),
        sensor=sensor)
    physics = uavspec.PhysicsParams(
        sensing_range=sensor.sensing_range,
        fixed_latency=sensor.latency + float(rng.uniform(0.0, 0.01)),
        disk_area=platform.total_rotor_disk_area)
    mission = MissionSpec(distance=float(rng.uniform(5, 1000)),
                          min_success_rate=0.0)
    return platform, mission, design, physics


@gate("C06 mission identities at 1e-9 rel on 10k inputs, exact battery doubling")
def test_c06_mission_identities():
    env = EnvironmentClass("medium", 0.5)
    rng = np.random.default_rng(1006)
    for _ in range(10_000):
        platform, mission, design, physics = random_mission_setup(rng)
        rep = mission_report(platform, env, mission, design, physics)

        # reaction identity: v*t_react + v^2/(2a) recovers the sensing range
        a = max_acceleration(platform, design.mass_g, physics.gravity)
        fps = min(platform.sensor.framerate, design.throughput_fps)
        assert close(rep.v_safe, safe_velocity(fps, physics, a))
        t_react = 1.0 / fps + physics.fixed_latency
        assert close(rep.v_safe * t_react + rep.v_safe ** 2 / (2 * a),
                     physics.sensing_range)

        assert close(rep.t_mission, mission.distance / rep.v_safe)
        assert close(rep.e_mission,
                     (rep.p_rotors + rep.p_compute + rep.p_others) * rep.t_mission)
        assert close(rep.p_compute, design.power_w)
        assert close(rep.e_battery,
                     platform.battery_capacity * platform.battery_voltage * 3.6)
        assert close(rep.n_missions, rep.e_battery / rep.e_mission)

        doubled = replace(platform, battery_capacity=2 * platform.battery_capacity)
        rep2 = mission_report(doubled, env, mission, design, physics)
        assert rep2.n_missions == 2 * rep.n_missions  # exact in IEEE arithmetic


# --- C7 ---------------------------------------------------------------


@gate("C07 calibrated nano scenario: knee 46 +/- 2, baseline mission ratios")
def test_c07_nano_reproduction(nano_problem):
    problem = nano_problem
    knee = reference_knee(problem)
    assert 44.0 <= knee.throughput <= 48.0

    n = {}
    for b in problem.baselines:
        rep = mission_report(problem.platform, problem.environment,
                             problem.mission, b, problem.physics)
        n[b.name] = rep.n_missions
    assert set(n) == {"HP", "AP", "PO", "LP"}
    assert n["AP"] > n["PO"] > n["LP"]
    assert n["AP"] > n["HP"]
    for pair, target in (("HP", 2.25), ("LP", 1.8), ("PO", 1.3)):
        ratio = n["AP"] / n[pair]
        assert 0.75 * target <= ratio <= 1.25 * target, \
            "N(AP)/N(%s) = %.3f outside %.2f +/- 25%%" % (pair, ratio, target)


# --- C8 ---------------------------------------------------------------


@gate("C08 sensor/compute matching: diagonal wins, mismatch loses >= 10%")
def test_c08_sensor_gating(mini30_problem, mini60_problem):
    grid = {}
    for problem in (mini30_problem, mini60_problem):
        fps = problem.platform.sensor.framerate
        for b in problem.baselines:
            rep = mission_report(problem.platform, problem.environment,
                                 problem.mission, b, problem.physics)
            grid[(fps, b.name)] = rep.n_missions
    assert grid[(30.0, "AP30")] > grid[(30.0, "AP60")]
    assert grid[(60.0, "AP60")] > grid[(60.0, "AP30")]
    loss = 1.0 - grid[(60.0, "AP30")] / grid[(60.0, "AP60")]
    assert loss >= 0.10, "mismatch only lost %.1f%% of missions" % (100 * loss)


# --- C9 ---------------------------------------------------------------


@gate("C09 agility: nano knee above micro knee, knee monotone in a_max")
def test_c09_agility(nano_problem, micro_problem):
    nano_knee = reference_knee(nano_problem)
    micro_knee = reference_knee(micro_problem)
    assert nano_knee.throughput > micro_knee.throughput

    knees = [knee_point(nano_problem.physics, a, nano_problem.knee_epsilon).throughput
             for a in (2.0, 5.0, 9.81, 15.0, 25.0)]
    assert all(k1 <= k2 for k1, k2 in zip(knees, knees[1:]))
    assert knees[-1] > knees[0]


# --- C10 --------------------------------------------------------------


@gate("C10 fine-tuning every over-provisioned archive point raises missions")
def test_c10_fine_tune(nano_problem):
    problem = nano_problem
    knee = reference_knee(problem)
    archive = run_bayesopt(problem, budget=problem.budget, seed=0)
    assert len(archive.points) > 0
    tuned_any = 0
    for point in archive.points:
        if assess(point, knee).classification != "over_provisioned":
            continue
        tuned_any += 1
        tuned = fine_tune(point, knee, problem.energy_table)
        before = mission_report(problem.platform, problem.environment,
                                problem.mission, point, problem.physics)
        after = mission_report(problem.platform, problem.environment,
                               problem.mission, tuned, problem.physics)
        assert after.n_missions > before.n_missions
        assert abs(1.0 / tuned.objectives.latency_s - knee.throughput) <= KNEE_GRID_FPS
    assert tuned_any == len(archive.points)  # this scenario overshoots everywhere


# --- C11 --------------------------------------------------------------


@gate("C11 explore twice with same config and seed: byte-identical archives")
def test_c11_determinism(tmp_path):
    outs = [str(tmp_path / "run1"), str(tmp_path / "run2")]
    for out in outs:
        assert main(["explore", "--config", NANO, "--out", out]) == 0
    blobs = [open(os.path.join(o, "archive.jsonl"), "rb").read() for o in outs]
    assert blobs[0] == blobs[1] and len(blobs[0]) > 0
