"""Discrete space encoding, index/point bijection, and the evaluation stack
wiring (frozen golden values for the shipped nano space)."""

import itertools

import numpy as np
import pytest

from uavcodesign.moo import Dimension, ObjectiveVector, ParamSpace, evaluate
from uavcodesign.moo.space import SUBSAMPLE_LIMIT


def small_space():
    return ParamSpace((
        Dimension("a", (1, 2, 3)),
        Dimension("b", ("x", "y")),
        Dimension("c", (10,)),
    ))


def test_dimension_unit_mapping():
    d = Dimension("n", (4, 8, 16))
    assert d.to_unit(4) == 0.0
    assert d.to_unit(8) == 0.5
    assert d.to_unit(16) == 1.0
    assert Dimension("s", (7,)).to_unit(7) == 0.5
    with pytest.raises(ValueError, match="not a value"):
        d.to_unit(5)


def test_dimension_validation():
    with pytest.raises(ValueError, match="no values"):
        Dimension("e", ())
    with pytest.raises(ValueError, match="duplicate"):
        Dimension("d", (1, 1))
    with pytest.raises(ValueError, match="duplicate"):
        ParamSpace((Dimension("a", (1,)), Dimension("a", (2,))))


def test_space_size_and_names():
    sp = small_space()
    assert sp.size == 6
    assert sp.names == ("a", "b", "c")


def test_point_at_is_lexicographic():
    sp = small_space()
    seq = [tuple(sp.point_at(i).values()) for i in range(sp.size)]
    assert seq == list(itertools.product((1, 2, 3), ("x", "y"), (10,)))
    assert seq == [tuple(p.values()) for p in sp.points()]
    with pytest.raises(IndexError):
        sp.point_at(sp.size)
    with pytest.raises(IndexError):
        sp.point_at(-1)


def test_encode_round_trip():
    sp = small_space()
    units = {tuple(sp.encode(sp.point_at(i))) for i in range(sp.size)}
    assert len(units) == sp.size  # encoding is injective over the space
    assert tuple(sp.encode(sp.point_at(0))) == (0.0, 0.0, 0.5)
    assert tuple(sp.encode(sp.point_at(sp.size - 1))) == (1.0, 1.0, 0.5)


def test_candidate_indices_small_space():
    sp = small_space()
    assert list(sp.candidate_indices()) == list(range(6))


def test_candidate_indices_subsamples_large_space():
    sp = ParamSpace((Dimension("a", tuple(range(400))),
                     Dimension("b", tuple(range(400)))))
    assert sp.size > SUBSAMPLE_LIMIT
    idx = sp.candidate_indices(np.random.default_rng(0))
    assert len(idx) == SUBSAMPLE_LIMIT
    assert len(set(idx.tolist())) == SUBSAMPLE_LIMIT
    assert idx.min() >= 0 and idx.max() < sp.size
    assert np.all(np.diff(idx) > 0)


def test_objective_vector_round_trip():
    o = ObjectiveVector(0.8, 0.002, 0.3)
    assert o.to_min() == (-0.8, 0.002, 0.3)
    assert ObjectiveVector.from_min(o.to_min()) == o


def test_evaluate_golden_point(nano_problem):
    sp = nano_problem.search_space
    assert sp.size == 384
    d = evaluate(sp.point_at(0), nano_problem)
    o = d.objectives
    assert o.success_rate == pytest.approx(0.87984328271653023, rel=1e-12)
    assert o.latency_s == pytest.approx(0.00047911, rel=1e-12)
    assert o.power_w == pytest.approx(0.16291112011855316, rel=1e-12)
    assert d.mass.total == pytest.approx(20.896011160652041, rel=1e-12)
    assert d.success_source == "surrogate"
    assert d.model.conv_layers == 3 and d.accel.array_rows == 4


def test_evaluate_param_tuple_sorted(nano_problem):
    d = evaluate(nano_problem.search_space.point_at(5), nano_problem)
    names = [k for k, _ in d.params]
    assert names == sorted(names)
    assert d.as_dict() == nano_problem.search_space.point_at(5)


def test_evaluate_is_deterministic(nano_problem):
    p = nano_problem.search_space.point_at(100)
    assert evaluate(p, nano_problem) == evaluate(p, nano_problem)


def test_evaluate_rejects_unknown_params(nano_problem):
    p = dict(nano_problem.search_space.point_at(0))
    p["voltage"] = 12
    with pytest.raises(ValueError, match="unknown design parameters"):
        evaluate(p, nano_problem)


def test_evaluate_coerces_numeric_types(nano_problem):
    p = dict(nano_problem.search_space.point_at(0))
    q = {k: (float(v) if isinstance(v, int) else v) for k, v in p.items()}
    assert evaluate(q, nano_problem).objectives == evaluate(p, nano_problem).objectives


def test_evaluate_requires_energy_table(nano_problem):
    class Stub:
        environment = nano_problem.environment
        policy_template = nano_problem.policy_template
        accel_defaults = nano_problem.accel_defaults
        calibration = nano_problem.calibration
        policy_db = None
        energy_table = None

    with pytest.raises(ValueError, match="energy_table"):
        evaluate(nano_problem.search_space.point_at(0), Stub())
