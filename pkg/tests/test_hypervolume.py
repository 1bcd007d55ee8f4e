"""Exact hypervolume vs two independent oracles: inclusion-exclusion over
dominated boxes, and Monte Carlo sampling."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcodesign.moo import HypervolumeError, hypervolume


def box_oracle(front, ref):
    """Inclusion-exclusion over the union of boxes [p, ref]; exact for small n."""
    pts = [tuple(p) for p in front]
    total = 0.0
    for r in range(1, len(pts) + 1):
        for subset in itertools.combinations(pts, r):
            corner = [max(c) for c in zip(*subset)]
            vol = 1.0
            for lo, hi in zip(corner, ref):
                vol *= max(0.0, hi - lo)
            total += (-1.0) ** (r + 1) * vol
    return total


def mc_oracle(front, ref, n=200_000, seed=0):
    rng = np.random.default_rng(seed)
    pts = np.asarray(front, dtype=float)
    lo = pts.min(axis=0)
    ref = np.asarray(ref, dtype=float)
    samples = rng.uniform(lo, ref, size=(n, len(ref)))
    dominated = np.zeros(n, dtype=bool)
    for p in pts:
        dominated |= np.all(samples >= p, axis=1)
    return float(dominated.mean()) * float(np.prod(ref - lo))


def test_hand_cases():
    assert hypervolume([(0.0, 0.0)], (1.0, 1.0)) == 1.0
    assert hypervolume([(0.0, 0.5), (0.5, 0.0)], (1.0, 1.0)) == 0.75
    assert hypervolume([(0.2,)], (1.0,)) == pytest.approx(0.8)
    assert hypervolume([(0.0, 0.0, 0.0)], (1.0, 1.0, 1.0)) == 1.0
    # two overlapping boxes: 0.5 + 0.25 - 0.125
    assert hypervolume([(0.0, 0.0, 0.5), (0.5, 0.5, 0.0)],
                       (1.0, 1.0, 1.0)) == pytest.approx(0.625)


def test_validation():
    with pytest.raises(HypervolumeError, match="empty"):
        hypervolume([], (1.0, 1.0))
    with pytest.raises(HypervolumeError, match="dominate"):
        hypervolume([(1.0, 0.0)], (1.0, 1.0))
    with pytest.raises(HypervolumeError, match="1 to 3"):
        hypervolume([(0.0,) * 4], (1.0,) * 4)
    with pytest.raises(HypervolumeError, match="mismatch"):
        hypervolume([(0.0, 0.0, 0.0)], (1.0, 1.0))


def test_dominated_members_ignored():
    front = [(0.1, 0.7), (0.6, 0.2)]
    padded = front + [(0.65, 0.75), (0.6, 0.2)]
    assert hypervolume(padded, (1.0, 1.0)) == hypervolume(front, (1.0, 1.0))


coords2 = st.tuples(st.integers(0, 7), st.integers(0, 7)).map(
    lambda t: (t[0] / 8.0, t[1] / 8.0))
coords3 = st.tuples(st.integers(0, 7), st.integers(0, 7), st.integers(0, 7)).map(
    lambda t: (t[0] / 8.0, t[1] / 8.0, t[2] / 8.0))


@given(st.lists(coords2, min_size=1, max_size=10))
@settings(max_examples=150, deadline=None)
def test_matches_box_oracle_2d(front):
    assert hypervolume(front, (1.0, 1.0)) == pytest.approx(
        box_oracle(front, (1.0, 1.0)), abs=1e-12)


@given(st.lists(coords3, min_size=1, max_size=10))
@settings(max_examples=150, deadline=None)
def test_matches_box_oracle_3d(front):
    assert hypervolume(front, (1.0, 1.0, 1.0)) == pytest.approx(
        box_oracle(front, (1.0, 1.0, 1.0)), abs=1e-12)


def test_matches_mc_oracle():
    rng = np.random.default_rng(42)
    for d in (2, 3):
        front = rng.uniform(0.0, 0.9, size=(15, d))
        exact = hypervolume(front, (1.0,) * d)
        lo = front.min(axis=0)
        box = float(np.prod(1.0 - lo))
        est = mc_oracle(front, (1.0,) * d, n=400_000, seed=7)
        # 5 sigma of the binomial estimator
        sigma = box * 0.5 / np.sqrt(400_000)
        assert abs(exact - est) < 5 * sigma


@given(st.lists(coords3, min_size=1, max_size=8), coords3)
@settings(max_examples=100, deadline=None)
def test_adding_point_never_shrinks(front, extra):
    ref = (1.0, 1.0, 1.0)
    base = hypervolume(front, ref)
    assert hypervolume(front + [extra], ref) >= base - 1e-12


@given(st.lists(coords3, min_size=1, max_size=8), st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_order_invariant(front, rnd):
    ref = (1.0, 1.0, 1.0)
    shuffled = list(front)
    rnd.shuffle(shuffled)
    assert hypervolume(shuffled, ref) == pytest.approx(hypervolume(front, ref), rel=1e-12)


def test_scale_and_translate():
    front = [(0.1, 0.4, 0.2), (0.3, 0.1, 0.5)]
    ref = (1.0, 1.0, 1.0)
    base = hypervolume(front, ref)
    scaled = hypervolume([tuple(3.0 * v for v in p) for p in front],
                         tuple(3.0 * r for r in ref))
    assert scaled == pytest.approx(27.0 * base, rel=1e-12)
    shifted = hypervolume([tuple(v + 5.0 for v in p) for p in front],
                          tuple(r + 5.0 for r in ref))
    assert shifted == pytest.approx(base, rel=1e-12)


def test_constant_z_slab_matches_2d():
    pts2 = [(0.1, 0.7), (0.4, 0.3), (0.8, 0.1)]
    area = hypervolume(pts2, (1.0, 1.0))
    vol = hypervolume([(x, y, 0.25) for x, y in pts2], (1.0, 1.0, 0.75))
    assert vol == pytest.approx(area * 0.5, rel=1e-12)
