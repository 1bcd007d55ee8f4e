"""Exact hypervolume for up to three minimization objectives.

2-D is the classic staircase sum; 3-D sweeps the third dimension and
integrates the 2-D area of the active staircase over each slab.
"""

from __future__ import annotations

from .pareto import pareto_filter


class HypervolumeError(ValueError):
    pass


def _check(front, ref):
    pts = [tuple(float(v) for v in p) for p in front]
    ref = tuple(float(v) for v in ref)
    if not pts:
        raise HypervolumeError("empty front")
    d = len(ref)
    if d not in (1, 2, 3):
        raise HypervolumeError("hypervolume implemented for 1 to 3 objectives")
    for p in pts:
        if len(p) != d:
            raise HypervolumeError("point/reference dimension mismatch")
        if not all(v < r for v, r in zip(p, ref)):
            raise HypervolumeError("point %r does not dominate reference %r" % (p, ref))
    return pts, ref


def _hv2d(pts, ref):
    # staircase: sort by x; nondominated 2-D points then have strictly decreasing y
    pts = sorted(pts)
    area = 0.0
    y_prev = ref[1]
    for x, y in pts:
        area += (ref[0] - x) * (y_prev - y)
        y_prev = y
    return area


def hypervolume(front, ref) -> float:
    """Volume dominated by `front` and bounded by `ref` (all-minimize).

    Every point must dominate the reference strictly; dominated members of
    `front` are filtered internally.
    """
    pts, ref = _check(front, ref)
    pts = [pts[i] for i in pareto_filter(pts)]
    d = len(ref)
    if d == 1:
        return ref[0] - min(p[0] for p in pts)
    if d == 2:
        return _hv2d(pts, ref)

    # dimension sweep over z: between consecutive z levels the dominated area
    # in (x, y) is the staircase of all points at or below the slab floor
    zs = sorted(set(p[2] for p in pts))
    levels = zs + [ref[2]]
    vol = 0.0
    for lo, hi in zip(levels, levels[1:]):
        active = [(p[0], p[1]) for p in pts if p[2] <= lo]
        active = [active[i] for i in pareto_filter(active)]
        vol += _hv2d(active, ref[:2]) * (hi - lo)
    return vol
