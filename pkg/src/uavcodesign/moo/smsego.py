"""S-metric (hypervolume) acquisition scoring for candidate designs.

A candidate is summarized by its lower confidence bound, then scored by the
hypervolume it would add to the current front. Candidates whose bound is
dominated get a negative penalty so the argmax still ranks them sensibly.
"""

from __future__ import annotations

import math

from scipy.stats import norm

from .hypervolume import hypervolume
from .pareto import dominates


def sms_ego_gain(n_objectives: int) -> float:
    """Confidence multiplier: gamma with P(all objectives below bound) = 0.25."""
    return -float(norm.ppf(0.5 * 0.5 ** (1.0 / n_objectives)))


def sms_ego_score(mean, std, front, ref, gain: float | None = None) -> float:
    """Score one candidate against the current nondominated front.

    `mean`/`std` are the GP posteriors per objective (all-minimize). The
    optimistic estimate y = mean - gain * std earns the hypervolume it adds
    if nondominated, otherwise minus the product-form dominance penalty.
    """
    d = len(ref)
    if gain is None:
        gain = sms_ego_gain(d)
    y = tuple(float(m) - gain * float(s) for m, s in zip(mean, std))

    penalty = 0.0
    for p in front:
        if all(pv <= yv for pv, yv in zip(p, y)):
            term = 1.0
            for j in range(d):
                term *= 1.0 + max(0.0, y[j] - p[j])
            penalty += term - 1.0
    if penalty > 0.0:
        return -penalty

    # nondominated: hypervolume improvement, clipping to just inside the
    # reference so a bound beyond it contributes nothing on that axis
    eps = 1e-12
    yc = tuple(min(yv, r - eps) for yv, r in zip(y, ref))
    base_pts = [p for p in front if all(pv < r for pv, r in zip(p, ref))]
    base = hypervolume(base_pts, ref) if base_pts else 0.0
    new = hypervolume(base_pts + [yc], ref)
    gainv = new - base
    if math.isclose(gainv, 0.0, abs_tol=1e-15):
        return 0.0
    return gainv
