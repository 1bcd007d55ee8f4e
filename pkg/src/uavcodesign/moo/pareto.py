"""Pareto dominance in canonical all-minimize form."""

from __future__ import annotations


def dominates(a, b) -> bool:
    """a dominates b: a <= b in every objective, < in at least one."""
    strict = False
    for ai, bi in zip(a, b):
        if ai > bi:
            return False
        if ai < bi:
            strict = True
    return strict


def pareto_filter(points) -> list[int]:
    """Indices of the nondominated subset, ascending.

    Lexicographic sort first: no later point can dominate an earlier one
    (componentwise <= implies lex <=), so one pass against the kept front
    suffices; transitivity covers dominators that were themselves dominated.
    """
    pts = [tuple(p) for p in points]
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    kept: list[int] = []
    for i in order:
        if not any(dominates(pts[j], pts[i]) for j in kept):
            kept.append(i)
    return sorted(kept)
