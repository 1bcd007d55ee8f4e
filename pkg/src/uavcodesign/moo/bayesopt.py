"""Pareto archive and the seeded optimization loop.

run_bayesopt: seeded random initialization, then one GP per objective and
hypervolume-gain acquisition over the (finite) unevaluated space until the
evaluation budget is spent. Everything downstream of the seed is
deterministic, including the archive file bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gp import gp_fit, gp_predict
from .hypervolume import hypervolume
from .pareto import dominates, pareto_filter
from .smsego import sms_ego_gain, sms_ego_score
from .space import evaluate

ARCHIVE_SCHEMA_VERSION = 1

# all-minimize (-success, latency_s, power_w); any design with nonzero
# success, sub-second latency, and sub-watt compute dominates this
DEFAULT_REF_POINT = (0.0, 1.0, 1.0)

# permutation-based no-replacement sampling keeps prefixes nested (the first
# k draws do not depend on how many are taken); above this size fall back to
# rejection sampling
_PERMUTATION_LIMIT = 1_000_000


def init_sample_count(n_dimensions: int) -> int:
    return max(11, 2 * n_dimensions + 1)


def _sample_indices(space, rng, k: int) -> list:
    n = space.size
    if k > n:
        raise ValueError("cannot draw %d distinct points from a %d-point space" % (k, n))
    if n <= _PERMUTATION_LIMIT:
        return [int(i) for i in rng.permutation(n)[:k]]
    seen = set()
    out = []
    while len(out) < k:
        i = int(rng.integers(n))
        if i not in seen:
            seen.add(i)
            out.append(i)
    return out


@dataclass
class ParetoArchive:
    """Evaluated design points plus an incrementally maintained front."""

    ref_point: tuple = DEFAULT_REF_POINT
    points: list = field(default_factory=list)
    _front: list = field(default_factory=list, repr=False)  # indices into points

    def __post_init__(self):
        self.ref_point = tuple(float(v) for v in self.ref_point)
        pts, self.points = list(self.points), []
        for p in pts:
            self.add(p)

    def __len__(self):
        return len(self.points)

    def add(self, point) -> None:
        y = point.objectives.to_min()
        i = len(self.points)
        self.points.append(point)
        kept = [j for j in self._front if not dominates(y, self.points[j].objectives.to_min())]
        if not any(dominates(self.points[j].objectives.to_min(), y) for j in kept):
            kept.append(i)
        self._front = kept

    def min_objectives(self) -> list:
        return [p.objectives.to_min() for p in self.points]

    def front_indices(self) -> list:
        return sorted(self._front)

    def front(self) -> list:
        return [self.points[i] for i in self.front_indices()]

    def front_min(self) -> list:
        return [self.points[i].objectives.to_min() for i in self.front_indices()]

    def hypervolume(self) -> float:
        """Front hypervolume against the archive reference point; points that
        fail to dominate the reference contribute nothing."""
        pts = [y for y in self.front_min() if all(v < r for v, r in zip(y, self.ref_point))]
        if not pts:
            return 0.0
        return hypervolume(pts, self.ref_point)

    def hypervolume_trace(self) -> list:
        trace = []
        prefix = ParetoArchive(ref_point=self.ref_point)
        for p in self.points:
            prefix.add(p)
            trace.append(prefix.hypervolume())
        return trace

    def save(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "record": "header",
                "schema_version": ARCHIVE_SCHEMA_VERSION,
                "ref_point": list(self.ref_point),
                "n_points": len(self.points),
            }
            fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
            for i, p in enumerate(self.points):
                rec = {
                    "record": "design",
                    "index": i,
                    "params": dict(p.params),
                    "objectives": {
                        "success_rate": p.objectives.success_rate,
                        "latency_s": p.objectives.latency_s,
                        "power_w": p.objectives.power_w,
                    },
                    "mass_g": {
                        "board": p.mass.board,
                        "heatsink": p.mass.heatsink,
                        "total": p.mass.total,
                    },
                    "success_source": p.success_source,
                    "seed": None if p.provenance is None else p.provenance[1],
                }
                fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path, problem) -> "ParetoArchive":
        """Rebuild an archive by re-evaluating each stored point against
        `problem`; stored objectives must match the re-evaluation."""
        header, records = read_records(path)
        if header.get("schema_version") != ARCHIVE_SCHEMA_VERSION:
            raise ValueError("unsupported archive schema %r" % header.get("schema_version"))
        archive = cls(ref_point=tuple(header["ref_point"]))
        for rec in records:
            prov = None if rec.get("seed") is None else (rec["index"], rec["seed"])
            pt = evaluate(rec["params"], problem, provenance=prov)
            stored = rec["objectives"]
            got = pt.objectives
            for k, v in (("success_rate", got.success_rate),
                         ("latency_s", got.latency_s),
                         ("power_w", got.power_w)):
                if abs(v - stored[k]) > 1e-9 * max(1.0, abs(stored[k])):
                    raise ValueError(
                        "archive point %d: stored %s=%r, re-evaluated %r (stale config?)"
                        % (rec["index"], k, stored[k], v)
                    )
            archive.add(pt)
        return archive


def read_records(path):
    """Raw (header, design-records) from an archive file, no re-evaluation."""
    with open(path) as fh:
        lines = [json.loads(ln) for ln in fh if ln.strip()]
    if not lines or lines[0].get("record") != "header":
        raise ValueError("%s: not an archive file (missing header record)" % path)
    header = lines[0]
    records = [ln for ln in lines[1:] if ln.get("record") == "design"]
    return header, records


def _encode_all(space, indices, cache):
    rows = []
    for i in indices:
        u = cache.get(i)
        if u is None:
            u = space.encode(space.point_at(i))
            cache[i] = u
        rows.append(u)
    return np.array(rows)


def run_bayesopt(problem, budget=None, seed=None, callback=None) -> ParetoArchive:
    """Optimize `problem` and return the evaluated archive.

    budget/seed default to the problem's own. `callback(archive)` runs after
    every evaluation, for progress reporting.
    """
    space = problem.search_space
    if space.size == 0:
        raise ValueError("empty search space")
    seed = problem.seed if seed is None else seed
    budget = problem.budget if budget is None else budget
    budget = min(budget, space.size)
    n_init = min(init_sample_count(len(space.dimensions)), space.size)
    if budget < n_init:
        raise ValueError("budget %d below initial sample count %d" % (budget, n_init))

    rng = np.random.default_rng(seed)
    ref = tuple(getattr(problem, "ref_point", DEFAULT_REF_POINT))
    archive = ParetoArchive(ref_point=ref)
    evaluated = {}
    unit_cache = {}

    for idx in _sample_indices(space, rng, n_init):
        pt = evaluate(space.point_at(idx), problem, provenance=(len(archive), seed))
        evaluated[idx] = len(archive)
        archive.add(pt)
        if callback:
            callback(archive)

    gain = sms_ego_gain(len(ref))
    it = 0
    while len(archive) < budget:
        # archive order, not index order, so targets align with x rows
        order = sorted(evaluated, key=evaluated.get)
        x = _encode_all(space, order, unit_cache)
        y = np.array([archive.points[evaluated[i]].objectives.to_min() for i in order])

        gps = [gp_fit(x, y[:, j], seed=seed + 7919 * (it + 1) + j) for j in range(y.shape[1])]

        cand = [int(i) for i in space.candidate_indices(rng) if int(i) not in evaluated]
        if not cand:
            break
        xc = _encode_all(space, cand, unit_cache)
        means, stds = [], []
        for gp in gps:
            m, v = gp_predict(gp, xc)
            means.append(m)
            stds.append(np.sqrt(v))
        means = np.column_stack(means)
        stds = np.column_stack(stds)

        front = archive.front_min()
        best_i, best_score = None, None
        # ascending space index = ascending lexicographic parameter tuple,
        # so scanning in order makes the tie-break implicit
        for row, idx in enumerate(cand):
            s = sms_ego_score(means[row], stds[row], front, ref, gain=gain)
            if best_score is None or s > best_score:
                best_i, best_score = idx, s

        pt = evaluate(space.point_at(best_i), problem, provenance=(len(archive), seed))
        evaluated[best_i] = len(archive)
        archive.add(pt)
        if callback:
            callback(archive)
        it += 1

    return archive


def random_search(problem, budget=None, seed=None) -> ParetoArchive:
    """Seeded uniform baseline. With the same seed its first max(11, 2d+1)
    evaluations coincide with run_bayesopt's initialization."""
    space = problem.search_space
    seed = problem.seed if seed is None else seed
    budget = problem.budget if budget is None else budget
    budget = min(budget, space.size)
    if budget < 1:
        raise ValueError("budget must be positive")

    rng = np.random.default_rng(seed)
    ref = tuple(getattr(problem, "ref_point", DEFAULT_REF_POINT))
    archive = ParetoArchive(ref_point=ref)
    for idx in _sample_indices(space, rng, budget):
        pt = evaluate(space.point_at(idx), problem, provenance=(len(archive), seed))
        archive.add(pt)
    return archive
