"""Analytical systolic-array latency model, plus a tiny event-driven oracle.

Conv and FC layers are lowered to GEMMs (im2col). A GEMM m x n x k runs on an
R x C array in ceil(m/R) * ceil(n/C) folds; a fold whose output tile is r x c
costs k + r + c - 2 cycles (skewed wavefront fill + drain). Summing with
effective edge-tile dims gives the closed form

    compute_cycles = Fm*Fn*(k - 2) + Fn*m + Fm*n

which the per-cycle oracle below reproduces exactly. Dataflow changes DRAM
traffic accounting only, never the cycle timing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .policy import ModelSpec

OUTPUT_STATIONARY = "output_stationary"
WEIGHT_STATIONARY = "weight_stationary"
DATAFLOWS = (OUTPUT_STATIONARY, WEIGHT_STATIONARY)

# oracle_simulate refuses anything bigger than this
ORACLE_MAX_ARRAY = 4
ORACLE_MAX_DIM = 8


class PerfError(ValueError):
    pass


@dataclass(frozen=True)
class AccelConfig:
    array_rows: int
    array_cols: int
    sram_ifmap: int  # bytes
    sram_filter: int
    sram_ofmap: int
    dataflow: str = OUTPUT_STATIONARY
    dram_bandwidth: int = 4  # bytes/cycle
    frequency: float = 200e6  # Hz
    tech_node: float = 28.0  # nm
    bytes_per_element: int = 1  # 8-bit quantized inference

    def __post_init__(self):
        for name in ("array_rows", "array_cols", "sram_ifmap", "sram_filter",
                     "sram_ofmap", "dram_bandwidth", "frequency", "tech_node",
                     "bytes_per_element"):
            if getattr(self, name) <= 0:
                raise PerfError("%s must be positive" % name)
        if self.dataflow not in DATAFLOWS:
            raise PerfError("dataflow must be one of %s" % (DATAFLOWS,))


@dataclass(frozen=True)
class GemmShape:
    m: int  # output pixels E*F
    n: int  # output channels M
    k: int  # reduction R*S*C

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise PerfError("GEMM dims must be >= 1")


@dataclass(frozen=True)
class LayerProfile:
    compute_cycles: int
    memory_cycles: int
    total_cycles: int
    dram_traffic: int  # bytes
    sram_reads_ifmap: int
    sram_reads_filter: int
    sram_writes: int
    macs: int

    @property
    def sram_reads(self) -> int:
        return self.sram_reads_ifmap + self.sram_reads_filter


@dataclass(frozen=True)
class InferenceProfile:
    per_layer: tuple
    frequency: float

    @property
    def total_cycles(self) -> int:
        return sum(p.total_cycles for p in self.per_layer)

    @property
    def latency(self) -> float:
        return self.total_cycles / self.frequency

    @property
    def throughput(self) -> float:
        return self.frequency / self.total_cycles

    @property
    def dram_traffic(self) -> int:
        return sum(p.dram_traffic for p in self.per_layer)

    @property
    def sram_reads(self) -> int:
        return sum(p.sram_reads for p in self.per_layer)

    @property
    def sram_writes(self) -> int:
        return sum(p.sram_writes for p in self.per_layer)

    @property
    def macs(self) -> int:
        return sum(p.macs for p in self.per_layer)


def lower_layers(model: ModelSpec) -> list[GemmShape]:
    """One GEMM per layer, front to back: conv (E*F) x M x (R*S*C), FC 1 x out x in."""
    kh, kw = model.kernel
    c_in = model.input_shape[2]
    gemms = []
    for h, w, c_out in model.conv_shapes():
        gemms.append(GemmShape(m=h * w, n=c_out, k=kh * kw * c_in))
        c_in = c_out
    h, w, c = model.conv_shapes()[-1]
    width = h * w * c
    for fc in model.fc_layers:
        gemms.append(GemmShape(m=1, n=fc, k=width))
        width = fc
    return gemms


def _folds(g: GemmShape, cfg: AccelConfig) -> tuple[int, int]:
    return math.ceil(g.m / cfg.array_rows), math.ceil(g.n / cfg.array_cols)


def _compute_cycles(g: GemmShape, cfg: AccelConfig) -> int:
    fm, fn = _folds(g, cfg)
    return fm * fn * (g.k - 2) + fn * g.m + fm * g.n


def _dram_traffic(g: GemmShape, cfg: AccelConfig) -> int:
    """Per-dataflow refetch accounting; the only place dataflow matters.

    Output-stationary: psums never leave the array; a streaming operand that
    does not fit its SRAM partition is refetched once per orthogonal fold.
    Weight-stationary: column-major fold order keeps each filter tile resident,
    so the filter is fetched exactly once; the ifmap follows the OS rule.
    Both write the ofmap exactly once.
    """
    fm, fn = _folds(g, cfg)
    b = cfg.bytes_per_element
    ifmap = g.m * g.k * b
    filt = g.k * g.n * b
    ofmap = g.m * g.n * b
    if_traffic = ifmap if ifmap <= cfg.sram_ifmap else ifmap * fn
    if cfg.dataflow == OUTPUT_STATIONARY:
        f_traffic = filt if filt <= cfg.sram_filter else filt * fm
    else:
        f_traffic = filt
    return if_traffic + f_traffic + ofmap


def layer_cycles(g: GemmShape, cfg: AccelConfig) -> LayerProfile:
    fm, fn = _folds(g, cfg)
    compute = _compute_cycles(g, cfg)
    traffic = _dram_traffic(g, cfg)
    memory = math.ceil(traffic / cfg.dram_bandwidth)
    return LayerProfile(
        compute_cycles=compute,
        memory_cycles=memory,
        total_cycles=max(compute, memory),
        dram_traffic=traffic,
        sram_reads_ifmap=g.k * fn * g.m,
        sram_reads_filter=g.k * fm * g.n,
        sram_writes=g.m * g.n,
        macs=g.m * g.n * g.k,
    )


def model_latency(model: ModelSpec, cfg: AccelConfig) -> InferenceProfile:
    return InferenceProfile(
        per_layer=tuple(layer_cycles(g, cfg) for g in lower_layers(model)),
        frequency=cfg.frequency,
    )


def oracle_simulate(g: GemmShape, cfg: AccelConfig) -> LayerProfile:
    """Per-cycle wavefront simulation; validation oracle for layer_cycles.

    Walks the fold schedule in the dataflow's order (row-major for OS,
    column-major for WS) and advances one cycle at a time. PE (i, j) of a tile
    performs its t-th of k MACs at cycle i + j + t relative to the tile start.
    Traffic accounting is shared with the closed form.
    """
    if cfg.array_rows > ORACLE_MAX_ARRAY or cfg.array_cols > ORACLE_MAX_ARRAY:
        raise PerfError("oracle limited to arrays <= %dx%d" % (ORACLE_MAX_ARRAY, ORACLE_MAX_ARRAY))
    if max(g.m, g.n, g.k) > ORACLE_MAX_DIM:
        raise PerfError("oracle limited to GEMM dims <= %d" % ORACLE_MAX_DIM)

    fm, fn = _folds(g, cfg)
    if cfg.dataflow == OUTPUT_STATIONARY:
        schedule = [(i, j) for i in range(fm) for j in range(fn)]
    else:
        schedule = [(i, j) for j in range(fn) for i in range(fm)]

    total = 0
    macs_done = 0
    for (i, j) in schedule:
        rows = min(cfg.array_rows, g.m - i * cfg.array_rows)
        cols = min(cfg.array_cols, g.n - j * cfg.array_cols)
        pending = {(r, c): g.k for r in range(rows) for c in range(cols)}
        cycle = 0
        while pending:
            done = []
            for (r, c), left in pending.items():
                if r + c <= cycle < r + c + g.k:
                    pending[(r, c)] = left - 1
                    macs_done += 1
                    if pending[(r, c)] == 0:
                        done.append((r, c))
            for key in done:
                del pending[key]
            cycle += 1
        total += cycle

    traffic = _dram_traffic(g, cfg)
    assert macs_done == g.m * g.n * g.k
    return LayerProfile(
        compute_cycles=total,
        memory_cycles=math.ceil(traffic / cfg.dram_bandwidth),
        total_cycles=max(total, math.ceil(traffic / cfg.dram_bandwidth)),
        dram_traffic=traffic,
        sram_reads_ifmap=g.k * fn * g.m,
        sram_reads_filter=g.k * fm * g.n,
        sram_writes=g.m * g.n,
        macs=macs_done,
    )
