"""SoC power by component summation, energy tables with tech scaling, and
compute payload mass (board + heatsink) from TDP."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .perfmodel import AccelConfig, InferenceProfile

# platform constants; overridable through soc_power kwargs
MCU_CORES = 2
MCU_CORE_W = 0.38e-3  # per core at 100 MHz, 28 nm
CAMERA_W = 100e-3
DRAM_STANDBY_W = 50e-3

BOARD_G = 20.0
HEATSINK_G_PER_W = 5.5  # slope pinned by the (0.7 W, 24 g) / (8.24 W, 65 g) pair


class PowerError(ValueError):
    pass


@dataclass(frozen=True)
class SramBin:
    """Energy per byte for SRAM partitions up to max_bytes capacity."""

    max_bytes: float
    read_j_per_byte: float
    write_j_per_byte: float


@dataclass(frozen=True)
class EnergyTable:
    """Per-operation energies at reference_node; values are config, not claims."""

    pe_energy: float  # J per MAC
    sram_bins: tuple  # SramBin ascending by capacity, last one open-ended
    dram_access: float  # J per byte
    leakage_per_pe: float  # W
    reference_node: float = 28.0  # nm
    scaling_exponent: float = 2.0  # dynamic energy ~ node^2; leakage ~ node

    def __post_init__(self):
        if self.pe_energy < 0 or self.dram_access < 0 or self.leakage_per_pe < 0:
            raise PowerError("energies must be non-negative")
        if not self.sram_bins:
            raise PowerError("need at least one SRAM bin")
        caps = [b.max_bytes for b in self.sram_bins]
        if caps != sorted(caps) or not math.isinf(caps[-1]):
            raise PowerError("SRAM bins must ascend and end with an open bin")

    def sram_bin(self, capacity_bytes: float) -> SramBin:
        for b in self.sram_bins:
            if capacity_bytes <= b.max_bytes:
                return b
        raise PowerError("no SRAM bin for %r bytes" % capacity_bytes)


DEFAULT_ENERGY_TABLE = EnergyTable(
    pe_energy=0.3e-12,
    sram_bins=(
        SramBin(16 * 1024, 0.05e-12, 0.07e-12),
        SramBin(64 * 1024, 0.10e-12, 0.13e-12),
        SramBin(math.inf, 0.20e-12, 0.25e-12),
    ),
    dram_access=15e-12,
    leakage_per_pe=5e-6,
)


def tech_scale(table: EnergyTable, target_node: float) -> EnergyTable:
    """Scale dynamic energies by (target/ref)^exponent and leakage by (target/ref)."""
    if target_node <= 0:
        raise PowerError("target_node must be positive")
    s = (target_node / table.reference_node) ** table.scaling_exponent
    sl = target_node / table.reference_node
    return replace(
        table,
        pe_energy=table.pe_energy * s,
        sram_bins=tuple(
            SramBin(b.max_bytes, b.read_j_per_byte * s, b.write_j_per_byte * s)
            for b in table.sram_bins
        ),
        dram_access=table.dram_access * s,
        leakage_per_pe=table.leakage_per_pe * sl,
        reference_node=target_node,
    )


def accel_power(profile: InferenceProfile, cfg: AccelConfig,
                table: EnergyTable = DEFAULT_ENERGY_TABLE) -> float:
    """Dynamic energy per inference divided by latency, plus array leakage."""
    t = table if cfg.tech_node == table.reference_node else tech_scale(table, cfg.tech_node)
    if_bin = t.sram_bin(cfg.sram_ifmap)
    f_bin = t.sram_bin(cfg.sram_filter)
    of_bin = t.sram_bin(cfg.sram_ofmap)
    energy = profile.macs * t.pe_energy
    energy += sum(
        p.sram_reads_ifmap * if_bin.read_j_per_byte * cfg.bytes_per_element
        + p.sram_reads_filter * f_bin.read_j_per_byte * cfg.bytes_per_element
        + p.sram_writes * of_bin.write_j_per_byte * cfg.bytes_per_element
        for p in profile.per_layer
    )
    energy += profile.dram_traffic * t.dram_access
    return energy / profile.latency + cfg.array_rows * cfg.array_cols * t.leakage_per_pe


@dataclass(frozen=True)
class SocPower:
    accelerator: float
    mcu: float
    camera: float
    dram: float

    @property
    def total(self) -> float:
        return self.accelerator + self.mcu + self.camera + self.dram


def soc_power(accel_w: float, mcu_w: float = MCU_CORES * MCU_CORE_W,
              camera_w: float = CAMERA_W, dram_w: float = DRAM_STANDBY_W) -> SocPower:
    if min(accel_w, mcu_w, camera_w, dram_w) < 0:
        raise PowerError("component powers must be non-negative")
    return SocPower(accelerator=accel_w, mcu=mcu_w, camera=camera_w, dram=dram_w)


def heatsink_mass(tdp_w: float, coeff_g_per_w: float = HEATSINK_G_PER_W) -> float:
    if tdp_w < 0:
        raise PowerError("tdp must be non-negative")
    return coeff_g_per_w * tdp_w


@dataclass(frozen=True)
class ComputeMass:
    board: float  # grams
    heatsink: float

    @property
    def total(self) -> float:
        return self.board + self.heatsink


def compute_mass(tdp_w: float, coeff_g_per_w: float = HEATSINK_G_PER_W,
                 board_g: float = BOARD_G) -> ComputeMass:
    return ComputeMass(board=board_g, heatsink=heatsink_mass(tdp_w, coeff_g_per_w))
