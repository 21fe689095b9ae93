"""Accelerator space and the analytical latency/energy cost model.

The model is a per-layer roofline: latency is the max of a compute term
(MACs over the dataflow's effective PE count) and two traffic terms
(on-chip bytes over NoC bandwidth, off-chip bytes over DRAM bandwidth);
whole-model cost is the sum over layers.  Traffic is derived from tensor
footprints at one byte per element, shrunk by a dataflow-specific reuse
divisor:

* ``KC-P`` maps output/input channels spatially and multicasts input
  activations, so input bytes divide by ``min(K, num_pes)``.
* ``YR-P`` keeps rows stationary and reuses inputs and filters temporally
  across the kernel height, so input and weight bytes divide by ``R``.
* ``X-P`` is weight-stationary: weight bytes are counted exactly once.

Energy charges each MAC, three scratchpad accesses per MAC, and the two
traffic streams at NoC/DRAM cost; it is independent of both bandwidths.
All cycle counts use ceiling division.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass

import numpy as np

from .archspace import (
    ArchSpaceSample,
    Architecture,
    LayerDescriptor,
    canonical_json,
    layers,
    stable_hash64,
)
from .errors import PartitionInfeasibleError, SpaceExhaustedError

DATAFLOWS = ("KC-P", "YR-P", "X-P")
PE_CHOICES = (16, 32, 64, 128, 256, 512)
NOC_BANDWIDTH_CHOICES = (300, 400, 500, 600, 700, 800, 900, 1000)
OFFCHIP_BANDWIDTH_CHOICES = (50, 100, 150, 200, 250, 275, 300, 325, 350)

E_MAC = 1.0
E_SPAD = 6.0
E_NOC = 2.0
E_DRAM = 200.0
SPAD_ACCESSES_PER_MAC = 3

AREA_PER_PE = 1.0
AREA_PER_NOC_BYTE = 0.01

MIXED_PLAN_SEGMENTS = 22

_SAMPLE_NAMESPACE = "hw-sample-v28"


@dataclass(frozen=True)
class Accelerator:
    """One hardware/dataflow point of the accelerator grid."""

    num_pes: int
    noc_bandwidth: int
    offchip_bandwidth: int
    dataflow: str

    def __post_init__(self):
        if self.num_pes not in PE_CHOICES:
            raise ValueError(f"num_pes {self.num_pes} not in {PE_CHOICES}")
        if self.noc_bandwidth not in NOC_BANDWIDTH_CHOICES:
            raise ValueError(f"noc_bandwidth {self.noc_bandwidth} not a candidate")
        if self.offchip_bandwidth not in OFFCHIP_BANDWIDTH_CHOICES:
            raise ValueError(f"offchip_bandwidth {self.offchip_bandwidth} not a candidate")
        if self.dataflow not in DATAFLOWS:
            raise ValueError(f"dataflow {self.dataflow!r} not in {DATAFLOWS}")

    @property
    def accel_id(self) -> str:
        return (f"{self.dataflow}-pe{self.num_pes}-noc{self.noc_bandwidth}"
                f"-dram{self.offchip_bandwidth}")

    def canonical_json(self) -> str:
        cached = self.__dict__.get("_canonical")
        if cached is None:
            cached = canonical_json(
                {
                    "kind": "accelerator",
                    "num_pes": self.num_pes,
                    "noc_bandwidth": self.noc_bandwidth,
                    "offchip_bandwidth": self.offchip_bandwidth,
                    "dataflow": self.dataflow,
                }
            )
            object.__setattr__(self, "_canonical", cached)
        return cached


@dataclass(frozen=True)
class PerfEstimate:
    """Latency in cycles and energy in nJ for one (architecture, accelerator)."""

    latency_cycles: int
    energy_nj: float

    def __post_init__(self):
        if self.latency_cycles < 0 or self.energy_nj < 0:
            raise ValueError("estimates must be nonnegative")


@dataclass(frozen=True)
class HwSpaceSample:
    """A seeded, duplicate-free draw from the accelerator grid."""

    accelerators: tuple[Accelerator, ...]
    seed: int

    @property
    def size(self) -> int:
        return len(self.accelerators)


@dataclass(frozen=True)
class MixedDataflowPlan:
    """Per-part accelerator assignment: one entry per model segment."""

    segments: tuple[Accelerator, ...]

    def __post_init__(self):
        if len(self.segments) != MIXED_PLAN_SEGMENTS:
            raise ValueError(f"a plan needs exactly {MIXED_PLAN_SEGMENTS} segments")


@dataclass(frozen=True)
class SupportRule:
    """Validity predicate dropping hardware/dataflow pairs the space cannot map.

    ``KC-P`` needs the space's smallest ``K*C`` to cover ``num_pes / ratio``
    and ``YR-P`` the smallest ``Y'*R``; ``X-P`` is always supported.  The
    ratio is configuration: the dropped-pair counts are calibration targets,
    not derivations.
    """

    min_kc: int
    min_yr: int
    ratio: int = 8

    def supports(self, accel: Accelerator) -> bool:
        if accel.dataflow == "KC-P":
            return self.min_kc * self.ratio >= accel.num_pes
        if accel.dataflow == "YR-P":
            return self.min_yr * self.ratio >= accel.num_pes
        return True


def hardware_grid(dataflows=DATAFLOWS) -> list[Accelerator]:
    """The full candidate grid restricted to ``dataflows``, canonical order."""
    keep = set(dataflows)
    return [
        Accelerator(pes, noc, off, df)
        for df in DATAFLOWS
        if df in keep
        for pes in PE_CHOICES
        for noc in NOC_BANDWIDTH_CHOICES
        for off in OFFCHIP_BANDWIDTH_CHOICES
    ]


def sample_hardware(seed: int, count: int, dataflows=DATAFLOWS,
                    support: SupportRule | None = None) -> HwSpaceSample:
    """Draw ``count`` distinct accelerators, deterministic in ``seed``.

    With a ``support`` rule the draw is restricted to supported points.
    """
    if count < 1:
        raise ValueError("count must be positive")
    grid = hardware_grid(dataflows)
    if support is not None:
        grid = [a for a in grid if support.supports(a)]
    if count > len(grid):
        raise SpaceExhaustedError(
            f"requested {count} accelerators from a grid of {len(grid)} valid points"
        )
    tag = f"{_SAMPLE_NAMESPACE}|{seed}|" + ",".join(sorted(set(dataflows)))
    rng = random.Random(stable_hash64(tag))
    rng.shuffle(grid)
    return HwSpaceSample(accelerators=tuple(grid[:count]), seed=seed)


def filter_supported(accelerators, support: SupportRule) -> tuple[Accelerator, ...]:
    """Drop unsupported hardware/dataflow pairs, preserving order."""
    return tuple(a for a in accelerators if support.supports(a))


def hardware_resource(accel: Accelerator) -> float:
    """Scalar area proxy, monotone in PE count and NoC bandwidth."""
    return accel.num_pes * AREA_PER_PE + accel.noc_bandwidth * AREA_PER_NOC_BYTE


# ---------------------------------------------------------------------------
# Per-layer cost model
# ---------------------------------------------------------------------------

# Column layout of the per-architecture layer table.
_MACS, _K, _KC, _YR, _XP, _R, _IN_B, _W_B, _OUT_B, _IS_CONV, _IS_POOL = range(11)
_NCOL = 11


def _layer_row(layer: LayerDescriptor) -> list[int]:
    y_out, x_out = layer.output_height, layer.output_width
    kind = layer.kind
    if kind == "identity":
        in_b = w_b = out_b = 0
    elif kind == "pool":
        in_b = layer.in_channels * layer.input_height * layer.input_width
        w_b = 0
        out_b = layer.out_channels * y_out * x_out
    else:
        c_eff = 1 if kind == "depthwise-conv" else layer.in_channels
        in_b = layer.in_channels * layer.input_height * layer.input_width
        w_b = layer.out_channels * c_eff * layer.kernel_height * layer.kernel_width
        out_b = layer.out_channels * y_out * x_out
    return [
        layer.macs,
        layer.out_channels,
        layer.out_channels * layer.in_channels,
        y_out * layer.kernel_height,
        x_out,
        layer.kernel_height,
        in_b,
        w_b,
        out_b,
        int(kind not in ("pool", "identity")),
        int(kind == "pool"),
    ]


@functools.lru_cache(maxsize=65536)
def _layer_table(arch: Architecture) -> np.ndarray:
    rows = [_layer_row(layer) for layer in layers(arch)]
    return np.asarray(rows, dtype=np.int64)


@functools.lru_cache(maxsize=16)
def _space_table(archs: tuple[Architecture, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated layer tables plus per-architecture row offsets."""
    tables = [_layer_table(a) for a in archs]
    offsets = np.zeros(len(tables), dtype=np.int64)
    np.cumsum([t.shape[0] for t in tables[:-1]], out=offsets[1:])
    return np.concatenate(tables, axis=0), offsets


def _cdiv(a, b):
    return -(-a // b)


def _table_costs(table: np.ndarray, accel: Accelerator) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (latency, energy) arrays for one accelerator."""
    macs = table[:, _MACS]
    is_conv = table[:, _IS_CONV]
    pes = accel.num_pes
    if accel.dataflow == "KC-P":
        util = np.minimum(pes, table[:, _KC])
        div_in = np.minimum(pes, table[:, _K])
        div_w = np.ones_like(macs)
    elif accel.dataflow == "YR-P":
        util = np.minimum(pes, table[:, _YR])
        div_in = table[:, _R]
        div_w = table[:, _R]
    else:
        util = np.minimum(pes, table[:, _XP])
        div_in = np.ones_like(macs)
        div_w = np.ones_like(macs)
    compute = _cdiv(macs, np.maximum(util, 1))
    # Reuse divisors apply to convolutions; pool traffic streams unscaled.
    div_in = np.where(is_conv == 1, div_in, 1)
    div_w = np.where(is_conv == 1, div_w, 1)
    traffic = _cdiv(table[:, _IN_B], div_in) + _cdiv(table[:, _W_B], div_w) + table[:, _OUT_B]
    onchip = traffic
    offchip = traffic
    latency = np.maximum(
        compute,
        np.maximum(_cdiv(onchip, accel.noc_bandwidth), _cdiv(offchip, accel.offchip_bandwidth)),
    )
    energy = (
        macs * (E_MAC + SPAD_ACCESSES_PER_MAC * E_SPAD)
        + onchip * E_NOC
        + offchip * E_DRAM
    )
    return latency, energy


def spatial_utilization(layer: LayerDescriptor, accel: Accelerator) -> int:
    """Effective PE count: the dataflow's spatial dimensions capped by the array."""
    if accel.dataflow == "KC-P":
        dim = layer.out_channels * layer.in_channels
    elif accel.dataflow == "YR-P":
        dim = layer.output_height * layer.kernel_height
    else:
        dim = layer.output_width
    return min(accel.num_pes, dim)


def estimate_layer(layer: LayerDescriptor, accel: Accelerator) -> PerfEstimate:
    """Roofline estimate for a single layer."""
    table = np.asarray([_layer_row(layer)], dtype=np.int64)
    lat, en = _table_costs(table, accel)
    return PerfEstimate(latency_cycles=int(lat[0]), energy_nj=float(en[0]))


def estimate_model(arch: Architecture, accel: Accelerator) -> PerfEstimate:
    """Whole-model estimate: the exact sum of per-layer estimates."""
    lat, en = _table_costs(_layer_table(arch), accel)
    return PerfEstimate(latency_cycles=int(lat.sum()), energy_nj=float(en.sum()))


def estimate_archs(archs: tuple[Architecture, ...], accel: Accelerator
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``estimate_model`` over a tuple of architectures.

    Returns per-architecture latency (int64) and energy (float64) arrays,
    bit-identical to the scalar path.
    """
    table, offsets = _space_table(archs)
    lat, en = _table_costs(table, accel)
    return np.add.reduceat(lat, offsets), np.add.reduceat(en, offsets)


# ---------------------------------------------------------------------------
# Layer-wise mixed dataflow
# ---------------------------------------------------------------------------


def partition_bounds(n_layers: int) -> list[tuple[int, int]]:
    """Split ``n_layers`` into 22 parts: first layer, 20 even intermediate
    groups (remainder folded into the last group), final layer."""
    middle = n_layers - 2
    if middle < MIXED_PLAN_SEGMENTS - 2:
        raise PartitionInfeasibleError(
            f"need at least {MIXED_PLAN_SEGMENTS} layers to form "
            f"{MIXED_PLAN_SEGMENTS} parts, got {n_layers}"
        )
    group = middle // (MIXED_PLAN_SEGMENTS - 2)
    bounds = [(0, 1)]
    start = 1
    for i in range(MIXED_PLAN_SEGMENTS - 2):
        end = start + group
        if i == MIXED_PLAN_SEGMENTS - 3:
            end = n_layers - 1
        bounds.append((start, end))
        start = end
    bounds.append((n_layers - 1, n_layers))
    return bounds


def estimate_mixed(arch: Architecture, plan: MixedDataflowPlan) -> PerfEstimate:
    """Cost of running each model part on its assigned accelerator."""
    table = _layer_table(arch)
    bounds = partition_bounds(table.shape[0])
    total_lat = 0
    total_en = 0.0
    for (start, end), accel in zip(bounds, plan.segments):
        lat, en = _table_costs(table[start:end], accel)
        total_lat += int(lat.sum())
        total_en += float(en.sum())
    return PerfEstimate(latency_cycles=total_lat, energy_nj=total_en)


@functools.lru_cache(maxsize=16)
def _segment_offsets(archs: tuple[Architecture, ...]) -> np.ndarray:
    """Flat reduceat offsets: 22 contiguous groups per architecture."""
    _, arch_offsets = _space_table(archs)
    flat: list[int] = []
    for i, arch in enumerate(archs):
        n_layers = _layer_table(arch).shape[0]
        base = int(arch_offsets[i])
        flat.extend(base + start for start, _ in partition_bounds(n_layers))
    return np.asarray(flat, dtype=np.int64)


def segment_costs(archs: tuple[Architecture, ...], accel: Accelerator
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Per-architecture, per-segment (latency, energy) for one accelerator.

    Returns two (n_archs, 22) arrays; row sums equal ``estimate_model``.
    """
    table, _ = _space_table(archs)
    offsets = _segment_offsets(archs)
    lat, en = _table_costs(table, accel)
    n = len(archs)
    return (
        np.add.reduceat(lat, offsets).reshape(n, MIXED_PLAN_SEGMENTS),
        np.add.reduceat(en, offsets).reshape(n, MIXED_PLAN_SEGMENTS),
    )


def sample_mixed_plans(seed: int, count: int, accelerators) -> tuple[MixedDataflowPlan, ...]:
    """Draw ``count`` seeded plans assigning each segment one accelerator."""
    pool = tuple(accelerators)
    if not pool:
        raise ValueError("need at least one accelerator to build plans")
    rng = random.Random(stable_hash64(f"mixed-plan|{seed}"))
    return tuple(
        MixedDataflowPlan(
            segments=tuple(pool[rng.randrange(len(pool))] for _ in range(MIXED_PLAN_SEGMENTS))
        )
        for _ in range(count)
    )


def space_support_limits(space: ArchSpaceSample) -> tuple[int, int]:
    """Smallest ``K*C`` and ``Y'*R`` over all MAC-bearing layers of a space."""
    table, _ = _space_table(space.architectures)
    active = table[table[:, _MACS] > 0]
    if active.shape[0] == 0:
        return (1 << 62, 1 << 62)
    return int(active[:, _KC].min()), int(active[:, _YR].min())


def support_rule_for_space(space: ArchSpaceSample, ratio: int = 8) -> SupportRule:
    min_kc, min_yr = space_support_limits(space)
    return SupportRule(min_kc=min_kc, min_yr=min_yr, ratio=ratio)
