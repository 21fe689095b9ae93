"""Synthetic architecture spaces and their accuracy / layer-shape oracles.

Two families are provided: a cell-based space (a stack of 20 convolutional
cells, each cell an 8-slot DAG over a 7-operation vocabulary) and a
mobile space (inverted-residual stages with searchable depth, kernel size
and expansion ratio).  Both come with deterministic seeded generators, a
lowering step that turns an architecture into a flat list of layer
descriptors for the cost model, a FLOPs counter, and a deterministic
accuracy oracle that depends on the architecture only.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
import random
from dataclasses import dataclass

from .errors import SpaceExhaustedError

CELL_OP_VOCAB = (
    "sep-conv-3x3",
    "sep-conv-5x5",
    "dil-conv-3x3",
    "dil-conv-5x5",
    "max-pool-3x3",
    "avg-pool-3x3",
    "skip-connect",
)

CELL_STACK_DEPTH = 20
CELL_BASE_CHANNELS = 36
# Channel width doubles at the two reduction cells of the 20-cell stack.
CELL_REDUCTION_CELLS = (7, 14)
CELL_INPUT_SIZE = 32

MOBILE_RESOLUTIONS = (192, 224, 256, 288)
MOBILE_STAGE_WIDTHS = (16, 16, 24, 32, 64, 112, 192, 216, 1792)
MOBILE_DEPTH_CHOICES = (2, 3, 4, 5, 6)
MOBILE_KERNEL_CHOICES = (3, 5, 7)
MOBILE_EXPANSION_CHOICES = (3, 4, 6)
# Per-stage stride pattern of the seven inverted-residual stages.
MOBILE_STAGE_STRIDES = (1, 2, 2, 2, 1, 2, 1)

# Rejection resampling gives up after this many draws per requested item.
_RESAMPLE_CAP = 100

_LAYER_KINDS = ("standard-conv", "depthwise-conv", "pointwise-conv", "pool", "identity")


@dataclass(frozen=True)
class CellArchitecture:
    """A 20-cell stack sharing one 8-slot cell genotype.

    ``cell_ops`` holds (operation, input-index) pairs, two per intermediate
    node; slot pair ``j`` belongs to node ``j + 2`` and may read any earlier
    node ``0 .. j + 1``.
    """

    cell_ops: tuple[tuple[str, int], ...]
    stack_depth: int = CELL_STACK_DEPTH
    base_channels: int = CELL_BASE_CHANNELS

    def __post_init__(self):
        if len(self.cell_ops) != 8:
            raise ValueError(f"cell genotype needs 8 op slots, got {len(self.cell_ops)}")
        for slot, (op, idx) in enumerate(self.cell_ops):
            if op not in CELL_OP_VOCAB:
                raise ValueError(f"unknown operation {op!r} in slot {slot}")
            node = slot // 2 + 2
            if not 0 <= idx < node:
                raise ValueError(f"slot {slot} input index {idx} not in 0..{node - 1}")
        if self.stack_depth < 1 or self.base_channels < 1:
            raise ValueError("stack_depth and base_channels must be positive")

    def canonical_json(self) -> str:
        cached = self.__dict__.get("_canonical")
        if cached is None:
            cached = canonical_json(
                {
                    "kind": "cell",
                    "cell_ops": [list(pair) for pair in self.cell_ops],
                    "stack_depth": self.stack_depth,
                    "base_channels": self.base_channels,
                }
            )
            object.__setattr__(self, "_canonical", cached)
        return cached


@dataclass(frozen=True)
class MobileArchitecture:
    """An inverted-residual network over seven stages with a fixed width vector.

    The first and last stages are frozen (depth 1, kernel 3, expansion 1 and 6
    respectively); the middle five stages are searchable.
    """

    resolution: int
    stage_depths: tuple[int, ...]
    stage_kernels: tuple[int, ...]
    stage_expansions: tuple[int, ...]
    stage_widths: tuple[int, ...] = MOBILE_STAGE_WIDTHS

    def __post_init__(self):
        if self.resolution not in MOBILE_RESOLUTIONS:
            raise ValueError(f"resolution {self.resolution} not in {MOBILE_RESOLUTIONS}")
        if self.stage_widths != MOBILE_STAGE_WIDTHS:
            raise ValueError("stage_widths vector is fixed")
        for name, vec in (
            ("stage_depths", self.stage_depths),
            ("stage_kernels", self.stage_kernels),
            ("stage_expansions", self.stage_expansions),
        ):
            if len(vec) != 7:
                raise ValueError(f"{name} needs 7 entries, got {len(vec)}")
        if self.stage_depths[0] != 1 or self.stage_depths[6] != 1:
            raise ValueError("first and last stage depth are fixed at 1")
        if self.stage_kernels[0] != 3 or self.stage_kernels[6] != 3:
            raise ValueError("first and last stage kernel are fixed at 3")
        if self.stage_expansions[0] != 1 or self.stage_expansions[6] != 6:
            raise ValueError("first/last stage expansion are fixed at 1 and 6")
        for i in range(1, 6):
            if self.stage_depths[i] not in MOBILE_DEPTH_CHOICES:
                raise ValueError(f"stage {i} depth {self.stage_depths[i]} not searchable")
            if self.stage_kernels[i] not in MOBILE_KERNEL_CHOICES:
                raise ValueError(f"stage {i} kernel {self.stage_kernels[i]} not searchable")
            if self.stage_expansions[i] not in MOBILE_EXPANSION_CHOICES:
                raise ValueError(f"stage {i} expansion {self.stage_expansions[i]} not searchable")

    def canonical_json(self) -> str:
        cached = self.__dict__.get("_canonical")
        if cached is None:
            cached = canonical_json(
                {
                    "kind": "mobile",
                    "resolution": self.resolution,
                    "stage_depths": list(self.stage_depths),
                    "stage_kernels": list(self.stage_kernels),
                    "stage_expansions": list(self.stage_expansions),
                    "stage_widths": list(self.stage_widths),
                }
            )
            object.__setattr__(self, "_canonical", cached)
        return cached


Architecture = CellArchitecture | MobileArchitecture


@dataclass(frozen=True)
class LayerDescriptor:
    """Shape record for one layer, the unit the cost model consumes.

    ``input_height``/``input_width`` are the (already padded) map the kernel
    slides over, so output dims are ``ceil((input - kernel + 1) / stride)``.
    MACs are ``K*C*R*S*Y'*X'`` with ``C = 1`` for depthwise layers and zero
    for pool/identity layers.
    """

    out_channels: int
    in_channels: int
    kernel_height: int
    kernel_width: int
    input_height: int
    input_width: int
    stride: int
    kind: str

    def __post_init__(self):
        if self.kind not in _LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        for name in ("out_channels", "in_channels", "kernel_height", "kernel_width",
                     "input_height", "input_width", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.output_height < 1 or self.output_width < 1:
            raise ValueError("kernel larger than input: output dims collapse below 1")

    @property
    def output_height(self) -> int:
        return -(-(self.input_height - self.kernel_height + 1) // self.stride)

    @property
    def output_width(self) -> int:
        return -(-(self.input_width - self.kernel_width + 1) // self.stride)

    @property
    def macs(self) -> int:
        if self.kind in ("pool", "identity"):
            return 0
        c = 1 if self.kind == "depthwise-conv" else self.in_channels
        return (self.out_channels * c * self.kernel_height * self.kernel_width
                * self.output_height * self.output_width)


@dataclass(frozen=True)
class ArchSpaceSample:
    """A seeded, duplicate-free draw of architectures from one space."""

    architectures: tuple[Architecture, ...]
    seed: int
    kind: str

    @property
    def size(self) -> int:
        return len(self.architectures)


def canonical_json(obj) -> str:
    """Canonical serialization: sorted keys, no whitespace padding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def stable_hash64(text: str) -> int:
    """Platform-stable 64-bit hash of a canonical serialization."""
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def cell_space_cardinality() -> int:
    # Slot pair j feeds node j+2 which can read nodes 0..j+1.
    total = 1
    for node in range(4):
        total *= (len(CELL_OP_VOCAB) * (node + 2)) ** 2
    return total


def mobile_space_cardinality() -> int:
    per_stage = len(MOBILE_DEPTH_CHOICES) * len(MOBILE_KERNEL_CHOICES) * len(MOBILE_EXPANSION_CHOICES)
    return len(MOBILE_RESOLUTIONS) * per_stage**5


def _draw_cell(rng: random.Random) -> CellArchitecture:
    ops = []
    for slot in range(8):
        node = slot // 2 + 2
        op = CELL_OP_VOCAB[rng.randrange(len(CELL_OP_VOCAB))]
        ops.append((op, rng.randrange(node)))
    return CellArchitecture(cell_ops=tuple(ops))


def _draw_mobile(rng: random.Random) -> MobileArchitecture:
    res = MOBILE_RESOLUTIONS[rng.randrange(len(MOBILE_RESOLUTIONS))]
    depths = [1] + [MOBILE_DEPTH_CHOICES[rng.randrange(5)] for _ in range(5)] + [1]
    kernels = [3] + [MOBILE_KERNEL_CHOICES[rng.randrange(3)] for _ in range(5)] + [3]
    expans = [1] + [MOBILE_EXPANSION_CHOICES[rng.randrange(3)] for _ in range(5)] + [6]
    return MobileArchitecture(
        resolution=res,
        stage_depths=tuple(depths),
        stage_kernels=tuple(kernels),
        stage_expansions=tuple(expans),
    )


def _generate(seed: int, count: int, kind: str, cardinality: int, draw) -> ArchSpaceSample:
    if count < 1:
        raise ValueError("count must be positive")
    if count > cardinality:
        raise SpaceExhaustedError(
            f"requested {count} distinct architectures from a space of {cardinality}"
        )
    rng = random.Random(seed)
    seen: set[str] = set()
    out: list[Architecture] = []
    budget = _RESAMPLE_CAP * count
    while len(out) < count:
        if budget == 0:
            raise SpaceExhaustedError(
                f"rejection sampling exhausted after {_RESAMPLE_CAP * count} draws "
                f"({len(out)}/{count} distinct)"
            )
        budget -= 1
        arch = draw(rng)
        key = arch.canonical_json()
        if key not in seen:
            seen.add(key)
            out.append(arch)
    return ArchSpaceSample(architectures=tuple(out), seed=seed, kind=kind)


def generate_cell_space(seed: int, count: int) -> ArchSpaceSample:
    """Draw ``count`` distinct cell architectures, deterministic in ``seed``."""
    return _generate(seed, count, "cell", cell_space_cardinality(), _draw_cell)


def generate_mobile_space(seed: int, count: int) -> ArchSpaceSample:
    """Draw ``count`` distinct mobile architectures, deterministic in ``seed``."""
    return _generate(seed, count, "mobile", mobile_space_cardinality(), _draw_mobile)


def _padded(kind: str, k: int, c: int, r: int, s: int, y: int, x: int, stride: int) -> LayerDescriptor:
    # Pad input dims by kernel-1 so output dims equal ceil(feature/stride),
    # keeping same-padding spatial bookkeeping under the descriptor's
    # valid-convolution output formula.
    return LayerDescriptor(
        out_channels=k, in_channels=c, kernel_height=r, kernel_width=s,
        input_height=y + r - 1, input_width=x + s - 1, stride=stride, kind=kind,
    )


def _cell_slot_layers(op: str, ch_in: int, ch_out: int, y: int, stride: int) -> list[LayerDescriptor]:
    if op in ("sep-conv-3x3", "sep-conv-5x5", "dil-conv-3x3", "dil-conv-5x5"):
        k = 3 if op.endswith("3x3") else 5
        # Separable/dilated convs lower to a depthwise + pointwise pair
        # (dilation does not change the MAC count, so it is not tracked).
        y_out = -(-y // stride)
        return [
            _padded("depthwise-conv", ch_in, ch_in, k, k, y, y, stride),
            _padded("pointwise-conv", ch_out, ch_in, 1, 1, y_out, y_out, 1),
        ]
    if op in ("max-pool-3x3", "avg-pool-3x3"):
        return [_padded("pool", ch_in, ch_in, 3, 3, y, y, stride)]
    return [_padded("identity", ch_in, ch_in, 1, 1, y, y, stride)]


def _cell_layers(arch: CellArchitecture) -> list[LayerDescriptor]:
    # The feature map enters the stack at 32x32 with base_channels channels;
    # the arch-independent stem is not costed.  Channels double and the map
    # halves at each reduction cell, where slots reading the cell inputs
    # (index < 2) run at stride 2.
    out: list[LayerDescriptor] = []
    ch = arch.base_channels
    y = CELL_INPUT_SIZE
    for cell in range(arch.stack_depth):
        reduction = cell in CELL_REDUCTION_CELLS
        ch_in, y_in = ch, y
        if reduction:
            ch, y = ch * 2, -(-y // 2)
        for slot, (op, idx) in enumerate(arch.cell_ops):
            if reduction and idx < 2:
                if op in ("max-pool-3x3", "avg-pool-3x3", "skip-connect"):
                    out.extend(_cell_slot_layers(op, ch_in, ch_in, y_in, 2))
                else:
                    out.extend(_cell_slot_layers(op, ch_in, ch, y_in, 2))
            else:
                out.extend(_cell_slot_layers(op, ch, ch, y, 1))
    return out


def _mobile_layers(arch: MobileArchitecture) -> list[LayerDescriptor]:
    out: list[LayerDescriptor] = []
    y = -(-arch.resolution // 2)
    out.append(_padded("standard-conv", arch.stage_widths[0], 3, 3, 3, arch.resolution,
                       arch.resolution, 2))
    ch = arch.stage_widths[0]
    for stage in range(7):
        width = arch.stage_widths[stage + 1]
        kern = arch.stage_kernels[stage]
        exp = arch.stage_expansions[stage]
        for block in range(arch.stage_depths[stage]):
            stride = MOBILE_STAGE_STRIDES[stage] if block == 0 else 1
            hidden = ch * exp
            y_out = -(-y // stride)
            out.append(_padded("pointwise-conv", hidden, ch, 1, 1, y, y, 1))
            out.append(_padded("depthwise-conv", hidden, hidden, kern, kern, y, y, stride))
            out.append(_padded("pointwise-conv", width, hidden, 1, 1, y_out, y_out, 1))
            ch, y = width, y_out
    out.append(_padded("pointwise-conv", arch.stage_widths[8], ch, 1, 1, y, y, 1))
    return out


def layers(arch: Architecture) -> list[LayerDescriptor]:
    """Lower an architecture to the flat layer list the cost model consumes."""
    if isinstance(arch, CellArchitecture):
        return _cell_layers(arch)
    if isinstance(arch, MobileArchitecture):
        return _mobile_layers(arch)
    raise TypeError(f"not an architecture: {type(arch).__name__}")


@functools.lru_cache(maxsize=65536)
def flops(arch: Architecture) -> int:
    """Total FLOPs: two per multiply-accumulate."""
    return 2 * sum(layer.macs for layer in layers(arch))


# Accuracy bands calibrated so outputs land in realistic ranges for each
# family; the saturation constant spreads the generated FLOPs range over
# the band.  The hash perturbation (<= 0.3 points) breaks ties and keeps
# the oracle deterministic across platforms.
_ORACLE_PARAMS = {
    "cell": (92.5, 2.0, 2.0e8),
    "mobile": (68.0, 4.2, 8.0e8),
}
_PERTURBATION = 0.3


@functools.lru_cache(maxsize=65536)
def accuracy_oracle(arch: Architecture) -> float:
    """Deterministic stand-in accuracy in percent; hardware-independent."""
    kind = "cell" if isinstance(arch, CellArchitecture) else "mobile"
    base, gain, f0 = _ORACLE_PARAMS[kind]
    h = stable_hash64(arch.canonical_json())
    noise = (h / 2**64 * 2.0 - 1.0) * _PERTURBATION
    return base + gain * (1.0 - math.exp(-flops(arch) / f0)) + noise
