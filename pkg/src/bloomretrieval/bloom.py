"""Layer-seeded bloom filter over per-layer binary signatures.

One bit array serves all layers: each inserted image sets one bit per
active layer, at the Murmur3 position of that layer's signature. k (the
hash-function count of the classic analysis) therefore equals the number
of active layers, so false-positive probability and optimal sizing follow
the standard formulas:

    P = (1 - (1 - 1/m)^(n*k))^k
    m_opt = ceil(k * n * ln 2)
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

from .binseq import BinarySignature
from .errors import ConfigMismatchError, TruncatedFileError, BadMagicError
from .murmur3 import murmur3_x64_128

LAYERS = ("L1", "L2", "L3")
LAYER_SEEDS = {"L1": 1, "L2": 2, "L3": 3}

_MAGIC = b"MBF1"


@dataclass(frozen=True)
class BloomParams:
    n: int
    k: int
    m: int
    size_multiplier: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 1 <= self.k <= 3:
            raise ValueError("k must be in 1..3")


def fp_probability(params: BloomParams) -> float:
    """Expected false-positive probability: (1 - (1 - 1/m)^(nk))^k."""
    if params.n == 0:
        return 0.0
    return (1.0 - (1.0 - 1.0 / params.m) ** (params.n * params.k)) ** params.k


def optimal_bits(n: int, k: int) -> int:
    """Smallest integer filter size at the optimum m = k*n*ln(2)."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return math.ceil(k * n * math.log(2))


@dataclass
class LayeredBloomFilter:
    m: int
    layers: tuple[str, ...]
    bits: bytearray = field(default=None)  # type: ignore[assignment]
    inserted_count: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("filter size must be >= 1")
        bad = [l for l in self.layers if l not in LAYER_SEEDS]
        if bad:
            raise ValueError(f"unknown layers: {bad}")
        if not 1 <= len(self.layers) <= 3:
            raise ValueError("filter needs 1 to 3 layers")
        if self.bits is None:
            self.bits = bytearray((self.m + 7) // 8)

    @property
    def k(self) -> int:
        return len(self.layers)

    def position_for(self, layer: str, sig: BinarySignature) -> int:
        """Murmur3 x64_128(signature bytes, layer seed), low word mod m."""
        try:
            seed = LAYER_SEEDS[layer]
        except KeyError:
            raise ValueError(f"unknown layer {layer!r}") from None
        low, _ = murmur3_x64_128(sig.data, seed)
        return low % self.m

    def _check_layers(self, sigs: dict) -> None:
        if set(sigs) != set(self.layers):
            raise ConfigMismatchError(
                f"expected layers {sorted(self.layers)}, got {sorted(sigs)}"
            )

    def insert(self, sigs: dict[str, BinarySignature]) -> None:
        """Set one bit per active layer; exactly the active layers required."""
        self._check_layers(sigs)
        for layer in self.layers:
            pos = self.position_for(layer, sigs[layer])
            self.bits[pos >> 3] |= 1 << (pos & 7)
        self.inserted_count += 1

    def query(self, sigs: dict[str, BinarySignature]) -> bool:
        """True = maybe-present; False = definitely absent."""
        self._check_layers(sigs)
        for layer in self.layers:
            pos = self.position_for(layer, sigs[layer])
            if not (self.bits[pos >> 3] >> (pos & 7)) & 1:
                return False
        return True

    def set_bit_count(self) -> int:
        return sum(b.bit_count() for b in self.bits)

    def to_bytes(self) -> bytes:
        head = struct.pack("<4sQB", _MAGIC, self.m, self.k)
        seeds = b"".join(
            struct.pack("<I", LAYER_SEEDS[l]) for l in self.layers
        )
        return head + seeds + struct.pack("<Q", self.inserted_count) + bytes(self.bits)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LayeredBloomFilter":
        if len(blob) < 13:
            raise TruncatedFileError("bloom filter file too short")
        magic, m, k = struct.unpack_from("<4sQB", blob, 0)
        if magic != _MAGIC:
            raise BadMagicError(f"bad bloom filter magic {magic!r}")
        off = 13
        if len(blob) < off + 4 * k + 8:
            raise TruncatedFileError("bloom filter header truncated")
        seed_to_layer = {v: l for l, v in LAYER_SEEDS.items()}
        layers = []
        for _ in range(k):
            (seed,) = struct.unpack_from("<I", blob, off)
            off += 4
            if seed not in seed_to_layer:
                raise ConfigMismatchError(f"unknown layer seed {seed}")
            layers.append(seed_to_layer[seed])
        (count,) = struct.unpack_from("<Q", blob, off)
        off += 8
        nbytes = (m + 7) // 8
        if len(blob) < off + nbytes:
            raise TruncatedFileError("bloom filter bit array truncated")
        return cls(
            m=m,
            layers=tuple(layers),
            bits=bytearray(blob[off:off + nbytes]),
            inserted_count=count,
        )
