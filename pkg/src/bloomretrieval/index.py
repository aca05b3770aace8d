"""Hierarchical per-layer store and coarse-to-fine retrieval.

Records hold one compressed vector and one binary signature per active
layer. Retrieval filters candidates layer by layer (coarse L3 first, by
default) against calibrated cosine thresholds, then ranks the survivors by
the final stage's distance. The staged path is a pruning strategy only:
its output is exactly equal to a full brute-force scan applying the same
thresholds, which doubles as its test oracle and timing baseline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .binseq import BinarySignature
from .errors import (
    BadMagicError,
    ConfigMismatchError,
    DuplicateIdError,
    TruncatedFileError,
)
from .vecmath import cosine_distance, l2_normalize, unit_cosine_distance

_MAGIC = b"MHIX"

COARSE_TO_FINE = "coarse_to_fine"
FINE_TO_COARSE = "fine_to_coarse"

# floor applied to degenerate (identical-image) calibrated thresholds so
# exact duplicates still match
THRESHOLD_FLOOR = 1e-6


@dataclass(frozen=True)
class FeatureRecord:
    id: str
    label: str
    compressed: dict[str, np.ndarray]
    signatures: dict[str, BinarySignature]


@dataclass
class ThresholdSet:
    thresholds: dict[str, float]
    scales: dict[str, float] = field(default_factory=dict)

    def effective(self, layer: str) -> float:
        return self.thresholds[layer] * self.scales.get(layer, 1.0)


def calibrate_thresholds(records, layers) -> ThresholdSet:
    """Per-layer mean cosine distance over all unordered same-class pairs."""
    by_label: dict[str, list[FeatureRecord]] = {}
    for rec in records:
        by_label.setdefault(rec.label, []).append(rec)
    groups = [g for g in by_label.values() if len(g) >= 2]
    if not groups:
        raise ValueError("threshold calibration needs a class with >= 2 records")

    thresholds = {}
    for layer in layers:
        total = 0.0
        pairs = 0
        for group in groups:
            for i in range(len(group)):
                for j in range(i + 1, len(group)):
                    total += cosine_distance(
                        group[i].compressed[layer], group[j].compressed[layer]
                    )
                    pairs += 1
        thresholds[layer] = max(float(total / pairs), THRESHOLD_FLOOR)
    return ThresholdSet(thresholds=thresholds)


class HierarchicalIndex:
    """Append-then-freeze store; frozen indices serve concurrent queries."""

    def __init__(self, layers, thresholds: ThresholdSet):
        self.layers = tuple(layers)
        self.thresholds = thresholds
        self.records: list[FeatureRecord] = []
        self._ids: set[str] = set()
        self._unit: dict[str, list[np.ndarray]] | None = None

    def __len__(self) -> int:
        return len(self.records)

    def add(self, record: FeatureRecord) -> None:
        if record.id in self._ids:
            raise DuplicateIdError(f"duplicate record id {record.id!r}")
        missing = set(self.layers) - set(record.compressed)
        if missing or set(record.compressed) != set(self.layers):
            raise ConfigMismatchError(
                f"record layers {sorted(record.compressed)} != index layers "
                f"{sorted(self.layers)}"
            )
        self.records.append(record)
        self._ids.add(record.id)
        self._unit = None

    def labels(self) -> set[str]:
        return {r.label for r in self.records}

    def ids(self) -> set[str]:
        return set(self._ids)

    def freeze(self) -> None:
        """Precompute unit vectors; queries afterwards are read-only."""
        self._unit = {
            layer: [l2_normalize(r.compressed[layer]) for r in self.records]
            for layer in self.layers
        }

    def _units(self) -> dict[str, list[np.ndarray]]:
        if self._unit is None:
            self.freeze()
        return self._unit

    def stage_layers(self, stage_order: str = COARSE_TO_FINE) -> tuple[str, ...]:
        ordered = [l for l in ("L3", "L2", "L1") if l in self.layers]
        if stage_order == FINE_TO_COARSE:
            ordered.reverse()
        elif stage_order != COARSE_TO_FINE:
            raise ValueError(f"unknown stage order {stage_order!r}")
        return tuple(ordered)


def _check_query(index: HierarchicalIndex, q: dict) -> None:
    if set(q) != set(index.layers):
        raise ConfigMismatchError(
            f"query layers {sorted(q)} != index layers {sorted(index.layers)}"
        )


def query_hierarchical(
    index: HierarchicalIndex,
    q: dict[str, np.ndarray],
    top_k: int,
    stage_order: str = COARSE_TO_FINE,
) -> list[tuple[str, float]]:
    """Staged filter-then-rank retrieval; at most top_k (id, distance) pairs."""
    _check_query(index, q)
    units = index._units()
    stages = index.stage_layers(stage_order)
    qn = {layer: l2_normalize(q[layer]) for layer in stages}

    survivors = list(range(len(index.records)))
    final: dict[int, float] = {}
    for layer in stages:
        limit = index.thresholds.effective(layer)
        rows = units[layer]
        qv = qn[layer]
        kept = []
        for i in survivors:
            d = unit_cosine_distance(qv, rows[i])
            if d <= limit:
                kept.append(i)
                final[i] = d
        survivors = kept
        if not survivors:
            return []

    ranked = sorted(survivors, key=lambda i: (final[i], index.records[i].id))
    return [(index.records[i].id, final[i]) for i in ranked[:top_k]]


def brute_force_scan(
    index: HierarchicalIndex,
    q: dict[str, np.ndarray],
    top_k: int,
    stage_order: str = COARSE_TO_FINE,
) -> list[tuple[str, float]]:
    """Unpruned oracle: every record scored on every layer, same thresholds."""
    _check_query(index, q)
    units = index._units()
    stages = index.stage_layers(stage_order)
    qn = {layer: l2_normalize(q[layer]) for layer in stages}
    rank_layer = stages[-1]

    hits = []
    for i, rec in enumerate(index.records):
        dists = {
            layer: unit_cosine_distance(qn[layer], units[layer][i])
            for layer in stages
        }
        if all(dists[l] <= index.thresholds.effective(l) for l in stages):
            hits.append((dists[rank_layer], rec.id))
    hits.sort()
    return [(rid, d) for d, rid in hits[:top_k]]


def save_records(path, index: HierarchicalIndex) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(index.records)))
        for rec in index.records:
            rid = rec.id.encode("utf-8")
            lab = rec.label.encode("utf-8")
            fh.write(struct.pack("<H", len(rid)) + rid)
            fh.write(struct.pack("<H", len(lab)) + lab)
            for layer in index.layers:
                vec = np.asarray(rec.compressed[layer], dtype="<f4")
                sig = rec.signatures[layer]
                fh.write(struct.pack("<I", vec.shape[0]))
                fh.write(vec.tobytes())
                fh.write(struct.pack("<H", len(sig.data)))
                fh.write(sig.data)


def load_records(
    path,
    layers,
    sig_widths: dict[str, int],
    thresholds: ThresholdSet,
) -> HierarchicalIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise BadMagicError(f"bad records magic {blob[:4]!r}")
    off = 4

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise TruncatedFileError("records file truncated")
        chunk = blob[off:off + n]
        off += n
        return chunk

    (count,) = struct.unpack("<Q", take(8))
    idx = HierarchicalIndex(layers, thresholds)
    for _ in range(count):
        (idlen,) = struct.unpack("<H", take(2))
        rid = take(idlen).decode("utf-8")
        (lablen,) = struct.unpack("<H", take(2))
        lab = take(lablen).decode("utf-8")
        compressed = {}
        signatures = {}
        for layer in layers:
            (dim,) = struct.unpack("<I", take(4))
            vec = np.frombuffer(take(4 * dim), "<f4").astype(np.float64)
            (nbytes,) = struct.unpack("<H", take(2))
            data = take(nbytes)
            width = sig_widths[layer]
            if nbytes != (width + 7) // 8:
                raise ConfigMismatchError(
                    f"signature byte width {nbytes} does not fit {width} bits"
                )
            compressed[layer] = vec
            signatures[layer] = BinarySignature(width=width, data=data)
        idx.add(FeatureRecord(rid, lab, compressed, signatures))
    return idx
