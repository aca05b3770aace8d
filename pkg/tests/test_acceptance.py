"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with -s or check captured output). Tolerances are fixed
here, not tuned at runtime.
"""

import json
import math
import time

import numpy as np
import pytest

from bloomretrieval import pipeline as pl
from bloomretrieval.binseq import BinarySignature
from bloomretrieval.bloom import BloomParams, LayeredBloomFilter, fp_probability, optimal_bits
from bloomretrieval.index import ThresholdSet, brute_force_scan, query_hierarchical
from bloomretrieval.index import FeatureRecord, HierarchicalIndex
from bloomretrieval.murmur3 import murmur3_x64_128
from bloomretrieval.pca import fit_pca, project_many

from oracles import jacobi_eigh
from test_murmur3 import REFERENCE_VECTORS

LAYERS3 = ("L1", "L2", "L3")


def _rand_sigs(rng, layers):
    return {l: BinarySignature(width=64, data=rng.bytes(8)) for l in layers}


def _passed(n, label):
    print(f"[acceptance] criterion {n} ({label}): PASS")


def test_criterion_1_bloom_no_false_negatives():
    n = 10_000
    f = LayeredBloomFilter(m=2 * n, layers=LAYERS3)
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    inserted = [_rand_sigs(rng, LAYERS3) for _ in range(n)]
    for sigs in inserted:
        f.insert(sigs)
    hits = sum(f.query(sigs) for sigs in inserted)
    elapsed = time.perf_counter() - t0
    assert hits == n  # zero tolerance
    assert elapsed < 5.0
    _passed(1, "bloom correctness, 10k inserts, zero false negatives")


def test_criterion_2_eq1_monte_carlo():
    rng = np.random.default_rng(102)
    probes = 50_000
    t0 = time.perf_counter()
    for n in (1000, 5000):
        for mult in (2, 5):
            for k in (1, 2, 3):
                layers = LAYERS3[:k]
                m = mult * n
                f = LayeredBloomFilter(m=m, layers=layers)
                member_keys = set()
                while len(member_keys) < n:
                    sigs = _rand_sigs(rng, layers)
                    key = tuple(sigs[l].data for l in layers)
                    if key not in member_keys:
                        member_keys.add(key)
                        f.insert(sigs)
                hits = 0
                total = 0
                while total < probes:
                    sigs = _rand_sigs(rng, layers)
                    if tuple(sigs[l].data for l in layers) in member_keys:
                        continue
                    total += 1
                    hits += f.query(sigs)
                observed = hits / probes
                expected = fp_probability(BloomParams(n=n, m=m, k=k))
                if expected < 0.025:
                    assert abs(observed - expected) <= 0.005, (n, mult, k)
                else:
                    assert abs(observed - expected) <= 0.20 * expected, (n, mult, k)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _passed(2, "Eq.1 false-positive fidelity across 12 configurations")


def test_criterion_3_eq2_values():
    assert optimal_bits(1000, 1) == 694
    assert optimal_bits(1000, 3) == 2080
    assert optimal_bits(1000, 1) == math.ceil(1000 * math.log(2))
    assert optimal_bits(1000, 3) == math.ceil(3000 * math.log(2))
    for n in (100, 1000, 100_000):
        for k in (1, 2, 3):
            assert 0.69 * n <= optimal_bits(n, k) <= 4.5 * n
    _passed(3, "Eq.2 optimal filter sizes")


def test_criterion_4_pca_oracle_equivalence():
    rng = np.random.default_rng(104)
    for trial in range(20):
        dim = int(rng.integers(3, 17))
        n = int(rng.integers(dim + 2, 65))
        target = int(rng.integers(1, dim + 1))
        scale = rng.uniform(0.5, 2.0, size=dim)
        samples = rng.normal(size=(n, dim)) * scale
        model = fit_pca(samples, target_dim=target)

        centered = samples - samples.mean(axis=0)
        cov = centered.T @ centered / (n - 1)
        oracle_vals, _ = jacobi_eigh(cov)
        ref = np.clip(oracle_vals[:target], 0.0, None)
        np.testing.assert_allclose(model.eigenvalues, ref, rtol=1e-6, atol=1e-9)

        proj = project_many(model, samples)
        pc = proj - proj.mean(axis=0)
        pcov = pc.T @ pc / (n - 1)
        off = pcov - np.diag(np.diag(pcov))
        assert np.abs(off).max() < 1e-6 * max(model.eigenvalues[0], 1e-12)
    _passed(4, "PCA matches brute-force Jacobi eigendecomposition")


def test_criterion_5_hierarchy_equals_brute_force():
    rng = np.random.default_rng(105)
    total_queries = 0
    for trial in range(100):
        if trial == 0:
            n = 1000
        else:
            n = int(np.exp(rng.uniform(np.log(10), np.log(1000))))
        thr = float(rng.uniform(0.2, 1.2))
        ts = ThresholdSet(thresholds={l: thr for l in LAYERS3})
        idx = HierarchicalIndex(LAYERS3, ts)
        dim = 6
        sig = BinarySignature(width=8, data=b"\x00")
        for i in range(n):
            idx.add(
                FeatureRecord(
                    f"r{i:05d}",
                    f"c{i % 11}",
                    {l: rng.normal(size=dim) for l in LAYERS3},
                    {l: sig for l in LAYERS3},
                )
            )
        idx.freeze()
        for _ in range(100):
            q = {l: rng.normal(size=dim) for l in LAYERS3}
            k = int(rng.integers(1, 50))
            assert query_hierarchical(idx, q, k) == brute_force_scan(idx, q, k)
            total_queries += 1
    assert total_queries == 10_000
    _passed(5, "staged retrieval identical to brute-force scan, 10k queries")


def _benchmark_system(tmp_path, layers, multiplier, seed=106):
    dims = (256,) * len(layers)
    feats = tmp_path / f"bench-{len(layers)}.mlhc"
    qrys = tmp_path / f"bench-q-{len(layers)}.mlhc"
    pl.synth_generate(
        10, 100, dims, noise_scale=0.1, seed=seed, out_path=feats,
        queries_per_class=20, queries_path=qrys,
    )
    cfg = pl.PipelineConfig(
        active_layers=layers,
        pca_dim=128,
        centroid_count=64,
        binseq_threshold=10.0,
        filter_multiplier=multiplier,
        rng_seed=seed,
        top_k=200,
        threshold_scales={l: 4.0 for l in layers},
    )
    records = pl.read_features(feats)
    bundle = pl.train(cfg, records)
    index = bundle.new_index()
    for r in records:
        pl.add_record(bundle, index, r)
    index.freeze()
    queries = pl.read_features(qrys)
    return bundle, index, queries


def test_criterion_6_synthetic_benchmark(tmp_path):
    t0 = time.perf_counter()
    b3, i3, q3 = _benchmark_system(tmp_path, LAYERS3, 2.0)
    rep3 = pl.evaluate(b3, i3, q3)
    b1, i1, q1 = _benchmark_system(tmp_path, ("L1",), 2.0)
    rep1 = pl.evaluate(b1, i1, q1)
    elapsed = time.perf_counter() - t0
    assert rep3.mean_average_precision >= 0.95
    assert rep3.mean_average_precision >= rep1.mean_average_precision - 0.02
    assert elapsed < 120.0
    _passed(
        6,
        f"synthetic benchmark mAP {rep3.mean_average_precision:.4f} (3 layers) "
        f"vs {rep1.mean_average_precision:.4f} (1 layer)",
    )


def test_criterion_7_query_limiting(tmp_path):
    rng = np.random.default_rng(107)
    distractors = [
        pl.RawRecord(
            f"d{i}", "distractor",
            {l: rng.normal(size=256) * 5 + 3 for l in LAYERS3},
        )
        for i in range(1000)
    ]
    for multiplier in (2.0, 5.0):
        bundle, index, _ = _benchmark_system(tmp_path, LAYERS3, multiplier)
        params = BloomParams(n=len(index), m=bundle.filter.m, k=3)
        p = fp_probability(params)
        reached = 0
        for d in distractors:
            res = pl.gated_query(bundle, index, d.features, top_k=1)
            reached += not res.rejected
        bound = p + 3 * math.sqrt(p * (1 - p) / len(distractors))
        assert reached / len(distractors) <= bound, multiplier
    _passed(7, "distractor pass-through rate bounded by Eq.1 + 3 sigma")


def test_criterion_8_determinism(tmp_path):
    reports = []
    for run in ("runA", "runB"):
        base = tmp_path / run
        base.mkdir()
        feats = base / "feats.mlhc"
        qrys = base / "qrys.mlhc"
        pl.synth_generate(
            6, 30, (64, 64, 64), 0.1, seed=42, out_path=feats,
            queries_per_class=5, queries_path=qrys,
        )
        cfg = pl.PipelineConfig(
            active_layers=LAYERS3,
            pca_dim=16,
            centroid_count=32,
            binseq_threshold=10.0,
            filter_multiplier=2.0,
            rng_seed=42,
            top_k=60,
            threshold_scales={l: 4.0 for l in LAYERS3},
        )
        records = pl.read_features(feats)
        bundle = pl.train(cfg, records)
        index = bundle.new_index()
        for r in records:
            pl.add_record(bundle, index, r)
        pl.save_index_dir(base / "idx", bundle, index)
        report = pl.evaluate(bundle, index, pl.read_features(qrys))
        # wall-clock timings are inherently run-dependent and excluded from
        # the byte-comparison; everything else must match exactly
        reports.append(json.dumps(report.to_dict(include_timing=False), sort_keys=True))

    dir_a = tmp_path / "runA" / "idx"
    dir_b = tmp_path / "runB" / "idx"
    names = sorted(p.name for p in dir_a.iterdir())
    assert names == sorted(p.name for p in dir_b.iterdir())
    for name in names:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name
    assert reports[0] == reports[1]
    _passed(8, "seeded runs byte-identical (artifacts and reports)")


def test_criterion_9_murmur3_reference_vectors():
    assert len(REFERENCE_VECTORS) >= 10
    for key, seed, h1, h2 in REFERENCE_VECTORS:
        assert murmur3_x64_128(key, seed) == (h1, h2)
    assert murmur3_x64_128(b"", 0) == (0, 0)
    _passed(9, f"Murmur3 x64_128 matches {len(REFERENCE_VECTORS)} reference vectors")
