"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import itertools
import json
import math
import time
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from synthanom import ndt
from synthanom.cli import main
from synthanom.crossval import assign_folds, associate_tasks, enumerate_splits
from synthanom.labels import gaussian_label, logistic_label
from synthanom.masks import (
    MaskSpec,
    overlap_fraction,
    rasterize_mask,
    repeat_count,
    sample_anomaly_placement,
)
from synthanom.metrics import ScoredSet, auroc, average_precision
from synthanom.pipeline import read_record_log, replay_entry
from synthanom.poisson import (
    divergence,
    dst1_forward,
    dst1_inverse,
    poisson_blend,
    solve_poisson_dirichlet,
)
from synthanom.rng import RngStream
from synthanom.tasks import (
    ALL_TASKS,
    DeformParams,
    DonorPool,
    GeneratorConfig,
    TaskKind,
    apply_random_anomalies,
    sink_deform,
    sink_radius_map,
    source_deform,
)
from tests.conftest import make_phantom
from tests.test_cli import base_args, make_dataset, make_external
from tests.test_metrics import oracle_ap, oracle_auroc
from tests.test_poisson import composite_laplacian, dirichlet_direct_solve, dst_direct


def report(n, text):
    print(f"[acceptance] criterion {n}: {text}: PASS")


def random_dirichlet_problem(shape, seed):
    gen = RngStream(seed, 0).generator()
    v = [gen.normal(size=shape) for _ in shape]
    rhs = divergence(v)
    boundary = []
    for d in range(len(shape)):
        face = shape[:d] + shape[d + 1 :]
        boundary.append((gen.normal(size=face), gen.normal(size=face)))
    return rhs, boundary


class TestAcceptance:
    def test_01_poisson_solver_correctness(self):
        start = time.perf_counter()
        shapes = [(32, 32), (17, 9), (5, 31), (16, 16, 16), (7, 12, 5), (16, 3, 8)]
        for seed, shape in enumerate(shapes):
            rhs, boundary = random_dirichlet_problem(shape, seed)
            spectral = solve_poisson_dirichlet(rhs, boundary)
            dense = dirichlet_direct_solve(rhs, boundary)
            assert np.abs(spectral - dense).max() <= 1e-4 * np.abs(dense).max(), shape
            residual = composite_laplacian(spectral, boundary) - rhs
            assert np.abs(residual).max() <= 1e-4 * np.abs(rhs).max(), shape
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0
        report(1, f"spectral = dense direct solve and residual <= 1e-4 rel ({elapsed:.2f}s)")

    def test_02_self_blend_identity(self):
        checked = 0
        for seed in range(100):
            gen = RngStream(seed, 2).generator()
            shape = (24, 24) if seed % 4 else (10, 12, 9)
            x = gen.normal(size=shape)
            fg = np.ones(shape, dtype=bool)
            mask = sample_anomaly_placement(RngStream(seed, 3), shape, fg)
            out = poisson_blend(x, x, mask)
            assert np.abs(out - x).max() <= 1e-4
            outside = np.ones(shape, dtype=bool)
            outside[mask.bbox_slices] = False
            assert np.array_equal(out[outside], x[outside])
            checked += 1
        assert checked == 100
        report(2, "PoissonBlend(x, x, M) = x within 1e-4, bitwise outside the box (100 pairs)")

    def test_03_dst_round_trip_and_direct_sum(self):
        for n in range(1, 65):
            x = RngStream(n, 4).generator().normal(size=n)
            back = dst1_inverse(dst1_forward(x, 0), 0)
            assert np.abs(back - x).max() <= 1e-5 * np.abs(x).max()
            forward = dst1_forward(x, 0)
            direct = dst_direct(x, 0)
            scale = max(np.abs(direct).max(), 1.0)
            assert np.abs(forward - direct).max() <= 1e-5 * scale
        shapes = [(1, 1), (1, 64), (64, 1), (2, 3), (32, 17), (64, 64),
                  (1, 1, 1), (2, 3, 4), (16, 16, 16), (64, 3, 2)]
        for shape in shapes:
            x = RngStream(len(shape), 5).generator().normal(size=shape)
            y = x
            for axis in range(x.ndim):
                y = dst1_forward(y, axis)
            for axis in range(x.ndim):
                y = dst1_inverse(y, axis)
            assert np.abs(y - x).max() <= 1e-5 * np.abs(x).max(), shape
            one_axis = dst1_forward(x, 0)
            assert np.abs(one_axis - dst_direct(x, 0)).max() <= 1e-5 * max(
                np.abs(one_axis).max(), 1.0
            )
        report(3, "inverse(forward) = id within 1e-5, extents 1-64, dims 1-3; matches direct sum")

    def test_04_sink_anchor_and_exponent_identity(self):
        for d in (1.0, 3.7, 10.0, 42.0):
            assert abs(sink_radius_map(0.5 * d, d, 2.0) - 0.75 * d) <= 1e-9
        identical = 0
        for seed in range(50):
            gen = RngStream(seed, 6).generator()
            x = gen.normal(size=(20, 20))
            kind = "ellipsoid" if seed % 2 else "cuboid"
            spec = MaskSpec(
                kind,
                tuple(gen.uniform(6, 14, size=2)),
                tuple(gen.uniform(2, 5, size=2)),
                (gen.uniform(0, np.pi),),
            )
            mask = rasterize_mask(spec, (20, 20))
            center = tuple(np.argwhere(mask.raster)[0].astype(float))
            params = DeformParams(center=center, exponent=1.0)
            assert np.array_equal(sink_deform(x, mask, params), x)
            assert np.array_equal(source_deform(x, mask, params), x)
            identical += 1
        assert identical == 50
        report(4, "f=2 maps 0.5d from 0.75d (+-1e-9); f=1 bit-identical on 50 cases")

    def test_05_labeller_anchors(self):
        sigma = 0.2
        assert gaussian_label(0.0, sigma) == 0.0
        assert abs(gaussian_label(sigma, sigma) - (1.0 - math.exp(-0.5))) <= 1e-9
        steps = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
        fd = np.array([gaussian_label(h, sigma) / h for h in steps])
        # one decade per step: the derivative vanishes at the origin
        assert np.all(np.diff(fd) < 0) and fd[-1] < 1e-4
        assert logistic_label(0.0, 10.0, 0.2) > 0.11
        report(5, "gaussian labeller anchors at sigma=0.2; logistic floor ~0.1 reproduced")

    def test_06_cross_validation_combinatorics(self):
        samples = assign_folds([f"s{i:02d}" for i in range(25)], 5, RngStream(8))
        assignment = associate_tasks(samples)
        counts = []
        for t in range(1, 5):
            plan = enumerate_splits(assignment, t)
            counts.append(len(plan.iterations))
            for it in plan.iterations:
                assert not set(it.train_tasks) & set(it.val_tasks)
                assert set(it.train_tasks) | set(it.val_tasks) == set(ALL_TASKS)
                assert not set(it.train_folds) & set(it.val_folds)
                assert set(it.train_folds) | set(it.val_folds) == set(range(5))
            for task in ALL_TASKS:
                hits = sum(task in it.train_tasks for it in plan.iterations)
                assert hits == math.comb(4, t - 1)
        assert counts == [5, 10, 10, 5]
        report(6, "enumerate_splits gives 5/10/10/5 iterations with all invariants")

    def test_07_metrics_oracle(self):
        alphabet = [(s, t) for s in (0.1, 0.5, 0.9) for t in (False, True)]
        cases = 0
        for n in range(1, 9):
            for combo in itertools.combinations_with_replacement(alphabet, n):
                scores = [c[0] for c in combo]
                targets = [c[1] for c in combo]
                if any(targets):
                    assert average_precision(ScoredSet(scores, targets)) == oracle_ap(
                        scores, targets
                    )
                if any(targets) and not all(targets):
                    assert auroc(ScoredSet(scores, targets)) == oracle_auroc(scores, targets)
                cases += 1
        assert cases == sum(math.comb(n + 5, 5) for n in range(1, 9))

        gen = RngStream(9, 0).generator()
        scores = gen.random(100_000)
        targets = gen.random(100_000) < 0.3
        prevalence = targets.mean()
        assert abs(auroc(ScoredSet(scores, targets)) - 0.5) <= 0.01
        assert abs(average_precision(ScoredSet(scores, targets)) - prevalence) <= 0.01
        report(7, f"AP/AUROC exact vs brute force on {cases} inputs; random scores at chance")

    def test_08_mask_recipe_conformance(self):
        shape = (48, 48)
        fg = np.zeros(shape, dtype=bool)
        fg[:, 24:] = True
        bad = 0
        for i in range(10_000):
            mask = sample_anomaly_placement(RngStream(10, i), shape, fg)
            if overlap_fraction(mask, fg) < 0.5:
                bad += 1
        assert bad == 0

        draws = np.array([repeat_count(RngStream(11, i), 4) for i in range(10_000)])
        observed = np.bincount(draws, minlength=5)[1:5]
        expected = np.array([0.5, 0.25, 0.125, 0.125]) * len(draws)
        assert chisquare(observed, expected).pvalue > 0.01
        assert abs(draws.mean() - 1.875) <= 0.05
        report(8, "10^4 placements all >=50% overlap; counts fit capped coin-toss law")

    def test_09_end_to_end_determinism(self, tmp_path):
        data = make_dataset(tmp_path, count=10)
        ext = make_external(tmp_path)
        trees = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["plan", *base_args(data, out, ext)]) == 0
            for role in ("train", "val"):
                assert main([
                    "generate", *base_args(data, out, ext),
                    "--manifest", str(out / "manifest.json"),
                    "--iteration", "0", "--role", role,
                ]) == 0
            trees.append({
                p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()
            })
        assert trees[0].keys() == trees[1].keys()
        for key in trees[0]:
            assert trees[0][key] == trees[1][key], key

        out = tmp_path / "a"
        manifest = json.loads((out / "manifest.json").read_text())
        pools = {
            "inter_blend": DonorPool(
                [(p.stem, ndt.read(p).astype(np.float64)) for p in sorted(ext.glob("*.ndt"))]
            )
        }
        replayed = 0
        for role in ("train", "val"):
            role_ids = manifest["iterations"][0][f"{role}_samples"]
            pools["intra_blend"] = DonorPool(
                [(sid, ndt.read(data / f"{sid}.ndt").astype(np.float64))
                 for sid in sorted(role_ids)]
            )
            log = out / "iter-000" / role / "records.jsonl"
            for entry in read_record_log(log):
                if "anomalies" not in entry:
                    continue
                clean = ndt.read(data / f"{entry['sample']}.ndt").astype(np.float64)
                rebuilt = replay_entry(clean, entry, pools.get(entry["task"]))
                stored = ndt.read(
                    out / "iter-000" / role / "corrupted" / f"{entry['sample']}.ndt"
                )
                assert np.array_equal(rebuilt.astype(np.float32), stored)
                replayed += 1
        assert replayed > 0
        report(9, f"two runs byte-identical; {replayed} tensors replayed from record logs")

    def test_10_throughput(self):
        shape = (128, 128)
        clean = [make_phantom(shape, seed=900 + i) for i in range(10)]
        donors = DonorPool([(f"d{i}", clean[i]) for i in range(10)])
        cfg = GeneratorConfig()
        start = time.perf_counter()
        produced = 0
        for i in range(100):
            task = ALL_TASKS[i % len(ALL_TASKS)]
            pool = donors if task in (TaskKind.INTRA_BLEND, TaskKind.INTER_BLEND) else None
            out, records = apply_random_anomalies(
                clean[i % 10], task, pool, RngStream(12, i), cfg
            )
            assert records
            produced += 1
        elapsed = time.perf_counter() - start
        assert produced == 100
        assert elapsed < 30.0
        report(10, f"100 corrupted 128x128 samples incl. blends in {elapsed:.1f}s (< 30s)")
