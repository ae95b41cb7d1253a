"""Batch pipeline: plan splits, generate corrupted samples with labels
and a replayable record log, and evaluate score maps.

Every output byte is a pure function of (config, input files). Tensor
files are written atomically, and the record log carries everything
needed to rebuild each output without re-drawing any randomness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ndt
from .config import ConfigError, PipelineConfig
from .crossval import (
    Manifest,
    TaskFoldAssignment,
    assign_folds,
    associate_tasks,
    emit_manifest,
    enumerate_splits,
    manifest_bytes,
    parse_manifest,
)
from .masks import MaskSpec, rasterize_mask
from .metrics import ScoredSet, UndefinedMetricError, auroc, average_precision, reduce_to_slices
from .labels import label_map
from .rng import RngStream, derive_stream
from .tasks import (
    DonorPool,
    TaskError,
    TaskKind,
    apply_anomaly,
    apply_random_anomalies,
)


class DataError(RuntimeError):
    """Unreadable or inconsistent input data (CLI exit code 2)."""


def list_samples(input_dir: str | Path) -> list[tuple[str, Path]]:
    root = Path(input_dir)
    if not root.is_dir():
        raise DataError(f"input directory {root} does not exist")
    files = sorted(root.glob("*.ndt"))
    return [(p.stem, p) for p in files]


def zscore_normalise(x: np.ndarray, foreground_threshold: float) -> np.ndarray:
    """Per-sample z-score over foreground voxels; whole tensor shifted."""
    fg = x > foreground_threshold
    ref = x[fg] if fg.any() else x
    std = float(ref.std())
    return (x - float(ref.mean())) / (std if std > 0 else 1.0)


def load_sample(path: Path, cfg: PipelineConfig) -> np.ndarray:
    try:
        x = ndt.read(path).astype(np.float64)
    except (OSError, ndt.NdtError) as err:
        raise DataError(f"cannot read tensor {path}: {err}") from err
    if not np.isfinite(x).all():
        raise DataError(f"tensor {path} holds non-finite values")
    if cfg.zscore:
        x = zscore_normalise(x, cfg.foreground_threshold)
    return x


# ---------------------------------------------------------------------------
# planning


def build_plan(cfg: PipelineConfig):
    """Assign folds, pair tasks, enumerate iterations; returns the
    manifest document."""
    samples = list_samples(cfg.input_dir)
    if len(samples) < cfg.folds:
        raise DataError(f"need at least {cfg.folds} samples, found {len(samples)}")
    task_count = len(TaskKind)
    if not cfg.full_product and cfg.folds != task_count:
        raise ConfigError(
            f"task-fold pairing needs folds == {task_count}; use full_product for other fold counts"
        )
    if cfg.train_tasks > task_count - 1:
        raise ConfigError("no validation tasks: train_tasks must leave at least one task out")

    assignment_rng = RngStream(cfg.seed, derive_stream("fold-assignment"))
    sample_assignment = assign_folds([sid for sid, _ in samples], cfg.folds, assignment_rng)
    if cfg.full_product:
        # Pairing is immaterial for the full product; any valid indices do.
        assignment = TaskFoldAssignment(
            task_folds={task: i % cfg.folds for i, task in enumerate(TaskKind)},
            samples=sample_assignment,
            folds=cfg.folds,
        )
        plan = enumerate_splits(assignment, cfg.train_tasks, full_product=True)
    else:
        plan = enumerate_splits(associate_tasks(sample_assignment), cfg.train_tasks)
    return emit_manifest(plan, sample_assignment, cfg.seed)


def write_plan(cfg: PipelineConfig) -> Path:
    doc = build_plan(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(manifest_bytes(doc))
    tmp.replace(path)
    return path


def load_manifest(path: str | Path) -> Manifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"cannot read manifest {path}: {err}") from err
    try:
        return parse_manifest(doc)
    except (KeyError, ValueError) as err:
        raise DataError(f"malformed manifest {path}: {err}") from err


# ---------------------------------------------------------------------------
# generation


@dataclass
class GenerateSummary:
    iteration: int
    role: str
    written: list[str]
    failed: list[str]
    record_log: Path


def _record_entry(sample_id: str, iteration: int, role: str, task: TaskKind, records) -> dict:
    anomalies = []
    for idx, rec in enumerate(records):
        spec = rec.mask.spec
        anomalies.append(
            {
                "index": idx,
                "mask": {
                    "kind": spec.kind,
                    "center": [float(c) for c in spec.center],
                    "semi_axes": [float(s) for s in spec.semi_axes],
                    "rotation": [float(a) for a in spec.rotation],
                },
                "params": rec.params,
            }
        )
    return {
        "sample": sample_id,
        "iteration": iteration,
        "role": role,
        "task": task.value,
        "anomalies": anomalies,
    }


def replay_entry(clean: np.ndarray, entry: dict, donors: DonorPool | None) -> np.ndarray:
    """Rebuild the corrupted tensor for one record-log entry."""
    task = TaskKind(entry["task"])
    current = np.asarray(clean, dtype=np.float64)
    for anomaly in entry["anomalies"]:
        m = anomaly["mask"]
        spec = MaskSpec(
            kind=m["kind"],
            center=tuple(m["center"]),
            semi_axes=tuple(m["semi_axes"]),
            rotation=tuple(m["rotation"]),
        )
        mask = rasterize_mask(spec, current.shape)
        current = apply_anomaly(current, task, mask, anomaly["params"], donors)
    return current


class _LazyPools:
    """Donor pools built on first use, so runs without blend tasks never
    touch the external directory."""

    def __init__(self, sample_ids, fetch, cfg: PipelineConfig):
        self._sample_ids = sorted(sample_ids)
        self._fetch = fetch
        self._cfg = cfg
        self._pools: dict[TaskKind, DonorPool] = {}

    def get(self, task: TaskKind) -> DonorPool | None:
        if task is TaskKind.INTRA_BLEND:
            if task not in self._pools:
                self._pools[task] = DonorPool(
                    [(sid, self._fetch(sid)) for sid in self._sample_ids]
                )
            return self._pools[task]
        if task is TaskKind.INTER_BLEND:
            if task not in self._pools:
                externals = list_samples(self._cfg.external_dir) if self._cfg.external_dir else []
                if not externals:
                    raise ConfigError("inter_blend requires external_dir with at least one tensor")
                self._pools[task] = DonorPool(
                    [(sid, load_sample(path, self._cfg)) for sid, path in externals]
                )
            return self._pools[task]
        return None


def generate_role(
    cfg: PipelineConfig,
    manifest: Manifest,
    iteration_id: int,
    role: str,
) -> GenerateSummary:
    """Corrupt every sample of one iteration/role and log the records.

    Each sample draws one task uniformly from the role's task set, then a
    coin-toss number of anomalies of that task. Placement failures are
    logged and skipped; a corrupt input tensor aborts the run, leaving
    already-written outputs intact (every file is written atomically).
    """
    try:
        iteration = manifest.iteration(iteration_id)
    except ValueError as err:
        raise DataError(str(err)) from err
    task_set, sample_ids = iteration.role(role)

    by_id = dict(list_samples(cfg.input_dir))
    missing = [sid for sid in sample_ids if sid not in by_id]
    if missing:
        raise DataError(f"manifest samples missing from input dir: {missing}")

    cache: dict[str, np.ndarray] = {}

    def fetch(sid: str) -> np.ndarray:
        if sid not in cache:
            cache[sid] = load_sample(by_id[sid], cfg)
        return cache[sid]

    pools = _LazyPools(sample_ids, fetch, cfg)

    out_root = Path(cfg.output_dir) / f"iter-{iteration_id:03d}" / role
    corrupted_dir = out_root / "corrupted"
    labels_dir = out_root / "labels"
    corrupted_dir.mkdir(parents=True, exist_ok=True)
    labels_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_root / "records.jsonl"

    written: list[str] = []
    failed: list[str] = []
    gen_cfg = cfg.generator_config()
    with log_path.open("a", encoding="utf-8") as log:
        for sample_id in sorted(sample_ids):
            clean = fetch(sample_id)
            task_rng = RngStream(cfg.seed, derive_stream("task-choice", iteration_id, sample_id))
            task = task_set[int(task_rng.generator().integers(len(task_set)))]
            sample_rng = RngStream(cfg.seed, derive_stream("anomalies", iteration_id, sample_id))
            try:
                corrupted, records = apply_random_anomalies(
                    clean, task, pools.get(task), sample_rng, gen_cfg
                )
            except TaskError as err:
                failed.append(sample_id)
                log.write(json.dumps({"sample": sample_id, "error": str(err)}) + "\n")
                log.flush()
                continue
            ndt.write(corrupted_dir / f"{sample_id}.ndt", corrupted.astype(np.float32))
            combined = label_map(clean, corrupted, cfg.sigma).astype(np.float32)
            # float32 rounding may hit 1.0 exactly; keep labels in [0, 1)
            combined = np.minimum(combined, np.nextafter(np.float32(1.0), np.float32(0.0)))
            ndt.write(labels_dir / f"{sample_id}.ndt", combined)
            entry = _record_entry(sample_id, iteration_id, role, task, records)
            log.write(json.dumps(entry, sort_keys=True) + "\n")
            log.flush()
            written.append(sample_id)
    return GenerateSummary(
        iteration=iteration_id, role=role, written=written, failed=failed, record_log=log_path
    )


def read_record_log(path: str | Path) -> list[dict]:
    entries = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot read record log {path}: {err}") from err
    for line in text.splitlines():
        if line.strip():
            entries.append(json.loads(line))
    return entries


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalReport:
    level: str
    reducer: str
    ap: float
    auroc: float | None
    pairs: int
    skipped: list[str]
    positive_threshold: float

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "reducer": self.reducer,
            "ap_percent": round(100.0 * self.ap, 4),
            "auroc_percent": None if self.auroc is None else round(100.0 * self.auroc, 4),
            "pairs": self.pairs,
            "skipped": self.skipped,
            "positive_threshold": self.positive_threshold,
        }


def evaluate_dirs(
    predictions_dir: str | Path,
    labels_dir: str | Path,
    level: str = "pixel",
    reducer: str = "mean",
    axis: int = 0,
    positive_threshold: float = 0.0,
) -> EvalReport:
    """Score matching prediction/label tensors at the requested level.

    Pairs are matched by filename; mismatched shapes are listed and
    skipped. Pixel level pools all voxels, slice level reduces along
    ``axis`` per volume, sample level reduces each volume to one score.
    """
    if level not in ("pixel", "slice", "sample"):
        raise ConfigError(f"unknown evaluation level {level!r}")
    preds = dict(list_samples(predictions_dir))
    labs = dict(list_samples(labels_dir))
    shared = sorted(set(preds) & set(labs))
    if not shared:
        raise DataError("no common sample ids between predictions and labels")

    scores: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    skipped: list[str] = []
    pairs = 0
    for sid in shared:
        try:
            p = ndt.read(preds[sid]).astype(np.float64)
            y = ndt.read(labs[sid]).astype(np.float64)
        except ndt.NdtError as err:
            raise DataError(f"corrupt tensor for {sid}: {err}") from err
        if p.shape != y.shape:
            skipped.append(sid)
            continue
        pairs += 1
        if level == "pixel":
            scores.append(p.ravel())
            targets.append(y.ravel() > positive_threshold)
        elif level == "slice":
            s = reduce_to_slices(p, y, axis=axis, reducer=reducer, positive_threshold=positive_threshold)
            scores.append(s.scores)
            targets.append(s.targets)
        else:
            value = p.mean() if reducer == "mean" else p.max()
            scores.append(np.asarray([value]))
            targets.append(np.asarray([(y > positive_threshold).any()]))
    if pairs == 0:
        raise DataError("every prediction/label pair was skipped (shape mismatches)")

    scored = ScoredSet(np.concatenate(scores), np.concatenate(targets))
    ap = average_precision(scored)
    try:
        roc = auroc(scored)
    except UndefinedMetricError:
        roc = None
    return EvalReport(
        level=level,
        reducer=reducer,
        ap=ap,
        auroc=roc,
        pairs=pairs,
        skipped=skipped,
        positive_threshold=positive_threshold,
    )
