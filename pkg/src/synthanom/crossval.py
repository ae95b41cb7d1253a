"""Task/fold association and cross-validation split planning.

Each anomaly task is paired with one data fold. A split plan holds one
iteration per subset of tasks chosen for training; the folds paired with
the larger task partition carry the training data (majority rule), so at
the five-task operating point the iteration counts for 1..4 training
tasks are 5, 10, 10 and 5.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .rng import RngStream
from .tasks import ALL_TASKS, TaskKind

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SampleAssignment:
    sample_id: str
    fold: int


@dataclass
class TaskFoldAssignment:
    """Task-to-fold pairing plus per-sample fold membership.

    The pairing must be bijective whenever the fold count equals the task
    count (the normal operating point); otherwise folds only need to be
    valid indices, which suffices for the full-product scheme.
    """

    task_folds: dict[TaskKind, int]
    samples: list[SampleAssignment]
    folds: int | None = None

    def __post_init__(self):
        if self.folds is None:
            self.folds = len(self.task_folds)
        paired = sorted(self.task_folds.values())
        if self.folds == len(self.task_folds):
            if paired != list(range(self.folds)):
                raise ValueError("task_folds must pair tasks bijectively with folds 0..F-1")
        elif any(not 0 <= f < self.folds for f in paired):
            raise ValueError("task_folds reference folds outside 0..F-1")

    @property
    def fold_count(self) -> int:
        return self.folds

    @property
    def tasks(self) -> list[TaskKind]:
        return list(self.task_folds)


def assign_folds(sample_ids: list[str], folds: int, rng: RngStream) -> list[SampleAssignment]:
    """Uniform random partition into folds with sizes differing by <= 1."""
    if folds < 2:
        raise ValueError("need at least two folds")
    if len(sample_ids) < folds:
        raise ValueError(f"{len(sample_ids)} samples cannot fill {folds} folds")
    if len(set(sample_ids)) != len(sample_ids):
        raise ValueError("sample ids must be unique")
    gen = rng.generator()
    order = gen.permutation(len(sample_ids))
    return [
        SampleAssignment(sample_id=sample_ids[int(i)], fold=pos % folds)
        for pos, i in enumerate(order)
    ]


def associate_tasks(
    samples: list[SampleAssignment],
    tasks: tuple[TaskKind, ...] = ALL_TASKS,
) -> TaskFoldAssignment:
    """Pair task i with fold i; requires as many folds as tasks."""
    folds = {a.fold for a in samples}
    if folds != set(range(len(tasks))):
        raise ValueError(
            f"fold indices {sorted(folds)} do not match the {len(tasks)} tasks one-to-one"
        )
    return TaskFoldAssignment(
        task_folds={task: i for i, task in enumerate(tasks)}, samples=list(samples)
    )


@dataclass
class SplitIteration:
    id: int
    train_tasks: list[TaskKind]
    val_tasks: list[TaskKind]
    train_folds: list[int]
    val_folds: list[int]


@dataclass
class SplitPlan:
    iterations: list[SplitIteration]
    tasks: list[TaskKind]
    folds: int


def _majority_folds(
    train_tasks: list[TaskKind],
    val_tasks: list[TaskKind],
    task_folds: dict[TaskKind, int],
) -> tuple[list[int], list[int]]:
    """Folds paired with the larger task partition become training data.

    Ties (possible only for an even task count) keep the training data
    with the training tasks. Isolated here so an alternative reading of
    the majority rule is a one-line change.
    """
    train_paired = sorted(task_folds[t] for t in train_tasks)
    val_paired = sorted(task_folds[t] for t in val_tasks)
    if len(val_tasks) > len(train_tasks):
        return val_paired, train_paired
    return train_paired, val_paired


def enumerate_splits(
    assignment: TaskFoldAssignment,
    train_task_count: int,
    full_product: bool = False,
) -> SplitPlan:
    """One iteration per subset of ``train_task_count`` training tasks.

    With ``full_product`` every task subset is additionally crossed with
    every choice of validation fold (the exhaustive, expensive scheme).
    """
    tasks = assignment.tasks
    total = len(tasks)
    if not 1 <= train_task_count <= total - 1:
        if train_task_count >= total:
            raise ValueError("no validation tasks: train task count must leave at least one task out")
        raise ValueError("no training tasks: train task count must be at least 1")

    iterations = []
    for subset in itertools.combinations(tasks, train_task_count):
        train_tasks = list(subset)
        val_tasks = [t for t in tasks if t not in subset]
        if full_product:
            for val_fold in range(assignment.fold_count):
                iterations.append(
                    SplitIteration(
                        id=len(iterations),
                        train_tasks=train_tasks,
                        val_tasks=val_tasks,
                        train_folds=[f for f in range(assignment.fold_count) if f != val_fold],
                        val_folds=[val_fold],
                    )
                )
        else:
            train_folds, val_folds = _majority_folds(train_tasks, val_tasks, assignment.task_folds)
            iterations.append(
                SplitIteration(
                    id=len(iterations),
                    train_tasks=train_tasks,
                    val_tasks=val_tasks,
                    train_folds=train_folds,
                    val_folds=val_folds,
                )
            )
    return SplitPlan(iterations=iterations, tasks=tasks, folds=assignment.fold_count)


# ---------------------------------------------------------------------------
# manifest serialisation


def emit_manifest(plan: SplitPlan, samples: list[SampleAssignment], seed: int) -> dict:
    """Serialise a plan with explicit sample-id lists per role."""
    for a in samples:
        if not 0 <= a.fold < plan.folds:
            raise ValueError(f"unknown sample fold {a.fold} for id {a.sample_id!r}")
    by_fold: dict[int, list[str]] = {f: [] for f in range(plan.folds)}
    for a in samples:
        by_fold[a.fold].append(a.sample_id)

    iterations = []
    for it in plan.iterations:
        iterations.append(
            {
                "id": it.id,
                "train_tasks": [t.value for t in it.train_tasks],
                "val_tasks": [t.value for t in it.val_tasks],
                "train_samples": sorted(s for f in it.train_folds for s in by_fold[f]),
                "val_samples": sorted(s for f in it.val_folds for s in by_fold[f]),
            }
        )
    return {
        "version": MANIFEST_VERSION,
        "seed": seed,
        "tasks": [t.value for t in plan.tasks],
        "folds": plan.folds,
        "iterations": iterations,
    }


@dataclass
class ManifestIteration:
    id: int
    train_tasks: list[TaskKind]
    val_tasks: list[TaskKind]
    train_samples: list[str]
    val_samples: list[str]

    def role(self, name: str) -> tuple[list[TaskKind], list[str]]:
        if name == "train":
            return self.train_tasks, self.train_samples
        if name == "val":
            return self.val_tasks, self.val_samples
        raise ValueError(f"unknown role {name!r}")


@dataclass
class Manifest:
    version: int
    seed: int
    tasks: list[TaskKind]
    folds: int
    iterations: list[ManifestIteration]

    def iteration(self, iteration_id: int) -> ManifestIteration:
        for it in self.iterations:
            if it.id == iteration_id:
                return it
        raise ValueError(f"iteration {iteration_id} not in manifest")


def parse_manifest(doc: dict) -> Manifest:
    if doc.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version {doc.get('version')!r}")
    return Manifest(
        version=doc["version"],
        seed=doc["seed"],
        tasks=[TaskKind(t) for t in doc["tasks"]],
        folds=doc["folds"],
        iterations=[
            ManifestIteration(
                id=it["id"],
                train_tasks=[TaskKind(t) for t in it["train_tasks"]],
                val_tasks=[TaskKind(t) for t in it["val_tasks"]],
                train_samples=list(it["train_samples"]),
                val_samples=list(it["val_samples"]),
            )
            for it in doc["iterations"]
        ],
    )


def manifest_bytes(doc: dict) -> bytes:
    """Canonical byte encoding, stable across runs."""
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
