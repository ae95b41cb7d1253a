"""Command-line entry point with plan / generate / eval / preview.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
Every configuration key can come from a ``key = value`` config file or
from a same-named command-line flag (flags win).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import ndt, pipeline, preview
from .config import ConfigError, PipelineConfig, build_config, parse_config_file
from .labels import label_map
from .pipeline import DataError
from .tasks import BLEND_TASKS, DonorPool, TaskKind

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit((USAGE_ERROR, f"error: {message}"))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    for f in fields(PipelineConfig):
        if f.type == "bool":
            parser.add_argument(f"--{f.name}", default=None, choices=["true", "false"])
        else:
            parser.add_argument(f"--{f.name}", default=None)


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {}
    for f in fields(PipelineConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        if f.type == "bool":
            overrides[f.name] = raw == "true"
        elif f.type in ("int", "int | None"):
            overrides[f.name] = int(raw)
        elif f.type == "float":
            overrides[f.name] = float(raw)
        else:
            overrides[f.name] = raw
    return build_config(file_values, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="synthanom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="write the cross-validation manifest")
    _add_config_flags(p_plan)

    p_gen = sub.add_parser("generate", help="corrupt samples for one iteration and role")
    _add_config_flags(p_gen)
    p_gen.add_argument("--manifest", required=True)
    p_gen.add_argument("--iteration", required=True, type=int)
    p_gen.add_argument("--role", required=True, choices=["train", "val"])

    p_eval = sub.add_parser("eval", help="score prediction maps against label maps")
    _add_config_flags(p_eval)
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--labels", required=True)
    p_eval.add_argument("--level", default="pixel", choices=["pixel", "slice", "sample"])
    p_eval.add_argument("--report", help="where to write the JSON report")

    p_prev = sub.add_parser("preview", help="render montage and profile for one record")
    _add_config_flags(p_prev)
    p_prev.add_argument("--sample", required=True, help="clean input tensor (NDT)")
    p_prev.add_argument("--log", required=True, help="record log (JSONL)")
    p_prev.add_argument("--entry", type=int, default=0, help="record log entry index")
    p_prev.add_argument("--slice-axis", type=int, default=0)
    p_prev.add_argument("--slice-index", type=int, default=None, help="slice of a 3-D volume")
    p_prev.add_argument("--out", default=".", help="output directory")

    return parser


def cmd_plan(args) -> int:
    cfg = _config_from_args(args)
    path = pipeline.write_plan(cfg)
    doc = json.loads(path.read_text(encoding="utf-8"))
    print(f"wrote {path} with {len(doc['iterations'])} iterations")
    return 0


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    manifest = pipeline.load_manifest(args.manifest)
    summary = pipeline.generate_role(cfg, manifest, args.iteration, args.role)
    print(
        f"iteration {summary.iteration} role {summary.role}: "
        f"{len(summary.written)} samples written, {len(summary.failed)} failed"
    )
    for sid in summary.failed:
        print(f"  placement failed: {sid}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    report = pipeline.evaluate_dirs(
        args.predictions,
        args.labels,
        level=args.level,
        reducer=cfg.reducer,
        axis=cfg.eval_axis,
        positive_threshold=cfg.label_threshold,
    )
    doc = report.to_json()
    auroc_text = "n/a" if doc["auroc_percent"] is None else f"{doc['auroc_percent']:.1f}"
    print(
        f"AP {doc['ap_percent']:.1f}  AUROC {auroc_text}  "
        f"(level={report.level}, reducer={report.reducer}, pairs={report.pairs})"
    )
    for sid in report.skipped:
        print(f"  skipped (shape mismatch): {sid}", file=sys.stderr)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    return 0


def cmd_preview(args) -> int:
    cfg = _config_from_args(args)
    clean = pipeline.load_sample(Path(args.sample), cfg)
    entries = pipeline.read_record_log(args.log)
    entries = [e for e in entries if "anomalies" in e]
    if not 0 <= args.entry < len(entries):
        raise DataError(f"record log has {len(entries)} entries, no index {args.entry}")
    entry = entries[args.entry]

    donors = None
    task = TaskKind(entry["task"])
    if task in BLEND_TASKS:
        source_dir = cfg.external_dir if task is TaskKind.INTER_BLEND else cfg.input_dir
        items = pipeline.list_samples(source_dir)
        donors = DonorPool([(sid, pipeline.load_sample(p, cfg)) for sid, p in items])
    corrupted = pipeline.replay_entry(clean, entry, donors)
    label = label_map(clean, corrupted, cfg.sigma)

    center = entry["anomalies"][0]["mask"]["center"]
    if clean.ndim == 2:
        planes = (clean, corrupted, label)
        profile_center = center
    elif clean.ndim == 3:
        index = args.slice_index
        if index is None:
            index = int(round(center[args.slice_axis]))
        if not 0 <= index < clean.shape[args.slice_axis]:
            raise DataError(f"slice index {index} out of range along axis {args.slice_axis}")
        planes = tuple(np.take(a, index, axis=args.slice_axis) for a in (clean, corrupted, label))
        profile_center = [c for d, c in enumerate(center) if d != args.slice_axis]
    else:
        raise DataError(f"preview supports 2-D and 3-D tensors, got {clean.ndim}-D")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{entry['sample']}-entry{args.entry}"
    preview.write_pgm(out / f"{stem}-montage.pgm", preview.montage(*planes))
    line = preview.profile_line(planes[0], planes[1], profile_center, axis=-1)
    preview.write_ppm(out / f"{stem}-profile.ppm", preview.profile_image(*line))
    print(f"wrote {out / (stem + '-montage.pgm')} and {out / (stem + '-profile.ppm')}")
    return 0


_COMMANDS = {"plan": cmd_plan, "generate": cmd_generate, "eval": cmd_eval, "preview": cmd_preview}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as err:
        if isinstance(err.code, tuple):
            code, message = err.code
            print(message, file=sys.stderr)
            return code
        return err.code if isinstance(err.code, int) else USAGE_ERROR
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except (DataError, ndt.NdtError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
