"""Command-line front end: enumerate | compile | simulate | generate | evaluate.

Exit codes: 0 success, 1 runtime or infeasibility failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .compiler import compile_scd
from .config import Config
from .dataset import (DatasetError, DatasetRecord, balance_report, instruction_from_json,
                      instruction_to_json, read_records, subject_from_json, subject_to_json,
                      subset_of, write_records)
from .generator import generate_records
from .geometry import FramingError
from .metrics import ManifoldMetrics, TrajectoryFeaturizer, clip_score, fid, read_features, MAGIC
from .objectives import init_loss, rel_loss, speed_loss
from .pose import DiscrepancyParams, SubjectTrajectory
from .scl import Easing, MovementKind, ScdError, enumerate_scds, format_scd, parse_scd
from .simulator import (InfeasibleError, MotionKind, SubjectMotionModel, check_constraints,
                        generate_subject_motion, simulate)


class UsageError(Exception):
    pass


def _enum_list(enum):
    def parse(text: str):
        out = []
        for tok in text.split(","):
            try:
                out.append(enum(tok.strip()))
            except ValueError:
                choices = ", ".join(e.value for e in enum)
                raise argparse.ArgumentTypeError(f"invalid token {tok!r} (choose from {choices})") from None
        return out
    return parse


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed (default 0)")
    common.add_argument("--jobs", type=_positive_int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--frames", type=_positive_int, default=argparse.SUPPRESS, help="frames per shot")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="cinecam", parents=[common],
                                     description="Shot descriptions to camera trajectories, and their evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="write every description of the language")
    p.add_argument("--kinds", type=_enum_list(MovementKind), help="comma-separated movement kinds")
    p.add_argument("--easings", type=_enum_list(Easing), help="comma-separated easings")
    p.add_argument("--include-end", action="store_true", help="also enumerate end endpoints")
    p.add_argument("--out", type=Path, help="output file (default stdout)")

    p = sub.add_parser("compile", parents=[common], help="compile description lines to instructions")
    p.add_argument("scd_file", type=Path)
    p.add_argument("--subject", type=Path, help="subject spec JSON (motion model or explicit frames)")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("simulate", parents=[common], help="simulate compiled instructions")
    p.add_argument("instruction_file", type=Path)
    p.add_argument("--check", action="store_true", help="print constraint residuals per record")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("generate", parents=[common], help="generate a paired dataset")
    p.add_argument("--count", type=_non_negative_int, required=True)
    p.add_argument("--split", type=float, default=0.5, help="static share (default 0.5)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="also write the balance report here")

    p = sub.add_parser("evaluate", parents=[common], help="compare generated against real data")
    p.add_argument("real", type=Path, help="dataset JSONL or feature file")
    p.add_argument("gen", type=Path, help="dataset JSONL or feature file")
    p.add_argument("--k", type=_positive_int, help="neighbours for the manifold metrics")
    p.add_argument("--cs", action="store_true", help="also report the CLIP-style score")
    p.add_argument("--traj-emb", type=Path, help="trajectory embedding file (for --cs)")
    p.add_argument("--prompt-emb", type=Path, help="prompt embedding file (for --cs)")
    p.add_argument("--cs-mode", choices=("mean", "sum"), default="mean")
    p.add_argument("--out", type=Path)
    return parser


def _config(args) -> Config:
    path = getattr(args, "config", None)
    try:
        config = Config.load(path) if path else Config()
        return config.updated(frames=getattr(args, "frames", None))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from None


def _emit(lines, out) -> None:
    if out is None:
        for line in lines:
            sys.stdout.write(line + "\n")
        return
    with Path(out).open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------- enumerate

def cmd_enumerate(args, config: Config) -> int:
    records = enumerate_scds(args.include_end, args.kinds, config.frames, args.easings)
    _emit((format_scd(r) for r in records), args.out)
    return 0


# ---------------------------------------------------------------- compile

def _read_subject_spec(path):
    if path is None:
        return {}
    if not path.exists():
        raise UsageError(f"subject spec not found: {path}")
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"subject spec is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise UsageError("subject spec must be a JSON object")
    unknown = set(spec) - {"motion", "params", "seed", "frames"}
    if unknown:
        raise UsageError(f"unknown subject spec keys: {sorted(unknown)}")
    return spec


def subject_for(spec: dict, frames: int) -> SubjectTrajectory:
    """Subject trajectory of the requested length from a spec.

    ``{"frames": [...]}`` gives explicit samples (a single sample is held);
    otherwise ``motion``/``params``/``seed`` select a motion model. The
    empty spec is a stationary default-sized subject facing +x.
    """
    if "frames" in spec:
        subject = subject_from_json(spec["frames"])
        if len(subject) == 1:
            return SubjectTrajectory.constant(subject[0], frames)
        if len(subject) != frames:
            raise ValueError(f"subject spec has {len(subject)} frames, shot needs {frames}")
        return subject
    params = {"heading": 0.0, **spec.get("params", {})}
    model = SubjectMotionModel(MotionKind(spec.get("motion", "stationary")), params, int(spec.get("seed", 0)))
    return generate_subject_motion(model, frames)


def cmd_compile(args, config: Config) -> int:
    if not args.scd_file.exists():
        raise UsageError(f"description file not found: {args.scd_file}")
    spec = _read_subject_spec(args.subject)
    seed = getattr(args, "seed", 0)
    out = []
    lines = args.scd_file.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            scd = parse_scd(line)
            subject = subject_for(spec, scd.movement.duration_frames)
            line_seed = int(np.random.SeedSequence([seed, lineno]).generate_state(1)[0])
            instr = compile_scd(scd, subject, config=config, seed=line_seed)
        except (ScdError, ValueError) as exc:
            raise RuntimeError(f"{args.scd_file}:{lineno}: {exc}") from None
        out.append(_dump({"line": lineno, "scd": format_scd(scd),
                          "instruction": instruction_to_json(instr),
                          "subject": subject_to_json(subject)}))
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------- simulate

def _simulate_one(task):
    lineno, obj, config = task
    rid = f"line{lineno:07d}"
    try:
        scd = parse_scd(obj["scd"])
        instr = instruction_from_json(obj["instruction"])
        subject = subject_from_json(obj["subject"])
        camera = simulate(instr, subject, config)
    except InfeasibleError as exc:
        return lineno, None, f"line {lineno}: infeasible ({exc})"
    except (KeyError, TypeError, ValueError, ScdError) as exc:
        return lineno, None, f"line {lineno}: {exc}"
    record = DatasetRecord(rid, None, scd, instr, subject, camera, subset_of(subject))
    return lineno, record, check_constraints(camera, subject, instr, config.aspect)


def cmd_simulate(args, config: Config) -> int:
    if not args.instruction_file.exists():
        raise UsageError(f"instruction file not found: {args.instruction_file}")
    tasks = []
    for lineno, line in enumerate(args.instruction_file.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            tasks.append((lineno, json.loads(line), config))
        except json.JSONDecodeError as exc:
            raise RuntimeError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    jobs = getattr(args, "jobs", 1)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_simulate_one, tasks))
    else:
        results = [_simulate_one(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    failures = [msg for _, rec, msg in results if rec is None]
    if args.check:
        for lineno, rec, info in results:
            if rec is not None:
                print(_dump({"id": rec.id, "residuals": info}), file=sys.stderr)
    if failures:
        for msg in failures:
            print(f"cinecam simulate: {msg}", file=sys.stderr)
        return 1
    records = [rec for _, rec, _ in results]
    if args.out is None:
        from .dataset import dumps_record

        _emit((dumps_record(r) for r in records), None)
    else:
        write_records(records, args.out)
    return 0


# ---------------------------------------------------------------- generate

def cmd_generate(args, config: Config) -> int:
    if not 0.0 <= args.split <= 1.0:
        raise UsageError("--split must lie in [0, 1]")
    records = generate_records(args.count, args.split, getattr(args, "seed", 0), config,
                               getattr(args, "jobs", 1))
    write_records(records, args.out)
    report = balance_report(records).to_json()
    text = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


# ---------------------------------------------------------------- evaluate

def _is_feature_file(path: Path) -> bool:
    with path.open("rb") as fh:
        head = fh.read(64)
    if head.startswith(MAGIC):
        return True
    first = head.split(b"\n", 1)[0].split()
    return len(first) == 2 and all(tok.isdigit() for tok in first)


def _load(path: Path):
    if not path.exists():
        raise UsageError(f"file not found: {path}")
    if _is_feature_file(path):
        return read_features(path), None
    records = list(read_records(path))
    return None, records


def _mean_losses(real_records, gen_records, config: Config) -> dict:
    by_id = {r.id: r for r in real_records}
    pairs = [(by_id[g.id], g) for g in gen_records if g.id in by_id]
    if not pairs:
        return {}
    params = DiscrepancyParams(config.epsilon)
    return {
        "pairs": len(pairs),
        "init": float(np.mean([init_loss(r.camera, g.camera, params) for r, g in pairs])),
        "rel": float(np.mean([rel_loss(r.camera, g.camera, params) for r, g in pairs])),
        "speed": float(np.mean([speed_loss(r.camera, g.camera, params) for r, g in pairs
                                if len(r.camera) >= 2])),
    }


def cmd_evaluate(args, config: Config) -> int:
    if args.cs:
        for name in ("traj_emb", "prompt_emb"):
            path = getattr(args, name)
            if path is None or not path.exists():
                raise UsageError(f"--cs needs an existing --{name.replace('_', '-')} file (got {path})")
    real_x, real_records = _load(args.real)
    gen_x, gen_records = _load(args.gen)
    report = {}
    if real_records is not None and gen_records is not None:
        if not real_records or not gen_records:
            raise RuntimeError("dataset files must hold at least two records")
        featurizer = TrajectoryFeaturizer().fit([r.camera for r in real_records])
        real_x = featurizer.transform([r.camera for r in real_records])
        gen_x = featurizer.transform([r.camera for r in gen_records])
        report["losses"] = _mean_losses(real_records, gen_records, config)
    elif real_x is None or gen_x is None:
        raise UsageError("real and gen must both be feature files or both be dataset files")
    k = args.k or config.k
    report["fid"] = fid(real_x, gen_x)
    report.update(ManifoldMetrics(k).fit(real_x).score(gen_x))
    if args.cs:
        report["cs"] = clip_score(read_features(args.traj_emb), read_features(args.prompt_emb),
                                  config.clip_scale, args.cs_mode)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


COMMANDS = {
    "enumerate": cmd_enumerate,
    "compile": cmd_compile,
    "simulate": cmd_simulate,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"cinecam {args.command}: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, DatasetError, FramingError, OSError) as exc:
        print(f"cinecam {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
