"""Command-line front end.

Exit status: 0 success, 1 total data failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from trustrisk.collector import SnapshotError, load_snapshot, normalize, record_to_json
from trustrisk.dataset import (
    ConversionError,
    CorpusRow,
    SchemaError,
    derive_histories,
    generate_synthetic,
    generator_manifest,
    inputs_from_dict,
    parse_corpus,
    parse_history_table,
    serialize_corpus,
    to_record,
)
from trustrisk.domain import (
    AssessmentConfig,
    MissingDataPolicy,
    WeightOverrides,
    validate_record,
)
from trustrisk.report import GridError, emit_breakdowns, emit_grid, load_grid_spec, sweep_grid
from trustrisk.scoring import InvalidRecordError, SegmentUnavailable, assess
from trustrisk.selftest import run_battery

logger = logging.getLogger("trustrisk")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


_CONFIG_KEYS = {
    "dependency_sensitivity",
    "context_table",
    "band_thresholds",
    "penalty_threshold",
    "sigmoid_shift",
    "sigmoid_scale",
    "weight_overrides",
    "missing_data_policy",
}


def config_from_dict(data: dict) -> AssessmentConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    try:
        if "band_thresholds" in kwargs:
            kwargs["band_thresholds"] = tuple(float(t) for t in kwargs["band_thresholds"])
        if kwargs.get("weight_overrides") is not None:
            kwargs["weight_overrides"] = WeightOverrides(**kwargs["weight_overrides"])
        if "missing_data_policy" in kwargs:
            kwargs["missing_data_policy"] = MissingDataPolicy(**kwargs["missing_data_policy"])
        return AssessmentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None


def load_config(path: Path | None) -> AssessmentConfig:
    if path is None:
        return AssessmentConfig()
    try:
        data = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return config_from_dict(data)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Path, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _timestamp(args: argparse.Namespace, source: Path) -> datetime:
    if args.assessed_at:
        try:
            stamp = datetime.fromisoformat(args.assessed_at.replace("Z", "+00:00"))
        except ValueError:
            raise UsageError(f"invalid --assessed-at {args.assessed_at!r}") from None
        return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)
    # Input mtime keeps reruns on unchanged inputs byte-identical.
    try:
        mtime = source.stat().st_mtime
    except OSError as exc:
        raise UsageError(f"cannot read {source}: {exc.strerror}") from None
    return datetime.fromtimestamp(int(mtime), tz=timezone.utc)


def _distinct(inp: Path, out: Path) -> None:
    if inp.resolve() == out.resolve():
        raise UsageError("--input and --output must be different paths")


def _sidecar(output: Path) -> Path:
    return output.with_name(output.name + ".errors.csv")


def _errors_csv(errors: list[tuple[int, str, str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["line", "sample", "stage", "problems"])
    writer.writerows(errors)
    return buf.getvalue()


def _load_histories(path: Path | None):
    if path is None:
        return {}, {}
    try:
        return parse_history_table(_read(path))
    except SchemaError as exc:
        raise UsageError(f"history table {path}: {exc}") from None


# --- subcommands -----------------------------------------------------------


def cmd_assess(args: argparse.Namespace) -> int:
    _distinct(args.input, args.output)
    config = load_config(args.config)
    dev_over, pub_over = _load_histories(args.histories)
    now = _timestamp(args, args.input)
    try:
        parsed = parse_corpus(_read(args.input))
    except SchemaError as exc:
        logger.error("%s: %s", args.input, exc)
        return EXIT_DATA

    errors: list[tuple[int, str, str, str]] = []
    valid = []
    for item in parsed:
        if not isinstance(item, CorpusRow):
            errors.append((item.line, item.sample or "", "parse", "; ".join(item.problems)))
            continue
        record = to_record(item)
        result = validate_record(record, config)
        if not result.ok:
            errors.append(
                (item.line, record.software_id, "validate", "; ".join(v.message for v in result.errors))
            )
            continue
        valid.append((item.line, record))

    histories = derive_histories(r for _, r in valid).with_overrides(dev_over, pub_over)
    breakdowns = []
    for line, record in valid:
        try:
            breakdowns.append(assess(histories.inputs_for(record), config, now))
        except (SegmentUnavailable, InvalidRecordError) as exc:
            errors.append((line, record.software_id, "assess", str(exc)))

    errors.sort()
    _write(args.output, emit_breakdowns(breakdowns, args.format))
    _write(_sidecar(args.output), _errors_csv(errors))
    logger.info("assessed %d rows, %d errors", len(breakdowns), len(errors))
    return EXIT_OK if breakdowns else EXIT_DATA


def cmd_generate(args: argparse.Namespace) -> int:
    if args.count is None or args.count <= 0:
        raise UsageError("--count must be a positive integer")
    rows = generate_synthetic(args.count, args.seed)
    _write(args.output, serialize_corpus(rows))
    _write(args.output.with_name(args.output.name + ".manifest.json"),
           generator_manifest(args.count, args.seed))
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    _distinct(args.input, args.output)
    config = load_config(args.config)
    try:
        spec = load_grid_spec(_read(args.input))
    except GridError as exc:
        raise UsageError(str(exc)) from None
    try:
        base = inputs_from_dict(json.loads(_read(args.record)))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed base record {args.record}: {exc}") from None
    now = _timestamp(args, args.input)
    try:
        result = sweep_grid(spec, base, config, now)
    except GridError as exc:
        raise UsageError(str(exc)) from None
    except (InvalidRecordError, SegmentUnavailable) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    _write(args.output, emit_grid(result))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.self_test:
        results = run_battery(config)
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"[{status}] test {r.number}: {r.description} ({r.detail})")
        return EXIT_OK if all(r.passed for r in results) else EXIT_DATA
    if args.input is None:
        raise UsageError("validate needs --input or --self-test")
    try:
        parsed = parse_corpus(_read(args.input))
    except SchemaError as exc:
        print(f"schema error: {exc}")
        return EXIT_DATA
    bad = 0
    for item in parsed:
        if not isinstance(item, CorpusRow):
            bad += 1
            print(f"line {item.line}: error: {'; '.join(item.problems)}")
            continue
        result = validate_record(to_record(item), config)
        for v in result.violations:
            kind = "error" if v.hard else "gap"
            print(f"line {item.line}: {kind}: {v.field}: {v.message}")
        bad += not result.ok
    print(f"{len(parsed)} rows, {bad} with hard errors")
    return EXIT_OK if bad == 0 else EXIT_DATA


def cmd_normalize(args: argparse.Namespace) -> int:
    _distinct(args.input, args.output)
    config = load_config(args.config)
    try:
        snapshot = load_snapshot(_read(args.input))
    except SnapshotError as exc:
        logger.error("%s: %s", args.input, exc)
        return EXIT_DATA
    try:
        result = normalize(snapshot, args.context, config)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    doc = {"record": record_to_json(result.record), "gaps": list(result.gaps)}
    _write(args.output, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_snapshot_assess(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dev_over, pub_over = _load_histories(args.histories)
    histories = derive_histories([]).with_overrides(dev_over, pub_over)
    breakdowns = []
    errors: list[tuple[int, str, str, str]] = []
    for i, path in enumerate(args.input, start=1):
        _distinct(path, args.output)
        try:
            snapshot = load_snapshot(_read(path))
            record = normalize(snapshot, args.context, config).record
            now = _timestamp(args, path)
            breakdowns.append(assess(histories.inputs_for(record), config, now))
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        except (SnapshotError, InvalidRecordError, SegmentUnavailable) as exc:
            errors.append((i, str(path), "snapshot", str(exc)))
    _write(args.output, emit_breakdowns(breakdowns, args.format))
    _write(_sidecar(args.output), _errors_csv(errors))
    return EXIT_OK if breakdowns else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustrisk", description="Trust-based software supply-chain risk scoring"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config=True, fmt=False, stamp=False):
        p.add_argument("--output", type=Path, required=True, help="output file")
        if config:
            p.add_argument("--config", type=Path, help="JSON assessment config")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        if stamp:
            p.add_argument("--assessed-at", help="ISO-8601 assessment time (default: input mtime)")

    p = sub.add_parser("assess", help="score every row of a corpus")
    p.add_argument("--input", type=Path, required=True, help="corpus CSV")
    p.add_argument("--histories", type=Path, help="actor history side-table CSV")
    common(p, fmt=True, stamp=True)
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("generate", help="write a seeded synthetic corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    common(p, config=False)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("grid", help="parameter sweep over a base record")
    p.add_argument("--input", type=Path, required=True, help="grid spec JSON")
    p.add_argument("--record", type=Path, required=True, help="base record + histories JSON")
    common(p, stamp=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("validate", help="check a corpus, or run the robustness battery")
    p.add_argument("--input", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--self-test", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("normalize", help="convert a metadata snapshot into a record")
    p.add_argument("--input", type=Path, required=True, help="snapshot JSON")
    p.add_argument("--context", default="other", help="context label from the config table")
    common(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("snapshot-assess", help="normalize snapshots and score them")
    p.add_argument("--input", type=Path, required=True, nargs="+", help="snapshot JSON file(s)")
    p.add_argument("--context", default="other")
    p.add_argument("--histories", type=Path)
    common(p, fmt=True, stamp=True)
    p.set_defaults(func=cmd_snapshot_assess)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trustrisk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConversionError as exc:
        print(f"trustrisk: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
