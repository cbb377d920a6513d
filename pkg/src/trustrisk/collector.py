"""Turn recorded code-host / package-registry metadata snapshots into records.

Snapshots are JSON documents captured ahead of time; nothing here touches the
network. Schema (one snapshot per file)::

    {
      "source": "code-host" | "package-registry",
      "identifier": "owner/name",
      "captured_at": "2024-03-01T00:00:00+00:00",
      "fields": {
        "stars": int, "forks": int, "downloads": int,
        "dependencies": [str, ...],
        "advisories": [{"id": str, "resolved": bool}, ...],
        "releases": ["YYYY-MM-DD", ...],
        "language": str,
        "contributors": [str, ...], "maintainers": [str, ...],
        "code_length": int, "code_coverage": float
      }
    }

Every key under ``fields`` is optional; absent keys are reported as gaps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Any, Mapping

from trustrisk.domain import AssessmentConfig, SoftwareRecord

SOURCE_KINDS = ("code-host", "package-registry")

RAW_FIELDS = (
    "stars",
    "forks",
    "downloads",
    "dependencies",
    "advisories",
    "releases",
    "language",
    "contributors",
    "maintainers",
    "code_length",
    "code_coverage",
)

MIN_UPDATE_FREQUENCY = 1 / 365


class SnapshotError(ValueError):
    def __init__(self, message: str, path: str = "$") -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class HostSnapshot:
    source: str
    identifier: str
    captured_at: datetime
    raw: Mapping[str, Any]
    gaps: tuple[str, ...] = ()


@dataclass(frozen=True)
class Normalized:
    record: SoftwareRecord
    # SoftwareRecord field names left absent because the snapshot lacked data.
    gaps: tuple[str, ...] = field(default=())


def _parse_time(value: Any, path: str) -> datetime:
    if not isinstance(value, str):
        raise SnapshotError("expected an ISO-8601 timestamp string", path)
    try:
        stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise SnapshotError(f"invalid timestamp {value!r}", path) from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


def _expect(value: Any, kinds: tuple[type, ...], path: str) -> None:
    if isinstance(value, bool) and bool not in kinds:
        raise SnapshotError(f"expected {kinds[0].__name__}, got bool", path)
    if not isinstance(value, kinds):
        raise SnapshotError(f"expected {kinds[0].__name__}, got {type(value).__name__}", path)


_FIELD_TYPES: dict[str, tuple[type, ...]] = {
    "stars": (int,),
    "forks": (int,),
    "downloads": (int,),
    "dependencies": (list,),
    "advisories": (list,),
    "releases": (list,),
    "language": (str,),
    "contributors": (list,),
    "maintainers": (list,),
    "code_length": (int,),
    "code_coverage": (float, int),
}


def load_snapshot(text: str | bytes) -> HostSnapshot:
    """Parse and structurally check one snapshot document.

    Malformed JSON raises ``SnapshotError`` naming the byte offset; structural
    problems name the JSON path.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SnapshotError(f"malformed JSON at byte offset {offset}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SnapshotError("snapshot must be an object")

    source = data.get("source")
    if source not in SOURCE_KINDS:
        raise SnapshotError(f"unknown source kind {source!r}", "$.source")
    identifier = data.get("identifier")
    if not isinstance(identifier, str) or not identifier.strip():
        raise SnapshotError("identifier must be a nonempty string", "$.identifier")
    if "captured_at" not in data:
        raise SnapshotError("captured_at is required", "$.captured_at")
    captured_at = _parse_time(data["captured_at"], "$.captured_at")

    raw = data.get("fields", {})
    if not isinstance(raw, dict):
        raise SnapshotError("fields must be an object", "$.fields")
    for name, value in raw.items():
        if name not in _FIELD_TYPES:
            raise SnapshotError(f"unknown field {name!r}", f"$.fields.{name}")
        _expect(value, _FIELD_TYPES[name], f"$.fields.{name}")
    for i, adv in enumerate(raw.get("advisories", [])):
        if not isinstance(adv, dict) or not isinstance(adv.get("resolved", False), bool):
            raise SnapshotError(
                "advisory must be an object with a boolean 'resolved'",
                f"$.fields.advisories[{i}]",
            )
    for i, rel in enumerate(raw.get("releases", [])):
        _parse_release(rel, f"$.fields.releases[{i}]")

    gaps = tuple(name for name in RAW_FIELDS if name not in raw)
    return HostSnapshot(source, identifier.strip(), captured_at, dict(raw), gaps)


def _parse_release(value: Any, path: str) -> date:
    if not isinstance(value, str):
        raise SnapshotError("release dates must be strings", path)
    try:
        return date.fromisoformat(value[:10])
    except ValueError:
        raise SnapshotError(f"invalid release date {value!r}", path) from None


def update_frequency(releases: list[date], captured_at: datetime) -> float:
    """Releases in the year before capture, per month, clamped to [1/365, 1]."""
    cutoff = captured_at.date() - timedelta(days=365)
    recent = sum(1 for d in releases if cutoff < d <= captured_at.date())
    return min(1.0, max(MIN_UPDATE_FREQUENCY, recent / 12))


def normalize(
    snapshot: HostSnapshot, context: str, config: AssessmentConfig | None = None
) -> Normalized:
    config = config or AssessmentConfig()
    if context not in config.context_table:
        raise KeyError(f"unknown context label {context!r}; known: {sorted(config.context_table)}")
    raw = snapshot.raw
    values: dict[str, Any] = {"context": config.context_table[context]}
    gaps: list[str] = []

    def take(raw_name: str, field_name: str, convert=lambda v: v) -> None:
        if raw_name in raw:
            values[field_name] = convert(raw[raw_name])
        else:
            gaps.append(field_name)

    take("stars", "rating_count")
    take("forks", "forks")
    take("downloads", "downloads")
    take("dependencies", "dependency_count", len)
    take("language", "language")
    take("code_length", "code_length")
    take("code_coverage", "code_coverage", float)
    take("contributors", "developer_ids", lambda v: tuple(str(x) for x in v))
    take("maintainers", "publisher_ids", lambda v: tuple(str(x) for x in v))

    if "advisories" in raw:
        advisories = raw["advisories"]
        values["vulnerabilities_total"] = len(advisories)
        values["vulnerabilities_unresolved"] = sum(
            1 for a in advisories if not a.get("resolved", False)
        )
    else:
        gaps.extend(["vulnerabilities_total", "vulnerabilities_unresolved"])

    releases = [_parse_release(r, "$.fields.releases") for r in raw.get("releases", [])]
    if "releases" in raw:
        values["update_frequency"] = update_frequency(releases, snapshot.captured_at)
    else:
        gaps.append("update_frequency")
    if releases:
        values["year"] = min(releases).year
    else:
        gaps.append("year")

    record = SoftwareRecord(software_id=snapshot.identifier, **values)
    return Normalized(record, tuple(gaps))


def record_to_json(record: SoftwareRecord) -> dict:
    data = {k: v for k, v in vars(record).items()}
    data["developer_ids"] = list(record.developer_ids)
    data["publisher_ids"] = list(record.publisher_ids)
    return data
