"""Corpus ingestion, actor-history derivation and synthetic corpus generation."""

from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, Sequence

from trustrisk.domain import DeveloperHistory, PublisherHistory, SoftwareRecord
from trustrisk.scoring import SegmentInputs

COLUMNS = (
    "Sample",
    "Code Length",
    "Developer",
    "Publisher",
    "Year",
    "Language",
    "Update Frequency",
    "Forks",
    "Downloads",
    "Unresolved Vulnerabilities",
    "Known Vulnerabilities",
    "Dependencies",
    "Rating",
    "Code Coverage",
    "Context",
)

# column -> (record field, kind)
_COLUMN_MAP = {
    "Code Length": ("code_length", "int"),
    "Developer": ("developer_ids", "ids"),
    "Publisher": ("publisher_ids", "ids"),
    "Year": ("year", "int"),
    "Language": ("language", "str"),
    "Update Frequency": ("update_frequency", "float"),
    "Forks": ("forks", "int"),
    "Downloads": ("downloads", "int"),
    "Unresolved Vulnerabilities": ("vulnerabilities_unresolved", "int"),
    "Known Vulnerabilities": ("vulnerabilities_total", "int"),
    "Dependencies": ("dependency_count", "int"),
    "Rating": ("rating_count", "int"),
    "Code Coverage": ("code_coverage", "float"),
    "Context": ("context", "float"),
}

_INT_RE = re.compile(r"^[+-]?\d+$")

HISTORY_COLUMNS = (
    "actor_id",
    "kind",
    "total_vulnerabilities",
    "software_count",
    "software_count_same_language",
    "years_in_language",
    "years_total",
    "published_count",
    "years_publishing",
)


class SchemaError(ValueError):
    """The corpus header does not match the expected columns."""


class ConversionError(ValueError):
    def __init__(self, problems: Sequence[str]) -> None:
        self.problems = tuple(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class CorpusRow:
    """Raw cell text for one data line; ``None`` marks a blank cell."""

    line: int
    cells: Mapping[str, str | None]

    def get(self, column: str) -> str | None:
        return self.cells.get(column)


@dataclass(frozen=True)
class RowError:
    line: int
    sample: str | None
    problems: tuple[str, ...]


def _convert(column: str, kind: str, raw: str):
    label = column.lower()
    if kind == "int":
        if _INT_RE.match(raw):
            return int(raw)
        try:
            float(raw)
        except ValueError:
            raise ConversionError([f"invalid {label}: {raw!r}"]) from None
        raise ConversionError([f"non-integer {label}"])
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConversionError([f"invalid {label}: {raw!r}"]) from None
    if kind == "ids":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    return raw


def to_record(row: CorpusRow) -> SoftwareRecord:
    """Map a raw corpus row onto a record; blank cells stay ``None``.

    Raises ``ConversionError`` listing every cell that fails type conversion.
    """
    values: dict[str, object] = {}
    problems: list[str] = []
    for column, (name, kind) in _COLUMN_MAP.items():
        raw = row.get(column)
        if raw is None:
            continue
        try:
            values[name] = _convert(column, kind, raw)
        except ConversionError as exc:
            problems.extend(exc.problems)
    if problems:
        raise ConversionError(problems)
    sample = row.get("Sample") or f"line-{row.line}"
    return SoftwareRecord(software_id=sample, **values)


def parse_corpus(text: str) -> list[CorpusRow | RowError]:
    """Parse comma-separated corpus text, one result per data line.

    A wrong header raises ``SchemaError``; anything wrong with a single line is
    reported as a ``RowError`` in that line's slot.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty corpus: header row missing") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    if tuple(header) != COLUMNS:
        raise SchemaError(f"expected columns {list(COLUMNS)}, got {header}")

    out: list[CorpusRow | RowError] = []
    for cells in reader:
        line = reader.line_num
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(COLUMNS):
            sample = cells[0].strip() or None if cells else None
            out.append(
                RowError(line, sample, (f"expected {len(COLUMNS)} cells, got {len(cells)}",))
            )
            continue
        raw = {col: (c.strip() or None) for col, c in zip(COLUMNS, cells)}
        row = CorpusRow(line, raw)
        try:
            to_record(row)
        except ConversionError as exc:
            out.append(RowError(line, raw["Sample"], exc.problems))
            continue
        out.append(row)
    return out


def serialize_corpus(rows: Iterable[CorpusRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([row.get(c) or "" for c in COLUMNS])
    return buf.getvalue()


def _fmt_cell(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, tuple):
        return ",".join(value) if value else None
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_to_row(record: SoftwareRecord, line: int = 0) -> CorpusRow:
    cells: dict[str, str | None] = {"Sample": record.software_id}
    for column, (name, _) in _COLUMN_MAP.items():
        cells[column] = _fmt_cell(getattr(record, name))
    return CorpusRow(line, cells)


# --- histories -------------------------------------------------------------


@dataclass(frozen=True)
class HistoryDerivationRule:
    current_year: int | None = None
    language_match_case_insensitive: bool = True


def _span(years: set[int]) -> int:
    return max(years) - min(years) + 1 if years else 0


@dataclass
class _DeveloperStats:
    vulnerabilities: int = 0
    software: int = 0
    years: set[int] = field(default_factory=set)
    by_language: dict[str, list] = field(default_factory=dict)  # lang -> [count, years]


@dataclass
class Histories:
    """Per-actor aggregates, with optional side-table overrides.

    Developer histories depend on the queried language, so they are built on
    demand from per-language tallies.
    """

    developer_stats: dict[str, _DeveloperStats] = field(default_factory=dict)
    publishers: dict[str, PublisherHistory] = field(default_factory=dict)
    developer_overrides: dict[str, DeveloperHistory] = field(default_factory=dict)
    publisher_overrides: dict[str, PublisherHistory] = field(default_factory=dict)
    case_insensitive: bool = True

    def _lang_key(self, language: str | None) -> str | None:
        if language is None:
            return None
        return language.strip().lower() if self.case_insensitive else language.strip()

    def developer(self, developer_id: str, language: str | None) -> DeveloperHistory | None:
        if developer_id in self.developer_overrides:
            return self.developer_overrides[developer_id]
        stats = self.developer_stats.get(developer_id)
        if stats is None:
            return None
        count, years = stats.by_language.get(self._lang_key(language), (0, set()))
        return DeveloperHistory(
            developer_id=developer_id,
            total_vulnerabilities=stats.vulnerabilities,
            software_count=stats.software,
            software_count_same_language=count,
            years_in_language=_span(years),
            years_total=_span(stats.years),
        )

    def publisher(self, publisher_id: str) -> PublisherHistory | None:
        if publisher_id in self.publisher_overrides:
            return self.publisher_overrides[publisher_id]
        return self.publishers.get(publisher_id)

    def inputs_for(self, record: SoftwareRecord) -> SegmentInputs:
        devs = (self.developer(d, record.language) for d in record.developer_ids)
        pubs = (self.publisher(p) for p in record.publisher_ids)
        return SegmentInputs(
            record,
            tuple(h for h in devs if h is not None),
            tuple(h for h in pubs if h is not None),
        )

    def with_overrides(
        self,
        developers: Mapping[str, DeveloperHistory],
        publishers: Mapping[str, PublisherHistory],
    ) -> "Histories":
        return Histories(
            self.developer_stats,
            self.publishers,
            {**self.developer_overrides, **developers},
            {**self.publisher_overrides, **publishers},
            self.case_insensitive,
        )


def derive_histories(
    corpus: Iterable[SoftwareRecord | CorpusRow],
    rule: HistoryDerivationRule | None = None,
) -> Histories:
    """Aggregate developer and publisher histories over a whole corpus.

    Experience in years is the span (max - min + 1) of the ``Year`` values on an
    actor's rows; rows without a year do not extend the span.
    """
    rule = rule or HistoryDerivationRule()
    hist = Histories(case_insensitive=rule.language_match_case_insensitive)
    pub_rows: dict[str, list] = {}
    max_year = None

    for item in corpus:
        record = to_record(item) if isinstance(item, CorpusRow) else item
        year = record.year
        if year is not None:
            max_year = year if max_year is None else max(max_year, year)
        lang = hist._lang_key(record.language)
        for dev in dict.fromkeys(record.developer_ids):
            stats = hist.developer_stats.setdefault(dev, _DeveloperStats())
            stats.vulnerabilities += record.vulnerabilities_total or 0
            stats.software += 1
            entry = stats.by_language.setdefault(lang, [0, set()])
            entry[0] += 1
            if year is not None:
                stats.years.add(year)
                entry[1].add(year)
        for pub in dict.fromkeys(record.publisher_ids):
            tally = pub_rows.setdefault(pub, [0, set()])
            tally[0] += 1
            if year is not None:
                tally[1].add(year)

    if rule.current_year is not None and max_year is not None and rule.current_year < max_year:
        raise ValueError(
            f"current_year {rule.current_year} precedes corpus year {max_year}"
        )
    hist.publishers = {
        pub: PublisherHistory(pub, count, _span(years))
        for pub, (count, years) in pub_rows.items()
    }
    return hist


def parse_history_table(
    text: str,
) -> tuple[dict[str, DeveloperHistory], dict[str, PublisherHistory]]:
    """Read the optional side-table that supplies actor histories directly."""
    reader = csv.DictReader(io.StringIO(text))
    header = tuple(h.strip() for h in (reader.fieldnames or ()))
    if header != HISTORY_COLUMNS:
        raise SchemaError(f"expected history columns {list(HISTORY_COLUMNS)}, got {list(header)}")

    def num(row: dict, key: str) -> int:
        raw = (row.get(key) or "").strip()
        if not raw:
            return 0
        if not _INT_RE.match(raw):
            raise SchemaError(f"line {reader.line_num}: {key} must be an integer, got {raw!r}")
        return int(raw)

    developers: dict[str, DeveloperHistory] = {}
    publishers: dict[str, PublisherHistory] = {}
    for row in reader:
        actor = (row.get("actor_id") or "").strip()
        kind = (row.get("kind") or "").strip()
        if not actor:
            raise SchemaError(f"line {reader.line_num}: actor_id is empty")
        if kind == "developer":
            developers[actor] = DeveloperHistory(
                actor,
                num(row, "total_vulnerabilities"),
                num(row, "software_count"),
                num(row, "software_count_same_language"),
                num(row, "years_in_language"),
                num(row, "years_total"),
            )
        elif kind == "publisher":
            publishers[actor] = PublisherHistory(
                actor, num(row, "published_count"), num(row, "years_publishing")
            )
        else:
            raise SchemaError(f"line {reader.line_num}: unknown kind {kind!r}")
    return developers, publishers


# --- SegmentInputs as JSON (used for grid base files) --------------------


def inputs_to_dict(inputs: SegmentInputs) -> dict:
    record = {f.name: getattr(inputs.record, f.name) for f in fields(SoftwareRecord)}
    record["developer_ids"] = list(record["developer_ids"])
    record["publisher_ids"] = list(record["publisher_ids"])
    return {
        "record": record,
        "developer_histories": [vars(h).copy() for h in inputs.developer_histories],
        "publisher_histories": [vars(h).copy() for h in inputs.publisher_histories],
    }


def inputs_from_dict(data: Mapping) -> SegmentInputs:
    record = dict(data["record"])
    record["developer_ids"] = tuple(record.get("developer_ids") or ())
    record["publisher_ids"] = tuple(record.get("publisher_ids") or ())
    return SegmentInputs(
        SoftwareRecord(**record),
        tuple(DeveloperHistory(**h) for h in data.get("developer_histories", ())),
        tuple(PublisherHistory(**h) for h in data.get("publisher_histories", ())),
    )


# --- synthetic corpora -----------------------------------------------------

ACTOR_LABELS = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
LANGUAGES = ("C", "Python", "Java")
CONTEXTS = (0.2, 0.3, 0.5)
YEARS = (2016, 2023)
CODE_LENGTH = (40, 700)

# Unbounded columns, sized from the reference sample rows.
_RANGES = {
    "Forks": (0, 5000),
    "Downloads": (1, 100_000),
    "Known Vulnerabilities": (0, 12_000),
    "Unresolved Vulnerabilities cap": 1000,
    "Dependencies": (0, 30),
}


def generate_synthetic(count: int, seed: int) -> list[CorpusRow]:
    if count <= 0:
        raise ValueError("count must be positive")
    rng = random.Random(seed)
    rows = []
    for i in range(1, count + 1):
        downloads = rng.randint(*_RANGES["Downloads"])
        known = rng.randint(*_RANGES["Known Vulnerabilities"])
        cells = {
            "Sample": str(i),
            "Code Length": str(rng.randint(*CODE_LENGTH)),
            "Developer": rng.choice(ACTOR_LABELS),
            "Publisher": rng.choice(ACTOR_LABELS),
            "Year": str(rng.randint(*YEARS)),
            "Language": rng.choice(LANGUAGES),
            "Update Frequency": repr(rng.randint(1, 1000) / 1000),
            "Forks": str(rng.randint(*_RANGES["Forks"])),
            "Downloads": str(downloads),
            "Unresolved Vulnerabilities": str(
                rng.randint(0, min(known, _RANGES["Unresolved Vulnerabilities cap"]))
            ),
            "Known Vulnerabilities": str(known),
            "Dependencies": str(rng.randint(*_RANGES["Dependencies"])),
            "Rating": str(rng.randint(0, downloads)),
            "Code Coverage": repr(rng.randint(0, 100) / 100),
            "Context": repr(rng.choice(CONTEXTS)),
        }
        rows.append(CorpusRow(i + 1, cells))
    return rows


def generator_manifest(count: int, seed: int) -> str:
    manifest = {
        "generator": "trustrisk.dataset.generate_synthetic",
        "seed": seed,
        "count": count,
        "columns": {
            "Sample": "sequential integer from 1",
            "Code Length": {"uniform_int": list(CODE_LENGTH)},
            "Developer": {"choice": list(ACTOR_LABELS)},
            "Publisher": {"choice": list(ACTOR_LABELS), "independent_of": "Developer"},
            "Year": {"uniform_int": list(YEARS)},
            "Language": {"choice": list(LANGUAGES)},
            "Update Frequency": {"uniform_int_over_1000": [1, 1000]},
            "Forks": {"uniform_int": list(_RANGES["Forks"])},
            "Downloads": {"uniform_int": list(_RANGES["Downloads"])},
            "Unresolved Vulnerabilities": {
                "uniform_int": [0, "min(Known Vulnerabilities, 1000)"]
            },
            "Known Vulnerabilities": {"uniform_int": list(_RANGES["Known Vulnerabilities"])},
            "Dependencies": {"uniform_int": list(_RANGES["Dependencies"])},
            "Rating": {"uniform_int": [0, "Downloads"]},
            "Code Coverage": {"uniform_int_over_100": [0, 100]},
            "Context": {"choice": list(CONTEXTS)},
        },
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"
