"""Robustness battery: six malformed/incomplete-input checks run end to end.

Each check edits one reference corpus row, pushes it through parsing,
validation, history derivation and assessment, and reports whether the engine
reacted as intended (a score, or an error).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from datetime import datetime, timezone

from trustrisk.dataset import (
    COLUMNS,
    CorpusRow,
    RowError,
    derive_histories,
    parse_corpus,
    serialize_corpus,
    to_record,
)
from trustrisk.domain import AssessmentConfig, DeveloperHistory, PublisherHistory, validate_record
from trustrisk.scoring import assess

# Reference row for the robustness checks, with its actor histories.
REFERENCE_ROW = {
    "Sample": "example",
    "Code Length": "304",
    "Developer": "W",
    "Publisher": "Z",
    "Year": "2018",
    "Language": "Java",
    "Update Frequency": "0.08424",
    "Forks": "2003",
    "Downloads": "20455",
    "Unresolved Vulnerabilities": "135",
    "Known Vulnerabilities": "7556",
    "Dependencies": "28",
    "Rating": "7153",
    "Code Coverage": "0.99",
    "Context": "0.2",
}
REFERENCE_DEVELOPERS = {"W": DeveloperHistory("W", 96912, 129, 33, 2, 2)}
REFERENCE_PUBLISHERS = {"Z": PublisherHistory("Z", 123, 2)}

_NOW = datetime(2024, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class CheckResult:
    number: int
    description: str
    passed: bool
    detail: str


def _run(cells: dict[str, str], config: AssessmentConfig):
    """Full pipeline on a single edited row. Returns (score, errors)."""
    text = serialize_corpus([CorpusRow(2, {c: cells.get(c) or None for c in COLUMNS})])
    (item,) = parse_corpus(text)
    if isinstance(item, RowError):
        return None, list(item.problems)
    record = to_record(item)
    result = validate_record(record, config)
    if not result.ok:
        return None, [v.message for v in result.errors]
    histories = derive_histories([record]).with_overrides(
        REFERENCE_DEVELOPERS, REFERENCE_PUBLISHERS
    )
    breakdown = assess(histories.inputs_for(record), config, _NOW)
    return breakdown.final_risk_penalized, []


def _edited(**changes: str) -> dict[str, str]:
    cells = dict(REFERENCE_ROW)
    for key, value in changes.items():
        cells[key.replace("_", " ")] = value
    return cells


def run_battery(config: AssessmentConfig | None = None) -> list[CheckResult]:
    config = config or AssessmentConfig()
    results = []

    score, errors = _run(_edited(Dependencies=""), config)
    results.append(
        CheckResult(1, "blank dependencies still yields a score", score is not None,
                    f"R_FP={score}" if score is not None else "; ".join(errors))
    )

    score, errors = _run(_edited(Code_Coverage="1.3"), config)
    results.append(
        CheckResult(2, "code coverage above 1 is rejected",
                    score is None and "coverage out of range" in errors, "; ".join(errors))
    )

    score, errors = _run(_edited(Context="0.4"), config)
    results.append(
        CheckResult(3, "context outside the table is rejected",
                    score is None and "unknown context" in errors, "; ".join(errors))
    )

    blankable = [c for c in COLUMNS if c != "Sample"]
    failures = []
    combos = 0
    for chosen in itertools.combinations(blankable, 5):
        combos += 1
        score, errors = _run(_edited(**{c.replace(" ", "_"): "" for c in chosen}), config)
        if score is None:
            failures.append(f"{chosen}: {'; '.join(errors)}")
    results.append(
        CheckResult(4, "any five blank cells still yield a score", not failures,
                    f"{combos} combinations, {len(failures)} failed" + (f": {failures[0]}" if failures else ""))
    )

    score, errors = _run(_edited(Developer="3,5,10"), config)
    results.append(
        CheckResult(5, "three developers in one cell yield a score", score is not None,
                    f"R_FP={score}" if score is not None else "; ".join(errors))
    )

    score, errors = _run(_edited(Downloads="3.5"), config)
    results.append(
        CheckResult(6, "decimal downloads are rejected",
                    score is None and "non-integer downloads" in errors, "; ".join(errors))
    )
    return results
