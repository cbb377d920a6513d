"""Core value types shared by every other module, plus record validation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping

DEFAULT_CONTEXT_TABLE: dict[str, float] = {
    "security": 0.2,
    "automation": 0.3,
    "other": 0.5,
}

SEGMENTS = ("developer", "publisher", "user")

_SUM_TOL = 1e-9


class Band(str, enum.Enum):
    LOW = "Low"
    MODERATE = "Moderate"
    HIGH = "High"
    CRITICAL = "Critical"

    @property
    def label(self) -> str:
        return f"{self.value} Risk"


@dataclass(frozen=True)
class SoftwareRecord:
    """Observable attributes of one piece of software.

    Any attribute other than ``software_id`` may be ``None`` when the data is
    missing; the scoring engine decides what a gap means.
    """

    software_id: str
    developer_ids: tuple[str, ...] = ()
    publisher_ids: tuple[str, ...] = ()
    year: int | None = None
    language: str | None = None
    update_frequency: float | None = None
    forks: int | None = None
    downloads: int | None = None
    vulnerabilities_unresolved: int | None = None
    vulnerabilities_total: int | None = None
    dependency_count: int | None = None
    rating_count: int | None = None
    code_coverage: float | None = None
    context: float | None = None
    code_length: int | None = None

    @property
    def vulnerabilities_resolved(self) -> int:
        # A zero-filled missing total must not produce a negative count.
        total = self.vulnerabilities_total or 0
        return max(0, total - (self.vulnerabilities_unresolved or 0))


@dataclass(frozen=True)
class DeveloperHistory:
    developer_id: str
    total_vulnerabilities: int = 0
    software_count: int = 0
    software_count_same_language: int = 0
    years_in_language: int = 0
    years_total: int = 0


@dataclass(frozen=True)
class PublisherHistory:
    publisher_id: str
    published_count: int = 0
    years_publishing: int = 0


@dataclass(frozen=True)
class MissingDataPolicy:
    # True: an unevaluable segment scores 1; False: assessment raises.
    default_segments: bool = True
    # True: a missing parameter inside a segment counts as 0; False: the
    # whole segment becomes unevaluable.
    zero_missing_parameters: bool = True


@dataclass(frozen=True)
class WeightOverrides:
    w_dev: float
    w_pb: float
    w_ur: float

    def __post_init__(self) -> None:
        weights = (self.w_dev, self.w_pb, self.w_ur)
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ValueError("weight overrides must be finite and nonnegative")
        if abs(sum(weights) - 1.0) > _SUM_TOL:
            raise ValueError(f"weight overrides must sum to 1, got {sum(weights)!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_dev, self.w_pb, self.w_ur)


@dataclass(frozen=True)
class AssessmentConfig:
    dependency_sensitivity: float = 1.0
    context_table: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CONTEXT_TABLE)
    )
    band_thresholds: tuple[float, float, float] = (0.25, 0.5, 0.75)
    penalty_threshold: float = 0.5
    sigmoid_shift: float = 4.0
    sigmoid_scale: float = 0.04
    weight_overrides: WeightOverrides | None = None
    missing_data_policy: MissingDataPolicy = field(default_factory=MissingDataPolicy)

    def __post_init__(self) -> None:
        if self.dependency_sensitivity < 0:
            raise ValueError("dependency_sensitivity must be >= 0")
        if not self.context_table:
            raise ValueError("context_table must not be empty")
        if any(not 0 < v <= 1 for v in self.context_table.values()):
            raise ValueError("context weights must lie in (0, 1]")
        if abs(sum(self.context_table.values()) - 1.0) > _SUM_TOL:
            raise ValueError("context_table values must sum to 1")
        t1, t2, t3 = self.band_thresholds
        if not 0 < t1 < t2 < t3 < 1:
            raise ValueError("band_thresholds must be strictly increasing in (0, 1)")
        if not 0 <= self.penalty_threshold <= 1:
            raise ValueError("penalty_threshold must lie in [0, 1]")

    def context_label(self, weight: float) -> str | None:
        for label, value in self.context_table.items():
            if math.isclose(value, weight, rel_tol=0, abs_tol=_SUM_TOL):
                return label
        return None

    @property
    def strictest_context(self) -> float:
        return min(self.context_table.values())


@dataclass(frozen=True)
class RiskBreakdown:
    """Every intermediate and final quantity of one assessment.

    Sub-quantities of a segment that was forced to maximum risk are ``None``.
    """

    software_id: str
    assessed_at: datetime
    r_cd: float | None
    r_cs: float | None
    r_pl: float | None
    r_dev: float
    w_lc: float | None
    w_cd: float | None
    w_cs: float | None
    w_pl: float | None
    expertise: float | None
    r_pb: float
    r_ur: float
    w_dev: float
    w_pb: float
    w_ur: float
    context: float
    unresolved_proportion: float
    penalty: float
    final_risk: float
    final_risk_penalized: float
    band: Band
    segment_defaulted: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    hard: bool = True


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...]

    @property
    def errors(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.hard)

    @property
    def gaps(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if not v.hard)

    @property
    def ok(self) -> bool:
        return not self.errors


_INTEGER_FIELDS = (
    ("year", "year"),
    ("forks", "forks"),
    ("downloads", "downloads"),
    ("vulnerabilities_unresolved", "unresolved vulnerabilities"),
    ("vulnerabilities_total", "known vulnerabilities"),
    ("dependency_count", "dependencies"),
    ("rating_count", "rating"),
    ("code_length", "code length"),
)


def _is_integer(value: object) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, int):
        return True
    return isinstance(value, float) and value.is_integer()


def _is_real(value: object) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
    )


def validate_record(record: SoftwareRecord, config: AssessmentConfig) -> ValidationResult:
    """Check a record against every type invariant.

    Hard errors make the record unassessable; soft gaps only mark missing data.
    The violation order is fixed by field order, so repeated calls agree.
    """
    out: list[Violation] = []

    if not record.developer_ids:
        out.append(Violation("developer_ids", "missing developer", hard=False))
    if not record.publisher_ids:
        out.append(Violation("publisher_ids", "missing publisher", hard=False))

    for name, label in _INTEGER_FIELDS:
        value = getattr(record, name)
        if value is None:
            out.append(Violation(name, f"missing {label}", hard=False))
        elif not _is_integer(value):
            out.append(Violation(name, f"non-integer {label}"))
        elif value < 0:
            out.append(Violation(name, f"negative {label}"))

    if record.code_length is not None and _is_integer(record.code_length) and record.code_length == 0:
        out.append(Violation("code_length", "code length must be positive"))

    if record.language is None or not str(record.language).strip():
        out.append(Violation("language", "missing language", hard=False))

    freq = record.update_frequency
    if freq is None:
        out.append(Violation("update_frequency", "missing update frequency", hard=False))
    elif not _is_real(freq) or not 0 < freq <= 1:
        out.append(Violation("update_frequency", "update frequency out of range"))

    cov = record.code_coverage
    if cov is None:
        out.append(Violation("code_coverage", "missing code coverage", hard=False))
    elif not _is_real(cov) or not 0 <= cov <= 1:
        out.append(Violation("code_coverage", "coverage out of range"))

    ctx = record.context
    if ctx is None:
        out.append(Violation("context", "missing context", hard=False))
    elif not _is_real(ctx) or config.context_label(ctx) is None:
        out.append(Violation("context", "unknown context"))

    unresolved, total = record.vulnerabilities_unresolved, record.vulnerabilities_total
    if _is_integer(unresolved) and _is_integer(total) and unresolved > total:
        out.append(
            Violation(
                "vulnerabilities_unresolved",
                "unresolved vulnerabilities exceed known vulnerabilities",
            )
        )
    rating, downloads = record.rating_count, record.downloads
    if _is_integer(rating) and _is_integer(downloads) and rating > downloads:
        out.append(Violation("rating_count", "rating exceeds downloads"))

    return ValidationResult(tuple(out))


def validate_developer_history(history: DeveloperHistory) -> list[str]:
    problems = []
    if history.software_count_same_language > history.software_count:
        problems.append("same-language software count exceeds software count")
    if history.years_in_language > history.years_total:
        problems.append("years in language exceed total years")
    for name in (
        "total_vulnerabilities",
        "software_count",
        "software_count_same_language",
        "years_in_language",
        "years_total",
    ):
        if getattr(history, name) < 0:
            problems.append(f"negative {name}")
    return problems


def validate_publisher_history(history: PublisherHistory) -> list[str]:
    problems = []
    if history.published_count < 0:
        problems.append("negative published_count")
    if history.years_publishing < 0:
        problems.append("negative years_publishing")
    return problems
