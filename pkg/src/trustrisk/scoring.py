"""Risk formulas and the end-to-end assessment pipeline.

Every function here is pure. ``assess`` chains them: three actor segments
(developer, publisher, user), data-driven weights, a context-driven penalty,
a shifted sigmoid and banding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Sequence

from trustrisk.domain import (
    AssessmentConfig,
    Band,
    DeveloperHistory,
    PublisherHistory,
    RiskBreakdown,
    SoftwareRecord,
    Violation,
    validate_record,
)

# Bounds that keep the sigmoid output strictly inside (0, 1) in doubles.
_SIGMOID_FLOOR = math.ulp(0.0)
_SIGMOID_CEIL = math.nextafter(1.0, 0.0)


class HistoryUnavailable(ValueError):
    """Raised when actor histories cannot support a ratio (zero denominator)."""


class SegmentUnavailable(RuntimeError):
    """Raised for an unevaluable segment when defaulting is disabled."""

    def __init__(self, segment: str, reason: str) -> None:
        super().__init__(f"{segment} segment unevaluable: {reason}")
        self.segment = segment
        self.reason = reason


class InvalidRecordError(ValueError):
    def __init__(self, software_id: str, violations: Sequence[Violation]) -> None:
        self.software_id = software_id
        self.violations = tuple(violations)
        detail = "; ".join(v.message for v in self.violations)
        super().__init__(f"record {software_id!r} has hard errors: {detail}")


@dataclass(frozen=True)
class SegmentInputs:
    record: SoftwareRecord
    developer_histories: tuple[DeveloperHistory, ...] = ()
    publisher_histories: tuple[PublisherHistory, ...] = ()


# --- developer segment -----------------------------------------------------


def code_dependency_risk(dependency_count: int, sensitivity: float = 1.0) -> float:
    return float(sensitivity * dependency_count)


def developer_vuln_weight(histories: Sequence[DeveloperHistory]) -> float:
    """Average number of vulnerabilities per software across the developers."""
    software = sum(h.software_count for h in histories)
    if software <= 0:
        raise HistoryUnavailable("developers have no previously developed software")
    return sum(h.total_vulnerabilities for h in histories) / software


def code_spec_risk(vuln_weight: float, code_length: int) -> float:
    return vuln_weight * code_length


def language_experience_risk(histories: Sequence[DeveloperHistory]) -> float:
    years_total = sum(h.years_total for h in histories)
    if years_total <= 0:
        return 1.0
    return 1.0 - sum(h.years_in_language for h in histories) / years_total


def language_expertise(histories: Sequence[DeveloperHistory]) -> float:
    software = sum(h.software_count for h in histories)
    if software <= 0:
        raise HistoryUnavailable("developers have no previously developed software")
    return sum(h.software_count_same_language for h in histories) / software


def dependency_weight(code_coverage: float) -> float:
    return 1.0 - code_coverage


def code_spec_weight(expertise: float) -> float:
    return math.exp(-expertise)


def language_weight(w_cd: float, w_cs: float) -> float:
    # Not renormalized: w_cd + w_cs > 1 pushes the developer weights above 1.
    return abs(1.0 - (w_cd + w_cs))


def developer_risk(
    r_cd: float, r_cs: float, r_pl: float, w_cd: float, w_cs: float, w_pl: float
) -> float:
    return w_cd * r_cd + w_cs * r_cs + w_pl * r_pl


# --- publisher and user segments -----------------------------------------


def publisher_risk(
    histories: Sequence[PublisherHistory], update_frequency: float | None
) -> float:
    """Publisher experience (years per published software) over update frequency.

    A new publisher (nothing published, or no years of activity) or a missing
    update frequency yields the maximum risk of 1.
    """
    published = sum(h.published_count for h in histories)
    years = sum(h.years_publishing for h in histories)
    if published <= 0 or years <= 0 or not update_frequency:
        return 1.0
    return (years / published) * (1.0 / update_frequency)


def user_risk(rating_count: int, downloads: int) -> float:
    if downloads <= 0:
        raise HistoryUnavailable("no downloads recorded")
    return 1.0 - rating_count / downloads


# --- penalty, weights, composition ---------------------------------------


def unresolved_proportion(unresolved: int | None, total: int | None) -> float:
    if not total:
        return 0.0
    return (unresolved or 0) / total


def penalty(context_weight: float, unresolved_share: float) -> float:
    if unresolved_share == 0:
        return 0.0
    return 1.0 - context_weight**unresolved_share


def final_weights(forks: int, unresolved: int, resolved: int) -> tuple[float, float, float]:
    """Developer, publisher and user weights, always on the unit simplex.

    The raw user weight ``1 - (w_dev + w_pb)`` goes negative for 0 or 1 forks;
    it is then clamped to 0 and the other two are rescaled to sum to 1.
    """
    w_dev = 1.0 / forks if forks > 0 else 1.0
    w_pb = (unresolved + 1) / (resolved + unresolved + 2)
    w_ur = 1.0 - (w_dev + w_pb)
    if w_ur < 0:
        total = w_dev + w_pb
        return w_dev / total, w_pb / total, 0.0
    return w_dev, w_pb, w_ur


def final_risk(
    r_dev: float,
    r_pb: float,
    r_ur: float,
    w_dev: float,
    w_pb: float,
    w_ur: float,
    shift: float = 4.0,
    scale: float = 0.04,
) -> float:
    weighted = w_dev * r_dev + w_pb * r_pb + w_ur * r_ur
    z = scale * weighted - shift
    if z >= 0:
        value = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        value = e / (1.0 + e)
    return min(max(value, _SIGMOID_FLOOR), _SIGMOID_CEIL)


def apply_penalty(final: float, pen: float, threshold: float = 0.5) -> float:
    if final > threshold:
        raised = final + pen
        return raised if raised < 1.0 else 1.0
    if final >= 1.0 - pen:
        return 1.0
    return final


def band(score: float, thresholds: Sequence[float] = (0.25, 0.5, 0.75)) -> Band:
    t1, t2, t3 = thresholds
    if score < t1:
        return Band.LOW
    if score < t2:
        return Band.MODERATE
    if score < t3:
        return Band.HIGH
    return Band.CRITICAL


def normalize_scores(scores: Sequence[float]) -> list[float]:
    """Min-max scale a set of scores onto [0, 1]; a constant set maps to zeros."""
    if not scores:
        raise ValueError("normalize_scores needs at least one score")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [0.0] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


# --- pipeline ------------------------------------------------------------

PINNABLE = ("r_dev", "r_pb", "r_ur", "context", "unresolved_proportion")


@dataclass
class _Developer:
    r_dev: float = 1.0
    r_cd: float | None = None
    r_cs: float | None = None
    r_pl: float | None = None
    w_lc: float | None = None
    w_cd: float | None = None
    w_cs: float | None = None
    w_pl: float | None = None
    expertise: float | None = None
    defaulted: bool = False
    reason: str = ""


def _param(value, name: str, missing: list[str]):
    if value is None:
        missing.append(name)
        return 0
    return value


def _developer_segment(inputs: SegmentInputs, config: AssessmentConfig) -> _Developer:
    record = inputs.record
    histories = inputs.developer_histories
    zero_missing = config.missing_data_policy.zero_missing_parameters
    if not histories:
        return _Developer(defaulted=True, reason="no developer history")
    missing: list[str] = []
    deps = _param(record.dependency_count, "dependency_count", missing)
    length = _param(record.code_length, "code_length", missing)
    coverage = _param(record.code_coverage, "code_coverage", missing)
    if missing and not zero_missing:
        return _Developer(defaulted=True, reason="missing " + ", ".join(missing))
    try:
        w_lc = developer_vuln_weight(histories)
        expertise = language_expertise(histories)
    except HistoryUnavailable as exc:
        return _Developer(defaulted=True, reason=str(exc))

    r_cd = code_dependency_risk(deps, config.dependency_sensitivity)
    r_cs = code_spec_risk(w_lc, length)
    r_pl = language_experience_risk(histories)
    w_cd = dependency_weight(coverage)
    w_cs = code_spec_weight(expertise)
    w_pl = language_weight(w_cd, w_cs)
    return _Developer(
        r_dev=developer_risk(r_cd, r_cs, r_pl, w_cd, w_cs, w_pl),
        r_cd=r_cd,
        r_cs=r_cs,
        r_pl=r_pl,
        w_lc=w_lc,
        w_cd=w_cd,
        w_cs=w_cs,
        w_pl=w_pl,
        expertise=expertise,
    )


def _publisher_segment(inputs: SegmentInputs, config: AssessmentConfig) -> tuple[float, str]:
    if not inputs.publisher_histories:
        return 1.0, "no publisher history"
    freq = inputs.record.update_frequency
    if freq is None and not config.missing_data_policy.zero_missing_parameters:
        return 1.0, "missing update_frequency"
    return publisher_risk(inputs.publisher_histories, freq), ""


def _user_segment(record: SoftwareRecord, config: AssessmentConfig) -> tuple[float, str]:
    if not record.downloads:
        return 1.0, "no downloads recorded"
    rating = record.rating_count
    if rating is None:
        if not config.missing_data_policy.zero_missing_parameters:
            return 1.0, "missing rating_count"
        rating = 0
    return user_risk(rating, record.downloads), ""


def assess_pinned(
    inputs: SegmentInputs,
    config: AssessmentConfig,
    now: datetime,
    pins: Mapping[str, float] | None = None,
    weights: tuple[float, float, float] | None = None,
) -> RiskBreakdown:
    """Assessment with selected intermediate quantities forced to given values.

    ``pins`` may fix any name in ``PINNABLE``; ``weights`` fixes the final
    weight triple, taking precedence over config overrides. Used by sweeps.
    """
    pins = dict(pins or {})
    unknown = set(pins) - set(PINNABLE)
    if unknown:
        raise KeyError(f"cannot pin {sorted(unknown)}; pinnable: {list(PINNABLE)}")
    record = inputs.record
    result = validate_record(record, config)
    if not result.ok:
        raise InvalidRecordError(record.software_id, result.errors)

    defaulted: set[str] = set()
    reasons: dict[str, str] = {}

    dev = _developer_segment(inputs, config)
    if dev.defaulted:
        defaulted.add("developer")
        reasons["developer"] = dev.reason
    r_pb, why_pb = _publisher_segment(inputs, config)
    if why_pb:
        defaulted.add("publisher")
        reasons["publisher"] = why_pb
    r_ur, why_ur = _user_segment(record, config)
    if why_ur:
        defaulted.add("user")
        reasons["user"] = why_ur

    if defaulted and not config.missing_data_policy.default_segments:
        segment = sorted(defaulted)[0]
        raise SegmentUnavailable(segment, reasons[segment])

    r_dev = pins.get("r_dev", dev.r_dev)
    r_pb = pins.get("r_pb", r_pb)
    r_ur = pins.get("r_ur", r_ur)

    unresolved = record.vulnerabilities_unresolved or 0
    if weights is not None:
        w_dev, w_pb, w_ur = weights
    elif config.weight_overrides is not None:
        w_dev, w_pb, w_ur = config.weight_overrides.as_tuple()
    else:
        w_dev, w_pb, w_ur = final_weights(
            record.forks or 0, unresolved, record.vulnerabilities_resolved
        )

    context = record.context if record.context is not None else config.strictest_context
    context = pins.get("context", context)
    share = pins.get(
        "unresolved_proportion",
        unresolved_proportion(record.vulnerabilities_unresolved, record.vulnerabilities_total),
    )
    pen = penalty(context, share)

    rf = final_risk(
        r_dev, r_pb, r_ur, w_dev, w_pb, w_ur, config.sigmoid_shift, config.sigmoid_scale
    )
    rfp = apply_penalty(rf, pen, config.penalty_threshold)
    return RiskBreakdown(
        software_id=record.software_id,
        assessed_at=now,
        r_cd=dev.r_cd,
        r_cs=dev.r_cs,
        r_pl=dev.r_pl,
        r_dev=r_dev,
        w_lc=dev.w_lc,
        w_cd=dev.w_cd,
        w_cs=dev.w_cs,
        w_pl=dev.w_pl,
        expertise=dev.expertise,
        r_pb=r_pb,
        r_ur=r_ur,
        w_dev=w_dev,
        w_pb=w_pb,
        w_ur=w_ur,
        context=context,
        unresolved_proportion=share,
        penalty=pen,
        final_risk=rf,
        final_risk_penalized=rfp,
        band=band(rfp, config.band_thresholds),
        segment_defaulted=frozenset(defaulted),
    )


def assess(inputs: SegmentInputs, config: AssessmentConfig, now: datetime) -> RiskBreakdown:
    """Run the full chain for one record.

    Raises ``InvalidRecordError`` when the record has hard validation errors,
    and ``SegmentUnavailable`` when a segment cannot be evaluated and the
    missing-data policy forbids defaulting it to maximum risk.
    """
    return assess_pinned(inputs, config, now)
