"""Trust-based security risk scoring for software records."""

from trustrisk.domain import (
    AssessmentConfig,
    Band,
    DeveloperHistory,
    MissingDataPolicy,
    PublisherHistory,
    RiskBreakdown,
    SoftwareRecord,
    WeightOverrides,
    validate_record,
)
from trustrisk.scoring import SegmentInputs, assess

__all__ = [
    "AssessmentConfig",
    "Band",
    "DeveloperHistory",
    "MissingDataPolicy",
    "PublisherHistory",
    "RiskBreakdown",
    "SegmentInputs",
    "SoftwareRecord",
    "WeightOverrides",
    "assess",
    "validate_record",
]
