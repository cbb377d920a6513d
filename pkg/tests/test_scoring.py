from __future__ import annotations

import dataclasses
import math

import pytest

from conftest import NOW, reference_inputs, reference_record
from trustrisk.domain import (
    AssessmentConfig,
    Band,
    DeveloperHistory,
    MissingDataPolicy,
    PublisherHistory,
    WeightOverrides,
)
from trustrisk.scoring import (
    HistoryUnavailable,
    InvalidRecordError,
    SegmentInputs,
    SegmentUnavailable,
    apply_penalty,
    assess,
    band,
    code_dependency_risk,
    code_spec_risk,
    code_spec_weight,
    dependency_weight,
    developer_risk,
    developer_vuln_weight,
    final_risk,
    final_weights,
    language_experience_risk,
    language_expertise,
    language_weight,
    normalize_scores,
    penalty,
    publisher_risk,
    user_risk,
)


def dev(vulns=0, software=0, same=0, years_lang=0, years=0, name="d"):
    return DeveloperHistory(name, vulns, software, same, years_lang, years)


@pytest.mark.parametrize(
    "count, sensitivity, expected", [(28, 1, 28.0), (0, 1, 0.0), (10, 2.5, 25.0)]
)
def test_code_dependency_risk(count, sensitivity, expected):
    assert code_dependency_risk(count, sensitivity) == expected


def test_developer_vuln_weight_examples():
    assert developer_vuln_weight([dev(96912, 129)]) == pytest.approx(751.2558, abs=1e-3)
    assert developer_vuln_weight([dev(0, 17)]) == 0
    assert developer_vuln_weight([dev(10, 5), dev(2, 3)]) == 1.5


@pytest.mark.parametrize("histories", [[], [dev(5, 0)], [dev(0, 0), dev(3, 0)]])
def test_developer_vuln_weight_unavailable(histories):
    with pytest.raises(HistoryUnavailable):
        developer_vuln_weight(histories)


def test_code_spec_risk():
    assert code_spec_risk(751.2558, 304) == pytest.approx(228381.8, abs=0.5)
    assert code_spec_risk(0, 500) == 0
    assert code_spec_risk(1.5, 40) == 60


def test_language_experience_risk():
    assert language_experience_risk([dev(years_lang=2, years=2)]) == 0
    assert language_experience_risk([dev()]) == 1
    assert language_experience_risk([]) == 1
    assert language_experience_risk([dev(years_lang=1, years=4), dev(years_lang=2, years=8)]) == 0.75


def test_language_expertise():
    assert language_expertise([dev(software=129, same=33)]) == pytest.approx(0.255814, abs=1e-6)
    assert language_expertise([dev(software=9, same=9)]) == 1
    assert language_expertise([dev(software=20, same=5), dev(software=10, same=0)]) == pytest.approx(
        5 / 30, abs=1e-6
    )
    with pytest.raises(HistoryUnavailable):
        language_expertise([dev()])


def test_dependency_weight():
    assert dependency_weight(0.99) == pytest.approx(0.01, abs=1e-15)
    assert dependency_weight(1) == 0
    assert dependency_weight(0) == 1


def test_code_spec_weight():
    assert code_spec_weight(0.255814) == pytest.approx(0.77428, abs=1e-5)
    assert code_spec_weight(0) == 1
    assert code_spec_weight(1) == pytest.approx(0.367879, abs=1e-6)


def test_language_weight():
    assert language_weight(0.01, 0.77428) == pytest.approx(0.21572, abs=1e-4)
    assert language_weight(0.5, 0.5) == 0
    assert language_weight(1, 1) == 1


def test_developer_risk():
    wcd = 1 - 0.99
    wcs = math.exp(-33 / 129)
    wpl = abs(1 - (wcd + wcs))
    rcs = 96912 / 129 * 304
    # full precision; 176831.46 is what rounded intermediates give
    assert developer_risk(28, rcs, 0, wcd, wcs, wpl) == pytest.approx(176833.087, abs=1e-3)
    assert developer_risk(0, 0, 0, 0.2, 0.3, 0.5) == 0
    assert developer_risk(10, 20, 30, 0.2, 0.3, 0.5) == pytest.approx(23)


def test_publisher_risk():
    assert publisher_risk([PublisherHistory("Z", 123, 2)], 0.08424) == pytest.approx(0.1930, abs=1e-4)
    assert publisher_risk([PublisherHistory("new", 0, 0)], 0.5) == 1
    assert publisher_risk([PublisherHistory("p", 10, 5)], 1) == 0.5
    assert publisher_risk([PublisherHistory("p", 10, 5)], None) == 1
    assert publisher_risk([PublisherHistory("p", 10, 5)], 0) == 1
    assert publisher_risk([], 0.3) == 1


def test_publisher_risk_zero_years_is_new_publisher():
    assert publisher_risk([PublisherHistory("p", 4, 0)], 0.5) == 1


def test_publisher_risk_sums_over_publishers():
    pubs = [PublisherHistory("a", 6, 2), PublisherHistory("b", 4, 3)]
    assert publisher_risk(pubs, 0.5) == pytest.approx(5 / 10 / 0.5)


def test_user_risk():
    assert user_risk(7153, 20455) == pytest.approx(0.6503, abs=1e-4)
    assert user_risk(40, 40) == 0
    assert user_risk(0, 100) == 1
    with pytest.raises(HistoryUnavailable):
        user_risk(0, 0)


def test_penalty():
    assert penalty(0.2, 0.017867) == pytest.approx(0.0283, abs=5e-4)
    for ctx in (0.2, 0.3, 0.5):
        assert penalty(ctx, 0) == 0
    assert penalty(0.5, 1) == 0.5


def test_final_weights_reference():
    w_dev, w_pb, w_ur = final_weights(2003, 135, 7421)
    assert w_dev == pytest.approx(1 / 2003, abs=1e-9)
    assert w_pb == pytest.approx(0.017994, abs=1e-6)
    assert w_ur == pytest.approx(0.981507, abs=1e-6)


def test_final_weights_no_forks_clamps_user_weight():
    w_dev, w_pb, w_ur = final_weights(0, 0, 0)
    # raw (1, 1/2) renormalized to (2/3, 1/3)
    assert w_ur == 0
    assert w_dev == pytest.approx(2 / 3)
    assert w_pb == pytest.approx(1 / 3)
    assert w_dev + w_pb + w_ur == pytest.approx(1, abs=1e-12)


def test_final_weights_raw_values():
    assert final_weights(0, 5, 5)[0] > final_weights(0, 5, 5)[1]
    assert final_weights(4, 0, 0) == (0.25, 0.5, 0.25)


def test_final_risk():
    assert final_risk(0, 0, 0, 1, 0, 0) == pytest.approx(1 / (1 + math.e**4))
    assert final_risk(100, 0, 0, 1, 0, 0) == 0.5
    assert final_risk(1e6, 0, 0, 1, 0, 0) < 1


def test_final_risk_custom_constants():
    assert final_risk(50, 0, 0, 1, 0, 0, shift=2, scale=0.04) == 0.5


def test_apply_penalty():
    assert apply_penalty(0.3755, 0.0283, 0.5) == 0.3755
    assert apply_penalty(0.6, 0.1, 0.5) == pytest.approx(0.7)
    assert apply_penalty(0.95, 0.1, 0.5) == 1


def test_apply_penalty_saturates_below_threshold_when_penalty_is_large():
    # second case of the piecewise rule has no threshold condition
    assert apply_penalty(0.3, 0.8, 0.5) == 1


@pytest.mark.parametrize(
    "score, expected",
    [
        (0.37, Band.MODERATE),
        (0.21, Band.LOW),
        (0.82, Band.CRITICAL),
        (0.25, Band.MODERATE),
        (0.75, Band.CRITICAL),
        (0.5, Band.HIGH),
        (0.0, Band.LOW),
        (1.0, Band.CRITICAL),
    ],
)
def test_band(score, expected):
    assert band(score) is expected


def test_band_custom_thresholds():
    assert band(0.3, (0.1, 0.2, 0.9)) is Band.HIGH


def test_normalize_scores():
    assert normalize_scores([2, 4, 6]) == [0, 0.5, 1]
    assert normalize_scores([5]) == [0]
    assert normalize_scores([0, 0.3, 1]) == [0, 0.3, 1]
    with pytest.raises(ValueError):
        normalize_scores([])


# --- assess ---------------------------------------------------------------


def test_assess_reference(config):
    b = assess(reference_inputs(), config, NOW)
    assert b.band is Band.MODERATE
    assert b.final_risk_penalized == b.final_risk
    assert 0.37 <= b.final_risk <= 0.40
    assert b.segment_defaulted == frozenset()
    assert b.assessed_at == NOW


def test_assess_without_developer_history(config):
    inputs = dataclasses.replace(reference_inputs(), developer_histories=())
    b = assess(inputs, config, NOW)
    assert b.r_dev == 1
    assert b.segment_defaulted == {"developer"}
    assert b.r_cs is None and b.w_lc is None


def test_assess_without_publisher_history(config):
    inputs = dataclasses.replace(reference_inputs(), publisher_histories=())
    b = assess(inputs, config, NOW)
    assert b.r_pb == 1
    assert b.segment_defaulted == {"publisher"}


def test_assess_zero_downloads_defaults_user_segment(config):
    b = assess(reference_inputs(downloads=0, rating_count=0), config, NOW)
    assert b.r_ur == 1
    assert "user" in b.segment_defaulted


def test_assess_five_blank_fields(config):
    inputs = reference_inputs(
        dependency_count=None,
        rating_count=None,
        code_coverage=None,
        language=None,
        year=None,
    )
    b = assess(inputs, config, NOW)
    assert b.segment_defaulted == frozenset()
    assert b.r_cd == 0
    assert b.w_cd == 1
    assert b.r_ur == 1
    assert 0 < b.final_risk < 1


def test_assess_blank_context_uses_strictest(config):
    b = assess(reference_inputs(context=None), config, NOW)
    assert b.context == 0.2


def test_assess_rejects_hard_errors(config):
    with pytest.raises(InvalidRecordError) as info:
        assess(reference_inputs(code_coverage=1.3), config, NOW)
    assert [v.message for v in info.value.violations] == ["coverage out of range"]


def test_assess_weight_overrides():
    cfg = AssessmentConfig(weight_overrides=WeightOverrides(0.2, 0.3, 0.5))
    b = assess(reference_inputs(), cfg, NOW)
    assert (b.w_dev, b.w_pb, b.w_ur) == (0.2, 0.3, 0.5)


def test_assess_sensitivity_scales_dependency_risk():
    b = assess(reference_inputs(), AssessmentConfig(dependency_sensitivity=3), NOW)
    assert b.r_cd == 84


def test_assess_strict_policy_raises():
    cfg = AssessmentConfig(missing_data_policy=MissingDataPolicy(default_segments=False))
    inputs = dataclasses.replace(reference_inputs(), developer_histories=())
    with pytest.raises(SegmentUnavailable) as info:
        assess(inputs, cfg, NOW)
    assert info.value.segment == "developer"


def test_assess_no_zero_fill_policy_defaults_segment():
    cfg = AssessmentConfig(missing_data_policy=MissingDataPolicy(zero_missing_parameters=False))
    b = assess(reference_inputs(code_length=None), cfg, NOW)
    assert b.segment_defaulted == {"developer"}
    assert b.r_dev == 1


def test_assess_multiple_developers_sum_histories(config):
    devs = (dev(10, 5, 2, 1, 3, "a"), dev(2, 3, 1, 2, 5, "b"))
    inputs = SegmentInputs(reference_record(developer_ids=("a", "b")), devs, reference_inputs().publisher_histories)
    b = assess(inputs, config, NOW)
    assert b.w_lc == 1.5
    assert b.expertise == 3 / 8
    assert b.r_pl == 1 - 3 / 8


def test_assess_is_deterministic(config):
    assert assess(reference_inputs(), config, NOW) == assess(reference_inputs(), config, NOW)
