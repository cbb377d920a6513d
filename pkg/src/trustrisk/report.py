"""Breakdown serialization and parameter-sweep grids."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from trustrisk.domain import AssessmentConfig, Band, RiskBreakdown, SoftwareRecord
from trustrisk.scoring import PINNABLE, SegmentInputs, assess_pinned

SCHEMA_VERSION = "1"
SIGNIFICANT_DIGITS = 12

TABULAR_COLUMNS = (
    "Sample",
    "assessed_at",
    "segment_defaulted",
    "R_Dev",
    "R_Pb",
    "R_ur",
    "R_F",
    "R_FP",
    "Band",
)


def format_real(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Shortest decimal text for ``value`` at ``digits`` significant digits.

    Ties round half away from zero, applied to the value's shortest repr.
    """
    if math.isnan(value):
        return "nan"
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite value {value!r}")
    d = Decimal(repr(float(value)))
    if d.is_zero():
        return "0"
    quantum = Decimal(1).scaleb(d.adjusted() - digits + 1)
    d = d.quantize(quantum, rounding=ROUND_HALF_UP).normalize()
    if -7 <= d.adjusted() < 16:
        return format(d, "f")
    return str(d)


def _tabular_row(b: RiskBreakdown) -> list[str]:
    return [
        b.software_id,
        b.assessed_at.isoformat(),
        ";".join(sorted(b.segment_defaulted)),
        format_real(b.r_dev),
        format_real(b.r_pb),
        format_real(b.r_ur),
        format_real(b.final_risk),
        format_real(b.final_risk_penalized),
        b.band.label,
    ]


def breakdown_to_dict(b: RiskBreakdown) -> dict:
    data = {f.name: getattr(b, f.name) for f in dataclasses.fields(b)}
    data["assessed_at"] = b.assessed_at.isoformat()
    data["band"] = b.band.value
    data["segment_defaulted"] = sorted(b.segment_defaulted)
    return data


def breakdown_from_dict(data: Mapping) -> RiskBreakdown:
    values = dict(data)
    values["assessed_at"] = datetime.fromisoformat(values["assessed_at"])
    values["band"] = Band(values["band"])
    values["segment_defaulted"] = frozenset(values["segment_defaulted"])
    return RiskBreakdown(**values)


def emit_breakdowns(breakdowns: Sequence[RiskBreakdown], fmt: str = "csv") -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABULAR_COLUMNS)
        for b in breakdowns:
            writer.writerow(_tabular_row(b))
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "breakdowns": [breakdown_to_dict(b) for b in breakdowns],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'json'")


def parse_breakdowns(data: bytes | str) -> list[RiskBreakdown]:
    doc = json.loads(data)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return [breakdown_from_dict(item) for item in doc["breakdowns"]]


# --- sweeps ----------------------------------------------------------------

WEIGHT_PARAMETERS = ("w_dev", "w_pb", "w_ur")
RECORD_PARAMETERS = (
    "year",
    "update_frequency",
    "forks",
    "downloads",
    "vulnerabilities_unresolved",
    "vulnerabilities_total",
    "dependency_count",
    "rating_count",
    "code_coverage",
    "code_length",
)
_INTEGER_PARAMETERS = {
    "year",
    "forks",
    "downloads",
    "vulnerabilities_unresolved",
    "vulnerabilities_total",
    "dependency_count",
    "rating_count",
    "code_length",
}
SWEEPABLE = RECORD_PARAMETERS + WEIGHT_PARAMETERS + PINNABLE

OUTPUTS = tuple(
    f.name
    for f in dataclasses.fields(RiskBreakdown)
    if f.name not in {"software_id", "assessed_at", "band", "segment_defaulted"}
)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]

    @classmethod
    def from_range(cls, name: str, start: float, stop: float, step: float) -> "Axis":
        if step <= 0:
            raise GridError(f"axis {name!r}: step must be positive")
        if stop < start:
            raise GridError(f"axis {name!r}: empty range {start}..{stop}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(name, tuple(round(start + i * step, 12) for i in range(n)))


@dataclass(frozen=True)
class GridSpec:
    x: Axis
    y: Axis
    output: str = "final_risk_penalized"
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.x.values or not self.y.values:
            raise GridError("grid axes must be nonempty")
        if self.x.name == self.y.name:
            raise GridError("grid axes must name distinct parameters")
        for name in (self.x.name, self.y.name, *self.fixed):
            if name not in SWEEPABLE:
                raise GridError(f"unknown parameter {name!r}; sweepable: {', '.join(SWEEPABLE)}")
        if self.output not in OUTPUTS:
            raise GridError(f"unknown output {self.output!r}; choose from {', '.join(OUTPUTS)}")


@dataclass(frozen=True)
class GridResult:
    spec: GridSpec
    matrix: tuple[tuple[float, ...], ...]  # rows follow y, columns follow x


def _axis_from_json(data: Mapping) -> Axis:
    name = data["name"]
    if "values" in data:
        return Axis(name, tuple(float(v) for v in data["values"]))
    return Axis.from_range(name, float(data["start"]), float(data["stop"]), float(data["step"]))


def load_grid_spec(text: str) -> GridSpec:
    try:
        data = json.loads(text)
        return GridSpec(
            x=_axis_from_json(data["x"]),
            y=_axis_from_json(data["y"]),
            output=data.get("output", "final_risk_penalized"),
            fixed={k: float(v) for k, v in data.get("fixed", {}).items()},
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise GridError(f"malformed grid spec: {exc}") from None


def _integral(name: str, value: float) -> int:
    if not float(value).is_integer():
        raise GridError(f"{name} takes integer values, got {value!r}")
    return int(value)


def _cell(
    settings: Mapping[str, float],
    base: SegmentInputs,
    base_weights: tuple[float, float, float],
    config: AssessmentConfig,
    now: datetime,
    output: str,
) -> float:
    record_changes = {}
    pins = {}
    chosen_weights = {}
    for name, value in settings.items():
        if name in RECORD_PARAMETERS:
            record_changes[name] = _integral(name, value) if name in _INTEGER_PARAMETERS else value
        elif name in WEIGHT_PARAMETERS:
            chosen_weights[name] = value
        else:
            pins[name] = value

    weights = None
    if chosen_weights:
        weights = _fill_weights(chosen_weights, base_weights)
    record: SoftwareRecord = dataclasses.replace(base.record, **record_changes)
    inputs = dataclasses.replace(base, record=record)
    result = assess_pinned(inputs, config, now, pins=pins, weights=weights)
    value = getattr(result, output)
    return math.nan if value is None else float(value)


def _fill_weights(
    chosen: Mapping[str, float], base: tuple[float, float, float]
) -> tuple[float, float, float]:
    """Complete a partial weight assignment, keeping the triple on the simplex.

    Unassigned weights share the remaining mass in proportion to their base
    values (evenly if those are all zero).
    """
    for name, v in chosen.items():
        if not 0 <= v <= 1:
            raise GridError(f"{name} must lie in [0, 1], got {v!r}")
    taken = sum(chosen.values())
    if taken > 1 + 1e-9:
        raise GridError(f"swept weights sum to {taken!r} > 1")
    rest = max(0.0, 1.0 - taken)
    free = [n for n in WEIGHT_PARAMETERS if n not in chosen]
    base_map = dict(zip(WEIGHT_PARAMETERS, base))
    mass = sum(base_map[n] for n in free)
    out = dict(chosen)
    for n in free:
        out[n] = rest * base_map[n] / mass if mass > 0 else rest / len(free)
    return out["w_dev"], out["w_pb"], out["w_ur"]


def sweep_grid(
    spec: GridSpec,
    base_inputs: SegmentInputs,
    config: AssessmentConfig,
    now: datetime,
) -> GridResult:
    """Re-assess the base inputs at every (x, y) pair of the grid."""
    base = assess_pinned(base_inputs, config, now)
    base_weights = (base.w_dev, base.w_pb, base.w_ur)
    rows = []
    for yv in spec.y.values:
        row = []
        for xv in spec.x.values:
            settings = {**spec.fixed, spec.y.name: yv, spec.x.name: xv}
            row.append(_cell(settings, base_inputs, base_weights, config, now, spec.output))
        rows.append(tuple(row))
    return GridResult(spec, tuple(rows))


def emit_grid(result: GridResult) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([result.spec.output, *(format_real(v) for v in result.spec.x.values)])
    for yv, row in zip(result.spec.y.values, result.matrix):
        writer.writerow([format_real(yv), *(format_real(v) for v in row)])
    return buf.getvalue().encode("utf-8")


def parse_grid(data: bytes | str) -> tuple[str, list[float], list[float], list[list[float]]]:
    """Inverse of ``emit_grid``: (output name, x values, y values, matrix)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    rows = list(csv.reader(io.StringIO(data)))
    output, *xs = rows[0]
    ys = [float(r[0]) for r in rows[1:]]
    matrix = [[float(c) for c in r[1:]] for r in rows[1:]]
    return output, [float(x) for x in xs], ys, matrix
