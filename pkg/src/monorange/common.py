"""Shared exceptions, the flagged distance-estimate type, and small numeric helpers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class MonorangeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MonorangeError):
    """Input violates an operation's domain (out-of-frame point, bad height, ...)."""


class BehindCameraError(DomainError):
    """World point lies on or behind the camera plane (z <= 0)."""


class DegenerateBoxError(DomainError):
    """Bounding box has no usable pixel extent."""


class EmptyInputError(MonorangeError):
    """An operation that needs at least one element received none."""


class SingularFitError(MonorangeError):
    """Least-squares design is rank deficient; `columns` names the collinear features."""

    def __init__(self, message: str, columns: Iterable[str] = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class NoPixelsError(MonorangeError):
    """A region selection produced no pixels."""


class DegenerateGeometryError(MonorangeError):
    """A sampling pattern (disc/ring) has no pixels inside its box."""


class NotReadyError(MonorangeError):
    """Recalibration was requested before enough recent samples accumulated."""


class MissingDataError(MonorangeError):
    """A required input file or record is absent."""


class FormatError(MonorangeError):
    """A file does not conform to its declared format."""


class NeodMagicError(FormatError):
    """Depth-map file does not start with the NEOD magic bytes."""


class NeodTruncatedError(FormatError):
    """Depth-map file payload does not match the size its header promises."""


@dataclass(frozen=True)
class DistanceEstimate:
    """A distance in meters plus an out-of-domain warning flag.

    Linear estimators can extrapolate to non-physical distances; such values
    are returned as-is with the flag set rather than clamped or dropped.
    """

    value_m: float
    out_of_domain: bool = False


def mean_exact(values: Iterable[float]) -> float:
    """Arithmetic mean via exactly rounded summation (order independent)."""
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInputError("mean of an empty sequence")
    return math.fsum(vals) / len(vals)


def linear_quantile(sorted_values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation between order statistics.

    `sorted_values` must already be in ascending order; q is in [0, 1].
    """
    n = len(sorted_values)
    if n == 0:
        raise EmptyInputError("quantile of an empty sequence")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile fraction {q} outside [0, 1]")
    if n == 1:
        return float(sorted_values[0])
    pos = (n - 1) * q
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    a = float(sorted_values[lo])
    b = float(sorted_values[hi])
    return a + frac * (b - a)


def quartiles(values: Iterable[float]) -> tuple[float, float, float]:
    """(Q1, Q2, Q3) of `values` using linear interpolation between order statistics."""
    ordered = sorted(float(v) for v in values)
    if not ordered:
        raise EmptyInputError("quartiles of an empty sequence")
    return (
        linear_quantile(ordered, 0.25),
        linear_quantile(ordered, 0.50),
        linear_quantile(ordered, 0.75),
    )


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero (round() is banker's)."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def canonical_json(payload) -> str:
    """Stable JSON text (sorted keys, two-space indent, trailing newline).

    Used for every profile and stream record this package writes so that
    write -> read -> write round trips are byte-identical.
    """
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def canonical_jsonl_line(payload) -> str:
    """One-line stable JSON for stream records."""
    return json.dumps(payload, sort_keys=True, separators=(", ", ": ")) + "\n"
