"""Calibrated absolute distances from relative depth maps.

A depth network scores every pixel with a relative value; a linear map
``distance = m * score + s`` turns a normalized per-object score into meters
once ``(m, s)`` have been calibrated against known distances. This module
covers the whole lifecycle:

* collapsing a box's pixel scores to one representative score
  (:func:`normalize_region`),
* fitting and selecting the ``(m, s)`` coefficients
  (:func:`fit_coefficients`, :func:`select_calibration_pair`),
* temporal smoothing (:func:`smooth_scores`),
* online drift detection against a trusted per-frame distance
  (:func:`detect_drift`) and weighted recalibration (:func:`recalibrate`),
* the per-frame driver tying it together (:func:`step`).

Everything except :class:`RecalibrationState` is pure and freely concurrent;
a state instance belongs to exactly one stream and one writer at a time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .common import (
    DegenerateGeometryError,
    DistanceEstimate,
    DomainError,
    EmptyInputError,
    MissingDataError,
    NoPixelsError,
    NotReadyError,
    SingularFitError,
    linear_quantile,
    mean_exact,
    round_half_away,
)
from .geometry import BoundingBox, Detection, scale_bbox

CENTER = "center"
FIVE_POINT_UNIFORM = "five_point_uniform"
FIVE_POINT_CENTER_WEIGHTED = "five_point_center_weighted"
DISC_CENTER = "disc_center"
CENTER_RING = "center_ring"
LOW_THRESHOLD = "low_threshold"
MEDIAN = "median"
MEAN = "mean"

METHOD_KINDS = (
    CENTER,
    FIVE_POINT_UNIFORM,
    FIVE_POINT_CENTER_WEIGHTED,
    DISC_CENTER,
    CENTER_RING,
    LOW_THRESHOLD,
    MEDIAN,
    MEAN,
)

PROVENANCE_STATIC = "static"
PROVENANCE_RECALIBRATED = "recalibrated"


class DepthMap:
    """Per-pixel relative depth scores for one frame.

    Scores are stored as an immutable float32 array of shape
    ``(height, width)``, row major, top row first. All statistics are
    computed in float64.
    """

    def __init__(self, scores):
        arr = np.asarray(scores, dtype=np.float32)
        if arr.ndim != 2:
            raise DomainError(f"depth map must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise DomainError("depth map must not be empty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("depth map contains non-finite scores")
        arr = arr.copy()
        arr.setflags(write=False)
        self._scores = arr

    @classmethod
    def from_flat(cls, width: int, height: int, flat) -> "DepthMap":
        arr = np.asarray(flat, dtype=np.float32)
        if arr.size != width * height:
            raise DomainError(
                f"expected {width * height} scores for {width}x{height}, got {arr.size}"
            )
        return cls(arr.reshape(height, width))

    @property
    def scores(self) -> np.ndarray:
        return self._scores

    @property
    def width(self) -> int:
        return self._scores.shape[1]

    @property
    def height(self) -> int:
        return self._scores.shape[0]


@dataclass(frozen=True)
class NormalizationMethod:
    """Rule collapsing a box's pixel scores to one representative score.

    ``lt_take`` selects which score tail counts as nearest for the
    low-threshold method: "lowest" for score maps where small values are
    near (the default), "highest" for inverted maps.
    """

    kind: str = LOW_THRESHOLD
    diameter_px: int = 40
    lt_percentile: float = 10.0
    center_weight: float = 0.5
    lt_take: str = "lowest"

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise DomainError(f"unknown normalization method {self.kind!r}")
        if not 0 < self.lt_percentile <= 100:
            raise DomainError(f"percentile {self.lt_percentile} outside (0, 100]")
        if self.diameter_px < 1:
            raise DomainError(f"diameter {self.diameter_px} must be >= 1 px")
        if not 0.0 <= self.center_weight <= 1.0:
            raise DomainError(f"center weight {self.center_weight} outside [0, 1]")
        if self.lt_take not in ("lowest", "highest"):
            raise DomainError(f"lt_take must be 'lowest' or 'highest', got {self.lt_take!r}")


def _pixel_value(region: np.ndarray, x: float, y: float, c0: int, r0: int) -> float:
    """Score of the pixel containing the continuous point (x, y), clamped to the region."""
    col = min(max(int(math.floor(x)) - c0, 0), region.shape[1] - 1)
    row = min(max(int(math.floor(y)) - r0, 0), region.shape[0] - 1)
    return float(region[row, col])


def normalize_region(
    depth_map: DepthMap, bbox: BoundingBox, method: NormalizationMethod
) -> float:
    """Collapse a box's pixel scores to one representative score.

    The box must already be expressed in the depth map's resolution (use
    :func:`monorange.geometry.scale_bbox` when it came from the detector).
    A pixel belongs to the box when its index range intersects the box's
    continuous extent; disc and ring membership use pixel centers.
    """
    if bbox.resolution_w != depth_map.width or bbox.resolution_h != depth_map.height:
        raise DomainError(
            f"box resolution {bbox.resolution_w}x{bbox.resolution_h} does not match "
            f"depth map {depth_map.width}x{depth_map.height}; scale the box first"
        )
    c0 = max(0, int(math.floor(bbox.x_min)))
    c1 = min(depth_map.width, int(math.ceil(bbox.x_max)))
    r0 = max(0, int(math.floor(bbox.y_min)))
    r1 = min(depth_map.height, int(math.ceil(bbox.y_max)))
    if c1 <= c0 or r1 <= r0:
        raise NoPixelsError(f"box {bbox} covers no depth-map pixels")
    region = depth_map.scores[r0:r1, c0:c1].astype(np.float64)

    kind = method.kind
    cx, cy = bbox.center

    if kind == CENTER:
        return _pixel_value(region, cx, cy, c0, r0)

    if kind in (FIVE_POINT_UNIFORM, FIVE_POINT_CENTER_WEIGHTED):
        w4 = bbox.width_px / 4.0
        h4 = bbox.height_px / 4.0
        points = [
            (cx, cy),
            (bbox.x_min + w4, bbox.y_min + h4),
            (bbox.x_max - w4, bbox.y_min + h4),
            (bbox.x_min + w4, bbox.y_max - h4),
            (bbox.x_max - w4, bbox.y_max - h4),
        ]
        values = [_pixel_value(region, x, y, c0, r0) for x, y in points]
        if kind == FIVE_POINT_UNIFORM:
            return mean_exact(values)
        # center_weight to the center pixel, the rest shared by the quadrants
        w_c = method.center_weight
        return w_c * values[0] + (1.0 - w_c) * mean_exact(values[1:])

    if kind in (DISC_CENTER, CENTER_RING):
        radius = method.diameter_px / 2.0
        rows = np.arange(r0, r1, dtype=np.float64) + 0.5
        cols = np.arange(c0, c1, dtype=np.float64) + 0.5
        dist = np.hypot(cols[np.newaxis, :] - cx, rows[:, np.newaxis] - cy)
        if kind == DISC_CENTER:
            mask = dist <= radius
        else:
            mask = np.abs(dist - radius) <= 0.5
        picked = region[mask]
        if picked.size == 0:
            raise DegenerateGeometryError(
                f"{kind} of diameter {method.diameter_px} px has no pixels inside the box"
            )
        return mean_exact(picked.tolist())

    flat = np.sort(region, axis=None)
    n = flat.size
    if kind == LOW_THRESHOLD:
        k = int(math.ceil(method.lt_percentile / 100.0 * n))
        k = min(max(k, 1), n)
        tail = flat[:k] if method.lt_take == "lowest" else flat[n - k :]
        return math.fsum(tail.tolist()) / k
    if kind == MEDIAN:
        return linear_quantile(flat, 0.5)
    # MEAN
    return math.fsum(flat.tolist()) / n


@dataclass(frozen=True)
class DepthCoefficients:
    """Scale/shift pair mapping a normalized score to meters."""

    m: float
    s: float
    provenance: str = PROVENANCE_STATIC
    fitted_pair: tuple[float, float] | str | None = None
    sample_count: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.m) or self.m == 0.0:
            raise DomainError(f"scale coefficient must be finite and nonzero, got {self.m}")
        if not math.isfinite(self.s):
            raise DomainError(f"shift coefficient must be finite, got {self.s}")
        if self.provenance not in (PROVENANCE_STATIC, PROVENANCE_RECALIBRATED):
            raise DomainError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class CalibrationSample:
    """One (normalized score, measured distance) observation."""

    normalized_score: float
    true_distance_m: float

    def __post_init__(self):
        if not self.true_distance_m > 0:
            raise DomainError(f"true distance must be positive, got {self.true_distance_m}")


def _fit_line(scores: Sequence[float], distances: Sequence[float]) -> tuple[float, float]:
    """Least-squares line distance = m * score + s via exact centered sums."""
    n = len(scores)
    x_bar = math.fsum(scores) / n
    y_bar = math.fsum(distances) / n
    sxx = math.fsum((x - x_bar) ** 2 for x in scores)
    if sxx == 0.0:
        raise SingularFitError("all scores identical; cannot fit a line")
    sxy = math.fsum((x - x_bar) * (y - y_bar) for x, y in zip(scores, distances))
    m = sxy / sxx
    if m == 0.0:
        raise SingularFitError("fitted slope is zero; distances do not vary with score")
    return m, y_bar - m * x_bar


def fit_coefficients(samples: Sequence[CalibrationSample]) -> DepthCoefficients:
    """Least-squares fit of the score-to-distance line over calibration samples."""
    if len(samples) < 2:
        raise EmptyInputError(f"need at least 2 calibration samples, got {len(samples)}")
    m, s = _fit_line(
        [smp.normalized_score for smp in samples],
        [smp.true_distance_m for smp in samples],
    )
    return DepthCoefficients(m=m, s=s, provenance=PROVENANCE_STATIC, sample_count=len(samples))


def estimate_distance_depth(score: float, coeffs: DepthCoefficients) -> DistanceEstimate:
    """Apply the calibrated line; negative results are flagged out-of-domain."""
    value = coeffs.m * score + coeffs.s
    return DistanceEstimate(value_m=float(value), out_of_domain=value < 0.0)


def select_calibration_pair(
    videos: Mapping[float, Sequence[float]],
    candidate_pairs: Sequence[tuple[float, float]],
) -> tuple[tuple[float, float], DepthCoefficients]:
    """Pick the calibration distance pair that validates best.

    For each candidate pair the per-frame two-point lines are solved and their
    median ``(m, s)`` taken; candidates are ranked by the sum over all
    distances in ``videos`` of the absolute per-distance median signed error,
    ties broken by the magnitudes of the summed positive and negative median
    errors. The first minimal candidate wins remaining ties.
    """
    if not candidate_pairs:
        raise EmptyInputError("no candidate pairs to select from")
    best_key = None
    best_pair = None
    best_coeffs = None
    for pair in candidate_pairs:
        d1, d2 = float(pair[0]), float(pair[1])
        if d1 not in videos or d2 not in videos:
            raise MissingDataError(f"no frames recorded at both distances of pair {pair}")
        scores_1 = videos[d1]
        scores_2 = videos[d2]
        slopes = []
        shifts = []
        for a, b in zip(scores_1, scores_2):
            if b == a:
                continue  # this frame pair cannot pin a line
            m = (d2 - d1) / (b - a)
            slopes.append(m)
            shifts.append(d1 - m * a)
        if not slopes:
            raise SingularFitError(f"pair {pair}: every frame pair has identical scores")
        m_med = linear_quantile(sorted(slopes), 0.5)
        s_med = linear_quantile(sorted(shifts), 0.5)

        median_errors = []
        for dist, frame_scores in sorted(videos.items()):
            errors = sorted(dist - (m_med * sc + s_med) for sc in frame_scores)
            median_errors.append(linear_quantile(errors, 0.5))
        primary = math.fsum(abs(e) for e in median_errors)
        positive = math.fsum(e for e in median_errors if e > 0)
        negative = math.fsum(e for e in median_errors if e < 0)
        key = (primary, abs(positive) + abs(negative))
        if best_key is None or key < best_key:
            best_key = key
            best_pair = (d1, d2)
            best_coeffs = DepthCoefficients(
                m=m_med,
                s=s_med,
                provenance=PROVENANCE_STATIC,
                fitted_pair=(d1, d2),
                sample_count=len(slopes),
            )
    return best_pair, best_coeffs


def smooth_scores(history: Sequence[float]) -> float:
    """Mean of the scores seen so far in a sliding window (partial windows allowed)."""
    if len(history) == 0:
        raise EmptyInputError("cannot smooth an empty history")
    return mean_exact(history)


class ScoreSmoother:
    """Sliding-window mean over the last ``window`` scores of one tracked object."""

    def __init__(self, window: int = 5):
        if window < 1:
            raise DomainError(f"window must be >= 1, got {window}")
        self._history: deque[float] = deque(maxlen=window)

    def push(self, score: float) -> float:
        self._history.append(float(score))
        return smooth_scores(list(self._history))


@dataclass(frozen=True)
class RecalibrationConfig:
    """Windows, thresholds and weights for online drift handling.

    ``w`` counts once-per-second samples in the detection window; ``w_prime_s``
    seconds of full-rate frames feed the recalibration buffer; ``alpha`` is the
    weight kept on the offline calibration set; drift triggers when the mean
    absolute disagreement exceeds ``tau_m``.
    """

    w: int = 5
    w_prime_s: float = 5.0
    fps: int = 30
    alpha: float = 0.75
    tau_m: float = 0.30
    n_o: int = 20

    def __post_init__(self):
        if self.w < 1:
            raise DomainError(f"detection window must be >= 1, got {self.w}")
        if not self.w_prime_s > 0:
            raise DomainError(f"train window must be positive, got {self.w_prime_s}")
        if self.fps < 1:
            raise DomainError(f"fps must be >= 1, got {self.fps}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha {self.alpha} outside (0, 1)")
        if not self.tau_m > 0:
            raise DomainError(f"drift threshold must be positive, got {self.tau_m}")
        if self.n_o < 2:
            raise DomainError(f"need at least 2 offline samples, got {self.n_o}")
        if self.n_new > self.train_buffer_capacity:
            raise DomainError(
                f"recalibration needs {self.n_new} recent samples but the train "
                f"buffer only holds {self.train_buffer_capacity}"
            )

    @property
    def n_new(self) -> int:
        """Number of recent samples mixed into a recalibration fit.

        ``(1 - alpha) / alpha * n_o`` rounded half away from zero, at least 1.
        """
        return max(1, round_half_away((1.0 - self.alpha) / self.alpha * self.n_o))

    @property
    def warmup_samples(self) -> int:
        """Once-per-second samples that must accumulate before detection may fire."""
        return max(5, self.w)

    @property
    def train_buffer_capacity(self) -> int:
        return int(round(self.w_prime_s * self.fps))


class RecalibrationState:
    """Sliding-window buffers driving drift detection for one stream.

    Single-writer: one stream owns one state. ``R`` holds trusted distances
    and ``D`` the depth-based estimates, both sampled once per wall-clock
    second; ``T`` holds (score, trusted distance) pairs at full frame rate.
    All buffer writes stop while a detection is latched (``flag``) and resume
    after recalibration clears it.
    """

    def __init__(
        self,
        config: RecalibrationConfig,
        original_samples: Iterable[CalibrationSample],
        seed: int = 0,
    ):
        samples = tuple(original_samples)
        if len(samples) != config.n_o:
            raise DomainError(
                f"config declares n_o={config.n_o} offline samples, got {len(samples)}"
            )
        self.R: deque[float] = deque(maxlen=config.w)
        self.D: deque[float] = deque(maxlen=config.w)
        self.T: deque[CalibrationSample] = deque(maxlen=config.train_buffer_capacity)
        self.flag = False
        self.original_samples = samples
        self.seconds_seen = 0
        self.recalibration_count = 0
        self._last_second: int | None = None
        self._rng = np.random.default_rng(seed)


def detect_drift(state: RecalibrationState, config: RecalibrationConfig) -> bool:
    """True (and latches the flag) when the windowed mean absolute error exceeds tau.

    Never fires during warm-up or before both one-per-second buffers are full;
    the comparison is strict, so a mean exactly at tau does not trigger.
    """
    if state.seconds_seen < config.warmup_samples:
        return False
    if len(state.R) < config.w or len(state.D) < config.w:
        return False
    mean_abs = math.fsum(abs(r - d) for r, d in zip(state.R, state.D)) / config.w
    if mean_abs > config.tau_m:
        state.flag = True
        return True
    return False


def recalibrate(state: RecalibrationState, config: RecalibrationConfig) -> DepthCoefficients:
    """Refit the score-to-distance line after a latched drift detection.

    Draws ``config.n_new`` samples uniformly at random (seeded, without
    replacement) from the recent-frame buffer, fits over the offline samples
    plus the drawn ones, clears the flag, and resets the per-second buffers so
    detection restarts against estimates made with the new coefficients. The
    offline sample set itself is never mutated.

    Raises:
        NotReadyError: the recent-frame buffer holds fewer than ``n_new``
            entries; the detection stays latched.
    """
    if not state.flag:
        raise DomainError("recalibrate requires a latched drift detection")
    n_new = config.n_new
    if len(state.T) < n_new:
        raise NotReadyError(
            f"train buffer holds {len(state.T)} samples, need {n_new}"
        )
    snapshot = list(state.T)
    picked_idx = state._rng.choice(len(snapshot), size=n_new, replace=False)
    drawn = [snapshot[i] for i in picked_idx]
    fit_set = list(state.original_samples) + drawn
    m, s = _fit_line(
        [smp.normalized_score for smp in fit_set],
        [smp.true_distance_m for smp in fit_set],
    )
    state.recalibration_count += 1
    state.flag = False
    state.R.clear()
    state.D.clear()
    return DepthCoefficients(
        m=m,
        s=s,
        provenance=PROVENANCE_RECALIBRATED,
        fitted_pair=f"recalibration-{state.recalibration_count}",
        sample_count=len(fit_set),
    )


@dataclass(frozen=True)
class FrameObservation:
    """One frame's detections plus its depth map and capture time."""

    detections: tuple[Detection, ...]
    depth_map: DepthMap
    timestamp_s: float


@dataclass(frozen=True)
class ObjectEstimate:
    detection: Detection
    score: float
    distance: DistanceEstimate


@dataclass(frozen=True)
class StepResult:
    timestamp_s: float
    vip_distance: DistanceEstimate | None
    estimates: tuple[ObjectEstimate, ...]
    coeffs: DepthCoefficients
    drift_detected: bool
    recalibrated: bool
    warning: str | None = None


def step(
    frame: FrameObservation,
    vip_truth: DistanceEstimate | float | None,
    state: RecalibrationState,
    config: RecalibrationConfig,
    coeffs: DepthCoefficients,
    method: NormalizationMethod | None = None,
    smoother: ScoreSmoother | None = None,
) -> StepResult:
    """Process one frame: update buffers, detect drift, recalibrate, estimate.

    ``vip_truth`` is the trusted distance to the followed person for this
    frame (typically the regression estimate). Frames without a usable truth
    or without a detected person leave every buffer untouched and reuse the
    current coefficients; truths flagged out-of-domain (person bending,
    sitting, ...) are likewise excluded. The once-per-second cadence is driven
    by timestamps: the first frame of each wall-clock second feeds the
    detection window.

    All objects in the frame are estimated with the coefficients current at
    the end of the step, so a recalibration applies from its own frame onward.
    """
    if method is None:
        method = NormalizationMethod()
    vips = [d for d in frame.detections if d.is_vip]
    if len(vips) > 1:
        raise DomainError(f"{len(vips)} detections flagged as the followed person; expected one")

    if vip_truth is None:
        truth = None
    elif isinstance(vip_truth, DistanceEstimate):
        truth = vip_truth
    else:
        value = float(vip_truth)
        truth = DistanceEstimate(value_m=value, out_of_domain=value <= 0.0)

    depth_map = frame.depth_map
    scores: list[float] = []
    for det in frame.detections:
        scaled = scale_bbox(det.bbox, depth_map.width, depth_map.height)
        score = normalize_region(depth_map, scaled, method)
        if det.is_vip and smoother is not None:
            score = smoother.push(score)
        scores.append(score)

    warning = None
    drift_detected = False
    recalibrated = False
    if not vips:
        warning = "no-vip-detection"
    else:
        vip_idx = next(i for i, det in enumerate(frame.detections) if det.is_vip)
        vip_score = scores[vip_idx]
        if truth is None:
            warning = "no-vip-truth"
        elif truth.out_of_domain:
            warning = "vip-truth-out-of-domain"
        elif not state.flag:
            state.T.append(CalibrationSample(vip_score, truth.value_m))
            second = int(math.floor(frame.timestamp_s))
            if state._last_second is None or second > state._last_second:
                state.R.append(truth.value_m)
                state.D.append(coeffs.m * vip_score + coeffs.s)
                state.seconds_seen += 1
                state._last_second = second

        was_flagged = state.flag
        detect_drift(state, config)
        drift_detected = state.flag and not was_flagged
        if state.flag:
            try:
                coeffs = recalibrate(state, config)
                recalibrated = True
            except NotReadyError:
                warning = "recalibration-not-ready"

    estimates = tuple(
        ObjectEstimate(
            detection=det,
            score=scores[i],
            distance=estimate_distance_depth(scores[i], coeffs),
        )
        for i, det in enumerate(frame.detections)
    )
    vip_distance = None
    if vips:
        vip_idx = next(i for i, det in enumerate(frame.detections) if det.is_vip)
        vip_distance = estimates[vip_idx].distance
    return StepResult(
        timestamp_s=frame.timestamp_s,
        vip_distance=vip_distance,
        estimates=estimates,
        coeffs=coeffs,
        drift_detected=drift_detected,
        recalibrated=recalibrated,
        warning=warning,
    )
