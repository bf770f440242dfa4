"""Detection-orientation evaluation: matching, AOS, and error histograms.

Detections and ground truths are plain axis-aligned pixel boxes with a yaw
each.  Matching is greedy in descending score order with an IoU gate, each
ground truth claimed at most once; detections falling on ignore regions
(DontCare boxes) count as neither hits nor false alarms.  The headline
metric averages orientation similarity (1 + cos(delta)) / 2 over the
recall curve with 11-point interpolation, so it is bounded above by the
plain average precision of the same detections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import circ_abs_diff, wrap_angle

RECALL_ANCHORS = tuple(np.linspace(0.0, 1.0, 11))


def _check_box(box) -> tuple[float, float, float, float]:
    left, top, right, bottom = (float(v) for v in box)
    if not (right > left and bottom > top):
        raise ValueError(f"degenerate box {box}")
    return left, top, right, bottom


@dataclass(frozen=True)
class Detection:
    """A scored detection: box (left, top, right, bottom) px, score, yaw."""

    box2d: tuple[float, float, float, float]
    score: float
    theta: float

    def __post_init__(self):
        _check_box(self.box2d)
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))


@dataclass(frozen=True)
class GroundTruth:
    """A ground-truth box and yaw."""

    box2d: tuple[float, float, float, float]
    theta: float

    def __post_init__(self):
        _check_box(self.box2d)
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))


def box_iou(a, b) -> float:
    """Intersection over union of two (left, top, right, bottom) boxes."""
    al, at, ar, ab = _check_box(a)
    bl, bt, br, bb = _check_box(b)
    iw = min(ar, br) - max(al, bl)
    ih = min(ab, bb) - max(at, bt)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ar - al) * (ab - at) + (br - bl) * (bb - bt) - inter
    return inter / union


def _ignore_overlap(det_box, ignore_box) -> float:
    """Overlap of a detection with an ignore region, normalized by the
    detection's own area (an ignore region may be much larger)."""
    dl, dt, dr, db = _check_box(det_box)
    il, it, ir, ib = _check_box(ignore_box)
    iw = min(dr, ir) - max(dl, il)
    ih = min(db, ib) - max(dt, it)
    if iw <= 0 or ih <= 0:
        return 0.0
    return (iw * ih) / ((dr - dl) * (db - dt))


def orientation_similarity(theta_pred: float, theta_true: float) -> float:
    """(1 + cos(pred - true)) / 2: 1 at perfect agreement, 0 at a pi flip."""
    return (1.0 + math.cos(wrap_angle(theta_pred - theta_true))) / 2.0


@dataclass
class MatchResult:
    """Outcome of greedy matching.

    ``matches`` holds (det_index, gt_index, iou); ``ignored_dets`` are
    unmatched detections absorbed by ignore regions.  Index order within
    ``matches`` follows descending detection score.
    """

    matches: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_dets: list[int] = field(default_factory=list)
    unmatched_gts: list[int] = field(default_factory=list)
    ignored_dets: list[int] = field(default_factory=list)


def match_detections(dets, gts, iou_threshold: float = 0.5, ignore_boxes=()) -> MatchResult:
    """Greedily match detections to ground truths by descending score.

    Each detection claims the highest-IoU still-unclaimed ground truth if
    that IoU reaches the threshold.  Unmatched detections overlapping an
    ignore region by at least the threshold (measured against the
    detection's own area) are set aside as ignored.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    result = MatchResult()
    order = np.argsort([-d.score for d in dets], kind="stable")
    taken = set()
    for di in order:
        det = dets[di]
        best_gi, best_iou = -1, 0.0
        for gi, gt in enumerate(gts):
            if gi in taken:
                continue
            iou = box_iou(det.box2d, gt.box2d)
            if iou > best_iou:
                best_gi, best_iou = gi, iou
        if best_gi >= 0 and best_iou >= iou_threshold:
            taken.add(best_gi)
            result.matches.append((int(di), best_gi, best_iou))
        elif any(_ignore_overlap(det.box2d, ib) >= iou_threshold for ib in ignore_boxes):
            result.ignored_dets.append(int(di))
        else:
            result.unmatched_dets.append(int(di))
    result.unmatched_gts = [gi for gi in range(len(gts)) if gi not in taken]
    return result


def _score_walk(dets, gts, match: MatchResult):
    """Walk detections in descending score; yield (recall, precision,
    orientation-similarity precision) after each counted detection."""
    matched_gt = {di: gi for di, gi, _ in match.matches}
    ignored = set(match.ignored_dets)
    order = np.argsort([-d.score for d in dets], kind="stable")
    tp = fp = 0
    sim_sum = 0.0
    points = []
    for di in order:
        di = int(di)
        if di in ignored:
            continue
        if di in matched_gt:
            tp += 1
            sim_sum += orientation_similarity(dets[di].theta, gts[matched_gt[di]].theta)
        else:
            fp += 1
        points.append((tp / len(gts), tp / (tp + fp), sim_sum / (tp + fp)))
    return points


def _eleven_point(points, col: int) -> float:
    if not points:
        return 0.0
    recalls = np.array([p[0] for p in points])
    vals = np.array([p[col] for p in points])
    total = 0.0
    for anchor in RECALL_ANCHORS:
        mask = recalls >= anchor - 1e-12
        total += float(vals[mask].max()) if mask.any() else 0.0
    return total / len(RECALL_ANCHORS)


def aos(dets, gts, iou_threshold: float = 0.5, ignore_boxes=()):
    """Average orientation similarity with 11-point recall interpolation.

    Returns:
        (value, curve) where curve is the list of (recall, os-precision)
        pairs traced while sweeping the score threshold.

    Raises:
        ValueError: when there are no ground truths to recall.
    """
    if not gts:
        raise ValueError("aos undefined without ground truths")
    match = match_detections(dets, gts, iou_threshold, ignore_boxes)
    points = _score_walk(dets, gts, match)
    curve = [(r, o) for r, _, o in points]
    return _eleven_point(points, 2), curve


def average_precision(dets, gts, iou_threshold: float = 0.5, ignore_boxes=()) -> float:
    """11-point interpolated average precision over the same matching."""
    if not gts:
        raise ValueError("average precision undefined without ground truths")
    match = match_detections(dets, gts, iou_threshold, ignore_boxes)
    return _eleven_point(_score_walk(dets, gts, match), 1)


def error_histogram(angle_pairs, bin_width_deg: float = 10.0) -> np.ndarray:
    """Histogram of absolute circular errors in degrees.

    Bins cover [0, 180] in ``bin_width_deg`` steps; an error of exactly
    180 degrees lands in the last bin.

    Args:
        angle_pairs: iterable of (theta_pred, theta_true) in radians.
    """
    if not 0 < bin_width_deg <= 180:
        raise ValueError(f"bin_width_deg must be in (0, 180], got {bin_width_deg}")
    n_bins = int(math.ceil(180.0 / bin_width_deg))
    counts = np.zeros(n_bins, dtype=int)
    for tp, tt in angle_pairs:
        err = math.degrees(circ_abs_diff(tp, tt))
        counts[min(int(err / bin_width_deg), n_bins - 1)] += 1
    return counts


@dataclass
class EvalReport:
    """Bundle of detection-orientation metrics.

    Invariants: ``aos <= ap`` and the histogram sums to ``n_matched``.
    """

    aos: float
    ap: float
    os_recall_curve: list[tuple[float, float]]
    histogram: np.ndarray
    mean_abs_angular_error_deg: float
    n_gt: int
    n_det: int
    n_matched: int

    def to_dict(self) -> dict:
        return {
            "aos": self.aos,
            "ap": self.ap,
            "os_recall_curve": [[r, o] for r, o in self.os_recall_curve],
            "histogram_deg10": self.histogram.tolist(),
            "mean_abs_angular_error_deg": self.mean_abs_angular_error_deg,
            "n_gt": self.n_gt,
            "n_det": self.n_det,
            "n_matched": self.n_matched,
        }


def evaluate_detections(dets, gts, iou_threshold: float = 0.5, ignore_boxes=()) -> EvalReport:
    """Full evaluation: AOS, AP, error histogram, and mean angular error."""
    if not gts:
        raise ValueError("evaluation undefined without ground truths")
    match = match_detections(dets, gts, iou_threshold, ignore_boxes)
    points = _score_walk(dets, gts, match)
    pairs = [(dets[di].theta, gts[gi].theta) for di, gi, _ in match.matches]
    hist = error_histogram(pairs)
    if pairs:
        mae = float(np.mean([math.degrees(circ_abs_diff(a, b)) for a, b in pairs]))
    else:
        mae = float("nan")
    return EvalReport(
        aos=_eleven_point(points, 2),
        ap=_eleven_point(points, 1),
        os_recall_curve=[(r, o) for r, _, o in points],
        histogram=hist,
        mean_abs_angular_error_deg=mae,
        n_gt=len(gts),
        n_det=len(dets),
        n_matched=len(match.matches),
    )
