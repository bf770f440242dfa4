"""Projective geometry linking a pedestrian's 2D box to its 3D box and yaw.

Conventions used across the package:

* Angles are yaw values in radians, measured about the vertical axis of the
  camera frame, and live in the half-open interval (-pi, pi].
* 2D box dimensions are pixels (height ``h``, width ``w``).
* 3D box dimensions are meters (height ``h1``, width ``w1``, length ``l1``).

The central quantity is the *width span*: the horizontal extent, in meters,
that an upright box of plan dimensions (w1, l1) covers when viewed at yaw
theta.  Under a pinhole camera with the box roughly fronto-parallel, the
pixel ratio h/w of the 2D box equals the metric ratio h1/span, which ties
the 2D box, the 3D dimensions, and the yaw together.  Everything else in
this module (consistency residuals, orientation inversion) is built on
that relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or ndarray) into (-pi, pi].

    Values already in range are returned unchanged (bit-identical), which
    keeps round trips exact; only out-of-range values are reduced.
    """
    th = np.asarray(theta, dtype=float)
    out = (th <= -math.pi) | (th > math.pi)
    if np.any(out):
        wrapped = math.pi - np.remainder(math.pi - th, TWO_PI)
        th = np.where(out, wrapped, th)
    if np.ndim(theta) == 0:
        return float(th)
    return th


def circ_diff(a, b):
    """Signed circular difference a - b, wrapped into (-pi, pi]."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def circ_abs_diff(a, b):
    """Absolute circular distance between two angles, in [0, pi]."""
    d = circ_diff(a, b)
    return abs(d) if np.ndim(d) == 0 else np.abs(d)


@dataclass(frozen=True)
class Dims2D:
    """2D bounding-box dimensions in pixels.

    Attributes:
        h: box height in pixels, strictly positive.
        w: box width in pixels, strictly positive.
    """

    h: float
    w: float

    def __post_init__(self):
        for name in ("h", "w"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"Dims2D.{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class Dims3D:
    """3D box dimensions in meters: height h1, width w1, length l1."""

    h1: float
    w1: float
    l1: float

    def __post_init__(self):
        for name in ("h1", "w1", "l1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"Dims3D.{name} must be finite and > 0, got {v!r}")


def _as_hw(d2) -> tuple[float, float]:
    """Accept a Dims2D or a plain (h, w) pair. The pair form permits
    degenerate widths (w == 0) that the validated type rejects."""
    if isinstance(d2, Dims2D):
        return d2.h, d2.w
    h, w = d2
    h = float(h)
    w = float(w)
    if not (math.isfinite(h) and h > 0 and math.isfinite(w) and w >= 0):
        raise ValueError(f"need finite h > 0 and w >= 0, got ({h}, {w})")
    return h, w


def width_span(dims: Dims3D, theta):
    """Horizontal metric extent of a 3D box at yaw theta, by quadrant cases.

    The span is evaluated piecewise over the four yaw quadrants:

    ==================  =======================
    theta in            span
    ==================  =======================
    [0, pi/2)           w1*sin(t) + l1*cos(t)
    [pi/2, pi]          w1*sin(t) - l1*cos(t)
    [-pi/2, 0)          l1*cos(t) - w1*sin(t)
    [-pi, -pi/2)        -l1*cos(t) - w1*sin(t)
    ==================  =======================

    theta == pi is grouped with the second case; its value there agrees
    with the fourth case at the equivalent angle -pi.  Out-of-range input
    is wrapped first.  theta may be a scalar or an ndarray.

    Returns:
        Span in meters (float for scalar input, ndarray otherwise),
        non-negative and at most hypot(w1, l1).
    """
    th = np.asarray(wrap_angle(theta), dtype=float)
    s = np.sin(th)
    c = np.cos(th)
    w1, l1 = dims.w1, dims.l1
    val = np.where(
        (th >= 0.0) & (th < HALF_PI),
        w1 * s + l1 * c,
        np.where(
            th >= HALF_PI,
            w1 * s - l1 * c,
            np.where(th >= -HALF_PI, l1 * c - w1 * s, -l1 * c - w1 * s),
        ),
    )
    if np.ndim(theta) == 0:
        return float(val)
    return val


def width_span_abs(dims: Dims3D, theta):
    """Quadrant-free form of the width span: w1*|sin(t)| + l1*|cos(t)|.

    Algebraically identical to :func:`width_span` on (-pi, pi]; kept as an
    independent route so the two can be checked against each other.
    """
    th = np.asarray(theta, dtype=float)
    val = dims.w1 * np.abs(np.sin(th)) + dims.l1 * np.abs(np.cos(th))
    if np.ndim(theta) == 0:
        return float(val)
    return val


def implied_width_span(d2, h1: float) -> float:
    """Metric span implied by the 2D box shape and the 3D height.

    From h/w = h1/span: span = h1 * w / h.  Degenerate w == 0 yields 0.
    """
    h, w = _as_hw(d2)
    if not (math.isfinite(h1) and h1 > 0):
        raise ValueError(f"h1 must be finite and > 0, got {h1}")
    return h1 * w / h


def consistency_residual(d2, dims: Dims3D, theta) -> float:
    """Signed consistency residual h * span(dims, theta) - w * h1, in px*m.

    Zero exactly when the 2D box shape, the 3D dimensions, and the yaw
    satisfy the projective ratio h/w = h1/span.  The sign is kept so
    callers can square or inspect direction as they wish.
    """
    h, w = _as_hw(d2)
    return h * width_span_abs(dims, float(theta)) - w * dims.h1


@dataclass(frozen=True)
class InversionResult:
    """Orientation candidates recovered from a 2D/3D dimension pair.

    Attributes:
        candidates: yaw candidates in (-pi, pi], sorted ascending,
            deduplicated, at most 8 entries.
        infeasible: True when the implied span exceeds the largest span
            the 3D dimensions can produce (no yaw can explain the boxes);
            candidates is then empty.  An empty candidate list with
            infeasible False means the implied span fell below the
            smallest achievable span instead.
    """

    candidates: tuple[float, ...]
    infeasible: bool


# Per-quadrant coefficients (a, b) so that span(theta) = a*sin + b*cos on
# the half-open interval [lo, hi).
_SPAN_CASES = (
    (1.0, 1.0, 0.0, HALF_PI),
    (1.0, -1.0, HALF_PI, math.pi),
    (-1.0, 1.0, -HALF_PI, 0.0),
    (-1.0, -1.0, -math.pi, -HALF_PI),
)

# Tolerance for accepting roots that land a hair outside their quadrant due
# to rounding; duplicates introduced at shared boundaries are merged below.
_EDGE_SLACK = 1e-12


def candidates_for_span(
    dims: Dims3D,
    target: float,
    *,
    feasibility_slack: float = 1e-9,
    dedup_tol: float = 1e-9,
) -> InversionResult:
    """Solve span(theta) == target for theta analytically.

    Each quadrant case is a pure sinusoid a*w1*sin + b*l1*cos of amplitude
    R = hypot(w1, l1), so its roots come from arcsin directly; up to two
    roots per quadrant gives at most eight candidates overall.

    Args:
        dims: 3D box dimensions.
        target: desired span in meters, >= 0.
        feasibility_slack: relative slack on the R bound before declaring
            the target unreachable.
        dedup_tol: circular tolerance (radians) for merging duplicate roots
            found by adjacent quadrants at shared boundaries.
    """
    if not (math.isfinite(target) and target >= 0.0):
        raise ValueError(f"target span must be finite and >= 0, got {target}")
    w1, l1 = dims.w1, dims.l1
    r = math.hypot(w1, l1)
    if target > r * (1.0 + feasibility_slack):
        return InversionResult((), True)
    x = min(target / r, 1.0)
    base = math.asin(x)

    roots: list[float] = []
    for sa, sb, lo, hi in _SPAN_CASES:
        phi = math.atan2(sb * l1, sa * w1)
        for raw in (base - phi, math.pi - base - phi):
            for k in (-1, 0, 1):
                th = raw + k * TWO_PI
                if lo - _EDGE_SLACK <= th < hi + _EDGE_SLACK:
                    roots.append(wrap_angle(th))

    roots.sort()
    kept: list[float] = []
    for th in roots:
        if any(circ_abs_diff(th, prev) <= dedup_tol for prev in kept):
            continue
        kept.append(th)
    # The first and last survivors can still be circular duplicates across
    # the +/-pi seam.
    if len(kept) >= 2 and circ_abs_diff(kept[0], kept[-1]) <= dedup_tol:
        kept.pop()
    return InversionResult(tuple(kept), False)


def invert_orientation_candidates(
    d2,
    dims: Dims3D,
    *,
    feasibility_slack: float = 1e-9,
    dedup_tol: float = 1e-9,
) -> InversionResult:
    """All yaw values consistent with a 2D box and 3D dimensions.

    The target span is taken from :func:`implied_width_span`; see
    :func:`candidates_for_span` for the solving strategy.
    """
    target = implied_width_span(d2, dims.h1)
    return candidates_for_span(
        dims,
        target,
        feasibility_slack=feasibility_slack,
        dedup_tol=dedup_tol,
    )
