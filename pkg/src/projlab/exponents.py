"""The growth exponent gamma(p,q) and the region geometry of the
(1/p, 1/q) triangle.

Everything is exact rational arithmetic in d up to float roundoff: the
critical points, the four affine branches of gamma, the region inequality
systems, and the two segments where the norm picks up a log factor.  The
classifier evaluates the published inequality systems literally; segment
membership (an equality test, tolerance 1e-12) takes precedence over the
region tags.
"""

import math
from dataclasses import dataclass
from enum import Enum

from projlab.errors import DomainError

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class ExponentPoint:
    """A point (x, y) = (1/p, 1/q) of the unit square."""

    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise DomainError(f"exponent point outside the unit square: {self}")

    def prime(self):
        """The dual point (1 - y, 1 - x)."""
        return ExponentPoint(1.0 - self.y, 1.0 - self.x)


class RegionLabel(str, Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T3P = "T3'"
    SEG_SR = "SEG_SR"
    SEG_SPRP = "SEG_SpRp"
    OUTSIDE = "OUTSIDE"


class SharpStatus(str, Enum):
    SHARP = "SHARP"
    SEGMENT_WEAK = "SEGMENT_WEAK"
    EXCLUDED_TRIANGLES = "EXCLUDED_TRIANGLES"
    UNKNOWN = "UNKNOWN"


def critical_points(d):
    """The labeled corner points of the region geometry, keyed by name."""
    if d < 2:
        raise DomainError(f"need d >= 2, got d={d}")
    p = ExponentPoint((d - 1) / (2 * d), (d - 1) / (2 * d))
    r = ExponentPoint((d + 1) / (2 * d), 0.0)
    s = ExponentPoint((d + 1) / (2 * d), (d - 1) ** 2 / (2 * d * (d + 1)))
    q = ExponentPoint(
        (d * d + d - 4) / (2 * (d - 1) * (d + 2)), d / (2 * (d + 2))
    )
    u = ExponentPoint(d / (2 * (d + 2)), d / (2 * (d + 2)))
    c = ExponentPoint(0.5, 0.5)
    return {
        "P": p,
        "R": r,
        "S": s,
        "Q": q,
        "U": u,
        "C": c,
        "P'": p.prime(),
        "R'": r.prime(),
        "S'": s.prime(),
        "Q'": q.prime(),
        "U'": u.prime(),
    }


def gamma_branches(d, pt: ExponentPoint):
    """The four affine expressions whose max is gamma."""
    x, y = pt.x, pt.y
    return (
        (d - 1) / 2.0 * (x - y),
        d * (x - y) - 1.0,
        (d - 1) / 2.0 - d * y,
        -(d + 1) / 2.0 + d * x,
    )


def gamma_exponent(d, pt: ExponentPoint):
    """gamma(p,q): the growth exponent of the degree-n projector norm."""
    return max(gamma_branches(d, pt))


def _on_segment_sr(d, pt):
    y_s = (d - 1) ** 2 / (2 * d * (d + 1))
    return (
        abs(pt.x - (d + 1) / (2 * d)) <= BOUNDARY_TOL
        and -BOUNDARY_TOL <= pt.y <= y_s + BOUNDARY_TOL
    )


def _on_segment_sprp(d, pt):
    x_sp = 1.0 - (d - 1) ** 2 / (2 * d * (d + 1))
    return (
        abs(pt.y - (d - 1) / (2 * d)) <= BOUNDARY_TOL
        and x_sp - BOUNDARY_TOL <= pt.x <= 1.0 + BOUNDARY_TOL
    )


def _classify_raw(d, pt):
    """Region membership from the literal inequality systems, no overrides.

    Each boundary comparison is cross-multiplied and computed once, so the
    strict and non-strict sides of a shared boundary are exact logical
    complements in float arithmetic; repeating a boundary in rearranged
    form would leave ulp-wide gaps along the interfaces.
    """
    x, y = pt.x, pt.y
    below_ps = (d + 1) * y < (d - 1) * (1.0 - x)  # under the [P,S] line
    above_psp = (d + 1) * (1.0 - x) < (d - 1) * y  # past the [P',S'] line
    wide_gap = (d + 1) * (x - y) >= 2.0  # at or beyond the [S,S'] offset
    right_of_sr = 2 * d * x >= d + 1
    below_sprp = 2 * d * y <= d - 1
    if not below_ps and not above_psp and not wide_gap:
        return RegionLabel.T1
    if right_of_sr and wide_gap and below_sprp:
        return RegionLabel.T2
    if below_ps and not right_of_sr:
        return RegionLabel.T3
    if above_psp and not below_sprp:
        return RegionLabel.T3P
    return RegionLabel.OUTSIDE


def classify_region(d, pt: ExponentPoint):
    """Region tag of a point of the triangle {y <= x}.

    Points within tolerance of [S,R] or [S',R'] get the segment tags; the
    four region tags partition the rest of the triangle.
    """
    if d < 2:
        raise DomainError(f"need d >= 2, got d={d}")
    if pt.y > pt.x + BOUNDARY_TOL:
        raise DomainError(f"classify_region needs y <= x, got {pt}")
    if _on_segment_sr(d, pt):
        return RegionLabel.SEG_SR
    if _on_segment_sprp(d, pt):
        return RegionLabel.SEG_SPRP
    return _classify_raw(d, pt)


_BRANCH_BY_REGION = {
    RegionLabel.T1: 0,
    RegionLabel.T2: 1,
    RegionLabel.T3: 2,
    RegionLabel.T3P: 3,
}


def piecewise_gamma(d, pt: ExponentPoint):
    """gamma evaluated through the branch selected by the region.

    The two log segments sit inside the closed T2 system, so they take the
    T2 branch; a point matching none of the systems is a usage bug.
    """
    label = classify_region(d, pt)
    if label in (RegionLabel.SEG_SR, RegionLabel.SEG_SPRP):
        label = RegionLabel.T2
    if label is RegionLabel.OUTSIDE:
        raise DomainError(f"point not covered by any region: {pt}")
    return gamma_branches(d, pt)[_BRANCH_BY_REGION[label]]


def _in_triangle(pt, a, b, c, tol=BOUNDARY_TOL):
    """Closed-hull membership via signed areas, robust to degeneracy.

    If the hull degenerates to a segment (collinear corners), membership
    means lying on that segment within tolerance.
    """

    def cross(o, p, q):
        return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x)

    area = cross(a, b, c)
    span = max(
        abs(a.x - b.x) + abs(a.y - b.y),
        abs(b.x - c.x) + abs(b.y - c.y),
        abs(a.x - c.x) + abs(a.y - c.y),
    )
    if abs(area) <= tol * max(span, 1.0):
        # Degenerate: the far pair of corners bounds the segment.
        pairs = [(a, b), (b, c), (a, c)]
        lo, hi = max(
            pairs, key=lambda pq: (pq[0].x - pq[1].x) ** 2 + (pq[0].y - pq[1].y) ** 2
        )
        if abs(cross(lo, hi, pt)) > tol * max(span, 1.0):
            return False
        t_lo = min(lo.x, hi.x) - tol, min(lo.y, hi.y) - tol
        t_hi = max(lo.x, hi.x) + tol, max(lo.y, hi.y) + tol
        return t_lo[0] <= pt.x <= t_hi[0] and t_lo[1] <= pt.y <= t_hi[1]
    sign = 1.0 if area > 0 else -1.0
    for o, p in ((a, b), (b, c), (c, a)):
        if sign * cross(o, p, pt) < -tol:
            return False
    return True


def sharp_range_status(d, pt: ExponentPoint):
    """Where the point stands relative to the sharp-bound statement.

    SHARP: the n^gamma bound holds with no log loss.  SEGMENT_WEAK: on
    [S,R] or [S',R'], where only the Lorentz substitute is available.
    EXCLUDED_TRIANGLES: inside hull(Q,U,C) or hull(Q',U',C) minus the
    point C itself, where sharpness is open.  UNKNOWN: outside the
    operator-norm triangle entirely (y > x); no claim is made there.
    """
    if pt.y > pt.x + BOUNDARY_TOL:
        return SharpStatus.UNKNOWN
    if _on_segment_sr(d, pt) or _on_segment_sprp(d, pt):
        return SharpStatus.SEGMENT_WEAK
    pts = critical_points(d)
    near_c = math.hypot(pt.x - 0.5, pt.y - 0.5) <= BOUNDARY_TOL
    if not near_c and (
        _in_triangle(pt, pts["Q"], pts["U"], pts["C"])
        or _in_triangle(pt, pts["Q'"], pts["U'"], pts["C"])
    ):
        return SharpStatus.EXCLUDED_TRIANGLES
    return SharpStatus.SHARP
