"""Metrics and predicates on discretized curves.

Distances are measured in the disk picture: disk points are used as-is and
half-plane points are first sent through the Moebius map
``phi_H(z) = (2i - z) / (2i + z)`` (0 -> 1, 2i -> 0, infinity -> -1), so
unbounded chordal curves still have finite distances.  Pass
``metric="E"`` to the trace metrics for plain Euclidean distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chordal import Trace, chordal_forward, fhat_eval
from .drivers import Driver, concat_drivers, resample_driver, tail_driver, truncate_driver
from .errors import DomainViolation, EmptySet, LowerHalfPlane, ModeMismatch

DISK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    source: str = "trace"


@dataclass(frozen=True)
class ReturnEventSpec:
    n: int
    N: int
    mode: str = "chordal"

    def __post_init__(self):
        if self.n < 1 or self.N <= self.n:
            raise ValueError(f"need 1 <= n < N, got n={self.n}, N={self.N}")
        if self.mode not in ("chordal", "radial"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class ReturnEventResult:
    status: str  # "hit", "no-return" or "not-yet"
    entry_time: float | None = None
    violation_time: float | None = None

    @property
    def hit(self) -> bool:
        return self.status == "hit"


@dataclass(frozen=True)
class ConcatReport:
    discrepancy: float
    passed: bool
    compared: int


def phi_H(z):
    """Moebius map from the closed upper half-plane onto the closed disk.

    ``numpy.inf`` (any infinite input) maps to -1.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(arr.imag < 0):
        raise LowerHalfPlane("phi_H is only defined on the closed upper half-plane")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (2j - arr) / (2j + arr)
    out = np.where(np.isinf(arr), -1.0 + 0j, out)
    return complex(out) if out.ndim == 0 else out


def to_disk(points, mode: str) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    if mode == "chordal":
        return np.asarray(phi_H(pts), dtype=complex)
    if mode == "radial":
        if np.any(np.abs(pts) > 1 + DISK_TOL):
            raise DomainViolation("point outside the closed unit disk")
        return pts
    raise ValueError(f"unknown mode {mode!r}")


def d_D_metric(z, w, mode: str = "radial") -> float:
    """``|Phi(z) - Phi(w)|`` with Phi the identity (disk) or phi_H (half-plane)."""
    try:
        a, b = to_disk(z, mode), to_disk(w, mode)
    except LowerHalfPlane as exc:
        raise DomainViolation(str(exc)) from exc
    return float(np.abs(a - b))


def make_point_cloud(points, source: str = "trace") -> PointCloud:
    pts = np.asarray(points, dtype=complex).ravel()
    if len(pts) == 0:
        raise EmptySet("point cloud is empty")
    if np.any(np.abs(pts) > 1 + DISK_TOL):
        raise DomainViolation("point clouds live in the closed unit disk")
    return PointCloud(pts, source)


def trace_cloud(g: Trace) -> PointCloud:
    return make_point_cloud(to_disk(g.points, g.mode), "trace")


def _downsample(pts: np.ndarray, max_points: int):
    """Stride subsample; returns kept points and a covering radius for the dropped ones."""
    if len(pts) <= max_points:
        return pts, 0.0
    stride = math.ceil(len(pts) / max_points)
    keep = pts[::stride]
    # each dropped point is compared to the kept point at the start of its block
    owner = np.repeat(keep, stride)[: len(pts)]
    return keep, float(np.max(np.abs(pts - owner)))


def _directed(a: np.ndarray, b: np.ndarray, block: int = 2048) -> float:
    worst = 0.0
    for i in range(0, len(a), block):
        d = np.abs(a[i : i + block, None] - b[None, :])
        worst = max(worst, float(d.min(axis=1).max()))
    return worst


def hausdorff_distance(A, B, max_points: int = 10_000) -> float:
    """Hausdorff distance of two clouds (disk coordinates), brute force.

    Clouds larger than ``max_points`` are stride-subsampled and the covering
    radius of the dropped points is added, so the result stays an upper
    bound.
    """
    a = A.points if isinstance(A, PointCloud) else np.asarray(A, dtype=complex).ravel()
    b = B.points if isinstance(B, PointCloud) else np.asarray(B, dtype=complex).ravel()
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("Hausdorff distance needs nonempty sets")
    a, ra = _downsample(a, max_points)
    b, rb = _downsample(b, max_points)
    return max(_directed(a, b), _directed(b, a)) + max(ra, rb)


def _sample(g: Trace, times: np.ndarray) -> np.ndarray:
    t = np.minimum(times, g.T)
    return np.interp(t, g.cap_times, g.points.real) + 1j * np.interp(t, g.cap_times, g.points.imag)


def _coords(g: Trace, pts: np.ndarray, metric: str) -> np.ndarray:
    if metric == "E":
        return pts
    if metric == "D":
        return to_disk(pts, g.mode)
    raise ValueError("metric must be 'D' or 'E'")


def _merged(g1: Trace, g2: Trace, metric: str):
    if g1.mode != g2.mode:
        raise ModeMismatch(f"{g1.mode} vs {g2.mode} trace")
    grid = np.union1d(g1.cap_times, g2.cap_times)
    p = _coords(g1, _sample(g1, grid), metric)
    q = _coords(g2, _sample(g2, grid), metric)
    return p, q


def sup_metric(g1: Trace, g2: Trace, metric: str = "D") -> float:
    """``sup_t d(g1(t ^ T1), g2(t ^ T2))`` over the merged capacity grid.

    Each trace is linearly interpolated in capacity time and frozen at its
    endpoint after its horizon.  This under-approximates the continuum
    supremum and converges under refinement.
    """
    p, q = _merged(g1, g2, metric)
    return float(np.max(np.abs(p - q)))


def unparam_metric(g1: Trace, g2: Trace, metric: str = "D") -> float:
    """Unparameterized distance as a discrete Frechet distance.

    Both traces are sampled on the merged capacity grid before alignment, so
    the identity alignment is admissible and the value never exceeds
    :func:`sup_metric`.
    """
    p, q = _merged(g1, g2, metric)
    dist = np.abs(p[:, None] - q[None, :])
    return float(_kernels.frechet(dist))


def _cross(u, v):
    return u.real * v.imag - u.imag * v.real


def _any_contact(p, q, r, s, mask_fn, block: int = 128) -> bool:
    """Do segments ``[p_i, q_i]`` and ``[r_j, s_j]`` touch for any admissible (i, j)?

    ``mask_fn(i, j)`` selects admissible pairs for a block of rows.  A
    bounding-box prefilter is followed by the orientation test, which also
    catches touching and collinear overlap.
    """
    lo_x1, hi_x1 = np.minimum(p.real, q.real), np.maximum(p.real, q.real)
    lo_y1, hi_y1 = np.minimum(p.imag, q.imag), np.maximum(p.imag, q.imag)
    lo_x2, hi_x2 = np.minimum(r.real, s.real), np.maximum(r.real, s.real)
    lo_y2, hi_y2 = np.minimum(r.imag, s.imag), np.maximum(r.imag, s.imag)
    j = np.arange(len(r))
    for i0 in range(0, len(p), block):
        i = np.arange(i0, min(i0 + block, len(p)))
        box = (
            (lo_x1[i, None] <= hi_x2[None, :])
            & (lo_x2[None, :] <= hi_x1[i, None])
            & (lo_y1[i, None] <= hi_y2[None, :])
            & (lo_y2[None, :] <= hi_y1[i, None])
            & mask_fn(i[:, None], j[None, :])
        )
        if not box.any():
            continue
        ii, jj = np.nonzero(box)
        ii = ii + i0
        a1, a2, b1, b2 = p[ii], q[ii], r[jj], s[jj]
        o1 = _cross(a2 - a1, b1 - a1)
        o2 = _cross(a2 - a1, b2 - a1)
        o3 = _cross(b2 - b1, a1 - b1)
        o4 = _cross(b2 - b1, a2 - b1)
        if np.any((o1 * o2 <= 0) & (o3 * o4 <= 0)):
            return True
    return False


def segments_intersect(points, block: int = 128) -> bool:
    """Exact pairwise segment sweep of a polyline, shared endpoints excluded.

    Adjacent segments only count when they fold back onto each other.
    """
    pts = np.asarray(points, dtype=complex)
    p, q = pts[:-1], pts[1:]
    if len(p) < 2:
        return False
    d = q - p
    # adjacent fold-backs: collinear with opposite directions
    prod = d[:-1].conj() * d[1:]
    if np.any((prod.imag == 0) & (prod.real < 0)):
        return True
    return _any_contact(p, q, p, q, lambda i, j: j >= i + 2, block)


def polylines_intersect(a, b, block: int = 128) -> bool:
    """True if two polylines share any point."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 1 or len(b) == 1:
        a = a if len(a) > 1 else np.repeat(a, 2)
        b = b if len(b) > 1 else np.repeat(b, 2)
    return _any_contact(a[:-1], a[1:], b[:-1], b[1:], lambda i, j: np.ones(np.broadcast(i, j).shape, bool), block)


def self_intersects(g: Trace) -> bool:
    """True if the polyline crosses itself or returns to the boundary after its start."""
    pts = g.points
    if g.mode == "chordal":
        if np.any(pts[1:].imag <= 0):
            return True
    elif np.any(np.abs(pts[1:]) >= 1.0):
        return True
    return segments_intersect(pts)


def _circle_roots(a: complex, b: complex, r: float):
    """Parameters s in [0, 1] with |a + s (b - a)| = r, ascending."""
    d = b - a
    A = abs(d) ** 2
    if A == 0:
        return []
    B = 2 * (a.real * d.real + a.imag * d.imag)
    C = abs(a) ** 2 - r * r
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return [s for s in sorted(((-B - sq) / (2 * A), (-B + sq) / (2 * A))) if 0.0 <= s <= 1.0]


def _first_exit(pts, times, r, start_seg=0, start_s=0.0):
    """First (segment, s, time) at which the polyline leaves the closed disk of radius r."""
    mods = np.abs(pts)
    for k in np.nonzero(mods > r)[0]:
        if k < start_seg + 1:
            continue
        roots = _circle_roots(complex(pts[k - 1]), complex(pts[k]), r)
        roots = [s for s in roots if (k - 1 > start_seg or s >= start_s)]
        s = roots[-1] if roots else 1.0
        return k - 1, s, float(times[k - 1] + s * (times[k] - times[k - 1]))
    return None


def _first_entry(pts, times, r, start_seg=0, start_s=0.0):
    """First (segment, s, time) at which the polyline enters the open disk of radius r."""
    a, b = pts[:-1], pts[1:]
    d = b - a
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(-(a.real * d.real + a.imag * d.imag) / np.abs(d) ** 2, 0.0, 1.0)
    s = np.nan_to_num(s)
    dmin = np.abs(a + s * d)
    for k in np.nonzero(dmin < r)[0]:
        if k < start_seg:
            continue
        lo = start_s if k == start_seg else 0.0
        if abs(a[k] + lo * d[k]) < r:
            root = lo
        else:
            roots = [x for x in _circle_roots(complex(a[k]), complex(b[k]), r) if x >= lo]
            if not roots:
                continue
            root = roots[0]
        return k, root, float(times[k] + root * (times[k + 1] - times[k]))
    return None


def return_event_hit(g: Trace, spec: ReturnEventSpec) -> ReturnEventResult:
    """Evaluate a return event on the finite trace ``g[0, T]``.

    Chordal: after first leaving ``N D`` the curve re-enters ``n D``.
    Radial: after first entering ``e^-N D`` the curve leaves the closed
    ``e^-n D``.  If the first passage never happens on ``[0, T]`` the
    status is ``"not-yet"`` rather than a negative answer.
    """
    if g.mode != spec.mode:
        raise ModeMismatch(f"{spec.mode} event on a {g.mode} trace")
    pts, times = g.points, g.cap_times
    if spec.mode == "chordal":
        first = _first_exit(pts, times, float(spec.N))
        if first is None:
            return ReturnEventResult("not-yet")
        seg, s, t_entry = first
        back = _first_entry(pts, times, float(spec.n), seg, s)
    else:
        first = _first_entry(pts, times, math.exp(-spec.N))
        if first is None:
            return ReturnEventResult("not-yet")
        seg, s, t_entry = first
        back = _first_exit(pts, times, math.exp(-spec.n), seg, s)
    if back is None:
        return ReturnEventResult("no-return", t_entry)
    return ReturnEventResult("hit", t_entry, back[2])


def concat_consistency(d1: Driver, d2: Driver, tol: float = 1e-8, n_steps: int | None = None) -> ConcatReport:
    """Compare the trace of ``d1 * d2`` with ``gamma1`` followed by ``fhat_T1(gamma2)``.

    With ``n_steps`` the concatenated driver is re-knotted uniformly first and
    the pieces are cut from it, so the junction generally splits a step and
    the discrepancy measures discretization error.  Distances are Euclidean
    in the half-plane, compared on the concatenated trace's grid.
    """
    if d1.mode != "chordal" or d2.mode != "chordal":
        raise ModeMismatch("the concatenation check runs on chordal drivers")
    whole = concat_drivers(d1, d2)
    if n_steps is not None and not whole.is_empty:
        whole = resample_driver(whole, n_steps)
    T1 = d1.T
    ref = chordal_forward(whole)
    if d2.is_empty or whole.T == T1:
        return ConcatReport(0.0, True, len(ref))
    p1 = truncate_driver(whole, T1)
    p2 = tail_driver(whole, T1)
    first = chordal_forward(p1) if not p1.is_empty else None
    second = chordal_forward(p2)
    worst = 0.0
    count = 0
    for k, t in enumerate(ref.cap_times):
        if t <= T1:
            if first is None:
                piece = 0j
            else:
                idx = np.searchsorted(first.cap_times, t)
                piece = first.points[idx]
        else:
            idx = np.searchsorted(second.cap_times, t - T1)
            if idx >= len(second.cap_times) or abs(second.cap_times[idx] - (t - T1)) > 1e-12 * max(1.0, t):
                idx = int(np.argmin(np.abs(second.cap_times - (t - T1))))
            w = second.points[idx]
            piece = fhat_eval(p1, w, T1) if not p1.is_empty else w
        worst = max(worst, abs(ref.points[k] - piece))
        count += 1
    return ConcatReport(float(worst), bool(worst <= tol), count)
