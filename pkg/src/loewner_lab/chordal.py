"""Chordal Loewner machinery in the upper half-plane, from 0 to infinity.

Drivers are frozen on each capacity step (midpoint value by default), which
makes every step an exact vertical-slit map.  Traces come from composing
inverse slit maps (O(n^2) total), the forward map ``g_t`` from composing
slit maps, and the inverse transform from vertical-slit unzipping.
Capacity convention: ``hcap(gamma[0, t]) = 2 t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .drivers import (
    DEFAULT_BETA,
    DEFAULT_C1,
    DEFAULT_C2,
    Driver,
    TightnessReport,
    make_driver,
    psi_growth,
    truncate_driver,
)
from .errors import (
    BadHorizon,
    BadPoint,
    BranchFailure,
    DegenerateSegment,
    ModeMismatch,
    NotInUpperHalfPlane,
    NotSimple,
    OutOfRange,
)

# points on the trace are branch points: roundoff eps surfaces as a height ~ sqrt(eps)
SWALLOW_TOL = 1e-7
FREEZE_RULES = ("midpoint", "left")


@dataclass(frozen=True, eq=False)
class Trace:
    """Discretized curve with capacity timestamps.

    Chordal traces start at 0 in the closed upper half-plane; radial traces
    start at 1 in the closed unit disk.
    """

    points: np.ndarray
    cap_times: np.ndarray
    mode: str = "chordal"

    @property
    def T(self) -> float:
        return float(self.cap_times[-1])

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Swallowed:
    """Returned instead of a value when a point is swallowed at ``time``."""

    time: float


@dataclass(frozen=True, eq=False)
class SlitChain:
    dt: np.ndarray
    lam_star: np.ndarray

    @property
    def hcap(self) -> float:
        return float(2.0 * self.dt.sum())


def make_trace(points, cap_times, mode: str = "chordal") -> Trace:
    pts = np.asarray(points, dtype=complex).ravel()
    t = np.asarray(cap_times, dtype=float).ravel()
    if len(pts) != len(t) or len(pts) == 0:
        raise ValueError("points and cap_times must be nonempty and aligned")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("cap_times must increase strictly from 0")
    start = 0.0 if mode == "chordal" else 1.0
    if abs(pts[0] - start) > 1e-12:
        raise ValueError(f"{mode} traces must start at {start}")
    return Trace(pts, t, mode)


def _require_chordal(d: Driver) -> None:
    if d.mode != "chordal":
        raise ModeMismatch(f"expected a chordal driver, got {d.mode}")


def frozen_values(values: np.ndarray, freeze: str = "midpoint") -> np.ndarray:
    """Per-step frozen driver values along the last axis."""
    if freeze == "midpoint":
        return 0.5 * (values[..., :-1] + values[..., 1:])
    if freeze == "left":
        return values[..., :-1].copy()
    raise ValueError(f"freeze must be one of {FREEZE_RULES}")


def slit_chain(d: Driver, freeze: str = "midpoint") -> SlitChain:
    _require_chordal(d)
    return SlitChain(np.diff(d.times), frozen_values(d.values, freeze))


def forward_points(times: np.ndarray, values: np.ndarray, freeze: str = "midpoint") -> np.ndarray:
    """Trace vertices for a batch of drivers sharing one time grid.

    ``values`` has shape (batch, n_knots); returns complex (batch, n_knots)
    with the zeroth column equal to 0.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    dt = np.diff(np.asarray(times, dtype=float))
    lam = np.ascontiguousarray(frozen_values(values, freeze).T)
    if lam.shape[0] == 0:
        return np.zeros((values.shape[0], 1), dtype=complex)
    re, im, _, _ = _kernels.inverse_tips(lam, dt, lam, np.zeros_like(lam), False)
    out = np.zeros((values.shape[0], len(dt) + 1), dtype=complex)
    out[:, 1:] = (re + 1j * im).T
    if not np.all(np.isfinite(out)):
        raise BranchFailure("non-finite trace vertex")
    return out


def chordal_forward(d: Driver, freeze: str = "midpoint") -> Trace:
    """Loewner transform: driver to trace via slit-map composition.

    Vertex k is ``G_1^{-1} o ... o G_k^{-1}(lam*_k)``.  For the zero driver
    this telescopes to ``2 i sqrt(t_k)`` exactly.
    """
    _require_chordal(d)
    pts = forward_points(d.times, d.values[None, :], freeze)[0]
    return Trace(pts, d.times.copy(), "chordal")


def chordal_gt_eval(d: Driver, z: complex, t: float, freeze: str = "midpoint"):
    """Mapping-out function ``g_t(z)``, or :class:`Swallowed` with the step end time."""
    _require_chordal(d)
    z = complex(z)
    if z.imag < 0 or z == 0:
        raise BadPoint(f"need Im z >= 0 and z != 0, got {z}")
    if not 0.0 <= t <= d.T:
        raise OutOfRange(f"t = {t} outside [0, {d.T}]")
    dd = truncate_driver(d, t)
    if dd.is_empty:
        return z
    chain = slit_chain(dd, freeze)
    re, im, hit = _kernels.forward_apply(
        chain.lam_star, chain.dt, np.array([z.real]), np.array([z.imag]), SWALLOW_TOL
    )
    if hit[0] >= 0:
        return Swallowed(float(dd.times[hit[0] + 1]))
    return complex(re[0], im[0])


def _fhat(d: Driver, w: complex, t: float, freeze: str):
    _require_chordal(d)
    w = complex(w)
    if w.imag < 0:
        raise BadPoint(f"need Im w >= 0, got {w}")
    if not 0.0 <= t <= d.T:
        raise OutOfRange(f"t = {t} outside [0, {d.T}]")
    dd = truncate_driver(d, t)
    if dd.is_empty:
        return w, 1.0 + 0.0j
    chain = slit_chain(dd, freeze)
    center = float(dd.values[-1])
    re, im, pr, pi = _kernels.inverse_apply(
        chain.lam_star, chain.dt, np.array([w.real + center]), np.array([w.imag])
    )
    if im[0] < -1e-12 or not np.isfinite(re[0]):
        raise BranchFailure(f"composition left the half-plane at w = {w}")
    return complex(re[0], im[0]), complex(pr[0], pi[0])


def fhat_eval(d: Driver, w: complex, t: float, freeze: str = "midpoint") -> complex:
    """Centered inverse map ``f_t(w + lambda_t)``, centered at the driver value at ``t``."""
    return _fhat(d, w, t, freeze)[0]


def fhat_derivative(d: Driver, w: complex, t: float, freeze: str = "midpoint") -> complex:
    """Derivative of :func:`fhat_eval` by the chain rule over the slit maps."""
    w = complex(w)
    if w.imag <= 0:
        raise BadPoint("the derivative needs a strictly interior point")
    return _fhat(d, w, t, freeze)[1]


def fhat_derivative_grid(d: Driver, ys: np.ndarray, freeze: str = "midpoint") -> np.ndarray:
    """``|fhat'_{t_k}(i y)|`` for every knot ``t_k`` (k >= 1) and every ``y``.

    Returns shape (n_steps, len(ys)); one O(n^2) sweep for all knots.
    """
    _require_chordal(d)
    ys = np.asarray(ys, dtype=float)
    chain = slit_chain(d, freeze)
    m = len(ys)
    lam = np.ascontiguousarray(np.repeat(chain.lam_star[:, None], m, axis=1))
    start_re = np.ascontiguousarray(np.repeat(d.values[1:, None], m, axis=1))
    start_im = np.ascontiguousarray(np.broadcast_to(ys, lam.shape))
    _, im, pr, pi = _kernels.inverse_tips(lam, chain.dt, start_re, start_im, True)
    if np.any(im < 0) or not np.all(np.isfinite(pr)):
        raise BranchFailure("derivative sweep left the half-plane")
    return np.hypot(pr, pi)


def membership_L(
    d: Driver,
    n: int,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    beta: float = DEFAULT_BETA,
    y_grid: int = 8,
) -> TightnessReport:
    """Discrete check of ``|fhat'_t(iy)| <= psi(n) y^-beta``.

    The bound is tested at every knot ``t_k`` and on ``y_grid`` geometric
    points in ``[1/(sqrt(n) y_grid), 1/sqrt(n)]``; ``y = 0`` itself is
    excluded because the derivative degenerates there.
    """
    if abs(d.T - 1.0) > 1e-12:
        raise BadHorizon(f"membership is defined for T = 1, got T = {d.T}")
    y_max = 1.0 / math.sqrt(n)
    y_min = y_max / y_grid
    ys = np.geomspace(y_min, y_max, y_grid)
    bound = psi_growth(n, c1, c2)
    # t = 0 contributes |fhat'| = 1
    ratio = float(np.max(ys**beta)) / bound
    if not d.is_empty:
        deriv = fhat_derivative_grid(d, ys)
        ratio = max(ratio, float(np.max(deriv * ys**beta)) / bound)
    return TightnessReport(
        n=n,
        in_H="not-evaluated",
        in_L=bool(ratio <= 1.0),
        worst_modulus_ratio=ratio,
        constants={"c1": c1, "c2": c2, "beta": beta},
        grid={"t_points": len(d.times), "y_points": y_grid, "y_min": y_min, "y_max": y_max},
    )


def _polyline(polyline) -> np.ndarray:
    if isinstance(polyline, Trace):
        return polyline.points
    return np.asarray(polyline, dtype=complex).ravel()


def _unzip_raw(polyline):
    pts = _polyline(polyline)
    if len(pts) < 2:
        raise DegenerateSegment("need at least one segment")
    if pts[0] != 0:
        raise NotInUpperHalfPlane("polyline must start at 0")
    if np.any(pts[1:].imag <= 0):
        raise NotInUpperHalfPlane("vertices after the first must lie in the open upper half-plane")
    from .geometry import segments_intersect

    if len(pts) > 2 and segments_intersect(pts):
        raise NotSimple("polyline intersects itself")
    knots, heights, bad = _kernels.unzip(pts.real.copy(), pts.imag.copy(), 1e-300)
    if bad >= 0:
        raise DegenerateSegment(f"vertex {bad} mapped onto the real axis")
    return knots, heights


def unzip_curve(polyline) -> Driver:
    """Inverse Loewner transform of a simple polyline from 0 into the half-plane.

    Each step maps the next vertex ``x + iy`` to ``x`` by the vertical slit
    map of height ``y``: capacity grows by ``y^2/4`` and the driver knot is
    ``x``.
    """
    knots, heights = _unzip_raw(polyline)
    times = np.concatenate(([0.0], np.cumsum(heights / 4.0)))
    values = np.concatenate(([0.0], knots))
    return make_driver(times, values, "chordal")


def hcap_of_polyline(polyline) -> float:
    """Half-plane capacity ``sum y_k^2 / 2`` of the unzipped polyline."""
    _, heights = _unzip_raw(polyline)
    return float(np.sum(heights) / 2.0)
