"""Radial Loewner machinery in the unit disk, from 1 to 0.

Convention: ``d/dt g_t(z) = g_t(z) (e^{i w_t} + g_t(z)) / (e^{i w_t} - g_t(z))``
so that ``g_t'(0) = e^t`` and ``cap(K_t) = t``.

Theta process
-------------
With ``e^{2i Theta_t} = g_t(-1) / e^{i w_t}`` one has, in capacity time,
``d Theta = (1/2) cot(Theta) dt - (1/2) dw``.  Hence

* radial SLE (``w = -sqrt(kappa) B``):
  ``d Theta = (1/2) cot(Theta) dt + (sqrt(kappa)/2) dB``, which is
  ``2 cot(Theta) ds + sqrt(kappa) dB_s`` on the clock ``s = t/4``;
* chordal SLE aimed at -1, seen radially:
  ``d Theta = ((kappa - 4)/4) cot(Theta) dt + (sqrt(kappa)/2) dB``.

The density of radial with respect to chordal SLE on ``[0, tau_delta ^ t]``
is the martingale ::

    |sin Theta_t|^{6/kappa - 1}
      * exp((6 - kappa)/(4 kappa) * ((kappa - 2)/2 * t + int_0^t ds / sin^2 Theta_s))

All ``ThetaPath`` times are capacity times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chordal import Swallowed, Trace
from .drivers import Driver, uniform_times
from .errors import (
    BadPoint,
    ModeMismatch,
    OutOfRange,
    PastStoppingTime,
    SingularStep,
    TargetSwallowed,
)
from .rng import as_generator

C_EPS = 0.1
STEP_FRAC = 0.05
GUARD = 1e-13
SWALLOW_TOL = 1e-10
MAX_FLOW_STEPS = 10_000_000
POOL_SIZE = 256

# Theta drift coefficient (times cot) per law, in capacity time
LAWS = ("radial", "chordal")


@dataclass(frozen=True, eq=False)
class ThetaPath:
    times: np.ndarray
    values: np.ndarray
    kappa: float
    origin: str  # "simulated-sde" or "extracted-from-trace"
    stopped: bool = False
    law: str = "radial"

    @property
    def tau(self) -> float | None:
        """Stopping time if the path was stopped, else None."""
        return float(self.times[-1]) if self.stopped else None

    @property
    def T(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class RNWeight:
    value: float
    t: float
    integral_term: float
    stopped_at_tau_delta: bool


@dataclass(frozen=True)
class CapacityCheck:
    value: float
    numerical: float
    discrepancy: float


def _require_radial(d: Driver) -> None:
    if d.mode != "radial":
        raise ModeMismatch(f"expected a radial driver, got {d.mode}")


def _eps(d: Driver, c_eps: float) -> float:
    return c_eps * math.sqrt(float(np.min(np.diff(d.times))))


def radial_forward(d: Driver, c_eps: float = C_EPS, step_frac: float = STEP_FRAC) -> Trace:
    """Trace by regularized reverse flow.

    Tip k integrates ``z' = -z (e^{iw} + z) / (e^{iw} - z)`` backwards over
    ``[0, t_k]`` from ``e^{i w(t_k)} (1 - eps)``, ``eps = c_eps sqrt(dt)``,
    with RK4 substeps of size ``step_frac * |e^{iw} - z|^2``.  Cost is
    O(n^2) steps plus the extra substeps close to the singularity.
    """
    _require_radial(d)
    if d.is_empty:
        return Trace(np.array([1.0 + 0j]), d.times.copy(), "radial")
    pts, status = _kernels.radial_tips(d.times, d.values, _eps(d, c_eps), step_frac, GUARD)
    if status >= 0:
        raise SingularStep(f"reverse flow for tip {status} hit the singularity")
    return Trace(pts, d.times.copy(), "radial")


def radial_forward_batch(times, values, c_eps: float = C_EPS, step_frac: float = STEP_FRAC) -> np.ndarray:
    """Tips for a batch of radial drivers on one grid; values has shape (batch, knots)."""
    times = np.asarray(times, dtype=float)
    values = np.ascontiguousarray(np.atleast_2d(values), dtype=float)
    eps = c_eps * math.sqrt(float(np.min(np.diff(times))))
    pts, status = _kernels.radial_tips_batch(times, values, eps, step_frac, GUARD)
    bad = np.nonzero(status >= 0)[0]
    if len(bad):
        raise SingularStep(f"reverse flow hit the singularity for batch member {bad[0]}")
    return pts


def radial_self_convergence(d: Driver, c_eps: float = C_EPS) -> dict:
    """Final-tip shift under halving ``eps`` and under halving the step."""
    base = radial_forward(d, c_eps).points[-1]
    half_eps = radial_forward(d, c_eps / 2).points[-1]
    fine_t = uniform_times(d.T, 2 * d.n_steps) if _uniform(d) else _refine_times(d.times)
    fine = Driver(fine_t, d(fine_t), "radial")
    half_dt = radial_forward(fine, c_eps).points[-1]
    return {"tip": base, "eps_shift": abs(half_eps - base), "dt_shift": abs(half_dt - base)}


def _uniform(d: Driver) -> bool:
    dt = np.diff(d.times)
    return bool(np.allclose(dt, dt[0]))


def _refine_times(t: np.ndarray) -> np.ndarray:
    mid = 0.5 * (t[:-1] + t[1:])
    return np.sort(np.concatenate((t, mid)))


def _flow(d: Driver, z: complex, t: float, on_circle: bool):
    path, filled, status, hit = _kernels.radial_flow(
        d.times, d.values, t, complex(z), STEP_FRAC, SWALLOW_TOL, on_circle, MAX_FLOW_STEPS
    )
    if status == 2:
        raise SingularStep("forward flow left the closed disk")
    if status == 3:
        raise SingularStep("forward flow exceeded its step budget")
    return path[:filled], status, hit


def radial_gt_eval(d: Driver, z: complex, t: float):
    """Mapping-out function ``g_t(z)`` by forward RK4, or :class:`Swallowed`."""
    _require_radial(d)
    z = complex(z)
    if abs(z) > 1.0 + 1e-12 or abs(z - 1.0) < 1e-15:
        raise BadPoint(f"need |z| <= 1 and z != 1, got {z}")
    if not 0.0 <= t <= d.T:
        raise OutOfRange(f"t = {t} outside [0, {d.T}]")
    if t == 0.0 or z == 0:
        return z
    on_circle = abs(abs(z) - 1.0) < 1e-12
    path, status, hit = _flow(d, z, t, on_circle)
    if status == 1:
        return Swallowed(float(hit))
    # the flow stops exactly at t, knot or not
    return complex(path[-1])


def log_capacity(d: Driver, t: float, h: float = 1e-6) -> CapacityCheck:
    """``cap(K_t) = t`` together with ``log|g_t(h)/h|`` as a numerical check."""
    _require_radial(d)
    if not 0.0 <= t <= d.T:
        raise OutOfRange(f"t = {t} outside [0, {d.T}]")
    if t == 0.0:
        return CapacityCheck(0.0, 0.0, 0.0)
    g = radial_gt_eval(d, complex(h, 0.0), t)
    if isinstance(g, Swallowed):
        raise SingularStep("probe point near 0 was swallowed")
    num = math.log(abs(g) / h)
    return CapacityCheck(float(t), num, abs(num - t))


def _law_coeffs(law: str, kappa: float):
    if law == "radial":
        return 0.5, 0.5 * math.sqrt(kappa)
    if law == "chordal":
        return 0.25 * (kappa - 4.0), 0.5 * math.sqrt(kappa)
    raise ValueError(f"law must be one of {LAWS}")


def _theta_from_normals(kappa, T, n, delta_stop, law, rng) -> ThetaPath:
    mu, sigma = _law_coeffs(law, kappa)
    z = rng.standard_normal(n)
    pool = rng.standard_normal(POOL_SIZE)
    vals, stop, flag = _kernels.theta_path(0.5 * math.pi, mu, sigma, T / n, z, pool, delta_stop)
    times = uniform_times(T, n)[: len(vals)]
    return ThetaPath(times, vals, kappa, "simulated-sde", flag != 0, law)


def simulate_theta(
    kappa: float, T: float, n: int, delta_stop: float = 0.0, seed=None, law: str = "radial"
) -> ThetaPath:
    """Euler scheme for Theta from pi/2, stopped at the first knot with ``sin <= delta_stop``.

    ``law="radial"`` is ``2 cot(Theta) ds + sqrt(kappa) dB_s`` reported on
    the capacity clock ``t = 4 s``; ``law="chordal"`` is the same angle
    under chordal SLE.  Moves that would leave (0, pi) are split and
    retried; a path that still cannot stay inside is stopped there.
    """
    if kappa <= 0 or T <= 0 or n < 1 or not 0.0 <= delta_stop < 1.0:
        raise ValueError("need kappa > 0, T > 0, n >= 1 and 0 <= delta_stop < 1")
    return _theta_from_normals(kappa, T, n, delta_stop, law, as_generator(seed))


def simulate_theta_batch(kappa, T, n, delta_stop, rngs, law: str = "radial") -> list[ThetaPath]:
    """One path per generator in ``rngs`` (each path owns its substream)."""
    return [_theta_from_normals(kappa, T, n, delta_stop, law, as_generator(r)) for r in rngs]


def theta_from_trace(d: Driver) -> ThetaPath:
    """Theta read off the driver via ``e^{2i Theta} = g_t(-1) / e^{i w_t}``.

    ``g_t(-1)`` is tracked on the circle by the forward flow.  The angle of
    ``g_t(-1) e^{-i w_t}`` is taken in (0, 2 pi); it cannot cross 0 before
    -1 is swallowed, so no unwrapping is needed.
    """
    _require_radial(d)
    path, status, hit = _flow(d, -1.0 + 0j, d.T, True)
    if status == 1:
        raise TargetSwallowed(f"-1 swallowed at t = {hit}")
    rel = np.mod(np.angle(path * np.exp(-1j * d.values)), 2 * math.pi)
    theta = 0.5 * rel
    if np.any(theta <= 0) or np.any(theta >= math.pi):
        raise TargetSwallowed("-1 reached the driving point")
    return ThetaPath(d.times.copy(), theta, float("nan"), "extracted-from-trace", False, "driver")


def _weight_parts(times, values, kappa, literal):
    s2 = np.sin(values) ** 2
    integral = float(np.sum(0.5 * (1.0 / s2[1:] + 1.0 / s2[:-1]) * np.diff(times))) if len(times) > 1 else 0.0
    t = float(times[-1])
    b = (6.0 - kappa) / (4.0 * kappa)
    lin = (kappa - 4.0) * t if literal else 0.5 * (kappa - 2.0) * t
    log_w = b * (lin + integral) + (6.0 / kappa - 1.0) * math.log(abs(math.sin(values[-1])))
    return log_w, integral


def rn_weight(theta: ThetaPath, kappa: float, t: float, delta: float, literal: bool = False) -> RNWeight:
    """Radial-to-chordal density at time ``t`` along a Theta path.

    The integral is trapezoidal on the path grid, up to ``t`` (linearly
    interpolated end).  ``literal=True`` swaps the linear-in-``t`` term for
    ``(kappa - 4) t``, a variant that is not a martingale under chordal SLE
    and is kept only for comparison.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if t < 0 or t > theta.T + 1e-12:
        raise PastStoppingTime(f"t = {t} beyond the path end {theta.T}")
    mask = theta.times < t
    times = np.append(theta.times[mask], t)
    values = np.append(theta.values[mask], np.interp(t, theta.times, theta.values))
    log_w, integral = _weight_parts(times, values, kappa, literal)
    stopped = bool(theta.stopped and abs(t - theta.T) < 1e-12)
    return RNWeight(math.exp(log_w), float(t), integral, stopped)


def rn_weight_bound(kappa: float, T: float, delta: float) -> float:
    """Upper bound of the weight on ``{min sin Theta >= delta}`` over ``[0, T]``, for kappa <= 4.

    ``c exp(3T / (2 delta^2 kappa))`` with
    ``c = exp(T max(0, (6 - kappa)(kappa - 2) / (8 kappa)))``.
    """
    c = math.exp(T * max(0.0, (6.0 - kappa) * (kappa - 2.0) / (8.0 * kappa)))
    return c * math.exp(3.0 * T / (2.0 * delta * delta * kappa))
