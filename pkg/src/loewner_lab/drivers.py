"""Driving functions on discrete capacity-time grids.

A :class:`Driver` is a piecewise-linear real function ``W`` on ``[0, T]``
with ``W(0) = 0``, stored by its knots.  Chordal drivers are the ``lambda``
of the half-plane Loewner equation, radial drivers the ``omega`` of the disk
equation; the mode is only a tag checked by the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadHorizon,
    DegenerateStep,
    LengthMismatch,
    ModeMismatch,
    NonMonotoneTimes,
    NonzeroOrigin,
    OutOfDomain,
    OutOfRange,
)
from .rng import as_generator

MODES = ("chordal", "radial")

# Tightness constants are not pinned numerically; these defaults are a
# convention, not canonical values.
DEFAULT_C1 = 1.0
DEFAULT_C2 = 1.0
DEFAULT_C3 = 1.0
DEFAULT_BETA = 0.5


@dataclass(frozen=True, eq=False)
class Driver:
    times: np.ndarray
    values: np.ndarray
    mode: str = "chordal"

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def is_empty(self) -> bool:
        return self.n_steps == 0

    def __call__(self, t):
        """Evaluate the piecewise-linear interpolant at ``t``."""
        return np.interp(t, self.times, self.values)

    def __repr__(self) -> str:
        return f"Driver(mode={self.mode!r}, T={self.T:g}, n_steps={self.n_steps})"


@dataclass(frozen=True)
class EnergyValue:
    """Dirichlet energy; ``infinite`` is the explicit marker for +inf."""

    value: float
    infinite: bool = False

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value


INFINITE_ENERGY = EnergyValue(value=math.nan, infinite=True)


@dataclass(frozen=True)
class TightnessReport:
    n: int
    in_H: bool | str
    in_L: bool | str
    worst_modulus_ratio: float
    constants: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def make_driver(times, values, mode: str = "chordal") -> Driver:
    """Validate knots and build a :class:`Driver`.

    No normalization is performed: ``times`` must start at 0 and increase
    strictly, and ``values[0]`` must be 0.
    """
    t = np.asarray(times, dtype=float).ravel()
    w = np.asarray(values, dtype=float).ravel()
    if len(t) != len(w):
        raise LengthMismatch(f"{len(t)} times but {len(w)} values")
    if len(t) < 1:
        raise LengthMismatch("a driver needs at least one knot")
    if t[0] != 0.0:
        raise NonMonotoneTimes(f"times must start at 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise NonMonotoneTimes("times must be strictly increasing")
    if w[0] != 0.0:
        raise NonzeroOrigin(f"values[0] must be 0, got {w[0]}")
    t.setflags(write=False)
    w.setflags(write=False)
    return Driver(t, w, _check_mode(mode))


def empty_driver(mode: str = "chordal") -> Driver:
    return make_driver([0.0], [0.0], mode)


def uniform_times(T: float, n_steps: int) -> np.ndarray:
    times = np.linspace(0.0, T, n_steps + 1)
    times[-1] = T
    return times


def brownian_values(kappa: float, T: float, n_steps: int, rng) -> np.ndarray:
    """Knot values of sqrt(kappa) B on a uniform grid, ``W_0 = 0``."""
    rng = as_generator(rng)
    steps = rng.standard_normal(n_steps) * math.sqrt(kappa * T / n_steps)
    return np.concatenate(([0.0], np.cumsum(steps)))


def sample_brownian_driver(kappa: float, T: float, n_steps: int, rng_stream, mode: str = "chordal") -> Driver:
    """Sample ``sqrt(kappa) B`` on ``n_steps`` uniform capacity steps.

    ``rng_stream`` is an integer seed, a ``SeedSequence`` or a
    ``numpy.random.Generator``; the same seed always gives the same driver.
    ``kappa = 0`` yields the zero driver.
    """
    if kappa < 0 or T <= 0 or n_steps < 1:
        raise ValueError("need kappa >= 0, T > 0 and n_steps >= 1")
    values = brownian_values(kappa, T, n_steps, rng_stream)
    return make_driver(uniform_times(T, n_steps), values, mode)


def resample_driver(d: Driver, n_steps: int) -> Driver:
    """Re-knot ``d`` on a uniform grid of ``n_steps`` steps over ``[0, T]``."""
    if d.is_empty:
        return d
    times = uniform_times(d.T, n_steps)
    return make_driver(times, d(times), d.mode)


def scale_driver(d: Driver, c: float) -> Driver:
    """Brownian rescaling ``t -> c t``, ``W -> sqrt(c) W`` (energy preserving)."""
    return make_driver(d.times * c, d.values * math.sqrt(c), d.mode)


def dirichlet_energy(d: Driver) -> EnergyValue:
    """Dirichlet energy ``1/2 int (dW/dt)^2 dt`` of the piecewise-linear driver.

    Exact for the interpolant: ``sum (dW_k)^2 / (2 dt_k)``.
    """
    dt = np.diff(d.times)
    if np.any(dt <= 0):
        raise DegenerateStep("zero-length capacity step")
    dw = np.diff(d.values)
    return EnergyValue(float(np.sum(dw * dw / (2.0 * dt))))


def concat_drivers(d1: Driver, d2: Driver) -> Driver:
    """Driver of the conformal concatenation: ``W1`` then ``W1(T1) + W2(. - T1)``."""
    if d1.mode != d2.mode:
        raise ModeMismatch(f"cannot concatenate {d1.mode} and {d2.mode} drivers")
    if d2.is_empty:
        return d1
    if d1.is_empty:
        return d2
    times = np.concatenate((d1.times, d1.T + d2.times[1:]))
    values = np.concatenate((d1.values, d1.values[-1] + d2.values[1:]))
    return make_driver(times, values, d1.mode)


def truncate_driver(d: Driver, t_end: float) -> Driver:
    """Restriction to ``[0, t_end]`` with an interpolated final knot."""
    if not 0.0 <= t_end <= d.T:
        raise OutOfRange(f"truncation time {t_end} outside [0, {d.T}]")
    if t_end == 0.0:
        return empty_driver(d.mode)
    keep = d.times < t_end
    times = np.append(d.times[keep], t_end)
    values = np.append(d.values[keep], d(t_end))
    return make_driver(times, values, d.mode)


def tail_driver(d: Driver, t_start: float) -> Driver:
    """The re-anchored future ``W(t_start + .) - W(t_start)`` on ``[0, T - t_start]``."""
    if not 0.0 <= t_start <= d.T:
        raise OutOfRange(f"start time {t_start} outside [0, {d.T}]")
    if t_start == d.T:
        return empty_driver(d.mode)
    keep = d.times > t_start
    times = np.concatenate(([0.0], d.times[keep] - t_start))
    w0 = d(t_start)
    values = np.concatenate(([0.0], d.values[keep] - w0))
    return make_driver(times, values, d.mode)


def phi_modulus(delta: float, c3: float = DEFAULT_C3) -> float:
    """``c3 sqrt(delta log(1/delta))`` (natural log), defined for ``0 < delta < 1``."""
    if not 0.0 < delta < 1.0:
        raise OutOfDomain(f"modulus bound needs 0 < delta < 1, got {delta}")
    return c3 * math.sqrt(delta * math.log(1.0 / delta))


def psi_growth(n: int, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> float:
    return c1 * (1.0 + math.log(n)) ** c2


def max_oscillation(times: np.ndarray, values: np.ndarray, delta: float) -> float:
    """``sup_{|t-s| <= delta} |W_t - W_s|`` for the piecewise-linear interpolant.

    The supremum is attained with both ends at knots, or one end at a knot
    and the other exactly ``delta`` away, so those candidates suffice.
    """
    t = np.asarray(times, dtype=float)
    w = np.asarray(values, dtype=float)
    if len(t) < 2:
        return 0.0
    best = 0.0
    # knot pairs within the window
    for off in range(1, len(t)):
        ok = (t[off:] - t[:-off]) <= delta * (1.0 + 1e-12)
        if not ok.any():
            break
        best = max(best, float(np.max(np.abs(w[off:][ok] - w[:-off][ok]))))
    # knot paired with an interpolated point at distance delta
    fwd = t + delta
    m = fwd <= t[-1]
    if m.any():
        best = max(best, float(np.max(np.abs(np.interp(fwd[m], t, w) - w[m]))))
    bwd = t - delta
    m = bwd >= 0.0
    if m.any():
        best = max(best, float(np.max(np.abs(w[m] - np.interp(bwd[m], t, w)))))
    return best


def modulus_membership_H(d: Driver, n: int, c3: float = DEFAULT_C3) -> TightnessReport:
    """Check the Hoelder-type modulus condition at window ``2/n``.

    ``in_H`` holds iff the oscillation over windows of length ``2/n`` is at
    most ``phi(2/n) = c3 sqrt((2/n) log(n/2))``; ``n >= 3`` keeps the log
    positive.
    """
    if abs(d.T - 1.0) > 1e-12:
        raise BadHorizon(f"membership is defined for T = 1, got T = {d.T}")
    if n < 3:
        raise OutOfDomain("need n >= 3 so that 2/n < 1")
    delta = 2.0 / n
    bound = phi_modulus(delta, c3)
    ratio = max_oscillation(d.times, d.values, delta) / bound
    return TightnessReport(
        n=n,
        in_H=bool(ratio <= 1.0),
        in_L="not-evaluated",
        worst_modulus_ratio=ratio,
        constants={"c3": c3},
        grid={"window": delta, "knots": len(d.times)},
    )
