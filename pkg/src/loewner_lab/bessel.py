"""Bessel-type SDEs ``dX = (a/X) dt + sqrt(kappa) dB`` and their hitting estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import OutOfDomain
from .rng import as_generator, substream

POOL_SIZE = 1024
R_MAX = 0.05
ESCAPE_FACTOR = 1000.0
# Z splits its steps near 0 much more often than the Bessel paths do
Z_POOL_SIZE = 1 << 14


@dataclass(frozen=True, eq=False)
class BesselPath:
    a: float
    kappa: float
    x0: float
    times: np.ndarray
    values: np.ndarray
    hit_zero_at: float | None = None
    hit_level_records: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ZPath:
    """Shared-noise pair (Z, Theta) on the clock of ``dTheta = 2 cot(Theta) ds + sqrt(kappa) dB``."""

    kappa: float
    times: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    cut: bool = False


@dataclass(frozen=True)
class HitEstimate:
    p_hat: float
    hits: int
    samples: int
    sigma: float
    p_exact: float | None
    escaped: int
    unresolved: int
    bias_bound: float


@dataclass(frozen=True)
class StaySmallEstimate:
    p_hat: float
    stays: int
    samples: int
    sigma: float
    bound: float


def _validate(a, kappa, x0, dt, T):
    if x0 == 0 or dt <= 0 or T <= 0 or kappa < 0:
        raise ValueError("need x0 != 0, dt > 0, T > 0 and kappa >= 0")


def simulate_bessel(a: float, kappa: float, x0: float, dt: float, T: float, seed=None, levels=(), noise=None) -> BesselPath:
    """Euler-Maruyama path on ``[0, T]``.

    A step that would cross 0 is split by Brownian bridges up to 20 times
    before a zero hit is declared; the path is cut at the hit.  Level
    records hold the first time ``|X| <= level`` (linear interpolation
    inside the crossing step).  ``noise`` overrides the unit normals for
    coupling experiments; it must hold ``ceil(T/dt)`` values.
    """
    _validate(a, kappa, x0, dt, T)
    lv = np.asarray(sorted(levels), dtype=float)
    if np.any(lv <= 0):
        raise ValueError("levels must be positive")
    n = int(math.ceil(T / dt - 1e-9))
    rng = as_generator(seed)
    z = rng.standard_normal(n) if noise is None else np.asarray(noise, dtype=float)[:n]
    pool = rng.standard_normal(POOL_SIZE)
    vals, t_zero, rec = _kernels.bessel_path(a, kappa, x0, T / n, z, pool, lv)
    times = np.linspace(0.0, T, n + 1)[: len(vals)]
    if t_zero >= 0:
        times[-1] = t_zero
    records = {float(level): (float(r) if r >= 0 else None) for level, r in zip(lv, rec)}
    return BesselPath(a, kappa, x0, times, vals, t_zero if t_zero >= 0 else None, records)


def exact_hit_probability(a: float, kappa: float, x: float, delta: float) -> float:
    """``P[inf_t |X^x_t| <= delta] = (delta/|x|)^{2a/kappa - 1}`` for ``kappa < 2a``."""
    if not 0 < kappa < 2 * a:
        raise OutOfDomain(f"need 0 < kappa < 2a, got kappa={kappa}, a={a}")
    if x == 0 or not 0 < delta <= abs(x):
        raise OutOfDomain("need x != 0 and 0 < delta <= |x|")
    return (delta / abs(x)) ** (2.0 * a / kappa - 1.0)


def path_seeds(master: int, cell: int, samples: int, start: int = 0) -> np.ndarray:
    """One 32-bit seed per path, derived from ``SeedSequence([master, cell, i])``."""
    return np.array(
        [np.random.SeedSequence([master, cell, i]).generate_state(1)[0] for i in range(start, start + samples)],
        dtype=np.int64,
    )


def bessel_hit_ensemble(
    a: float,
    kappa: float,
    x0: float,
    delta: float,
    samples: int,
    dt: float = 1e-4,
    seed: int = 0,
    cell: int = 0,
    escape_factor: float = ESCAPE_FACTOR,
    t_max: float = math.inf,
    r_max: float = R_MAX,
) -> HitEstimate:
    """Monte Carlo estimate of ``P[inf |X^{x0}| <= delta]``.

    Paths run until they hit ``delta`` or escape to ``R = escape_factor |x0|``.
    Escaped paths count as misses; the chance of a later hit is at most
    ``(delta/R)^{2a/kappa - 1}``, reported as ``bias_bound``.  The step is
    ``dt`` near either barrier and grows with the squared distance to it.
    """
    if not 0 < delta < abs(x0):
        raise ValueError("need 0 < delta < |x0|")
    R = escape_factor * abs(x0)
    seeds = path_seeds(seed, cell, samples)
    x = np.full(samples, float(x0))
    status, _, _ = _kernels.bessel_run_batch(a, kappa, x, dt, t_max, delta, R, r_max, seeds)
    hits = int(np.sum((status == 1) | (status == 3)))
    escaped = int(np.sum(status == 2))
    unresolved = int(np.sum(status == 0))
    p_hat = hits / samples
    try:
        p_exact = exact_hit_probability(a, kappa, x0, delta)
        bias = (delta / R) ** (2.0 * a / kappa - 1.0)
    except OutOfDomain:
        p_exact, bias = None, math.nan
    sigma = math.sqrt(p_exact * (1 - p_exact) / samples) if p_exact is not None else math.sqrt(p_hat * (1 - p_hat) / samples)
    return HitEstimate(p_hat, hits, samples, sigma, p_exact, escaped, unresolved, bias)


def lemma_hit_check(a: float, kappa: float, M: float) -> tuple[float, float]:
    """``(P[inf |X^x| <= |x| e^{-M/a}], e^{-M/kappa})`` for ``x = 1``.

    The first entry is at most the second whenever ``kappa <= a``.
    """
    delta = math.exp(-M / a)
    return exact_hit_probability(a, kappa, 1.0, delta), math.exp(-M / kappa)


def stay_small_bound(epsilon: float, t: float, kappa: float) -> float:
    """``sqrt(kappa t / 2 pi) (eps / (2t - eps^2)) exp(-(2t/eps - eps)^2 / (2 kappa t))``.

    Bounds ``P[sup_{[0,t]} |X^x| < eps]`` uniformly in ``x`` (for ``a = 2``).
    """
    if epsilon <= 0 or kappa <= 0 or kappa > 4 or t <= epsilon**2 / 2:
        raise OutOfDomain("need eps > 0, 0 < kappa <= 4 and t > eps^2 / 2")
    pre = math.sqrt(kappa * t / (2 * math.pi)) * epsilon / (2 * t - epsilon**2)
    return pre * math.exp(-((2 * t / epsilon - epsilon) ** 2) / (2 * kappa * t))


def stay_small_mc(
    a: float, kappa: float, x: float, epsilon: float, t: float, samples: int, dt: float = 1e-4, seed: int = 0, cell: int = 0
) -> StaySmallEstimate:
    """Monte Carlo ``P[sup_{[0,t]} |X^x| < eps]`` beside its bound."""
    if not 0 < abs(x) < epsilon:
        raise ValueError("need 0 < |x| < eps")
    seeds = path_seeds(seed, cell, samples)
    xs = np.full(samples, float(x))
    # lo = 0 disables the lower barrier; the step only adapts to eps
    status, _, _ = _kernels.bessel_run_batch(a, kappa, xs, dt, t, 0.0, epsilon, R_MAX, seeds)
    stays = int(np.sum(status == 0))
    p = stays / samples
    return StaySmallEstimate(p, stays, samples, math.sqrt(max(p * (1 - p), 1.0 / samples) / samples), stay_small_bound(epsilon, t, kappa))


def bessel_terminal(a: float, kappa: float, x0, T: float, dt: float, seeds) -> tuple[np.ndarray, np.ndarray]:
    """Values ``X_T`` for a batch of starts; second output flags paths that hit 0 first."""
    x0 = np.ascontiguousarray(np.broadcast_to(np.asarray(x0, dtype=float), (len(seeds),)))
    status, _, final = _kernels.bessel_run_batch(a, kappa, x0, dt, T, 0.0, math.inf, 0.0, np.asarray(seeds, dtype=np.int64))
    return final, status == 3


def q_drift(x):
    """``q(x) = min(2 cot x, 1/x)``."""
    x = np.asarray(x, dtype=float)
    out = np.minimum(2.0 / np.tan(x), 1.0 / x)
    return float(out) if out.ndim == 0 else out


def simulate_Z(kappa: float, T: float, dt: float, seed=None) -> ZPath:
    """Euler run of ``dZ = q(Z) ds + sqrt(kappa) dB`` from pi/2 with its comparison Theta.

    Theta solves ``dTheta = 2 cot(Theta) ds + sqrt(kappa) dB`` with the same
    increments, so ``Z <= Theta`` should hold at every grid point.
    """
    if kappa < 0 or T <= 0 or dt <= 0:
        raise ValueError("need kappa >= 0, T > 0 and dt > 0")
    n = int(math.ceil(T / dt - 1e-9))
    rng = as_generator(seed)
    z = rng.standard_normal(n)
    pool = rng.standard_normal(Z_POOL_SIZE)
    zs, ts, flag = _kernels.z_theta_path(kappa, T / n, z, pool)
    times = np.linspace(0.0, T, n + 1)[: len(zs)]
    return ZPath(kappa, times, zs, ts, flag != 0)


def simulate_Z_batch(kappa: float, T: float, dt: float, master: int, samples: int, cell: int = 0) -> list[ZPath]:
    return [simulate_Z(kappa, T, dt, substream(master, cell, i)) for i in range(samples)]
