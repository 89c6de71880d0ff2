"""Seeded Monte Carlo experiments.

Every sample ``i`` of cell ``c`` draws from ``SeedSequence([seed, c, i])``.
Samples are grouped in fixed-size chunks that may run in worker processes;
chunk results are combined in chunk order, so outputs do not depend on the
number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bessel, radial
from .chordal import Trace, forward_points
from .drivers import DEFAULT_BETA, DEFAULT_C1, DEFAULT_C2, DEFAULT_C3, make_driver, modulus_membership_H, uniform_times
from .chordal import membership_L
from .geometry import ReturnEventSpec, return_event_hit
from .rng import substream

CHUNK = 500
Z95 = 1.959963984540054
DEFAULT_KAPPAS = (1.0, 0.5, 0.25, 0.125)


@dataclass(frozen=True)
class Event:
    """Event predicate on finite traces.

    ``kind`` is ``"cone"`` (leave the cone ``theta < arg z < pi - theta`` at
    some vertex with ``|z| >= r``), ``"return"`` or ``"target"`` (enter the
    ball of radius ``r`` around ``1 + i``).
    """

    kind: str
    theta: float = math.pi / 3
    r: float = 1.0
    n: int = 1
    N: int = 2
    mode: str = "chordal"
    T: float | None = None

    @property
    def trace_mode(self) -> str:
        return self.mode if self.kind == "return" else "chordal"

    @property
    def horizon(self) -> float:
        if self.T is not None:
            return float(self.T)
        if self.kind == "return":
            return float(self.N**2) if self.mode == "chordal" else float(self.N + 3)
        return 1.0

    def describe(self) -> dict:
        d = {"kind": self.kind, "T": self.horizon}
        if self.kind == "cone":
            d.update(theta=self.theta, r=self.r)
        elif self.kind == "target":
            d.update(r=self.r, center=[1.0, 1.0])
        else:
            d.update(n=self.n, N=self.N, mode=self.mode)
        return d


@dataclass(frozen=True)
class RateEstimate:
    kappa_grid: tuple
    rows: list
    event: dict
    extrapolation: dict | None = None


def wilson(hits: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    den = 1 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, center - half), min(1.0, center + half)


def map_chunks(fn, tasks, workers: int = 1):
    """``[fn(t) for t in tasks]``, optionally in worker processes, order preserved."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _chunks(samples: int, size: int = CHUNK):
    return [(s, min(s + size, samples)) for s in range(0, samples, size)]


def driver_batch(kappa: float, T: float, n_steps: int, seed: int, cell: int, start: int, stop: int) -> np.ndarray:
    """Brownian knot values for samples ``start..stop-1`` of a cell, shape (m, n+1)."""
    out = np.zeros((stop - start, n_steps + 1))
    scale = math.sqrt(kappa * T / n_steps)
    for row, i in enumerate(range(start, stop)):
        out[row, 1:] = np.cumsum(substream(seed, cell, i).standard_normal(n_steps) * scale)
    return out


def trace_batch(mode: str, kappa: float, T: float, n_steps: int, seed: int, cell: int, start: int, stop: int):
    times = uniform_times(T, n_steps)
    values = driver_batch(kappa, T, n_steps, seed, cell, start, stop)
    if mode == "chordal":
        return times, forward_points(times, values)
    return times, radial.radial_forward_batch(times, values)


def cone_hits(pts: np.ndarray, theta: float, r: float) -> np.ndarray:
    ang = np.angle(pts)
    far = np.abs(pts) >= r
    outside = (ang <= theta) | (ang >= math.pi - theta)
    return np.any(far & outside, axis=1)


def ball_hits(pts: np.ndarray, center: complex, r: float) -> np.ndarray:
    a = pts[:, :-1]
    d = np.diff(pts, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(((center - a) * d.conj()).real / np.abs(d) ** 2, 0.0, 1.0)
    s = np.nan_to_num(s)
    return np.any(np.abs(a + s * d - center) < r, axis=1)


def return_statuses(times, pts, spec: ReturnEventSpec) -> list[str]:
    return [return_event_hit(Trace(p, times, spec.mode), spec).status for p in pts]


def _rate_chunk(args):
    event, kappa, n_steps, seed, cell, start, stop = args
    times, pts = trace_batch(event.trace_mode, kappa, event.horizon, n_steps, seed, cell, start, stop)
    if event.kind == "cone":
        hit = cone_hits(pts, event.theta, event.r)
        return int(hit.sum()), 0
    if event.kind == "target":
        return int(ball_hits(pts, 1.0 + 1.0j, event.r).sum()), 0
    st = return_statuses(times, pts, ReturnEventSpec(event.n, event.N, event.mode))
    return st.count("hit"), st.count("not-yet")


def _cell_row(kappa, samples, hits, not_yet=0):
    lo, hi = wilson(hits, samples)
    p = hits / samples
    if hits == 0:
        klogp, flag = None, "zero-hits"
    else:
        klogp, flag = kappa * math.log(p), "ok"
    return {
        "kappa": kappa,
        "samples": samples,
        "hits": hits,
        "p_hat": p,
        "ci_lo": lo,
        "ci_hi": hi,
        "klogp": klogp,
        "flag": flag,
        "not_yet": not_yet,
    }


def rate_cell(event: Event, kappa: float, cell: int, samples: int, n_steps: int, seed: int, workers: int = 1) -> dict:
    tasks = [(event, kappa, n_steps, seed, cell, a, b) for a, b in _chunks(samples)]
    res = map_chunks(_rate_chunk, tasks, workers)
    return _cell_row(kappa, samples, sum(r[0] for r in res), sum(r[1] for r in res))


def rate_experiment(
    event: Event,
    kappa_grid=DEFAULT_KAPPAS,
    samples: int = 1000,
    n_steps: int = 256,
    seed: int = 0,
    workers: int = 1,
) -> RateEstimate:
    """Estimate ``p(kappa)`` and ``kappa log p`` over a decreasing kappa grid.

    Cells with zero hits are flagged and get no ``kappa log p``.  An affine
    fit of ``kappa log p`` in ``kappa`` is attached when two or more cells
    have hits; its intercept is a heuristic extrapolation only.
    """
    grid = tuple(float(k) for k in kappa_grid)
    if any(k <= 0 for k in grid) or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("kappa grid must be positive and strictly decreasing")
    if samples < 1000:
        warnings.warn("fewer than 1000 samples per cell", stacklevel=2)
    rows = [rate_cell(event, k, c, samples, n_steps, seed, workers) for c, k in enumerate(grid)]
    ok = [r for r in rows if r["klogp"] is not None]
    fit = None
    if len(ok) >= 2:
        x = np.array([r["kappa"] for r in ok])
        y = np.array([r["klogp"] for r in ok])
        slope, intercept = np.polyfit(x, y, 1)
        fit = {
            "slope": float(slope),
            "intercept": float(intercept),
            "residuals": [float(v) for v in y - (slope * x + intercept)],
        }
    return RateEstimate(grid, rows, event.describe(), fit)


def cone_bound(theta: float) -> float:
    """``8 log sin(theta)``: upper limit of ``kappa log p`` for leaving the cone."""
    return 8.0 * math.log(math.sin(theta))


def cone_check(est: RateEstimate, theta: float) -> dict:
    """One-sided bound at the smallest kappa with hits.

    Passes when ``kappa log p_hat <= 8 log sin(theta) + width``, ``width``
    being the ``kappa log`` span of the Wilson interval.
    """
    bound = cone_bound(theta)
    ok = [r for r in est.rows if r["hits"] > 0]
    if not ok:
        return {"bound": bound, "kappa": None, "pass": False, "reason": "no cell with hits"}
    r = min(ok, key=lambda r: r["kappa"])
    width = r["kappa"] * (math.log(r["ci_hi"]) - math.log(max(r["ci_lo"], 1e-300)))
    return {
        "bound": bound,
        "kappa": r["kappa"],
        "klogp": r["klogp"],
        "width": width,
        "pass": bool(r["klogp"] <= bound + width),
    }


# ------------------------------------------------------------------ return


def _return_chunk(args):
    mode, n, N_list, kappa, T, n_steps, seed, start, stop = args
    times, pts = trace_batch(mode, kappa, T, n_steps, seed, 0, start, stop)
    out = []
    for N in N_list:
        st = return_statuses(times, pts, ReturnEventSpec(n, N, mode))
        out.append((st.count("hit"), st.count("no-return"), st.count("not-yet")))
    return out


def return_prob_experiment(
    mode: str = "chordal",
    n: int = 1,
    N_list=(2, 4),
    kappa: float = 3.0,
    samples: int = 10_000,
    horizon_T: float | None = None,
    seed: int = 0,
    n_steps: int = 256,
    slack: float = 0.5,
    workers: int = 1,
) -> dict:
    """Return probability against ``N`` on one shared set of traces.

    The horizon defaults to ``max(N)^2`` (chordal) or ``max(N) + 3``
    (radial).  Because every ``N`` is scored on the same traces, the
    events are nested and ``p_hat`` is monotone in ``N`` by construction.
    PASS iff the least-squares slope of ``log p_hat`` against
    ``log(N/n)`` is at most ``-(8/kappa - 1) + slack``.
    """
    N_list = tuple(sorted(int(v) for v in N_list))
    for N in N_list:
        ReturnEventSpec(n, N, mode)
    if horizon_T is None:
        horizon_T = float(max(N_list) ** 2) if mode == "chordal" else float(max(N_list) + 3)
    tasks = [(mode, n, N_list, kappa, horizon_T, n_steps, seed, a, b) for a, b in _chunks(samples)]
    res = map_chunks(_return_chunk, tasks, workers)
    rows = []
    for j, N in enumerate(N_list):
        hits = sum(r[j][0] for r in res)
        no_ret = sum(r[j][1] for r in res)
        not_yet = sum(r[j][2] for r in res)
        lo, hi = wilson(hits, samples)
        rows.append(
            {
                "N": N,
                "samples": samples,
                "hits": hits,
                "no_return": no_ret,
                "not_yet": not_yet,
                "p_hat": hits / samples,
                "ci_lo": lo,
                "ci_hi": hi,
                "flag": "ok" if hits else "zero-hits",
            }
        )
    ok = [r for r in rows if r["hits"] > 0]
    slope = None
    if len(ok) >= 2:
        x = np.log([r["N"] / n for r in ok])
        y = np.log([r["p_hat"] for r in ok])
        slope = float(np.polyfit(x, y, 1)[0])
    target = -(8.0 / kappa - 1.0) + slack
    monotone = all(b["p_hat"] <= a["ci_hi"] for a, b in zip(rows, rows[1:]))
    return {
        "mode": mode,
        "n": n,
        "kappa": kappa,
        "T": horizon_T,
        "n_steps": n_steps,
        "rows": rows,
        "slope": slope,
        "slope_target": target,
        "monotone": monotone,
        "pass": bool(slope is not None and slope <= target and monotone),
    }


# ------------------------------------------------------------------ RN


def _rn_chunk(args):
    kappa, T, delta, n_steps, seed, start, stop = args
    w = np.empty(stop - start)
    tau = np.full(stop - start, np.nan)
    t_end = np.empty(stop - start)
    for row, i in enumerate(range(start, stop)):
        path = radial.simulate_theta(kappa, T, n_steps, delta, substream(seed, 0, i), law="chordal")
        w[row] = radial.rn_weight(path, kappa, path.T, delta).value
        t_end[row] = path.T
        if path.stopped:
            tau[row] = path.T
    return w, tau, t_end


def rn_martingale_check(
    kappa: float = 2.0, T: float = 0.5, delta: float = 0.3, samples: int = 10_000, seed: int = 0, n_steps: int = 500, workers: int = 1
) -> dict:
    """Mean radial/chordal density at ``tau_delta ^ T`` over chordal-law Theta paths.

    The stopped density is a bounded martingale, so its mean is 1.  PASS iff
    the sample mean is within 3 standard errors of 1 (exactly 1 when the
    spread is 0).
    """
    if not 0 < delta < 1 or T < 0:
        raise ValueError("need 0 < delta < 1 and T >= 0")
    if T == 0:
        w = np.ones(samples)
        tau = np.full(samples, np.nan)
        t_end = np.zeros(samples)
    else:
        res = map_chunks(_rn_chunk, [(kappa, T, delta, n_steps, seed, a, b) for a, b in _chunks(samples)], workers)
        w = np.concatenate([r[0] for r in res])
        tau = np.concatenate([r[1] for r in res])
        t_end = np.concatenate([r[2] for r in res])
    stopped = int(np.sum(~np.isnan(tau)))
    mean = float(w.mean())
    sigma = float(w.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    ok = abs(mean - 1.0) <= 3 * sigma if sigma > 0 else mean == 1.0
    return {
        "kappa": kappa,
        "T": T,
        "delta": delta,
        "samples": samples,
        "n_steps": n_steps,
        "mean": mean,
        "sigma": sigma,
        "variance": float(w.var()),
        "stopped_fraction": stopped / samples,
        "max_weight": float(w.max()),
        "bound": radial.rn_weight_bound(kappa, T, delta) if kappa <= 4 else None,
        "pass": bool(ok),
        "per_sample": {"t": t_end, "tau_delta": tau, "weight": w},
    }


# ------------------------------------------------------------------ tightness


def _tight_chunk(args):
    kappa, n, consts, n_steps, seed, cell, start, stop, eval_L = args
    times = uniform_times(1.0, n_steps)
    values = driver_batch(kappa, 1.0, n_steps, seed, cell, start, stop) if kappa > 0 else np.zeros((stop - start, n_steps + 1))
    vh = vl = 0
    for v in values:
        d = make_driver(times, v, "chordal")
        vh += not modulus_membership_H(d, n, consts["c3"]).in_H
        if eval_L:
            vl += not membership_L(d, n, consts["c1"], consts["c2"], consts["beta"]).in_L
    return vh, vl


def tightness_experiment(
    kappa_grid=(1.0, 0.5, 0.2),
    n_list=(8, 32, 128),
    constants=None,
    samples: int = 1000,
    seed: int = 0,
    n_steps: int = 1024,
    eval_L: bool = False,
    workers: int = 1,
    only_cell: int | None = None,
) -> list[dict]:
    """Violation frequencies of H(n) (and optionally L(n)) for Brownian drivers on [0, 1].

    ``bound_shape`` is ``(n/2)^{1 - 1/(2 kappa)}``, the tail bound with its
    unknown constant set to 1: a shape reference only.  Cells are numbered
    kappa-major; ``only_cell`` recomputes a single one.
    """
    consts = {"c1": DEFAULT_C1, "c2": DEFAULT_C2, "c3": DEFAULT_C3, "beta": DEFAULT_BETA}
    consts.update(constants or {})
    rows = []
    cell = 0
    for kappa in kappa_grid:
        for n in n_list:
            if only_cell is not None and cell != only_cell:
                cell += 1
                continue
            tasks = [(kappa, n, consts, n_steps, seed, cell, a, b, eval_L) for a, b in _chunks(samples)]
            res = map_chunks(_tight_chunk, tasks, workers)
            vh = sum(r[0] for r in res)
            vl = sum(r[1] for r in res)
            rows.append(
                {
                    "kappa": kappa,
                    "n": n,
                    "samples": samples,
                    "viol_H": vh,
                    "freq_H": vh / samples,
                    "viol_L": vl if eval_L else None,
                    "freq_L": vl / samples if eval_L else None,
                    "bound_shape": (n / 2) ** (1 - 1 / (2 * kappa)) if kappa > 0 else 0.0,
                    "cell": cell,
                }
            )
            cell += 1
    return rows


# ------------------------------------------------------------------ Bessel


def bessel_check(a=2.0, kappa=2.0, x0=1.0, delta=0.5, samples=100_000, dt=1e-4, seed=0) -> dict:
    """Hit frequency against the exact probability; PASS iff within 3 binomial sigma."""
    est = bessel.bessel_hit_ensemble(a, kappa, x0, delta, samples, dt, seed)
    ok = est.p_exact is not None and abs(est.p_hat - est.p_exact) <= 3 * est.sigma
    return {
        "p_hat": est.p_hat,
        "p_exact": est.p_exact,
        "sigma": est.sigma,
        "hits": est.hits,
        "samples": samples,
        "escaped": est.escaped,
        "bias_bound": est.bias_bound,
        "pass": bool(ok),
    }


@dataclass
class CoverageResult:
    coverage: float
    replications: int
    p: float
    samples: int
    covered: list = field(default_factory=list)


def wilson_coverage(p: float, samples: int = 200, replications: int = 200, seed: int = 0) -> CoverageResult:
    """Share of Wilson intervals that contain ``p`` over exact Bernoulli cells."""
    covered = []
    for r in range(replications):
        hits = int(substream(seed, r).binomial(samples, p))
        lo, hi = wilson(hits, samples)
        covered.append(lo <= p <= hi)
    return CoverageResult(float(np.mean(covered)), replications, p, samples, covered)
