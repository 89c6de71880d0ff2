"""Link patterns and the loop-free part of the multichordal potential.

Chord ``j`` joins marked points ``x_a < x_b`` on the real line.  It is
compared with the chordal picture ``(H; 0, inf)`` through the Moebius map
``m(z) = (z - x_a) / (x_b - z)`` (``x_a -> 0``, ``x_b -> inf``), whose
inverse is ``m^{-1}(w) = (x_a + x_b w) / (1 + w)``.  The Poisson excursion
kernel convention is ``P(x, y) = (y - x)^{-2}``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .chordal import Trace, forward_points, unzip_curve
from .drivers import dirichlet_energy, uniform_times, brownian_values
from .errors import CoincidentPoints, Crossing, NotAPartition
from .geometry import polylines_intersect
from .rng import as_generator, substream

DEFAULT_CHORD_T = 100.0


@dataclass(frozen=True)
class LinkPattern:
    n: int
    pairs: tuple  # sorted tuples (a, b) with a < b, 1-based


@dataclass(frozen=True, eq=False)
class ChordEnsemble:
    pattern: LinkPattern
    chords: list
    marked_points: np.ndarray
    disjoint: bool
    touching: list = field(default_factory=list)


@dataclass(frozen=True)
class PotentialBreakdown:
    total: float
    energy_terms: tuple
    kernel_terms: tuple
    disjoint: bool
    touching: tuple
    loop_term_omitted: bool = True


def _crosses(p, q) -> bool:
    (a, b), (c, d) = p, q
    return a < c < b < d or c < a < d < b


def validate_link_pattern(pairs) -> LinkPattern:
    """Check that ``pairs`` is a planar pair partition of ``{1, ..., 2n}``."""
    norm = []
    for pr in pairs:
        pr = tuple(int(v) for v in pr)
        if len(pr) != 2 or pr[0] == pr[1]:
            raise NotAPartition(f"bad pair {pr}")
        norm.append(tuple(sorted(pr)))
    n = len(norm)
    flat = sorted(v for pr in norm for v in pr)
    if n == 0 or flat != list(range(1, 2 * n + 1)):
        raise NotAPartition(f"pairs do not partition 1..{2 * n}")
    norm.sort()
    for p, q in itertools.combinations(norm, 2):
        if _crosses(p, q):
            raise Crossing(p, q)
    return LinkPattern(n, tuple(norm))


def all_pairings(n: int):
    """Every pair partition of ``{1, ..., 2n}``, planar or not."""

    def rec(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for k, other in enumerate(rest):
            for tail in rec(rest[:k] + rest[k + 1 :]):
                yield [(first, other)] + tail

    yield from rec(list(range(1, 2 * n + 1)))


def count_planar_patterns(n: int) -> int:
    """Number of pairings accepted by :func:`validate_link_pattern`."""
    count = 0
    for pairing in all_pairings(n):
        try:
            validate_link_pattern(pairing)
        except Crossing:
            continue
        count += 1
    return count


def parse_pattern(text: str) -> tuple[LinkPattern, np.ndarray]:
    """Read ``{"n": 2, "pairs": [[1, 2], [3, 4]], "points": [-2, -1, 1, 2]}``."""
    obj = json.loads(text)
    pattern = validate_link_pattern(obj["pairs"])
    if int(obj.get("n", pattern.n)) != pattern.n:
        raise NotAPartition(f"n = {obj['n']} but {pattern.n} pairs given")
    points = _check_points(obj["points"])
    if len(points) != 2 * pattern.n:
        raise ValueError(f"need {2 * pattern.n} marked points, got {len(points)}")
    return pattern, points


def poisson_excursion_kernel(x: float, y: float) -> float:
    if x == y:
        raise CoincidentPoints(f"kernel undefined at x = y = {x}")
    return (y - x) ** -2


def to_chordal(points, xa: float, xb: float) -> np.ndarray:
    z = np.asarray(points, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (z - xa) / (xb - z)


def from_chordal(points, xa: float, xb: float) -> np.ndarray:
    w = np.asarray(points, dtype=complex)
    return (xa + xb * w) / (1.0 + w)


def geodesic_chord(xa: float, xb: float, n_steps: int, T: float = DEFAULT_CHORD_T) -> Trace:
    """Image of the vertical slit ``2i sqrt(t)``: the semicircle over ``[xa, xb]``."""
    t = uniform_times(T, n_steps)
    return Trace(from_chordal(2j * np.sqrt(t), xa, xb), t, "chordal")


def _check_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float).ravel()
    if np.any(np.diff(x) <= 0):
        raise CoincidentPoints("marked points must be distinct and increasing")
    return x


def assemble(pattern: LinkPattern, chords, marked_points) -> ChordEnsemble:
    """Bundle chords with their pattern and record which pairs touch."""
    x = _check_points(marked_points)
    if len(x) != 2 * pattern.n or len(chords) != pattern.n:
        raise ValueError("need 2n marked points and n chords")
    touching = [
        (i, j)
        for i, j in itertools.combinations(range(pattern.n), 2)
        if polylines_intersect(chords[i].points, chords[j].points)
    ]
    return ChordEnsemble(pattern, list(chords), x, not touching, touching)


def sample_independent_chords(pattern: LinkPattern, marked_points, kappa: float, n_steps: int, seed, T: float = DEFAULT_CHORD_T) -> ChordEnsemble:
    """Independent chordal SLE chords, one per pair, transported to their endpoints.

    Chord ``j`` uses the substream ``(seed, j)``.  Each chord is truncated at
    capacity ``T`` of its ``(H; 0, inf)`` picture, so it stops short of
    ``x_b``.  Disjointness is checked afterwards, not enforced.
    """
    x = _check_points(marked_points)
    t = uniform_times(T, n_steps)
    chords = []
    for j, (a, b) in enumerate(pattern.pairs):
        rng = substream(seed, j) if isinstance(seed, (int, np.integer)) else as_generator(seed)
        w = brownian_values(kappa, T, n_steps, rng)
        pts = forward_points(t, w[None, :])[0]
        chords.append(Trace(from_chordal(pts, x[a - 1], x[b - 1]), t.copy(), "chordal"))
    return assemble(pattern, chords, x)


def _subsample(pts: np.ndarray, resolution: int | None) -> np.ndarray:
    if resolution is None or len(pts) <= resolution:
        return pts
    idx = np.unique(np.linspace(0, len(pts) - 1, resolution).round().astype(int))
    return pts[idx]


def partial_potential(e: ChordEnsemble, resolution: int | None = None) -> PotentialBreakdown:
    """``sum_j E_j / 12 - (1/4) sum_j log P(x_a, x_b)`` without the loop term.

    ``E_j`` is the Dirichlet energy of the unzipped chord after mapping it
    to ``(H; 0, inf)``.  ``resolution`` caps the vertices used per chord.
    """
    energies, kernels = [], []
    for chord, (a, b) in zip(e.chords, e.pattern.pairs):
        xa, xb = e.marked_points[a - 1], e.marked_points[b - 1]
        w = to_chordal(_subsample(chord.points, resolution), xa, xb)
        energies.append(float(dirichlet_energy(unzip_curve(w)).value) / 12.0)
        kernels.append(-0.25 * math.log(poisson_excursion_kernel(xa, xb)))
    total = float(sum(energies) + sum(kernels))
    return PotentialBreakdown(total, tuple(energies), tuple(kernels), e.disjoint, tuple(e.touching))


def disjoint_fraction(pattern: LinkPattern, marked_points, kappa: float, n_steps: int, samples: int, seed: int, T: float = DEFAULT_CHORD_T) -> float:
    """Share of independent samples whose chords are pairwise disjoint."""
    hits = 0
    for i in range(samples):
        ens = sample_independent_chords(pattern, marked_points, kappa, n_steps, np.random.SeedSequence([seed, i]).generate_state(1)[0], T)
        hits += ens.disjoint
    return hits / samples
