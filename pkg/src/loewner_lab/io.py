"""CSV formats: drivers ``t,w``, traces ``t,re,im``, Theta paths ``t,theta``."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .chordal import Trace, make_trace
from .drivers import Driver, make_driver


def _fmt(x: float) -> str:
    return repr(float(x))


def write_rows(path, header, rows) -> None:
    """Write CSV with ``\\n`` line endings and ``repr`` floats (round-trip exact)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (_fmt(v) if isinstance(v, (float, np.floating)) else v) for v in row])
    Path(path).write_text(buf.getvalue())


def _read(path, header):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    return np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(header))


def write_driver(path, d: Driver) -> None:
    write_rows(path, ["t", "w"], zip(d.times, d.values))


def read_driver(path, mode: str = "chordal") -> Driver:
    a = _read(path, ["t", "w"])
    return make_driver(a[:, 0], a[:, 1], mode)


def write_trace(path, g: Trace) -> None:
    write_rows(path, ["t", "re", "im"], zip(g.cap_times, g.points.real, g.points.imag))


def read_trace(path, mode: str = "chordal") -> Trace:
    a = _read(path, ["t", "re", "im"])
    return make_trace(a[:, 1] + 1j * a[:, 2], a[:, 0], mode)


def write_theta(path, times, values) -> None:
    write_rows(path, ["t", "theta"], zip(times, values))
