"""``loewner-lab`` command line.

Exit codes: 0 on completion or PASS, 2 when a check FAILs, 1 on usage or
input errors.  Every run writes ``manifest.json`` next to its data files.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io, manifest
from .chordal import chordal_forward, hcap_of_polyline, unzip_curve
from .drivers import dirichlet_energy, sample_brownian_driver
from .errors import LoewnerError
from .geometry import hausdorff_distance, sup_metric, to_disk, unparam_metric
from .radial import radial_forward

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

RATE_COLUMNS = ["kappa", "samples", "hits", "p_hat", "ci_lo", "ci_hi", "klogp", "flag"]
RETURN_COLUMNS = ["N", "samples", "hits", "no_return", "not_yet", "p_hat", "ci_lo", "ci_hi", "flag"]
TIGHT_COLUMNS = ["kappa", "n", "samples", "viol_H", "freq_H", "viol_L", "freq_L", "bound_shape"]
RN_COLUMNS = ["sample", "t", "tau_delta", "weight"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("."))
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="loewner-lab", description="Loewner chains, SLE sampling and rare-event Monte Carlo.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="sample a Brownian driver and its trace")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n-steps", type=int, default=1024)
    s.add_argument("--mode", choices=("chordal", "radial"), default="chordal")

    s = sub.add_parser("energy", parents=[common], help="Dirichlet energy of a driver CSV")
    s.add_argument("--driver", type=Path, required=True)
    s.add_argument("--mode", choices=("chordal", "radial"), default="chordal")

    s = sub.add_parser("unzip", parents=[common], help="driver of a chordal trace CSV")
    s.add_argument("--trace", type=Path, required=True)

    s = sub.add_parser("rate", parents=[common], help="event probability over a kappa grid")
    s.add_argument("--event", choices=("cone", "return", "target"), required=True)
    s.add_argument("--theta", type=float, default=math.pi / 3, help="cone half-opening (radians)")
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--event-mode", choices=("chordal", "radial"), default="chordal")
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--kappas", type=_floats, default=list(ex.DEFAULT_KAPPAS))
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--n-steps", type=int, default=256)

    s = sub.add_parser("return-prob", parents=[common], help="return probability against N")
    s.add_argument("--mode", choices=("chordal", "radial"), default="chordal")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--N", type=_ints, default=[2, 4])
    s.add_argument("--kappa", type=float, default=3.0)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--n-steps", type=int, default=256)
    s.add_argument("--slack", type=float, default=0.5)

    s = sub.add_parser("bessel-check", parents=[common], help="Bessel hitting frequency against the exact value")
    s.add_argument("--a", type=float, default=2.0)
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--dt", type=float, default=1e-4)

    s = sub.add_parser("tightness", parents=[common], help="violation frequencies of H(n) and L(n)")
    s.add_argument("--kappas", type=_floats, default=[1.0, 0.5, 0.2])
    s.add_argument("--n-list", type=_ints, default=[8, 32, 128])
    s.add_argument("--c1", type=float, default=1.0)
    s.add_argument("--c2", type=float, default=1.0)
    s.add_argument("--c3", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--n-steps", type=int, default=1024)
    s.add_argument("--eval-L", action="store_true")

    s = sub.add_parser("metrics", parents=[common], help="distance between two trace CSVs")
    s.add_argument("--a", type=Path, required=True)
    s.add_argument("--b", type=Path, required=True)
    s.add_argument("--metric", choices=("hausdorff", "sup", "frechet"), default="sup")
    s.add_argument("--mode", choices=("chordal", "radial"), default="chordal")

    s = sub.add_parser("rn-check", parents=[common], help="mean radial/chordal density against 1")
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--T", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=0.3)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--n-steps", type=int, default=500)

    s = sub.add_parser("verify-manifest", help="recompute a run (or one cell) and compare digests")
    s.add_argument("--manifest", type=Path, required=True)
    s.add_argument("--cell", type=int, default=None)
    s.add_argument("--full", action="store_true", help="rerun everything instead of one cell")
    return p


# ------------------------------------------------------------------ outputs


def _table(out: Path, name: str, fmt: str, columns, rows) -> Path:
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(json.dumps([dict(zip(columns, r)) for r in rows], indent=2) + "\n")
    else:
        path = out / f"{name}.csv"
        io.write_rows(path, columns, rows)
    return path


def _json(out: Path, name: str, obj) -> Path:
    path = out / f"{name}.json"
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _row_digest(columns, row) -> str:
    return manifest.sha256_text(",".join("" if v is None else repr(v) for v in row))


# ------------------------------------------------------------------ runners
# Each runner takes the parameter dict and an output directory and returns
# (outputs, summary, status, cell digests).


def run_simulate(p, out):
    d = sample_brownian_driver(p["kappa"], p["T"], p["n_steps"], p["seed"], p["mode"])
    g = chordal_forward(d) if p["mode"] == "chordal" else radial_forward(d)
    io.write_driver(out / "driver.csv", d)
    io.write_trace(out / "trace.csv", g)
    summary = {"energy": dirichlet_energy(d).value, "T": d.T, "n_steps": d.n_steps, "tip": complex(g.points[-1])}
    return {"driver.csv": out / "driver.csv", "trace.csv": out / "trace.csv"}, summary, EXIT_OK, None


def run_energy(p, out):
    d = io.read_driver(p["driver"], p["mode"])
    summary = {"energy": dirichlet_energy(d).value, "T": d.T, "n_steps": d.n_steps}
    return {"energy.json": _json(out, "energy", summary)}, summary, EXIT_OK, None


def run_unzip(p, out):
    g = io.read_trace(p["trace"], "chordal")
    d = unzip_curve(g)
    io.write_driver(out / "driver.csv", d)
    summary = {"hcap": hcap_of_polyline(g), "T": d.T, "energy": dirichlet_energy(d).value}
    return {"driver.csv": out / "driver.csv"}, summary, EXIT_OK, None


def _event(p):
    return ex.Event(p["event"], p["theta"], p["r"], p["n"], p["N"], p["event_mode"], p["horizon"])


def _rate_row(r):
    return [r[c] for c in RATE_COLUMNS]


def run_rate(p, out):
    est = ex.rate_experiment(_event(p), p["kappas"], p["samples"], p["n_steps"], p["seed"], p["workers"])
    rows = [_rate_row(r) for r in est.rows]
    path = _table(out, "rate", p["format"], RATE_COLUMNS, rows)
    summary = {"event": est.event, "extrapolation": est.extrapolation, "rows": est.rows}
    if p["event"] == "cone":
        summary["cone_check"] = ex.cone_check(est, p["theta"])
    cells = {str(c): _row_digest(RATE_COLUMNS, r) for c, r in enumerate(rows)}
    return {path.name: path, "summary.json": _json(out, "summary", summary)}, summary, EXIT_OK, cells


def cell_rate(p, cell):
    r = ex.rate_cell(_event(p), float(p["kappas"][cell]), cell, p["samples"], p["n_steps"], p["seed"], p["workers"])
    return _row_digest(RATE_COLUMNS, _rate_row(r))


def run_return(p, out):
    res = ex.return_prob_experiment(
        p["mode"], p["n"], p["N"], p["kappa"], p["samples"], p["horizon"], p["seed"], p["n_steps"], p["slack"], p["workers"]
    )
    rows = [[r[c] for c in RETURN_COLUMNS] for r in res["rows"]]
    path = _table(out, "return", p["format"], RETURN_COLUMNS, rows)
    status = EXIT_OK if res["pass"] else EXIT_FAIL
    return {path.name: path, "summary.json": _json(out, "summary", res)}, res, status, None


def run_bessel(p, out):
    res = ex.bessel_check(p["a"], p["kappa"], p["x0"], p["delta"], p["samples"], p["dt"], p["seed"])
    return {"bessel.json": _json(out, "bessel", res)}, res, EXIT_OK if res["pass"] else EXIT_FAIL, None


def _tight_rows(rows):
    return [[r[c] for c in TIGHT_COLUMNS] for r in rows]


def _consts(p):
    return {"c1": p["c1"], "c2": p["c2"], "c3": p["c3"], "beta": p["beta"]}


def run_tightness(p, out):
    rows = ex.tightness_experiment(p["kappas"], p["n_list"], _consts(p), p["samples"], p["seed"], p["n_steps"], p["eval_L"], p["workers"])
    table = _tight_rows(rows)
    path = _table(out, "tightness", p["format"], TIGHT_COLUMNS, table)
    cells = {str(r["cell"]): _row_digest(TIGHT_COLUMNS, t) for r, t in zip(rows, table)}
    summary = {"rows": rows, "note": "bound_shape has its constant set to 1; compare shapes only"}
    return {path.name: path}, summary, EXIT_OK, cells


def cell_tightness(p, cell):
    rows = ex.tightness_experiment(
        p["kappas"], p["n_list"], _consts(p), p["samples"], p["seed"], p["n_steps"], p["eval_L"], p["workers"], only_cell=cell
    )
    return _row_digest(TIGHT_COLUMNS, _tight_rows(rows)[0])


def run_metrics(p, out):
    a = io.read_trace(p["a"], p["mode"])
    b = io.read_trace(p["b"], p["mode"])
    if p["metric"] == "hausdorff":
        value = hausdorff_distance(to_disk(a.points, a.mode), to_disk(b.points, b.mode))
    elif p["metric"] == "sup":
        value = sup_metric(a, b)
    else:
        value = unparam_metric(a, b)
    summary = {"value": value, "grid_sizes": [len(a), len(b)], "mode": p["mode"], "metric": p["metric"]}
    return {"metrics.json": _json(out, "metrics", summary)}, summary, EXIT_OK, None


def run_rn(p, out):
    res = ex.rn_martingale_check(p["kappa"], p["T"], p["delta"], p["samples"], p["seed"], p["n_steps"], p["workers"])
    per = res.pop("per_sample")
    rows = [
        [i, float(t), None if math.isnan(tau) else float(tau), float(w)]
        for i, (t, tau, w) in enumerate(zip(per["t"], per["tau_delta"], per["weight"]))
    ]
    path = _table(out, "rn", p["format"], RN_COLUMNS, rows)
    status = EXIT_OK if res["pass"] else EXIT_FAIL
    return {path.name: path, "summary.json": _json(out, "summary", res)}, res, status, None


RUNNERS = {
    "simulate": run_simulate,
    "energy": run_energy,
    "unzip": run_unzip,
    "rate": run_rate,
    "return-prob": run_return,
    "bessel-check": run_bessel,
    "tightness": run_tightness,
    "metrics": run_metrics,
    "rn-check": run_rn,
}
CELL_RUNNERS = {"rate": cell_rate, "tightness": cell_tightness}


def execute(command: str, params: dict, out: Path):
    """Run ``command`` and write its outputs plus ``manifest.json`` into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    outputs, summary, status, cells = RUNNERS[command](params, out)
    man = manifest.build(command, _portable(params), params["seed"], outputs, started, cells)
    manifest.write(out, man)
    return summary, status, man


def _portable(params: dict) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items() if k not in ("out", "command")}


def _restore(params: dict) -> dict:
    p = dict(params)
    for k in ("driver", "trace", "a", "b"):
        if isinstance(p.get(k), str):
            p[k] = Path(p[k])
    return p


def verify(path: Path, cell: int | None = None, full: bool = False) -> dict:
    """Recompute one cell (or the whole run) and compare against the stored digests."""
    man = manifest.read(path)
    command = man["subcommand"]
    params = _restore(man["params"])
    cells = man.get("cell_digests") or {}
    if cells and not full and command in CELL_RUNNERS:
        if cell is None:
            cell = random.SystemRandom().randrange(len(cells))
        got = CELL_RUNNERS[command](params, cell)
        want = cells[str(cell)]
        return {"subcommand": command, "cell": cell, "match": got == want, "expected": want, "got": got}
    with tempfile.TemporaryDirectory() as tmp:
        _, _, fresh = execute(command, params, Path(tmp))
    mismatched = sorted(k for k in man["outputs"] if fresh["outputs"].get(k) != man["outputs"][k])
    return {"subcommand": command, "cell": None, "match": not mismatched, "mismatched": mismatched}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify-manifest":
            res = verify(args.manifest, args.cell, args.full)
            print(json.dumps(res, indent=2))
            return EXIT_OK if res["match"] else EXIT_FAIL
        params = vars(args).copy()
        summary, status, _ = execute(args.command, params, args.out)
    except (LoewnerError, ValueError, OSError, KeyError) as exc:
        print(f"loewner-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))
    return status


if __name__ == "__main__":
    sys.exit(main())
