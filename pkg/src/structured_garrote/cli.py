"""Command-line entry point: ``garrote {expand,constraints,fit,cv,simulate}``.

Exit codes: 0 success, 1 numeric or convergence failure, 2 usage or
validation error. Every run writes ``manifest.json`` (command, flags, seeds,
input digests, version, timestamp) next to its numeric outputs; the
timestamp lives only in the manifest so numeric files are reproducible
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, simlab
from .constraints import MODES, build
from .garrote import normalize_init_kind
from .ingest import DataError, Dataset, binary_response, center, load_csv
from .terms import dependence_sets, expand_quadratic
from .tuning import RULES, CvReport, cv_paths, fit_dataset, make_folds, select


class UsageError(ValueError):
    pass


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("GARROTE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"GARROTE_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("GARROTE_THREADS must be positive")
        return n
    return os.cpu_count() or 1


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(out: Path, args, inputs=(), seeds=None) -> None:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    _write_json(out / "manifest.json", {
        "command": args.command,
        "flags": flags,
        "seeds": seeds or {},
        "inputs": {str(p): _digest(p) for p in inputs},
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    })


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> Dataset:
    data = load_csv(args.data, args.response, args.na)
    if getattr(args, "family", "gaussian") == "logistic":
        data = Dataset(data.x, binary_response(data.y), data.names, (), data.response)
    return data


def _grid(p, points):
    if points < 1:
        raise UsageError("--grid needs at least one point")
    return np.zeros(1) if points == 1 else np.linspace(0.0, float(p), points)


def _path_rows(labels, fits, family):
    head = ["M"] + ([] if family == "gaussian" else ["theta0", "beta0", "deviance"])
    rows = [head + [f"theta[{lb}]" for lb in labels] + [f"beta[{lb}]" for lb in labels]]
    for f in fits:
        extra = [] if family == "gaussian" else [repr(f.theta0), repr(f.beta0), repr(f.deviance)]
        rows.append([repr(float(f.m))] + extra + [repr(float(t)) for t in f.theta]
                    + [repr(float(b)) for b in f.beta])
    return rows


def _path_json(labels, fits, family):
    out = []
    for f in fits:
        rec = {"M": float(f.m), "theta": [float(t) for t in f.theta],
               "beta": [float(b) for b in f.beta], "support": [labels[j] for j in f.support]}
        if family != "gaussian":
            rec.update(theta0=f.theta0, beta0=f.beta0, deviance=f.deviance)
        out.append(rec)
    return {"labels": list(labels), "family": family, "points": out}


def cmd_expand(args) -> int:
    data = load_csv(args.data, args.response, args.na)
    ts = expand_quadratic(center(data))
    out = _outdir(args)
    _write_csv(out / "design.csv", [ts.labels] + [[repr(float(v)) for v in row] for row in ts.design])
    terms = [{"index": k, "label": t.label, "kind": t.kind,
              "parents": [ts.terms[j].label for j in t.parents]} for k, t in enumerate(ts.terms)]
    _write_json(out / "terms.json", {"q": ts.q, "p": ts.p, "terms": terms})
    _manifest(out, args, [args.data])
    print(f"q={ts.q} p={ts.p}")
    return 0


def cmd_constraints(args) -> int:
    data = load_csv(args.data, args.response, args.na)
    ts = expand_quadratic(center(data))
    cs = build(dependence_sets(ts), args.heredity)
    out = _outdir(args)
    _write_json(out / "constraints.json", {"mode": cs.mode, "p": cs.p, "m": cs.m,
                                           "rows": cs.to_records()})
    _manifest(out, args, [args.data])
    for label in cs.row_labels:
        print(label)
    return 0


def _cv(args, data, p):
    grid = _grid(p, args.grid)
    folds = make_folds(data.n, args.folds, args.seed)
    return cv_paths(data, (args.heredity,), args.init, grid, folds, args.family)[args.heredity]


def _write_cv(out: Path, report: CvReport):
    _write_json(out / "cv.json", report.to_dict())
    _write_csv(out / "cv.csv", report.csv_rows())


def cmd_cv(args) -> int:
    data = _load(args)
    p = expand_quadratic(center(data, args.family == "gaussian")).p
    report = _cv(args, data, p)
    out = _outdir(args)
    _write_cv(out, report)
    _manifest(out, args, [args.data], {"folds": args.seed})
    print(f"m_min={report.m_min!r} m_1se={report.m_1se!r} selected={select(report, args.rule)!r}")
    return 0


def cmd_fit(args) -> int:
    data = _load(args)
    p = expand_quadratic(center(data, args.family == "gaussian")).p
    grid = _grid(p, args.grid)
    ts, cd, init, fits = fit_dataset(data, args.heredity, args.init, grid, args.family)
    fits = list(getattr(fits, "fits", fits))
    out = _outdir(args)
    labels = ts.labels
    _write_csv(out / "path.csv", _path_rows(labels, fits, args.family))
    _write_json(out / "path.json", _path_json(labels, fits, args.family))
    seeds = {}
    if args.folds and grid.size > 1:
        report = _cv(args, data, p)
        _write_cv(out, report)
        m_sel = select(report, args.rule)
        seeds["folds"] = args.seed
    else:
        m_sel = float(grid[-1])
    chosen = fits[int(np.argmin(np.abs(grid - m_sel)))]
    intercept = cd.y_mean if args.family == "gaussian" else chosen.beta0
    summary = {
        "heredity": args.heredity, "family": args.family, "init": init.kind, "rule": args.rule,
        "M": float(chosen.m), "intercept": float(intercept),
        "selected": [{"label": labels[j], "coefficient": float(chosen.beta[j]),
                      "theta": float(chosen.theta[j])} for j in chosen.support],
        "support_size": len(chosen.support),
    }
    _write_json(out / "summary.json", summary)
    _manifest(out, args, [args.data], seeds)
    print(f"M={chosen.m!r} selected {len(chosen.support)} terms: "
          + ", ".join(labels[j] for j in chosen.support))
    return 0


def cmd_simulate(args) -> int:
    model = {"I": "model-I", "II": "model-II", "effect-size": "effect-size",
             "no-heredity": "no-heredity"}[args.model]
    q = args.q if args.q is not None else (4 if model == "effect-size" else 3)
    sigma, snr = (None, args.snr) if args.snr is not None else (args.sigma, None)
    cfg = simlab.SimConfig(q=q, rho=args.rho, model=model, n=args.n, sigma=sigma, snr=snr,
                           reps=args.reps, seed=args.seed, alpha=args.alpha, v=args.folds,
                           grid_points=args.grid, init_kind=normalize_init_kind(args.init),
                           rule=args.rule)
    methods = tuple(args.heredity) if args.heredity else simlab.METHODS
    res = simlab.run_table(cfg, methods, workers=_threads(args.threads))
    out = _outdir(args)
    _write_json(out / "result.json", res.to_dict())
    _write_csv(out / "table.csv", res.table_rows())
    _manifest(out, args, seeds={"master": args.seed})
    for row in res.table_rows()[1:]:
        print(" ".join(row))
    if res.failures:
        print(f"{res.failures} replicate(s) failed", file=sys.stderr)
    return 0


def _common(sp, heredity=True):
    sp.add_argument("data", help="CSV file with a header row")
    sp.add_argument("--response", required=True)
    sp.add_argument("--na", choices=("fail", "drop-row"), default="fail")
    sp.add_argument("--out", default="garrote-out")
    if heredity:
        sp.add_argument("--heredity", choices=MODES, default="strong")


def _fit_flags(sp):
    sp.add_argument("--family", choices=("gaussian", "logistic"), default="gaussian")
    sp.add_argument("--init", choices=("ls", "ridge"), default="ls")
    sp.add_argument("--grid", type=int, default=101, help="number of budget points on [0, p]")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rule", choices=RULES, default="min")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="garrote", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("expand", help="write the quadratic design and term list")
    _common(sp, heredity=False)
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("constraints", help="write the heredity rows")
    _common(sp)
    sp.set_defaults(func=cmd_constraints)

    sp = sub.add_parser("fit", help="solution path, CV selection and summary")
    _common(sp)
    _fit_flags(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("cv", help="cross-validation curve only")
    _common(sp)
    _fit_flags(sp)
    sp.set_defaults(func=cmd_cv)

    sp = sub.add_parser("simulate", help="Monte-Carlo model-error and selection tables")
    sp.add_argument("--model", choices=("I", "II", "effect-size", "no-heredity"), default="I")
    sp.add_argument("--rho", type=float, default=0.0)
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--q", type=int, default=None)
    sp.add_argument("--sigma", type=float, default=3.0)
    sp.add_argument("--snr", type=float, default=None)
    sp.add_argument("--alpha", type=float, default=4.0)
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--heredity", choices=MODES, action="append",
                    help="method to run (repeatable; default all three)")
    sp.add_argument("--init", choices=("ls", "ridge"), default="ls")
    sp.add_argument("--grid", type=int, default=101)
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--rule", choices=RULES, default="min")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="garrote-sim")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker processes (default: $GARROTE_THREADS or all cores)")
    sp.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DataError, simlab.SimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
