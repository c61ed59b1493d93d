"""Argument handling and output helpers shared by the experiment scripts."""

import argparse
import csv
import json
import os
from pathlib import Path


def parser(description, reps=200):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--reps", type=int, default=reps)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=int(os.environ.get("GARROTE_THREADS", "1")))
    ap.add_argument("--out", default="results")
    return ap


def write(out, stem, rows, payload, echo=True):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    (out / f"{stem}.json").write_text(json.dumps(payload, indent=2) + "\n")
    for row in rows if echo else ():
        print("  ".join(str(c) for c in row))
