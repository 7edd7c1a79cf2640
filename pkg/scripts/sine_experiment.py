#!/usr/bin/env python3
"""End-to-end workout on a synthetic noisy sine, exercising every CLI command.

Generates a 10,000-step univariate series, grid-searches the patch count and
penalty, trains at the best cell, evaluates against the persistence baseline,
writes forecasts, and exports the influence/histogram CSVs. Everything lands
in a work directory (default ./sine_run).
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from lstcn.cli import main as cli


def make_csv(path: Path, steps: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    t = np.arange(steps)
    values = np.sin(2 * np.pi * t / 350.0) * 12.0 + 20.0
    values += 0.05 * 12.0 * rng.normal(size=steps)
    with path.open("w") as handle:
        handle.write("t,y\n")
        for i, v in enumerate(values.tolist()):
            handle.write(f"{i},{v!r}\n")


def run(argv: list[str]) -> None:
    print("$ lstcn " + " ".join(argv))
    code = cli(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="sine_run")
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    data = work / "sine.csv"
    make_csv(data, args.steps, args.seed)
    print(f"wrote {data} ({args.steps} steps)")

    report = work / "tuning_report.csv"
    run(["tune", "--data", str(data), "--features", "y", "--steps-ahead", "50",
         "--seed", str(args.seed), "--report", str(report)])

    # read the winner back out of the report
    import csv as csvmod
    cells = [r for r in csvmod.DictReader(report.open()) if r["status"] == "ok"]
    best = min(cells, key=lambda r: (float(r["validation_mae"]),
                                     int(r["T"]), -float(r["lambda"])))
    print(f"tuned settings: T={best['T']} lambda={best['lambda']}")

    model = work / "model.json"
    run(["train", "--data", str(data), "--features", "y", "--steps-ahead", "50",
         "--patches", best["T"], "--lambda", best["lambda"],
         "--seed", str(args.seed), "--model", str(model)])
    run(["eval", "--model", str(model), "--data", str(data)])
    run(["forecast", "--model", str(model), "--data", str(data),
         "--out", str(work / "forecasts.csv"),
         "--timestamp-column", "t"])
    run(["explain", "--model", str(model), "--source", "average",
         "--out-dir", str(work / "explain")])
    print(f"\nall artifacts under {work}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
