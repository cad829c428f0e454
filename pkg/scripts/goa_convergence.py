"""Best-so-far fitness traces of the grasshopper optimizer.

Writes one CSV per problem with a column per seed: the sphere function on
[-10, 10]^d and cross-entropy of a small MLP trained on two Gaussian blobs.

    python scripts/goa_convergence.py --out runs/goa_trace
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from brcaml.goa import GoaParams, goa_train_mlp, optimize
from brcaml.mlp import MlpArch


def write_traces(path: Path, traces: list[list[float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration"] + [f"seed_{s}" for s in range(len(traces))])
        for i, vals in enumerate(zip(*traces)):
            w.writerow([i] + [repr(v) for v in vals])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/goa_trace")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--agents", type=int, default=50)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--dim", type=int, default=5)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    lb, ub = -10 * np.ones(args.dim), 10 * np.ones(args.dim)
    sphere = []
    for seed in range(args.seeds):
        r = optimize(lambda v: float(v @ v), lb, ub, GoaParams(args.agents, args.iters, seed=seed))
        sphere.append(r.trace)
        print(f"sphere seed {seed}: best {r.best_fitness:.2e}", flush=True)
    write_traces(out / "sphere.csv", sphere)

    mlp = []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.normal([2, 2], 0.7, (40, 2)), rng.normal([-2, -2], 0.7, (40, 2))])
        y = np.r_[np.ones(40), np.zeros(40)]
        model, r = goa_train_mlp(X, y, MlpArch((2, 3, 1)), GoaParams(20, 100, seed=seed), return_result=True)
        mlp.append(r.trace)
        acc = np.mean((model.predict_proba(X) >= 0.5) == y)
        print(f"mlp seed {seed}: loss {r.best_fitness:.4f}, training accuracy {acc:.2f}", flush=True)
    write_traces(out / "mlp_blobs.csv", mlp)


if __name__ == "__main__":
    main()
