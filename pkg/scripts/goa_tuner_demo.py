"""Tune booster hyperparameters with the grasshopper optimizer and compare with a small grid.

Searches learning rate (log scale) and tree depth on the train/validation split
of a generated clinical table, then scores both winners on the test split.

    python scripts/goa_tuner_demo.py --out runs/goa_tuner
"""
from __future__ import annotations

import argparse
import itertools
import json
from pathlib import Path

from brcaml.boosting import GradientBooster
from brcaml.goa import GoaParams, HyperDomain, goa_tune_hyperparams
from brcaml.metrics import auc
from brcaml.pipeline import load_frames, parse_config, prepare


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/goa_tuner")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--agents", type=int, default=8)
    ap.add_argument("--iters", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=50)
    args = ap.parse_args()

    cfg = parse_config({"seed": args.seed, "dataset": "clinical", "learners": ["boost"], "output_dir": "unused",
                        "synthetic": {"rows": 500, "signal": 3.0, "time_shape": 3.0, "genomic_weight": 0.2,
                                      "seed": args.seed}})
    prep = prepare(cfg, load_frames(cfg))
    s = prep.split
    Xtr, ytr, Xva, yva = prep.X[s.train_idx], prep.y[s.train_idx], prep.X[s.val_idx], prep.y[s.val_idx]
    Xte, yte = prep.X[s.test_idx], prep.y[s.test_idx]

    def make(hp):
        return GradientBooster(eta=hp["eta"], max_depth=hp["max_depth"], n_rounds=args.rounds, seed=args.seed)

    def test_auc(hp):
        return auc(make(hp).fit(Xtr, ytr).predict_score(Xte), yte)

    domains = {"eta": HyperDomain(0.01, 0.5, "log"), "max_depth": HyperDomain(1, 6, integer=True)}
    tuned = goa_tune_hyperparams(make, domains, Xtr, ytr, Xva, yva,
                                 GoaParams(n_agents=args.agents, max_iters=args.iters, seed=args.seed))
    grid = [{"eta": e, "max_depth": d} for e, d in itertools.product((0.01, 0.05, 0.1, 0.3), (1, 2, 3, 4, 6))]
    grid_val = [auc(make(hp).fit(Xtr, ytr).predict_score(Xva), yva) for hp in grid]
    best = max(range(len(grid)), key=lambda i: grid_val[i])

    summary = {
        "goa": {"params": tuned.best_params, "val_auc": tuned.val_auc, "test_auc": test_auc(tuned.best_params),
                "trace": tuned.result.trace},
        "grid": {"params": grid[best], "val_auc": grid_val[best], "test_auc": test_auc(grid[best])},
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tuner.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name in ("goa", "grid"):
        r = summary[name]
        print(f"{name:4s} {r['params']} val AUC {r['val_auc']:.3f} test AUC {r['test_auc']:.3f}")


if __name__ == "__main__":
    main()
