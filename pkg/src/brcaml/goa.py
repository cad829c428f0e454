"""Grasshopper optimisation: a swarm metaheuristic with a shrinking comfort zone.

Each agent moves towards the best position found so far (the target) while
feeling pairwise attraction/repulsion from every other agent. The social term
is scaled by a coefficient ``c`` that decays linearly over the run, which
trades early exploration for late exploitation. The best ``elite_fraction``
agents are carried over unchanged each iteration.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .metrics import auc
from .mlp import MlpArch, cross_entropy, unflatten_weights

log = logging.getLogger(__name__)


class GoaError(RuntimeError):
    pass


@dataclass(frozen=True)
class GoaParams:
    n_agents: int = 300
    max_iters: int = 1000
    c_max: float = 1.0
    c_min: float = 1e-5
    social_f: float = 0.5
    social_l: float = 1.5
    elite_fraction: float = 0.1
    patience: int = 50
    boundary: str = "clamp"
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if not self.c_min < self.c_max:
            raise ValueError("c_min must be below c_max")
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        if not 0 < self.elite_fraction <= 1:
            raise ValueError("elite_fraction must lie in (0, 1]")
        if self.boundary not in ("clamp", "reflect"):
            raise ValueError("boundary must be 'clamp' or 'reflect'")

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.elite_fraction * self.n_agents)))


def social_force(r, f: float = 0.5, l: float = 1.5):
    """s(r) = f exp(-r/l) - exp(-r)."""
    r = np.asarray(r, dtype=float)
    out = f * np.exp(-r / l) - np.exp(-r)
    return out if out.ndim else float(out)


def comfort_coefficient(iteration: int, max_iters: int, c_max: float = 1.0, c_min: float = 1e-5) -> float:
    if not 0 <= iteration <= max_iters:
        raise ValueError("iteration outside [0, max_iters]")
    if max_iters == 0:
        return c_max
    return c_max - iteration * (c_max - c_min) / max_iters


def _apply_bounds(X, lb, ub, mode):
    if mode == "reflect":
        span = ub - lb
        # fold into [0, 2*span) then mirror the upper half
        y = np.mod(X - lb, 2 * span)
        y = np.where(y > span, 2 * span - y, y)
        return np.clip(lb + y, lb, ub)
    return np.clip(X, lb, ub)


def update_positions(positions, target, lb, ub, c, f=0.5, l=1.5, boundary="clamp"):
    """Synchronous update of every agent from the previous position matrix.

    x'_id = c * sum_{j != i} c (ub_d - lb_d)/2 s(|x_jd - x_id|) (x_jd - x_id)/dist_ij + target_d
    """
    X = np.asarray(positions, dtype=float)
    lb = np.broadcast_to(np.asarray(lb, dtype=float), X.shape[1:])
    ub = np.broadcast_to(np.asarray(ub, dtype=float), X.shape[1:])
    n, d = X.shape
    half_span = c * (ub - lb) / 2.0
    social = np.zeros_like(X)
    chunk = max(1, int(4_000_000 // max(1, n * d)))
    for s in range(0, n, chunk):
        diff = X[None, :, :] - X[s:s + chunk, None, :]  # (chunk, n, d): x_j - x_i
        dist = np.maximum(np.sqrt(np.sum(diff * diff, axis=2)), 1e-12)
        term = half_span * social_force(np.abs(diff), f, l) * diff / dist[:, :, None]
        social[s:s + chunk] = term.sum(axis=1)  # j == i contributes zero (diff is 0)
    new = c * social + np.asarray(target, dtype=float)[None, :]
    return _apply_bounds(new, lb, ub, boundary)


@dataclass
class Swarm:
    positions: np.ndarray
    fitness: np.ndarray
    best_position: np.ndarray
    best_fitness: float
    lb: np.ndarray
    ub: np.ndarray


@dataclass
class GoaResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list[float]
    swarm: Swarm
    selected_position: np.ndarray | None = None
    stopped_early: bool = False
    holdout_trace: list[float] = field(default_factory=list)

    def trace_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "best_fitness"])
            for i, v in enumerate(self.trace):
                w.writerow([i, repr(float(v))])


def _evaluate(fitness, X, rows, n_jobs):
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            vals = list(ex.map(lambda i: fitness(X[i]), rows))
    else:
        vals = [fitness(X[i]) for i in rows]
    out = np.asarray(vals, dtype=float)
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise GoaError(f"agent {int(np.asarray(rows)[bad[0]])} produced a non-finite fitness")
    return out


def optimize(
    fitness: Callable[[np.ndarray], float],
    lb,
    ub,
    params: GoaParams = GoaParams(),
    holdout: Callable[[np.ndarray], float] | None = None,
) -> GoaResult:
    """Minimise ``fitness`` over the box [lb, ub].

    When ``holdout`` is given it is evaluated on the best-ever position
    whenever that changes; the run stops after ``params.patience`` iterations
    without a holdout improvement and ``selected_position`` is the
    holdout-best position.
    """
    lb = np.atleast_1d(np.asarray(lb, dtype=float))
    ub = np.atleast_1d(np.asarray(ub, dtype=float))
    if lb.shape != ub.shape or np.any(lb >= ub):
        raise ValueError("bounds must satisfy lb < ub per dimension")
    rng = np.random.default_rng(params.seed)
    n, d = params.n_agents, lb.size
    X = rng.uniform(lb, ub, size=(n, d))
    fit = _evaluate(fitness, X, range(n), params.n_jobs)
    b = int(np.argmin(fit))
    best_pos, best_fit = X[b].copy(), float(fit[b])
    trace = [best_fit]

    selected, hold_best, since, hold_trace = None, math.inf, 0, []
    if holdout is not None:
        hold_best = float(holdout(best_pos))
        selected = best_pos.copy()
        hold_trace.append(hold_best)

    stopped = False
    for it in range(1, params.max_iters + 1):
        c = comfort_coefficient(it, params.max_iters, params.c_max, params.c_min)
        elite = np.argsort(fit, kind="stable")[:params.n_elite]
        movers = np.setdiff1d(np.arange(n), elite)
        new = update_positions(X, best_pos, lb, ub, c, params.social_f, params.social_l, params.boundary)
        new[elite] = X[elite]
        X = new
        if movers.size:
            fit = fit.copy()
            fit[movers] = _evaluate(fitness, X, movers, params.n_jobs)
        b = int(np.argmin(fit))
        improved = fit[b] < best_fit
        if improved:
            best_pos, best_fit = X[b].copy(), float(fit[b])
        trace.append(best_fit)

        if holdout is not None:
            if improved:
                h = float(holdout(best_pos))
                if h < hold_best:
                    hold_best, selected, since = h, best_pos.copy(), 0
                else:
                    since += 1
            else:
                since += 1
            hold_trace.append(hold_best)
            if since >= params.patience:
                stopped = True
                break

    swarm = Swarm(X, fit, best_pos, best_fit, lb, ub)
    return GoaResult(best_pos, best_fit, trace, swarm,
                     selected if selected is not None else best_pos, stopped, hold_trace)


def goa_train_mlp(
    X, y, arch: MlpArch, params: GoaParams = GoaParams(), weight_bound: float = 5.0,
    X_val=None, y_val=None, return_result: bool = False,
):
    """Search flattened MLP weights in [-weight_bound, weight_bound] minimising training cross-entropy."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)

    def fitness(v):
        return cross_entropy(unflatten_weights(arch, v), X, y)

    holdout = None
    if X_val is not None:
        Xv, yv = np.asarray(X_val, dtype=float), np.asarray(y_val, dtype=float)

        def holdout(v):
            return cross_entropy(unflatten_weights(arch, v), Xv, yv)

    dim = arch.n_params
    res = optimize(fitness, -weight_bound * np.ones(dim), weight_bound * np.ones(dim), params, holdout)
    model = unflatten_weights(arch, res.selected_position)
    return (model, res) if return_result else model


@dataclass(frozen=True)
class HyperDomain:
    lower: float
    upper: float
    scale: str = "linear"
    integer: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("domain needs lower < upper")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.lower <= 0:
            raise ValueError("log-scaled domain needs a positive lower bound")


def project_domain(value: float, dom: HyperDomain) -> float:
    if not dom.lower <= value <= dom.upper:
        raise ValueError(f"{value} outside [{dom.lower}, {dom.upper}]")
    if dom.scale == "log":
        return (math.log(value) - math.log(dom.lower)) / (math.log(dom.upper) - math.log(dom.lower))
    return (value - dom.lower) / (dom.upper - dom.lower)


def unproject_domain(u: float, dom: HyperDomain):
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"{u} outside [0, 1]")
    if dom.scale == "log":
        v = math.exp(math.log(dom.lower) + u * (math.log(dom.upper) - math.log(dom.lower)))
    else:
        v = dom.lower + u * (dom.upper - dom.lower)
    v = min(max(v, dom.lower), dom.upper)
    if dom.integer:
        return int(math.floor(v + 0.5))
    return v


@dataclass
class TuneResult:
    best_params: dict
    val_auc: float
    result: GoaResult


def goa_tune_hyperparams(
    make_learner: Callable[[dict], object],
    domains: Mapping[str, HyperDomain],
    X_train, y_train, X_val, y_val,
    params: GoaParams = GoaParams(n_agents=10, max_iters=20),
) -> TuneResult:
    """Search the unit hypercube; fitness is 1 - validation AUC of the unprojected setting."""
    names = list(domains)
    cache: dict[tuple, float] = {}

    def decode(u):
        return {k: unproject_domain(float(np.clip(ui, 0.0, 1.0)), domains[k]) for k, ui in zip(names, u)}

    def fitness(u):
        hp = decode(u)
        key = tuple(hp[k] for k in names)
        if key not in cache:
            try:
                model = make_learner(hp)
                model.fit(X_train, y_train)
                cache[key] = 1.0 - auc(model.predict_score(X_val), y_val)
            except Exception as exc:  # noqa: BLE001 - failed settings score as worst
                log.warning("hyperparameters %s failed: %s", hp, exc)
                cache[key] = 1.0
        return cache[key]

    res = optimize(fitness, np.zeros(len(names)), np.ones(len(names)), params)
    return TuneResult(decode(res.best_position), 1.0 - res.best_fitness, res)
