"""NSGA-II over a mixed integer/real genome.

Integer genes use uniform crossover and a +/- geometric-step mutation; real genes
use simulated binary crossover and polynomial mutation. Survival uses
constrained-domination sorting and crowding-distance truncation. Early on,
violations below a shrinking epsilon level count as feasible so the search can
cross infeasible gaps between feasible islands; epsilon reaches 0 well before
the last generation, so the final population is ranked exactly. All random
draws happen in the sequential generation loop, so parallel evaluation cannot
change results.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..model import NSGAConfig
from .pareto import crowding_distance, fast_non_dominated_sort


@dataclass(frozen=True)
class GeneSpace:
    names: tuple
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray  # bool mask

    @property
    def size(self) -> int:
        return len(self.names)

    def random(self, rng: np.random.Generator, n: int) -> np.ndarray:
        X = rng.uniform(self.lower, self.upper, size=(n, self.size))
        ints = self.integer
        X[:, ints] = rng.integers(self.lower[ints].astype(int), self.upper[ints].astype(int) + 1,
                                  size=(n, int(ints.sum())))
        return X

    def repair(self, X: np.ndarray) -> np.ndarray:
        X = np.clip(X, self.lower, self.upper)
        X[..., self.integer] = np.rint(X[..., self.integer])
        return X


@dataclass
class Individuals:
    X: np.ndarray
    F: np.ndarray
    cv: np.ndarray
    payload: list

    def __len__(self):
        return len(self.X)

    def take(self, idx) -> "Individuals":
        idx = list(idx)
        return Individuals(self.X[idx], self.F[idx], self.cv[idx], [self.payload[i] for i in idx])

    @staticmethod
    def concat(a: "Individuals", b: "Individuals") -> "Individuals":
        return Individuals(np.vstack([a.X, b.X]), np.vstack([a.F, b.F]), np.concatenate([a.cv, b.cv]),
                           a.payload + b.payload)


@dataclass
class RunResult:
    population: Individuals
    ranks: np.ndarray
    history: list = field(default_factory=list)  # per-generation callback values
    evaluations: int = 0


def sbx(x1: np.ndarray, x2: np.ndarray, lo: np.ndarray, hi: np.ndarray, eta: float,
        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Bounded simulated binary crossover (each variable crosses with probability 0.5)."""
    c1, c2 = x1.copy(), x2.copy()
    for i in range(len(x1)):
        if rng.random() > 0.5 or abs(x1[i] - x2[i]) <= 1e-14 or hi[i] <= lo[i]:
            continue
        y1, y2 = min(x1[i], x2[i]), max(x1[i], x2[i])
        u = rng.random()
        children = []
        for spread in (y1 - lo[i], hi[i] - y2):
            beta = 1.0 + 2.0 * spread / (y2 - y1)
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                betaq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                betaq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(betaq)
        a = 0.5 * ((y1 + y2) - children[0] * (y2 - y1))
        b = 0.5 * ((y1 + y2) + children[1] * (y2 - y1))
        a, b = min(max(a, lo[i]), hi[i]), min(max(b, lo[i]), hi[i])
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x: float, lo: float, hi: float, eta: float, rng: np.random.Generator) -> float:
    if hi <= lo:
        return x
    d1, d2 = (x - lo) / (hi - lo), (hi - x) / (hi - lo)
    u = rng.random()
    power = 1.0 / (eta + 1.0)
    if u < 0.5:
        val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
        dq = val ** power - 1.0
    else:
        val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
        dq = 1.0 - val ** power
    return min(max(x + dq * (hi - lo), lo), hi)


def vary(parents: np.ndarray, space: GeneSpace, cfg: NSGAConfig, rng: np.random.Generator) -> np.ndarray:
    """Produce one offspring per parent from consecutive parent pairs."""
    n = len(parents)
    pm = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / space.size
    ints, reals = space.integer, ~space.integer
    kids = parents.copy()
    for k in range(0, n - 1, 2):
        a, b = parents[k].copy(), parents[k + 1].copy()
        if rng.random() < cfg.crossover_prob:
            swap = (rng.random(space.size) < 0.5) & ints
            a[swap], b[swap] = parents[k + 1][swap], parents[k][swap]
            ra, rb = sbx(a[reals], b[reals], space.lower[reals], space.upper[reals], cfg.eta_crossover, rng)
            a[reals], b[reals] = ra, rb
        kids[k], kids[k + 1] = a, b
    for k in range(n):
        for i in range(space.size):
            if rng.random() >= pm:
                continue
            if ints[i]:
                step = int(rng.geometric(0.5)) * (1 if rng.random() < 0.5 else -1)
                kids[k, i] = kids[k, i] + step
            else:
                kids[k, i] = polynomial_mutation(kids[k, i], space.lower[i], space.upper[i], cfg.eta_mutation, rng)
    return space.repair(kids)


def _relaxed(cv: np.ndarray, eps: float) -> np.ndarray:
    return np.where(cv <= eps, 0.0, cv)


def epsilon_schedule(cv0: np.ndarray, cfg: NSGAConfig) -> Callable[[int], float]:
    """Epsilon level per generation: starts at the 20th-percentile initial violation, decays to 0."""
    cutoff = cfg.epsilon_generations * cfg.generations
    eps0 = float(np.quantile(cv0, 0.2)) if len(cv0) and cutoff > 0 else 0.0

    def eps(gen: int) -> float:
        if gen >= cutoff:
            return 0.0
        return eps0 * (1.0 - gen / cutoff) ** cfg.epsilon_exponent
    return eps


def rank_and_crowd(pop: Individuals, eps: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    ranks = np.empty(len(pop), dtype=int)
    crowd = np.empty(len(pop))
    for r, front in enumerate(fast_non_dominated_sort(pop.F, _relaxed(pop.cv, eps))):
        ranks[front] = r
        crowd[front] = crowding_distance(pop.F[front])
    return ranks, crowd


def _tournament(ranks, crowd, rng, n) -> np.ndarray:
    a = rng.integers(0, len(ranks), size=n)
    b = rng.integers(0, len(ranks), size=n)
    better_a = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowd[a] >= crowd[b]))
    return np.where(better_a, a, b)


def _survive(pop: Individuals, n: int, eps: float = 0.0) -> Individuals:
    # Drop exact duplicate genomes first so copies cannot crowd out the front.
    _, first = np.unique(pop.X, axis=0, return_index=True)
    keep = sorted(first.tolist())
    if len(keep) < n:
        dup = [i for i in range(len(pop)) if i not in set(keep)]
        keep += dup[: n - len(keep)]
    pop = pop.take(keep)
    chosen = []
    for front in fast_non_dominated_sort(pop.F, _relaxed(pop.cv, eps)):
        if len(chosen) + len(front) <= n:
            chosen.extend(front)
        else:
            d = crowding_distance(pop.F[front])
            order = np.argsort(-d, kind="stable")
            chosen.extend(np.asarray(front)[order[: n - len(chosen)]].tolist())
        if len(chosen) >= n:
            break
    return pop.take(chosen)


class Evaluator:
    """Memoised, optionally process-parallel batch evaluation of genomes."""

    def __init__(self, fn: Callable, jobs: int = 1):
        self.fn = fn
        self.jobs = jobs
        self.cache: dict = {}
        self.calls = 0

    def __call__(self, X: np.ndarray) -> Individuals:
        keys = [tuple(row.tolist()) for row in X]
        todo = list(dict.fromkeys(k for k in keys if k not in self.cache))
        if todo:
            if self.jobs > 1 and len(todo) > 1:
                with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                    results = list(pool.map(self.fn, todo, chunksize=max(1, len(todo) // (4 * self.jobs))))
            else:
                results = [self.fn(k) for k in todo]
            self.cache.update(zip(todo, results))
            self.calls += len(todo)
        out = [self.cache[k] for k in keys]
        F = np.array([o[0] for o in out], dtype=float)
        cv = np.array([o[1] for o in out], dtype=float)
        return Individuals(np.array(X, dtype=float), F, cv, [o[2] for o in out])


def run_nsga2(evaluate: Callable[[tuple], tuple], space: GeneSpace, cfg: NSGAConfig,
              on_generation: Callable[[Individuals, np.ndarray], object] | None = None,
              jobs: int = 1, initial: Sequence | None = None) -> RunResult:
    """Run NSGA-II; ``evaluate(genome_tuple) -> (objectives, total_violation, payload)``.

    Objectives are minimised. ``on_generation`` is called with the surviving
    population and its ranks after initialisation and every generation; its
    return values are collected in ``RunResult.history``.
    """
    rng = np.random.default_rng(cfg.seed)
    ev = Evaluator(evaluate, jobs)
    X = space.random(rng, cfg.population)
    if initial is not None:
        seeds = space.repair(np.atleast_2d(np.asarray(initial, dtype=float)))
        X[: len(seeds)] = seeds[: cfg.population]
    pop = ev(X)
    eps = epsilon_schedule(pop.cv, cfg)
    ranks, crowd = rank_and_crowd(pop, eps(0))
    history = []
    if on_generation is not None:
        history.append(on_generation(pop, ranks))
    for gen in range(1, cfg.generations + 1):
        parents = pop.X[_tournament(ranks, crowd, rng, cfg.population)]
        kids = ev(vary(parents, space, cfg, rng))
        pop = _survive(Individuals.concat(pop, kids), cfg.population, eps(gen))
        ranks, crowd = rank_and_crowd(pop, eps(gen))
        if on_generation is not None:
            history.append(on_generation(pop, ranks))
    return RunResult(pop, ranks, history, ev.calls)
