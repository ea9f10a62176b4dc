"""Self-adaptive differential evolution and feature-weight ranking.

The optimizer keeps a pool of four trial-vector generation strategies.  Each
target vector draws one strategy by roulette wheel; per-strategy success and
failure counts over a sliding learning period drive the selection
probabilities.  :class:`SadeFeatureRanker` fits non-negative feature weights
that best reproduce a condition label as a weighted sum of the six pose
coordinates (L1 loss), and :func:`rank_features` averages those weights over
runs and targets into a perturbation ranking.
"""
from __future__ import annotations

import csv
import enum
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .dataset import BOTH_TARGETS, FEATURE_NAMES, Dataset, Target
from .exceptions import DataError

EPSILON = 0.01


class Strategy(enum.IntEnum):
    RAND_1_BIN = 0
    RAND_TO_BEST_2_BIN = 1
    RAND_2_BIN = 2
    CURRENT_TO_RAND_1 = 3

    @property
    def n_random(self) -> int:
        """Distinct random donors needed besides the target vector."""
        return {0: 3, 1: 4, 2: 5, 3: 3}[int(self)]

    @property
    def binomial(self) -> bool:
        return self is not Strategy.CURRENT_TO_RAND_1


N_STRATEGIES = len(Strategy)


@dataclass(frozen=True)
class SadeConfig:
    population_size: int = 50
    max_generations: int = 300
    learning_period: int = 50
    scale_factor: float = 0.5
    mutation_rate: float = 0.01
    crossover_rate: float = 0.9
    bounds: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        # Rand/2 needs five donors distinct from the target.
        if self.population_size < 6:
            raise ValueError("population_size must be >= 6")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.learning_period < 1:
            raise ValueError("learning_period must be >= 1")
        if not 0 < self.crossover_rate <= 1:
            raise ValueError("crossover_rate must lie in (0, 1]")
        if self.scale_factor <= 0:
            raise ValueError("scale_factor must be > 0")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.bounds is not None:
            lo, hi = self.bounds_array()
            if np.any(lo >= hi):
                raise ValueError("every bound needs low < high")

    def bounds_array(self, dim: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        if self.bounds is None:
            if dim is None:
                raise ValueError("bounds are not set")
            return np.zeros(dim), np.ones(dim)
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must be a sequence of (low, high) pairs")
        return b[:, 0].copy(), b[:, 1].copy()


@dataclass
class StrategyState:
    """Strategy probabilities plus sliding per-generation success/failure counts."""

    learning_period: int
    probabilities: np.ndarray = field(
        default_factory=lambda: np.full(N_STRATEGIES, 1.0 / N_STRATEGIES))
    success_memory: deque = None
    failure_memory: deque = None

    def __post_init__(self):
        if self.success_memory is None:
            self.success_memory = deque(maxlen=self.learning_period)
        if self.failure_memory is None:
            self.failure_memory = deque(maxlen=self.learning_period)

    def record(self, successes, failures) -> None:
        self.success_memory.append(np.asarray(successes, dtype=np.int64))
        self.failure_memory.append(np.asarray(failures, dtype=np.int64))

    @property
    def window_full(self) -> bool:
        return len(self.success_memory) >= self.learning_period


def normalize_scores(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    return scores / scores.sum()


def success_scores(ns, nf, epsilon: float = EPSILON) -> np.ndarray:
    """Success rate plus ``epsilon`` per strategy; unused strategies score ``epsilon``."""
    ns = np.asarray(ns, dtype=float)
    nf = np.asarray(nf, dtype=float)
    total = ns + nf
    rate = np.divide(ns, total, out=np.zeros_like(ns), where=total > 0)
    return rate + epsilon


def update_probabilities(state: StrategyState, epsilon: float = EPSILON) -> StrategyState:
    """New state whose probabilities follow the windowed success rates."""
    ns = np.sum(state.success_memory, axis=0) if state.success_memory else np.zeros(N_STRATEGIES)
    nf = np.sum(state.failure_memory, axis=0) if state.failure_memory else np.zeros(N_STRATEGIES)
    probs = normalize_scores(success_scores(ns, nf, epsilon))
    return replace(state, probabilities=probs)


def select_strategy(probabilities, rng: np.random.Generator) -> Strategy:
    """Roulette-wheel draw over the strategy pool."""
    cumulative = np.cumsum(probabilities)
    u = rng.random() * cumulative[-1]
    k = int(np.searchsorted(cumulative, u, side="right"))
    return Strategy(min(k, N_STRATEGIES - 1))


def _donors(n_pop: int, target_index: int, count: int, rng: np.random.Generator) -> np.ndarray:
    candidates = np.delete(np.arange(n_pop), target_index)
    return rng.choice(candidates, size=count, replace=False)


def mutate(population: np.ndarray, target_index: int, strategy: Strategy, scale_factor: float,
           rng: np.random.Generator, best_index: Optional[int] = None,
           fitness: Optional[np.ndarray] = None) -> np.ndarray:
    """Mutant vector for one target under the given strategy.

    ``population`` is an (n, d) array.  The rand-to-best strategy needs the
    best individual, given by ``best_index`` or derived from ``fitness``.
    """
    strategy = Strategy(strategy)
    pop = np.asarray(population, dtype=float)
    n = pop.shape[0]
    if n < strategy.n_random + 1:
        raise ValueError(f"{strategy.name} needs a population of at least {strategy.n_random + 1}")
    f = scale_factor
    r = _donors(n, target_index, strategy.n_random, rng)
    x_i = pop[target_index]
    if strategy is Strategy.RAND_1_BIN:
        return pop[r[0]] + f * (pop[r[1]] - pop[r[2]])
    if strategy is Strategy.RAND_TO_BEST_2_BIN:
        if best_index is None:
            if fitness is None:
                raise ValueError("rand-to-best needs best_index or fitness")
            best_index = int(np.argmin(fitness))
        return (x_i + f * (pop[best_index] - x_i)
                + f * (pop[r[0]] - pop[r[1]]) + f * (pop[r[2]] - pop[r[3]]))
    if strategy is Strategy.RAND_2_BIN:
        return pop[r[0]] + f * (pop[r[1]] - pop[r[2]]) + f * (pop[r[3]] - pop[r[4]])
    k = rng.random()
    return x_i + k * (pop[r[0]] - x_i) + f * (pop[r[1]] - pop[r[2]])


def crossover(target, mutant, crossover_rate: float, binomial: bool,
              rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover, or the mutant unchanged when ``binomial`` is false."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant dimensions differ")
    if not binomial:
        return mutant.copy()
    d = target.shape[0]
    mask = rng.random(d) < crossover_rate
    mask[rng.integers(d)] = True
    return np.where(mask, mutant, target)


@dataclass
class SadeResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list
    population: np.ndarray
    fitness: np.ndarray


def run_sade(objective: Callable, config: SadeConfig, dim: Optional[int] = None,
             vectorized: bool = False) -> SadeResult:
    """Minimize ``objective`` over the box given by ``config.bounds``.

    With ``vectorized=True`` the objective receives an (n, d) array and
    returns n values; otherwise it is called once per vector.  Trials of one
    generation are all built from the current population before any survivor
    selection, so the run is a pure function of the seed.

    ``trace`` holds one ``(generation, best_fitness, probabilities)`` entry per
    generation, starting at the initial population (generation 0).
    """
    lo, hi = config.bounds_array(dim)
    d = lo.shape[0]
    rng = np.random.default_rng(config.seed)

    def evaluate(points: np.ndarray) -> np.ndarray:
        if vectorized:
            return np.asarray(objective(points), dtype=float).reshape(points.shape[0])
        return np.array([float(objective(p)) for p in points])

    n = config.population_size
    pop = lo + rng.random((n, d)) * (hi - lo)
    fit = evaluate(pop)
    state = StrategyState(config.learning_period)
    trace = [(0, float(fit.min()), state.probabilities.copy())]

    for gen in range(1, config.max_generations + 1):
        best = int(np.argmin(fit))
        trials = np.empty_like(pop)
        chosen = np.empty(n, dtype=np.int64)
        for i in range(n):
            strategy = select_strategy(state.probabilities, rng)
            chosen[i] = strategy
            mutant = mutate(pop, i, strategy, config.scale_factor, rng, best_index=best)
            trial = crossover(pop[i], mutant, config.crossover_rate, strategy.binomial, rng)
            reset = rng.random(d) < config.mutation_rate
            if reset.any():
                trial[reset] = lo[reset] + rng.random(int(reset.sum())) * (hi - lo)[reset]
            trials[i] = np.clip(trial, lo, hi)
        trial_fit = evaluate(trials)
        improved = trial_fit <= fit
        pop[improved] = trials[improved]
        fit[improved] = trial_fit[improved]

        state.record(np.bincount(chosen[improved], minlength=N_STRATEGIES),
                     np.bincount(chosen[~improved], minlength=N_STRATEGIES))
        if state.window_full:
            state = update_probabilities(state)
        trace.append((gen, float(fit.min()), state.probabilities.copy()))

    best = int(np.argmin(fit))
    return SadeResult(pop[best].copy(), float(fit[best]), trace, pop, fit)


def write_trace(trace, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "p1", "p2", "p3", "p4"])
        for gen, best, probs in trace:
            writer.writerow([gen, repr(float(best))] + [repr(float(p)) for p in probs])


def weighted_l1_objective(X, y, weights) -> float:
    """Sum over records of ``|y_m - weights . X_m|``.

    ``weights`` may be a single vector or an (n, d) batch, giving n values.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.shape[0] == 0:
        raise DataError("objective needs at least one record")
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must lie in [0, 1]")
    residual = y[:, None] - X @ np.atleast_2d(w).T
    values = np.sqrt(residual ** 2).sum(axis=0)
    return float(values[0]) if w.ndim == 1 else values


def objective_eq1(dataset: Dataset, target, weights) -> float:
    """Weighted-sum fit error of ``weights`` for one condition target."""
    if len(dataset) == 0:
        raise DataError("objective needs at least one record")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(FEATURE_NAMES),):
        raise ValueError("weights must have one entry per feature")
    return weighted_l1_objective(dataset.features(), dataset.labels(target), w)


class SadeFeatureRanker(BaseEstimator):
    """Fit per-feature weights in [0, 1] by minimizing the weighted-sum L1 error.

    Parameters
    ----------
    n_runs : int, default=5
        Independent optimizer runs; ``weights_`` is the mean of their best
        positions.
    population_size, max_generations, learning_period : int
    scale_factor, mutation_rate, crossover_rate : float
        Optimizer settings, see :class:`SadeConfig`.
    random_state : int, default=0
        Seeds of the individual runs are spawned from this value.

    Attributes
    ----------
    weights_ : ndarray of shape (n_features,)
    run_weights_ : ndarray of shape (n_runs, n_features)
    run_fitness_ : ndarray of shape (n_runs,)
    traces_ : list of traces, one per run
    """

    def __init__(self, n_runs=5, population_size=50, max_generations=300,
                 learning_period=50, scale_factor=0.5, mutation_rate=0.01,
                 crossover_rate=0.9, random_state=0):
        self.n_runs = n_runs
        self.population_size = population_size
        self.max_generations = max_generations
        self.learning_period = learning_period
        self.scale_factor = scale_factor
        self.mutation_rate = mutation_rate
        self.crossover_rate = crossover_rate
        self.random_state = random_state

    def _run_seeds(self) -> list:
        children = np.random.SeedSequence(self.random_state).spawn(self.n_runs)
        return [int(c.generate_state(1)[0]) for c in children]

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if np.ptp(y) == 0:
            raise DataError("target column is constant; weights are not identifiable")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        d = X.shape[1]
        bounds = tuple((0.0, 1.0) for _ in range(d))
        objective = lambda W: weighted_l1_objective(X, y, W)  # noqa: E731
        weights, fitness, traces = [], [], []
        for seed in self._run_seeds():
            config = SadeConfig(self.population_size, self.max_generations, self.learning_period,
                                self.scale_factor, self.mutation_rate, self.crossover_rate,
                                bounds, seed)
            result = run_sade(objective, config, vectorized=True)
            weights.append(result.best_position)
            fitness.append(result.best_fitness)
            traces.append(result.trace)
        self.run_weights_ = np.array(weights)
        self.run_fitness_ = np.array(fitness)
        self.weights_ = self.run_weights_.mean(axis=0)
        self.traces_ = traces
        self.n_features_in_ = d
        return self

    def score(self, X, y):
        """Negative objective of the averaged weights (higher is better)."""
        check_is_fitted(self)
        return -weighted_l1_objective(X, y, self.weights_)


@dataclass
class RankingTable:
    """Feature weights per target, their average and the resulting rank (1 = largest)."""

    feature_names: tuple
    target_weights: dict
    average: np.ndarray
    ranks: np.ndarray
    traces: dict = field(default_factory=dict)

    @property
    def order(self) -> list:
        """Feature names from rank 1 downward."""
        return [self.feature_names[i] for i in np.argsort(self.ranks)]

    def rows(self) -> list:
        """Table rows with weights scaled by 100."""
        labels = {Target.DISTANCE: "distance", Target.LIGHT_INTENSITY: "light_intensity"}
        out = []
        for target in (Target.DISTANCE, Target.LIGHT_INTENSITY):
            if target in self.target_weights:
                out.append([labels[target]] + [f"{100 * w:.1f}" for w in self.target_weights[target]])
        out.append(["average"] + [f"{100 * w:.1f}" for w in self.average])
        out.append(["rank"] + [str(int(r)) for r in self.ranks])
        return out

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row"] + list(self.feature_names))
            writer.writerows(self.rows())

    def to_text(self) -> str:
        header = [""] + list(self.feature_names)
        body = self.rows()
        widths = [max(len(str(r[i])) for r in [header] + body) for i in range(len(header))]
        lines = ["  ".join(str(c).rjust(w) for c, w in zip(row, widths)) for row in [header] + body]
        return "\n".join(lines) + "\n"


def ranks_from_scores(scores) -> np.ndarray:
    """Rank 1 for the largest score; ties go to the earlier feature."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(len(scores), dtype=int)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def rank_features(dataset: Dataset, config: Optional[SadeConfig] = None, runs: int = 5,
                  targets: Sequence = BOTH_TARGETS) -> RankingTable:
    """Perturbation ranking of the pose coordinates.

    For each target the ranker averages the best weights of ``runs`` seeded
    optimizer runs; the per-feature average across targets sets the rank.
    """
    config = config or SadeConfig()
    targets = [Target.parse(t) for t in targets]
    X = dataset.features()
    per_target, traces = {}, {}
    for offset, target in enumerate(targets):
        y = dataset.labels(target)
        if np.ptp(y) == 0:
            raise DataError(f"target {target.value} has no variation")
        ranker = SadeFeatureRanker(
            n_runs=runs, population_size=config.population_size,
            max_generations=config.max_generations, learning_period=config.learning_period,
            scale_factor=config.scale_factor, mutation_rate=config.mutation_rate,
            crossover_rate=config.crossover_rate, random_state=[config.seed, offset])
        ranker.fit(X, y)
        per_target[target] = ranker.weights_
        traces[target] = ranker.traces_
    average = np.mean([per_target[t] for t in targets], axis=0)
    return RankingTable(FEATURE_NAMES, per_target, average, ranks_from_scores(average), traces)
