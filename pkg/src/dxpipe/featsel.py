"""Wrapper feature-subset selection by genetic search.

A chromosome is a boolean mask over the feature columns; its fitness is the
stratified cross-validated accuracy of an ADT trained on the selected columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import adtree, metrics
from .errors import DataError
from .tabular import Dataset, FoldAssignment, stratified_kfold

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaConfig:
    population: int = 20
    generations: int = 20
    crossover: float = 1.0
    mutation: float = 0.001
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise DataError("population must hold at least two individuals")
        if self.generations < 1:
            raise DataError("at least one generation is required")
        for name in ("crossover", "mutation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DataError(f"{name} probability must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise DataError("elitism must be smaller than the population")


def fitness(
    dataset: Dataset,
    mask,
    cv_k: int = 10,
    adt_cfg: adtree.ADTConfig = adtree.ADTConfig(),
    seed: int = 0,
    folds: FoldAssignment | None = None,
) -> float:
    """Pooled k-fold accuracy of an ADT restricted to the masked columns."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (dataset.n_features,) or not mask.any():
        raise DataError("mask must select at least one feature column")
    folds = folds or stratified_kfold(dataset, cv_k, seed)
    pool = metrics.pooled_cv_scores(dataset.project(np.flatnonzero(mask)), cv_k, adt_cfg, seed, folds)
    return float((pool.predictions == pool.labels).mean())


@dataclass
class Selection:
    mask: np.ndarray
    fitness: float
    history: list[float]
    evaluations: int
    columns: list[str] = field(default_factory=list)


def _key(fit: float, mask: np.ndarray) -> tuple:
    # higher fitness first, then fewer columns
    return (-fit, int(mask.sum()))


def select_features(
    dataset: Dataset,
    cfg: GaConfig = GaConfig(),
    cv_k: int = 10,
    adt_cfg: adtree.ADTConfig = adtree.ADTConfig(),
) -> Selection:
    """Generational GA with roulette selection, one-point crossover and elitism.

    Every mask is scored on the same folds.  Among equally fit masks the one
    with fewer columns wins, which is what makes the search prune features.
    ``history[g]`` is the best fitness in generation ``g``.
    """
    n = dataset.n_features
    names = [c.name for c in dataset.features]
    if n < 1:
        raise DataError("dataset has no feature columns")
    if n == 1:
        only = np.ones(1, dtype=bool)
        return Selection(only, fitness(dataset, only, cv_k, adt_cfg, cfg.seed), [], 1, names)
    if dataset.n_missing:
        raise DataError("feature selection needs a complete dataset")

    folds = stratified_kfold(dataset, cv_k, cfg.seed)
    cache: dict[bytes, float] = {}

    def score(mask: np.ndarray) -> float:
        key = np.packbits(mask).tobytes()
        if key not in cache:
            cache[key] = fitness(dataset, mask, cv_k, adt_cfg, cfg.seed, folds)
        return cache[key]

    rng = np.random.default_rng(cfg.seed)

    def repair(mask: np.ndarray) -> np.ndarray:
        if not mask.any():
            mask[rng.integers(n)] = True
        return mask

    pop = [np.ones(n, dtype=bool)]
    pop += [repair(rng.random(n) < 0.5) for _ in range(cfg.population - 1)]

    best_mask, best_fit = None, -1.0
    history = []
    for gen in range(cfg.generations):
        fits = np.array([score(m) for m in pop])
        ranked = sorted(range(len(pop)), key=lambda i: _key(fits[i], pop[i]) + (i,))
        top = ranked[0]
        if best_mask is None or _key(fits[top], pop[top]) < _key(best_fit, best_mask):
            best_mask, best_fit = pop[top].copy(), float(fits[top])
        history.append(float(fits[top]))
        log.debug("generation %d: best %.4f (%d columns)", gen, fits[top], pop[top].sum())
        if gen == cfg.generations - 1:
            break

        total = fits.sum()
        probs = fits / total if total > 0 else np.full(len(pop), 1.0 / len(pop))
        children = [pop[i].copy() for i in ranked[: cfg.elitism]]
        while len(children) < cfg.population:
            a, b = rng.choice(len(pop), size=2, p=probs)
            c1, c2 = pop[a].copy(), pop[b].copy()
            if rng.random() < cfg.crossover:
                cut = int(rng.integers(1, n))
                c1 = np.concatenate([pop[a][:cut], pop[b][cut:]])
                c2 = np.concatenate([pop[b][:cut], pop[a][cut:]])
            for child in (c1, c2):
                flip = rng.random(n) < cfg.mutation
                child ^= flip
                if len(children) < cfg.population:
                    children.append(repair(child))
        pop = children

    return Selection(
        best_mask,
        best_fit,
        history,
        len(cache),
        [nm for nm, keep in zip(names, best_mask) if keep],
    )
