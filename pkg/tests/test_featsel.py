import numpy as np
import pytest

from dxpipe import synthetic
from dxpipe.adtree import ADTConfig
from dxpipe.errors import DataError
from dxpipe.featsel import GaConfig, fitness, select_features
from dxpipe.tabular import inject_missing

SMALL_ADT = ADTConfig(3)


@pytest.fixture(scope="module")
def data():
    return synthetic.make_dataset(80, 5, seed=11)


def _small(seed):
    return GaConfig(population=10, generations=8, seed=seed)


def test_informative_column_alone_is_perfect(data):
    mask = np.zeros(data.n_features, dtype=bool)
    mask[0] = True
    assert fitness(data, mask, 5, SMALL_ADT, 0) == 1.0


def test_noise_only_fitness_near_chance():
    d = synthetic.make_dataset(80, 5, seed=3, positive_fraction=0.5)
    noise = d.project(np.arange(1, d.n_features))
    fits = [fitness(noise, np.ones(noise.n_features, bool), 5, SMALL_ADT, s) for s in range(10)]
    assert abs(float(np.mean(fits)) - 0.5) <= 0.15


def test_fitness_rejects_bad_masks(data):
    with pytest.raises(DataError):
        fitness(data, np.zeros(data.n_features, bool))
    with pytest.raises(DataError):
        fitness(data, np.ones(2, bool))


def test_selection_properties(data):
    hits = small = 0
    for seed in range(10):
        sel = select_features(data, _small(seed), 5, SMALL_ADT)
        assert len(sel.history) == 8
        assert all(b >= a for a, b in zip(sel.history, sel.history[1:]))
        assert sel.fitness == max(sel.history)
        assert sel.columns == [c.name for c, k in zip(data.features, sel.mask) if k]
        hits += "signal" in sel.columns
        small += int(sel.mask.sum()) <= 4
    assert hits >= 9
    assert small >= 8


def test_deterministic(data):
    a = select_features(data, _small(4), 5, SMALL_ADT)
    b = select_features(data, _small(4), 5, SMALL_ADT)
    assert np.array_equal(a.mask, b.mask)
    assert (a.fitness, a.history, a.evaluations) == (b.fitness, b.history, b.evaluations)


def test_single_column_short_circuit():
    d = synthetic.make_dataset(30, 0, seed=1)
    sel = select_features(d, _small(0), 3, SMALL_ADT)
    assert sel.columns == ["signal"] and sel.mask.tolist() == [True]
    assert sel.history == [] and sel.evaluations == 1


def test_requires_complete_data(data):
    with pytest.raises(DataError):
        select_features(inject_missing(data, 0.05, 0), _small(0), 5, SMALL_ADT)


@pytest.mark.parametrize(
    "kwargs",
    [dict(population=1), dict(generations=0), dict(crossover=1.5), dict(mutation=-0.1), dict(elitism=20)],
)
def test_config_validation(kwargs):
    with pytest.raises(DataError):
        GaConfig(**kwargs)
