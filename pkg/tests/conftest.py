import numpy as np
import pytest

from chewtex import SynthConfig, TrainConfig, preprocess_corpus, synth_corpus
from chewtex.learn import HpoConfig

# Small corpus and budget used by unit tests; the acceptance suite runs the
# full-size defaults.
SMALL_SYNTH = SynthConfig(
    n_subjects=3,
    chews_per_bout_mean=7.0,
    chews_per_bout_std=1.5,
    sample_rate=8000,
)

FAST_TRAIN = TrainConfig(
    hpo=HpoConfig(budget=5, n_init=4, folds=3),
    seed=11,
)


@pytest.fixture(scope="session")
def small_corpus():
    return synth_corpus(seed=5, config=SMALL_SYNTH)


@pytest.fixture(scope="session")
def small_preprocessed(small_corpus):
    return preprocess_corpus(small_corpus)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
