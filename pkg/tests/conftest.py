import numpy as np
import pytest

from factorbench.factorworld import default_spec, generate_dataset
from factorbench.generative import oracle_generator
from factorbench.task import ClassifierConfig


@pytest.fixture(scope="session")
def plain_spec():
    return default_spec()


@pytest.fixture(scope="session")
def sensitive_spec():
    return default_spec(sensitive_factor="brightness", sensitivity=0.8)


@pytest.fixture(scope="session")
def small_dataset(plain_spec):
    return generate_dataset(plain_spec, 300, seed=101)


@pytest.fixture(scope="session")
def oracle_gen(sensitive_spec):
    # code 3 drives the injected-sensitivity factor; 0 and 7 drive benign ones
    return oracle_generator(sensitive_spec, {3: "brightness", 0: "size", 7: "hue"})


@pytest.fixture(scope="session")
def full_oracle_gen(sensitive_spec):
    # every factor mapped: code i drives factor i (brightness, with s=0.8, is code 1)
    return oracle_generator(sensitive_spec, {i: f.name for i, f in enumerate(sensitive_spec.factors)})


@pytest.fixture(scope="session")
def plain_oracle_gen(plain_spec):
    return oracle_generator(plain_spec, {3: "brightness", 0: "size", 7: "hue"})


@pytest.fixture
def fast_clf_config():
    return ClassifierConfig(epochs=2, batch_size=64, seed=7)


@pytest.fixture(scope="session")
def uniform_labels():
    return np.full(5, 0.2)
