import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from friedrichs import ResolventEvaluator, classify_zero_energy, load_scenario

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def scenario_path(name):
    return os.path.abspath(os.path.join(SCENARIOS, name + ".json"))


@pytest.fixture(scope="session")
def models():
    names = ["model_a", "model_a_critical", "model_b", "model_b_critical",
             "two_level", "three_level_third_kind"]
    return {n: load_scenario(scenario_path(n)) for n in names}


@pytest.fixture(scope="session")
def evaluators(models):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = ResolventEvaluator(models[name])
        return cache[name]

    return get


@pytest.fixture(scope="session")
def classifications(evaluators):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = classify_zero_energy(evaluators(name))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260813)
