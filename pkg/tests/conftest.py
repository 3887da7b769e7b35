import numpy as np
import pytest

from grammarvae.grammar import builtin_grammar


@pytest.fixture(scope="session")
def eq_grammar():
    return builtin_grammar("equation")


@pytest.fixture(scope="session")
def smiles_grammar():
    return builtin_grammar("smiles")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
