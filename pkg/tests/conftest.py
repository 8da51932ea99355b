"""Shared fixtures: deterministic RNGs and small prebuilt systems."""

import pytest

from rfpop.primitives.rng import Rng
from rfpop.system import build_cex_system, build_ma_system, build_pop_system


@pytest.fixture
def rng():
    return Rng("test-fixture")


@pytest.fixture
def ma_system():
    return build_ma_system(Rng("ma-fixture"), tag_count=3)


@pytest.fixture
def pop_system():
    return build_pop_system(Rng("pop-fixture"), tag_count=3)


@pytest.fixture
def cex_system():
    return build_cex_system(Rng("cex-fixture"), tag_count=3)
