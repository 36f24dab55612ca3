from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import setfix
from oracles import linear_pair_operator


@pytest.fixture(scope="session")
def sqrt_t():
    return setfix.sqrt_example()


@pytest.fixture(scope="session")
def sqrt_tg(sqrt_t):
    return setfix.perturb(sqrt_t, setfix.Takahashi(0.75))


@pytest.fixture(scope="session")
def square_t():
    return setfix.square_example()


@pytest.fixture(scope="session")
def square_tg(square_t):
    return setfix.perturb(square_t, setfix.Takahashi(0.5))


@pytest.fixture(scope="session")
def sqrt_tg_cert(sqrt_tg):
    # grid 501 is the reference resolution used throughout the reports
    return setfix.certify_contraction(sqrt_tg, "ciric", 501)


@pytest.fixture(scope="session")
def linear_t():
    return linear_pair_operator(0.5)


@pytest.fixture(scope="session")
def linear_tg(linear_t):
    return setfix.perturb(linear_t, setfix.Takahashi(0.5))


@pytest.fixture(scope="session")
def linear_tg_cert(linear_tg):
    return setfix.certify_contraction(linear_tg, "ciric", 201)
