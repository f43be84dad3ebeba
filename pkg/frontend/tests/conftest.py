import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = pathlib.Path(__file__).parent / "golden"

SWEEP_FIXTURES = ("fig4.csv", "fig5.csv", "fig6.csv")
FRONT_FIXTURES = ("fig7.csv", "pareto.csv")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def golden_dir():
    return GOLDEN
