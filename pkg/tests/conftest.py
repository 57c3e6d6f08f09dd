from pathlib import Path

import pytest

from penmix import load_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def us():
    return load_scenario(SCENARIOS / "scenario_us.json")


@pytest.fixture(scope="session")
def cn():
    return load_scenario(SCENARIOS / "scenario_cn.json")


@pytest.fixture(scope="session")
def us_bb():
    return load_scenario(SCENARIOS / "scenario_us_babyboom.json")


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIOS
