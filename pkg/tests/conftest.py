# tests/conftest.py
import numpy as np
import pytest

from generator.generator import build_generator
from generator.heat import HeatOperator
from harness.builders import circle, interval, torus2d
from harness.sets import arc
from observability.obs import reset_metrics


@pytest.fixture(autouse=True)
def _fresh_metrics():
    reset_metrics()
    yield


@pytest.fixture(scope="session")
def circle8():
    return circle(8)


@pytest.fixture(scope="session")
def circle256():
    return circle(256)


@pytest.fixture(scope="session")
def circle1024():
    return circle(1024)


@pytest.fixture(scope="session")
def circle4096():
    return circle(4096)


@pytest.fixture(scope="session")
def circle2048():
    return circle(2048)


@pytest.fixture(scope="session")
def interval512():
    return interval(512)


@pytest.fixture(scope="session")
def torus64():
    return torus2d(64)


@pytest.fixture(scope="session")
def gen256(circle256):
    return build_generator(circle256)


@pytest.fixture(scope="session")
def gen2048(circle2048):
    return build_generator(circle2048)


@pytest.fixture(scope="session")
def heat256(gen256):
    return HeatOperator(gen256, strategy="spectral")


@pytest.fixture(scope="session")
def heat2048(gen2048):
    return HeatOperator(gen2048, strategy="spectral")


@pytest.fixture(scope="session")
def half_arc2048(circle2048):
    return arc(circle2048, 0.0, 0.5)
