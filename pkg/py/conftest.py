from typing import Callable
import os
import sys
import pytest

PY_PATH = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, PY_PATH)

import config
import ratfun


@pytest.fixture
def plant_path() -> Callable[[str], str]:
  return lambda name: os.path.join(config.PLANTS_PATH, name)


@pytest.fixture
def model_path() -> Callable[[str], str]:
  return lambda name: os.path.join(config.MODELS_PATH, name)


@pytest.fixture
def eq11() -> ratfun.RationalTF:
  """4s / ((s+4)((s+1)^2 + 4))."""
  return ratfun.make_tf([0, 4], [20, 13, 6, 1])


@pytest.fixture
def g1() -> ratfun.RationalTF:
  return ratfun.make_tf([3, 1], [0, 2, 1])
