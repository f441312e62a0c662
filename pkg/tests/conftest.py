"""
Shared fixtures for the em-shield test suite
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Modules import each other by bare name, like the CLI launcher does
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "emshield"))

from config import SolverConfig  # noqa: E402
from scene_model import default_scenario  # noqa: E402


@pytest.fixture
def scenario():
    """Case-study world: one radar 1 km away, 8-element IRS"""
    return default_scenario()


@pytest.fixture
def fast_solver():
    return SolverConfig(restarts=3)


def random_instance(seed: int, n_elements: int, g_scale: float = 1.0):
    """Random single-radar stealth instance (g, h)"""
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal(n_elements) + 1j * rng.standard_normal(n_elements)) / np.sqrt(2.0)
    g = g_scale * (rng.standard_normal() + 1j * rng.standard_normal())
    return complex(g), h


def oracle_instance(seed: int, n_elements: int = 4):
    """Spoof-style instance where no phase choice can cancel the echo exactly"""
    rng = np.random.default_rng(seed)
    mags = rng.uniform(0.3, 0.8, n_elements)
    h = mags * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_elements))
    g = 4.0 * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    t = (rng.standard_normal(n_elements) + 1j * rng.standard_normal(n_elements)) / np.sqrt(2.0)
    return complex(g), h, t

