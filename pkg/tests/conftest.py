"""
Pytest configuration and fixtures.

Shared pulses, atoms and run configurations. Every configuration writes into the
per-test temporary directory.
"""

import numpy as np
import pytest

from strongcat.config import AtomSettings, PulseSettings, RunConfig
from strongcat.schemas import LaserPulse


@pytest.fixture
def xe_atom():
    """Xenon target, I_p = 12.13 eV."""
    return AtomSettings().to_atom()


@pytest.fixture
def xe_pulse():
    """800 nm, 8e13 W/cm² sin² pulse of the default run."""
    return PulseSettings().to_pulse()


@pytest.fixture
def short_pulse():
    """Two-cycle 800 nm pulse at 1e14 W/cm²; cheap enough for ATI synthesis."""
    return PulseSettings(intensity_wcm2=1e14, n_cycles=2, steps_per_cycle=128).to_pulse()


@pytest.fixture
def flat_pulse(xe_pulse):
    """Flat-top version of the default pulse."""
    return LaserPulse(F0=xe_pulse.F0, omega_L=xe_pulse.omega_L, n_cycles=8, envelope="flat")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def run_config(tmp_path):
    """Default RunConfig writing into tmp_path/out."""
    return RunConfig(output_dir=str(tmp_path / "out"))
