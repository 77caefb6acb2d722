"""Shared fixtures: the two mortar parameter sets and small synthetic problems."""

import numpy as np
import pytest
from hypothesis import settings

# Property tests must behave identically on every run of the suite.
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")

from mortarflow import (
    CubicParams,
    ExperimentSetup,
    ImbibitionDataset,
    KPParams,
    MaterialSpec,
    SolverConfig,
    simulate,
)

MU_WATER = 8.9e-3  # Poise, 25 C


@pytest.fixture(scope="session")
def ghiara_material():
    return MaterialSpec(name="ghiara", n0=0.466, tau=9.9)


@pytest.fixture(scope="session")
def azolo_material():
    return MaterialSpec(name="azolo", n0=0.385, tau=7.6)


@pytest.fixture(scope="session")
def lab_setup():
    return ExperimentSetup(
        h1=5.0, h2=2.5e-2, rho=1.0, mu=MU_WATER, Tf=5400.0,
        theta_ext=2.1e-3, temperature=25.0, UR=0.9,
    )


@pytest.fixture(scope="session")
def ghiara_kp():
    return KPParams(s_R=0.675, s_S=0.9994, alpha=0.25, c=1.4e6, K_s=7.65e-10, gamma=1.865)


@pytest.fixture(scope="session")
def azolo_kp():
    # s_S near 1, same value as ghiara (a maximum saturation at or below
    # s_R is rejected by construction).
    return KPParams(s_R=0.55, s_S=0.9994, alpha=0.25, c=1.98e5, K_s=7.93e-10, gamma=1.45)


@pytest.fixture(scope="session")
def ghiara_cubic():
    return CubicParams(s_R=0.675, s_S=0.9994, D=1.95e-2)


def small_problem():
    """Small, fast forward problem shared by calibration tests."""
    material = MaterialSpec(name="synthetic", n0=0.4)
    setup = ExperimentSetup(h1=1.0, h2=0.0, rho=1.0, mu=MU_WATER, Tf=400.0, theta_ext=0.0)
    config = SolverConfig(dz=0.05)
    times = np.linspace(20.0, 400.0, 12)
    return material, setup, config, times


def synthesize_dataset(model, material, setup, config, times) -> ImbibitionDataset:
    """Forward-solve a known model and freeze its uptake as a dataset."""
    result = simulate(model, material, setup, config, q_times=times)
    q_at = dict(zip(result.q_times.tolist(), result.q.tolist()))
    return ImbibitionDataset(times=times, q=np.array([q_at[t] for t in times.tolist()]))


@pytest.fixture(scope="session")
def synthetic_cubic_problem():
    material, setup, config, times = small_problem()
    truth = CubicParams(s_R=0.12, s_S=0.88, D=5.2e-3)
    data = synthesize_dataset(truth, material, setup, config, times)
    return truth, data, material, setup, config


@pytest.fixture(scope="session")
def synthetic_kp_problem():
    material, setup, config, times = small_problem()
    truth = KPParams(s_R=0.15, s_S=0.9, alpha=0.3, c=3.0e5, K_s=1.0e-9, gamma=1.8)
    data = synthesize_dataset(truth, material, setup, config, times)
    return truth, data, material, setup, config
