"""Core domain types and ambient-moisture helpers.

Everything in this package works in CGS units: lengths in cm, masses in g,
times in s, viscosity in Poise = g/(cm·s), pressure in g/(cm·s²) = 0.1 Pa.
All types are frozen value objects; instances can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


@dataclass(frozen=True)
class MaterialSpec:
    """A porous medium: open porosity and (informational) tortuosity.

    Parameters
    ----------
    name : str
        Label for reports and output files.
    n0 : float
        Open porosity, volume fraction of interconnected voids, in (0, 1).
    tau : float, optional
        Tortuosity factor (actual flow-path length over straight-line
        length), >= 1. Carried as metadata; no operation consumes it.
    """

    name: str
    n0: float
    tau: float | None = None

    def __post_init__(self):
        _require(0.0 < self.n0 < 1.0, f"open porosity n0 must be in (0, 1), got {self.n0}")
        if self.tau is not None:
            _require(self.tau >= 1.0, f"tortuosity must be >= 1, got {self.tau}")


@dataclass(frozen=True)
class ExperimentSetup:
    """Geometry, fluid properties and ambient conditions of an imbibition run.

    Parameters
    ----------
    h1 : float
        Specimen height, cm.
    h2 : float
        Immersed height, cm. Metadata only: in the 1-D model the immersed
        region collapses onto the bottom boundary node.
    rho : float
        Liquid density, g/cm3.
    mu : float
        Liquid viscosity, Poise.
    Tf : float
        Final observation time, s.
    theta_ext : float
        Ambient moisture volume fraction at the top face. Supplied
        explicitly; see :func:`ambient_moisture` for the formula route.
    temperature : float, optional
        Ambient temperature, deg C (metadata).
    UR : float, optional
        Relative humidity fraction in [0, 1] (metadata).
    """

    h1: float
    h2: float
    rho: float
    mu: float
    Tf: float
    theta_ext: float
    temperature: float | None = None
    UR: float | None = None

    def __post_init__(self):
        _require(self.h1 > 0.0, f"h1 must be positive, got {self.h1}")
        _require(0.0 <= self.h2 < self.h1, f"need 0 <= h2 < h1, got h2={self.h2}, h1={self.h1}")
        _require(self.rho > 0.0, f"rho must be positive, got {self.rho}")
        _require(self.mu > 0.0, f"mu must be positive, got {self.mu}")
        _require(self.Tf > 0.0, f"Tf must be positive, got {self.Tf}")
        _require(self.theta_ext >= 0.0, f"theta_ext must be >= 0, got {self.theta_ext}")
        if self.UR is not None:
            _require(0.0 <= self.UR <= 1.0, f"UR must be a fraction in [0, 1], got {self.UR}")

    def validate_with(self, material: MaterialSpec) -> None:
        """Check the cross-object invariant theta_ext < n0."""
        _require(
            self.theta_ext < material.n0,
            f"theta_ext={self.theta_ext} must be below the open porosity "
            f"n0={material.n0} of material '{material.name}'",
        )


@dataclass(frozen=True)
class ImbibitionDataset:
    """Measured cumulative uptake: (t_k, Q_k) pairs, strictly increasing t."""

    times: np.ndarray  # s
    q: np.ndarray      # g/cm2

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "q", q)
        _require(times.ndim == 1 and q.ndim == 1, "times and q must be 1-D")
        _require(times.size == q.size, f"times and q lengths differ: {times.size} vs {q.size}")
        _require(times.size >= 1, "dataset must contain at least one sample")
        _require(bool(np.all(times > 0.0)), "all sample times must be positive")
        _require(bool(np.all(np.diff(times) > 0.0)), "sample times must be strictly increasing")
        _require(bool(np.all(q >= 0.0)), "absorbed mass per area must be nonnegative")

    @property
    def n_meas(self) -> int:
        return int(self.times.size)

    @classmethod
    def from_pairs(cls, samples) -> "ImbibitionDataset":
        arr = np.asarray(list(samples), dtype=float)
        _require(arr.ndim == 2 and arr.shape[1] == 2, "samples must be (t, Q) pairs")
        return cls(times=arr[:, 0], q=arr[:, 1])


@dataclass(frozen=True)
class MIPDataset:
    """Mercury-intrusion measurements: pressures and specific intruded volumes.

    Pressures are stored in CGS, g/(cm·s²); use the io helpers to convert
    instrument output (typically MPa) on ingestion.
    """

    p_hg: np.ndarray    # g/(cm s^2)
    volume: np.ndarray  # specific intruded volume
    v_max: float = field(default=0.0)

    def __post_init__(self):
        p = np.asarray(self.p_hg, dtype=float)
        v = np.asarray(self.volume, dtype=float)
        object.__setattr__(self, "p_hg", p)
        object.__setattr__(self, "volume", v)
        _require(p.ndim == 1 and v.ndim == 1 and p.size == v.size, "p_hg and volume must be 1-D and equal length")
        _require(p.size >= 1, "MIP dataset must contain at least one point")
        _require(self.v_max > 0.0, f"v_max must be positive, got {self.v_max}")
        _require(bool(np.all(p >= 0.0)), "mercury pressures must be nonnegative")
        _require(bool(np.all((v >= 0.0) & (v <= self.v_max))), "specific volumes must lie in [0, v_max]")

    @property
    def n_points(self) -> int:
        return int(self.p_hg.size)


# Saturated-vapor-density polynomial fit range, deg C.
SVD_T_MIN = -10.0
SVD_T_MAX = 60.0


def saturated_vapor_density(T: float) -> float:
    """Saturated water-vapor density at temperature T, in g/cm3.

    Cubic polynomial fit, valid for T in [-10, 60] deg C; out-of-range
    temperatures are rejected.
    """
    _require(
        SVD_T_MIN <= T <= SVD_T_MAX,
        f"temperature {T} outside the polynomial fit range [{SVD_T_MIN}, {SVD_T_MAX}] C",
    )
    return (5.018 + 0.32321 * T + 8.1847e-3 * T**2 + 3.1243e-4 * T**3) * 1e-6


def ambient_moisture(T: float, UR: float, material: MaterialSpec, rho: float) -> float:
    """Ambient moisture volume fraction from temperature and humidity.

    theta_ext = SVD(T)/rho * n0 * UR.  Provided as a helper; it never
    overrides an explicitly supplied ``ExperimentSetup.theta_ext`` (the two
    routes can disagree substantially, so the choice is left to the caller).
    """
    _require(0.0 <= UR <= 1.0, f"UR must be a fraction in [0, 1], got {UR}")
    _require(rho > 0.0, f"rho must be positive, got {rho}")
    return saturated_vapor_density(T) / rho * material.n0 * UR


def ambient_moisture_report(setup: ExperimentSetup, material: MaterialSpec) -> dict | None:
    """Side-by-side view of the supplied theta_ext and the formula route.

    Returns None when the setup carries no temperature/humidity metadata.
    Neither value overrides the other; the ratio simply surfaces how far
    the two routes disagree.
    """
    if setup.temperature is None or setup.UR is None:
        return None
    formula = ambient_moisture(setup.temperature, setup.UR, material, setup.rho)
    return {
        "theta_ext_supplied": setup.theta_ext,
        "theta_ext_formula": formula,
        "supplied_over_formula": setup.theta_ext / formula if formula > 0.0 else float("inf"),
    }
