"""Water-retention curves from mercury-intrusion data.

Mercury intrusion probes the pore space at increasing pressure; each
measured pair (P_Hg, V) converts to a water-suction point through the
Laplace relation between the two fluids' surface tensions and contact
angles, with saturation s = 1 - V/V_max. The resulting curve validates a
calibrated capillary-pressure model at the order-of-magnitude level, so
comparisons are carried out in log10 space.

Pressure units pass through unchanged (the Laplace factor is
dimensionless); the io module converts instrument MPa to CGS on ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MIPDataset, ValidationError, _require
from .models import KPParams, kp_capillary_pressure


@dataclass(frozen=True)
class LaplaceConstants:
    """Surface tensions (N/m) and contact angles (degrees) of water and mercury."""

    T_w: float = 0.073
    T_Hg: float = 0.489
    theta_w: float = 0.0
    theta_Hg: float = 130.0

    def __post_init__(self):
        _require(self.T_w > 0.0 and self.T_Hg > 0.0, "surface tensions must be positive")
        if abs(math.cos(math.radians(self.theta_Hg))) < 1e-12:
            raise ValidationError("mercury contact angle of 90 degrees makes the Laplace factor singular")

    @property
    def factor(self) -> float:
        """Dimensionless suction conversion T_w·cos(theta_w) / (T_Hg·|cos(theta_Hg)|)."""
        return (self.T_w * math.cos(math.radians(self.theta_w))) / (
            self.T_Hg * abs(math.cos(math.radians(self.theta_Hg)))
        )


@dataclass(frozen=True)
class RetentionCurve:
    """Saturation/suction pairs (s in [0, 1], P >= 0), sorted by increasing s."""

    s: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)
        _require(s.ndim == 1 and p.ndim == 1 and s.size == p.size, "s and p must be 1-D and equal length")
        _require(s.size >= 1, "retention curve must contain at least one point")
        _require(bool(np.all((s >= 0.0) & (s <= 1.0))), "saturations must lie in [0, 1]")
        _require(bool(np.all(p >= 0.0)), "suctions must be nonnegative")
        _require(bool(np.all(np.diff(s) >= 0.0)), "curve must be sorted by increasing saturation")


@dataclass(frozen=True)
class RetentionComparison:
    """Log-space agreement report between a model P_c and a measured curve."""

    mean_log10_ratio: float
    max_abs_log10_ratio: float
    within_decade_fraction: float
    n_compared: int
    n_excluded: int


def mip_to_suction(p_hg, constants: LaplaceConstants):
    """Water suction equivalent of a mercury intrusion pressure.

    Linear in P_Hg with the dimensionless Laplace factor; output carries
    the unit of the input.
    """
    p = np.asarray(p_hg, dtype=float)
    if np.any(p < 0.0):
        raise ValidationError("mercury pressure must be nonnegative")
    out = constants.factor * p
    return float(out) if np.ndim(p_hg) == 0 else out


def mip_saturation(v, v_max: float):
    """Water saturation 1 - V/V_max for specific intruded volume V."""
    _require(v_max > 0.0, f"v_max must be positive, got {v_max}")
    vv = np.asarray(v, dtype=float)
    if np.any(vv < 0.0) or np.any(vv > v_max):
        raise ValidationError(f"specific volume must lie in [0, v_max={v_max}]")
    out = 1.0 - vv / v_max
    return float(out) if np.ndim(v) == 0 else out


def build_retention_curve(data: MIPDataset, constants: LaplaceConstants) -> RetentionCurve:
    """Pointwise conversion of an MIP dataset, sorted by increasing saturation."""
    s = mip_saturation(data.volume, data.v_max)
    p = mip_to_suction(data.p_hg, constants)
    order = np.argsort(s, kind="stable")
    return RetentionCurve(s=s[order], p=p[order])


def retention_compare(curve: RetentionCurve, params: KPParams) -> RetentionComparison:
    """Compare a measured retention curve against a calibrated P_c in log space.

    Only points with saturation in (s_R, s_S] and positive measured
    suction enter (P_c diverges at s_R and the log ratio needs P > 0);
    excluded points are counted. Reports the mean and max |log10
    (P_c/P_meas)| and the fraction of points within one decade.
    """
    _require(curve.s.size >= 1, "retention curve is empty")
    mask = (curve.s > params.s_R) & (curve.s <= params.s_S) & (curve.p > 0.0)
    n_excluded = int(curve.s.size - np.count_nonzero(mask))
    if not np.any(mask):
        raise ValidationError(
            f"no retention points overlap the model support ({params.s_R}, {params.s_S}]"
        )
    model_p = kp_capillary_pressure(curve.s[mask], params)
    positive = model_p > 0.0  # P_c(s_S) == 0 exactly; no finite log ratio there
    n_excluded += int(np.count_nonzero(~positive))
    if not np.any(positive):
        raise ValidationError("model capillary pressure vanishes at every overlapping point")
    ratios = np.log10(model_p[positive]) - np.log10(curve.p[mask][positive])
    return RetentionComparison(
        mean_log10_ratio=float(np.mean(ratios)),
        max_abs_log10_ratio=float(np.max(np.abs(ratios))),
        within_decade_fraction=float(np.mean(np.abs(ratios) <= 1.0)),
        n_compared=int(ratios.size),
        n_excluded=n_excluded,
    )
