"""Inverse problem: fit absorption parameters to imbibition data.

The objective is the mean relative square error between simulated and
measured uptake; the optimizer is simulated annealing with Metropolis
acceptance, geometric cooling and Gaussian proposals clipped to bounds.
Scale-spanning parameters (D, C) are searched in log10. The proposal
width shrinks with the square root of the temperature ratio so late
iterations refine instead of wandering.

Calibration follows a two-step workflow: the three-parameter cubic family
first (cheap, pins down the diffusivity scale and the saturation window),
then the kP family warm-started from it over {s_R, s_S, alpha, gamma,
C = K_s·c}. Only the product C is identifiable from uptake data, so the
split into K_s and c is applied afterwards, either from a user-supplied
permeability or by matching the capillary-pressure curve to MIP data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ExperimentSetup, ImbibitionDataset, MaterialSpec, MIPDataset, ValidationError, _require
from .models import CubicParams, KPParams, kp_max_diffusivity
from .retention import LaplaceConstants, RetentionCurve, build_retention_curve
from .solver import SolverConfig, simulate


class CalibrationError(RuntimeError):
    """The search never found a finite objective value within its budget."""


def error_functional(q_num, q_data) -> float:
    """Mean relative square error (1/N)·sum((Q_num - Q)² / Q_num²).

    Both sequences must have equal length >= 1 and the simulated values
    must be nonzero (each term is normalized by Q_num).
    """
    qn = np.asarray(q_num, dtype=float)
    qd = np.asarray(q_data, dtype=float)
    _require(qn.ndim == 1 and qd.ndim == 1, "inputs must be 1-D sequences")
    if qn.size != qd.size:
        raise ValidationError(f"length mismatch: {qn.size} simulated vs {qd.size} measured")
    _require(qn.size >= 1, "need at least one sample")
    zero = np.flatnonzero(qn == 0.0)
    if zero.size:
        raise ValidationError(f"simulated uptake is zero at index {zero[0]}; relative error undefined")
    return float(np.mean((qn - qd) ** 2 / qn**2))


@dataclass(frozen=True)
class AnnealerConfig:
    """Simulated-annealing hyperparameters.

    initial_temperature of None uses the objective value at the starting
    point. neighbor_scale is the proposal standard deviation as a fraction
    of each bound width (it then shrinks with sqrt(T/T0)).
    """

    initial_temperature: float | None = None
    cooling_factor: float = 0.95
    iterations_per_temperature: int = 50
    max_evaluations: int = 5000
    neighbor_scale: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.initial_temperature is not None:
            _require(self.initial_temperature > 0.0, "initial_temperature must be positive")
        _require(0.0 < self.cooling_factor < 1.0, f"cooling_factor must be in (0, 1), got {self.cooling_factor}")
        _require(self.iterations_per_temperature > 0, "iterations_per_temperature must be positive")
        _require(self.max_evaluations > 0, "max_evaluations must be positive")
        _require(self.neighbor_scale > 0.0, "neighbor_scale must be positive")
        _require(self.rng_seed >= 0, "rng_seed must be nonnegative")


@dataclass(frozen=True)
class CalibrationResult:
    """Best-found parameters, their error, and the evaluation trace."""

    params: object
    error: float
    evaluations: int
    trace: tuple[tuple[int, float], ...]

    def __post_init__(self):
        _require(self.error >= 0.0, f"error must be nonnegative, got {self.error}")


def _interval(pair, name) -> tuple[float, float]:
    lo, hi = float(pair[0]), float(pair[1])
    _require(lo < hi, f"{name} bounds must satisfy lower < upper, got ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class BoxBounds:
    """Plain rectangular search box; decodes to the raw coordinate vector."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        _require(lo.shape == hi.shape, "lo and hi must have the same shape")
        _require(bool(np.all(lo < hi)), "each lower bound must be below its upper bound")

    @property
    def dim(self) -> int:
        return int(self.lo.size)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def decode(self, x: np.ndarray):
        return np.array(x)


# Minimum admissible gaps inside the coupled boxes.
_MIN_SAT_GAP = 0.01
_MIN_GAMMA_GAP = 1.01


@dataclass(frozen=True)
class CubicBounds:
    """Closed intervals for {s_R, s_S, D}; D is searched in log10.

    s_S additionally respects the moving floor s_S >= s_R + 0.01.
    """

    s_R: tuple[float, float] = (0.05, 0.95)
    s_S: tuple[float, float] = (0.06, 1.0)
    D: tuple[float, float] = (1e-5, 1.0)

    def __post_init__(self):
        sr = _interval(self.s_R, "s_R")
        ss = _interval(self.s_S, "s_S")
        d = _interval(self.D, "D")
        _require(0.0 <= sr[0] and ss[1] <= 1.0, "saturation bounds must lie in [0, 1]")
        _require(ss[1] >= sr[0] + _MIN_SAT_GAP, "s_S upper bound leaves no room above s_R")
        _require(d[0] > 0.0, "D bounds must be positive")
        object.__setattr__(self, "s_R", sr)
        object.__setattr__(self, "s_S", ss)
        object.__setattr__(self, "D", d)

    @property
    def dim(self) -> int:
        return 3

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.s_R[0], self.s_S[0], math.log10(self.D[0])])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.s_R[1], self.s_S[1], math.log10(self.D[1])])

    def clip(self, x: np.ndarray) -> np.ndarray:
        y = np.clip(x, self.lo, self.hi)
        y[1] = max(y[1], y[0] + _MIN_SAT_GAP)
        return y

    def decode(self, x: np.ndarray) -> CubicParams:
        return CubicParams(s_R=float(x[0]), s_S=float(x[1]), D=float(10.0 ** x[2]))


@dataclass(frozen=True)
class KPBounds:
    """Closed intervals for {s_R, s_S, alpha, gamma, C = K_s·c}.

    The search runs over the identifiable product C (log10); moving floors
    keep s_S >= s_R + 0.01 and gamma >= alpha + 1.01.
    """

    s_R: tuple[float, float] = (0.05, 0.95)
    s_S: tuple[float, float] = (0.06, 1.0)
    alpha: tuple[float, float] = (0.05, 0.95)
    gamma: tuple[float, float] = (1.06, 5.0)
    C: tuple[float, float] = (1e-7, 1e-1)

    def __post_init__(self):
        sr = _interval(self.s_R, "s_R")
        ss = _interval(self.s_S, "s_S")
        al = _interval(self.alpha, "alpha")
        ga = _interval(self.gamma, "gamma")
        c = _interval(self.C, "C")
        _require(0.0 <= sr[0] and ss[1] <= 1.0, "saturation bounds must lie in [0, 1]")
        _require(ss[1] >= sr[0] + _MIN_SAT_GAP, "s_S upper bound leaves no room above s_R")
        _require(0.0 < al[0] and al[1] < 1.0, "alpha bounds must lie inside (0, 1)")
        _require(ga[1] >= al[0] + _MIN_GAMMA_GAP, "gamma upper bound leaves no room above alpha")
        _require(c[0] > 0.0, "C bounds must be positive")
        object.__setattr__(self, "s_R", sr)
        object.__setattr__(self, "s_S", ss)
        object.__setattr__(self, "alpha", al)
        object.__setattr__(self, "gamma", ga)
        object.__setattr__(self, "C", c)

    @property
    def dim(self) -> int:
        return 5

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.s_R[0], self.s_S[0], self.alpha[0], self.gamma[0], math.log10(self.C[0])])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.s_R[1], self.s_S[1], self.alpha[1], self.gamma[1], math.log10(self.C[1])])

    def clip(self, x: np.ndarray) -> np.ndarray:
        y = np.clip(x, self.lo, self.hi)
        y[1] = max(y[1], y[0] + _MIN_SAT_GAP)
        y[3] = max(y[3], y[2] + _MIN_GAMMA_GAP)
        return y

    def decode(self, x: np.ndarray) -> KPParams:
        # Interim split K_s = 1: only the product C matters to the forward
        # model; the final split is applied by calibrate_kp.
        return KPParams(
            s_R=float(x[0]), s_S=float(x[1]), alpha=float(x[2]),
            gamma=float(x[3]), K_s=1.0, c=float(10.0 ** x[4]),
        )


def simulated_annealing(objective, bounds, config: AnnealerConfig, x0=None) -> CalibrationResult:
    """Minimize ``objective(bounds.decode(x))`` over the bounded box.

    Metropolis acceptance exp(-dE/T), geometric cooling, Gaussian
    proposals scaled by neighbor_scale·width·sqrt(T/T0) and clipped into
    bounds; each cooling level restarts the chain from the incumbent
    best. Deterministic for a fixed rng_seed. The returned error never
    exceeds the objective at the starting point.
    """
    rng = np.random.default_rng(config.rng_seed)
    lo, hi = bounds.lo, bounds.hi
    width = hi - lo

    if x0 is None:
        x = bounds.clip(lo + rng.random(bounds.dim) * width)
    else:
        x = bounds.clip(np.asarray(x0, dtype=float))

    def evaluate(xv) -> float:
        val = objective(bounds.decode(xv))
        return float(val) if np.isfinite(val) else np.inf

    energy = evaluate(x)
    evals = 1
    trace: list[tuple[int, float]] = [(1, energy)]
    best_x, best_e = x.copy(), energy

    t0 = config.initial_temperature if config.initial_temperature is not None else max(energy, 1e-300)
    if not np.isfinite(t0):
        t0 = 1.0
    temp = t0

    while evals < config.max_evaluations:
        sigma = config.neighbor_scale * width * math.sqrt(max(temp / t0, 1e-16))
        x, energy = best_x.copy(), best_e
        for _ in range(config.iterations_per_temperature):
            prop = bounds.clip(x + rng.normal(size=bounds.dim) * sigma)
            e_prop = evaluate(prop)
            evals += 1
            trace.append((evals, e_prop))
            d_e = e_prop - energy
            if d_e < 0.0 or (temp > 0.0 and rng.random() < math.exp(-min(d_e / temp, 700.0))):
                x, energy = prop, e_prop
                if energy < best_e:
                    best_x, best_e = x.copy(), energy
            if evals >= config.max_evaluations:
                break
        temp *= config.cooling_factor

    if not np.isfinite(best_e):
        raise CalibrationError(
            f"objective was never finite within {config.max_evaluations} evaluations"
        )
    return CalibrationResult(
        params=bounds.decode(best_x), error=best_e, evaluations=evals, trace=tuple(trace),
    )


def _forward_config(solver_config: SolverConfig) -> SolverConfig:
    # Candidate-dependent CFL step: drop any user dt, keep grid/BC choices.
    return SolverConfig(
        dz=solver_config.dz,
        dt=None,
        cfl_safety=solver_config.cfl_safety,
        top_bc=solver_config.top_bc,
        snapshot_times=(),
    )


def _uptake_error(model, data: ImbibitionDataset, material, setup, config: SolverConfig) -> float:
    result = simulate(model, material, setup, config, q_times=data.times)
    q_at = dict(zip(result.q_times.tolist(), result.q.tolist()))
    q_num = np.array([q_at[t] for t in data.times.tolist()])
    return error_functional(q_num, data.q)


def calibrate_cubic(
    data: ImbibitionDataset,
    material: MaterialSpec,
    setup: ExperimentSetup,
    solver_config: SolverConfig,
    bounds: CubicBounds | None = None,
    annealer: AnnealerConfig | None = None,
) -> CalibrationResult:
    """Step 1: fit the cubic family {s_R, s_S, D} to uptake data."""
    bounds = bounds if bounds is not None else CubicBounds()
    annealer = annealer if annealer is not None else AnnealerConfig()
    fwd = _forward_config(solver_config)

    def objective(params: CubicParams) -> float:
        return _uptake_error(params, data, material, setup, fwd)

    return simulated_annealing(objective, bounds, annealer)


# The cubic proxy's fitted support is a biased estimate of the kP support
# (the families' shapes differ), so the warm box must leave room for the
# data to correct it.
_WARM_SAT_SLACK = 0.15     # how far s_R, s_S may drift from the step-1 fit
_WARM_C_DECADES = 1.0      # log10 slack of C around the diffusivity-matched guess
                           # (also caps the CFL cost of the slowest candidates)


def _narrowed_kp_bounds(bounds: KPBounds, warm: CubicParams, c_center: float) -> KPBounds:
    def shrink(box, center, slack, floor=None, ceil=None):
        lo = max(box[0], center - slack)
        hi = min(box[1], center + slack)
        if floor is not None:
            lo = max(lo, floor)
        if ceil is not None:
            hi = min(hi, ceil)
        if not lo < hi:  # warm start outside the user box; keep the box
            return box
        return (lo, hi)

    s_r = shrink(bounds.s_R, warm.s_R, _WARM_SAT_SLACK)
    s_s = shrink(bounds.s_S, warm.s_S, _WARM_SAT_SLACK, floor=s_r[0] + _MIN_SAT_GAP)
    log_c = math.log10(c_center)
    c_box = shrink(
        (math.log10(bounds.C[0]), math.log10(bounds.C[1])), log_c, _WARM_C_DECADES,
    )
    return KPBounds(
        s_R=s_r, s_S=s_s, alpha=bounds.alpha, gamma=bounds.gamma,
        C=(10.0 ** c_box[0], 10.0 ** c_box[1]),
    )


def fit_c_to_retention(curve: RetentionCurve, params: KPParams) -> float:
    """Capillary-pressure scale c matching a retention curve in log space.

    P_c is linear in c, so the log10 residuals over the overlap with
    (s_R, s_S] shift uniformly with log10 c; the closed-form optimum sets
    their mean to zero. Points outside the support or at zero pressure
    are excluded.
    """
    from .models import kp_capillary_pressure

    shape = replace(params, c=1.0)
    mask = (curve.s > params.s_R) & (curve.s < params.s_S) & (curve.p > 0.0)
    if not np.any(mask):
        raise ValidationError("no retention points overlap the model support (s_R, s_S)")
    shape_vals = kp_capillary_pressure(curve.s[mask], shape)
    log_c = float(np.mean(np.log10(curve.p[mask]) - np.log10(shape_vals)))
    return 10.0 ** log_c


def calibrate_kp(
    data: ImbibitionDataset,
    material: MaterialSpec,
    setup: ExperimentSetup,
    solver_config: SolverConfig,
    warm_start: CubicParams,
    bounds: KPBounds | None = None,
    annealer: AnnealerConfig | None = None,
    k_s: float | None = None,
    mip: MIPDataset | None = None,
    laplace: LaplaceConstants | None = None,
) -> CalibrationResult:
    """Step 2: fit the kP family, warm-started from the cubic fit.

    With default bounds, s_R and s_S search a window around ``warm_start``
    and C stays within a decade of the value whose peak diffusivity
    matches the step-1 D; explicitly supplied ``bounds`` are honored
    as-is. Exactly one of ``k_s`` (user-supplied permeability at
    saturation, cm²) or ``mip`` (retention data used to pin c, hence
    K_s = C/c) selects how the identifiable product C = K_s·c is split in
    the returned parameters.
    """
    if (k_s is None) == (mip is None):
        raise ValidationError("supply exactly one of k_s or mip to split C = K_s*c")
    if k_s is not None:
        _require(k_s > 0.0, f"k_s must be positive, got {k_s}")

    annealer = annealer if annealer is not None else AnnealerConfig()
    fwd = _forward_config(solver_config)
    outer = bounds if bounds is not None else KPBounds()

    # Initial guess: warm saturations, mid-box exponents, C matched to the
    # step-1 diffusivity scale (the peak diffusivity is linear in C).
    alpha0 = 0.5 * (outer.alpha[0] + outer.alpha[1])
    gamma0 = max(0.5 * (outer.gamma[0] + outer.gamma[1]), alpha0 + _MIN_GAMMA_GAP)
    s_r0 = min(max(warm_start.s_R, outer.s_R[0]), outer.s_R[1])
    s_s0 = min(max(warm_start.s_S, s_r0 + _MIN_SAT_GAP), outer.s_S[1])
    probe = KPParams(s_R=s_r0, s_S=s_s0, alpha=alpha0, gamma=gamma0, K_s=1.0, c=1.0)
    d_probe = kp_max_diffusivity(probe, setup.mu)
    c_center = warm_start.D / d_probe
    c_center = min(max(c_center, outer.C[0]), outer.C[1])

    search = outer if bounds is not None else _narrowed_kp_bounds(outer, warm_start, c_center)
    x0 = np.array([s_r0, s_s0, alpha0, gamma0, math.log10(c_center)])

    def objective(params: KPParams) -> float:
        return _uptake_error(params, data, material, setup, fwd)

    fit = simulated_annealing(objective, search, annealer, x0=x0)
    interim: KPParams = fit.params
    product = interim.C

    if k_s is not None:
        c_split = product / k_s
        final = replace(interim, K_s=k_s, c=c_split)
    else:
        curve = build_retention_curve(mip, laplace if laplace is not None else LaplaceConstants())
        c_split = fit_c_to_retention(curve, interim)
        final = replace(interim, K_s=product / c_split, c=c_split)

    return CalibrationResult(
        params=final, error=fit.error, evaluations=fit.evaluations, trace=fit.trace,
    )


_KP_FIELDS = ("s_R", "s_S", "alpha", "c", "K_s", "gamma")


def oat_sensitivity(
    best: KPParams,
    data: ImbibitionDataset,
    material: MaterialSpec,
    setup: ExperimentSetup,
    solver_config: SolverConfig,
    sweep: dict,
) -> dict[str, list[tuple[float, float]]]:
    """One-factor-at-a-time sweeps of the uptake error around an optimum.

    For each parameter name in ``sweep`` (any of s_R, s_S, alpha, c, K_s,
    gamma), evaluates the error on its grid with the remaining parameters
    fixed at ``best``. Returns {name: [(value, error), ...]}.
    """
    fwd = _forward_config(solver_config)
    out: dict[str, list[tuple[float, float]]] = {}
    for name, grid in sweep.items():
        if name not in _KP_FIELDS:
            raise ValidationError(f"unknown parameter '{name}'; expected one of {_KP_FIELDS}")
        curve = []
        for value in grid:
            params = replace(best, **{name: float(value)})
            curve.append((float(value), _uptake_error(params, data, material, setup, fwd)))
        out[name] = curve
    return out
