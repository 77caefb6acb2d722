"""Explicit finite-difference solver for 1-D capillary imbibition.

Solves d(theta)/dt = d²/dz² B(theta/n0) on a uniform grid z_j = j·dz,
j = 0..N, N = floor(h1/dz), with the bottom node held at n0 (immersed
face) and the top node set by a Dirichlet or Robin exchange condition.
The interior update is the forward-in-time, centred-in-space stencil

    theta_j <- theta_j + (dt/dz²)·(B_{j+1} - 2·B_j + B_{j-1}),

stable under dt <= n0·dz²/(2·max B'). The time step is enforced, never
merely warned about: a supplied dt that violates the bound is rejected.

Absorbed mass per unit area is the trapezoidal rule over the profile;
values at arbitrary requested times come from linear interpolation
between the two bracketing steps.

The hot loop is compiled with numba; a single simulation is sequential
(stencil dependency), but distinct simulations share no state and may run
on separate threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import ExperimentSetup, MaterialSpec, ValidationError, _require
from .models import AbsorptionModel, CubicParams, KPParams, max_diffusivity


class NonFiniteStateError(RuntimeError):
    """The scheme produced a non-finite nodal value; carries the step index."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state detected at step {step}")
        self.step = step


@dataclass(frozen=True)
class DirichletTop:
    """Top face pinned at the ambient moisture (default: the setup's value)."""

    theta_ext: float | None = None


@dataclass(frozen=True)
class RobinTop:
    """Gradual exchange at the top face with rate k_w (1/cm).

    Discretised with a one-sided first-order difference and solved for the
    top node: theta_N = (theta_{N-1} + k_w·dz·theta_ext) / (1 + k_w·dz), a
    convex combination that preserves the max principle and tends to the
    Dirichlet condition as k_w grows.
    """

    k_w: float
    theta_ext: float | None = None

    def __post_init__(self):
        _require(self.k_w > 0.0, f"k_w must be positive, got {self.k_w}")


@dataclass(frozen=True)
class SolverConfig:
    """Grid spacing, optional time step, stability margin, BCs, outputs."""

    dz: float
    dt: float | None = None
    cfl_safety: float = 0.9
    top_bc: DirichletTop | RobinTop = DirichletTop()
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        _require(self.dz > 0.0, f"dz must be positive, got {self.dz}")
        _require(0.0 < self.cfl_safety <= 1.0, f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.dt is not None:
            _require(self.dt > 0.0, f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        _require(all(t >= 0.0 for t in self.snapshot_times), "snapshot times must be nonnegative")


@dataclass(frozen=True)
class SaturationProfile:
    """Moisture content theta at every node at one instant (0 <= theta <= n0)."""

    t: float
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))


@dataclass(frozen=True)
class SimulationResult:
    """Snapshots, uptake curve and metadata from one imbibition run.

    ``breakthrough_time`` is detected online at step resolution while the
    run advances (threshold passed to :func:`simulate`, default s_R);
    :func:`breakthrough_time` re-derives it from the stored snapshots for
    arbitrary thresholds.
    """

    profiles: tuple[SaturationProfile, ...]
    q_times: np.ndarray
    q: np.ndarray
    breakthrough_time: float | None
    z: np.ndarray
    dz: float
    n0: float
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "q_times", np.asarray(self.q_times, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        _require(bool(np.all(np.diff(self.q_times) > 0.0)), "q_curve times must be strictly increasing")
        _require(bool(np.all(self.q >= 0.0)), "absorbed mass must be nonnegative")


@njit(cache=True)
def _b_packed(kind, v, s):
    # kind 0 (cubic): v = [sR, sS, c3, plateau, -, -, -], B = c3*(sR-s)^2*(sR-3sS+2s)
    # kind 1 (kP):    v = [sR, sS, e, k2, k1, k0, plateau], B = w^e*((k2*w+k1)*w+k0)
    sR = v[0]
    sS = v[1]
    if s <= sR:
        return 0.0
    if kind == 0:
        if s >= sS:
            return v[3]
        d = sR - s
        return v[2] * d * d * (sR - 3.0 * sS + 2.0 * s)
    if s >= sS:
        return v[6]
    w = s - sR
    return w ** v[2] * ((v[3] * w + v[4]) * w + v[5])


@njit(cache=True)
def _advance(theta, work, lam, nsteps, kind, v, n0, top_theta, robin, kw_dz, bt_theta, step0):
    # Advances nsteps; returns (first step index with theta[N-1] >= bt_theta
    # or -1, abort step index on non-finite state or -1). bt_theta < 0
    # disables detection.
    n = theta.shape[0]
    cross = np.int64(-1)
    abort = np.int64(-1)
    for k in range(nsteps):
        for j in range(n):
            work[j] = _b_packed(kind, v, theta[j] / n0)
        total = 0.0
        for j in range(1, n - 1):
            theta[j] = theta[j] + lam * (work[j + 1] - 2.0 * work[j] + work[j - 1])
            total += theta[j]
        theta[0] = n0
        if robin:
            theta[n - 1] = (theta[n - 2] + kw_dz * top_theta) / (1.0 + kw_dz)
        else:
            theta[n - 1] = top_theta
        if cross < 0 and bt_theta >= 0.0 and theta[n - 2] >= bt_theta:
            cross = step0 + k + 1
        if total - total != 0.0:  # NaN or +/-inf anywhere in the interior
            abort = step0 + k + 1
            break
    return cross, abort


def _pack_model(model: AbsorptionModel, mu: float):
    """Flatten a parameter object into the kernel's (kind, coefficients) form."""
    if isinstance(model, CubicParams):
        width = model.s_S - model.s_R
        c3 = -2.0 * model.D / (3.0 * width * width)
        plateau = (2.0 / 3.0) * model.D * width
        return 0, np.array([model.s_R, model.s_S, c3, plateau, 0.0, 0.0, 0.0])
    if isinstance(model, KPParams):
        e = model.gamma - model.alpha
        a = model.s_R - model.s_S
        width = model.s_S - model.s_R
        pref = model.K_s * model.c / (mu * width**model.gamma)
        k2 = pref * (model.alpha - 2.0) / (e + 2.0)
        k1 = pref * 2.0 * (model.alpha - 1.0) * a / (e + 1.0)
        k0 = pref * model.alpha * a * a / e
        plateau = 2.0 * model.K_s * model.c * model.gamma * width ** (2.0 - model.alpha) / (mu * model._den)
        return 1, np.array([model.s_R, model.s_S, e, k2, k1, k0, plateau])
    raise TypeError(f"unsupported absorption model {type(model).__name__}")


def stable_timestep(
    model: AbsorptionModel,
    material: MaterialSpec,
    config: SolverConfig,
    mu: float | None = None,
) -> float:
    """Largest admissible time step: cfl_safety · n0·dz² / (2·max B'), s."""
    d_max = max_diffusivity(model, mu)
    if not (d_max > 0.0 and np.isfinite(d_max)):
        raise ValidationError(f"degenerate absorption model: max diffusivity {d_max}")
    return config.cfl_safety * material.n0 * config.dz**2 / (2.0 * d_max)


def absorbed_mass(profile: SaturationProfile, dz: float, rho: float) -> float:
    """Mass of absorbed liquid per unit area, g/cm²: trapezoidal rule.

    rho·(dz/2)·(theta_0 + 2·sum(theta_1..theta_{N-1}) + theta_N).
    """
    theta = profile.theta
    _require(theta.size >= 2, f"profile needs at least 2 nodes, got {theta.size}")
    return float(rho * (dz / 2.0) * (theta[0] + 2.0 * theta[1:-1].sum() + theta[-1]))


def breakthrough_time(result: SimulationResult, threshold: float) -> float | None:
    """Earliest snapshot time with saturation >= threshold at the last interior node.

    Returns None when the threshold is never reached within the stored
    snapshots. Resolution is limited to the snapshot grid; the online
    value in ``result.breakthrough_time`` has step resolution.
    """
    if not result.profiles:
        raise ValidationError("result contains no profiles")
    for pr in result.profiles:
        if pr.theta[-2] / result.n0 >= threshold:
            return pr.t
    return None


_MAX_KERNEL_CHUNK = 2_000_000  # keep single kernel calls bounded


def simulate(
    model: AbsorptionModel,
    material: MaterialSpec,
    setup: ExperimentSetup,
    config: SolverConfig,
    q_times=None,
    initial_theta=None,
    breakthrough_threshold: float | None = None,
) -> SimulationResult:
    """Run one imbibition simulation.

    Initial state is theta = 0 at interior nodes (override with
    ``initial_theta``, e.g. for equilibrium checks); the bottom node is
    held at n0 and the top node follows ``config.top_bc`` every step.
    Q is sampled at every snapshot time, every time in ``q_times`` (e.g.
    measurement instants) and at Tf, by linear interpolation between the
    bracketing steps. Breakthrough at the last interior node is detected
    online at threshold ``breakthrough_threshold`` (default: the model's
    s_R).

    Raises on CFL violation (reporting the computed bound) and on
    non-finite states (reporting the step index).
    """
    setup.validate_with(material)
    n0 = material.n0
    h1 = setup.h1
    _require(config.dz <= h1, f"dz={config.dz} exceeds the specimen height h1={h1}")

    n_cells = int(np.floor(h1 / config.dz))
    _require(n_cells >= 2, f"grid too coarse: floor(h1/dz)={n_cells}, need at least 2 intervals")
    n_nodes = n_cells + 1
    z = config.dz * np.arange(n_nodes)

    bound = stable_timestep(model, material, config, mu=setup.mu)
    if config.dt is not None:
        if config.dt > bound * (1.0 + 1e-12):
            raise ValidationError(
                f"dt={config.dt} violates the CFL bound: with cfl_safety={config.cfl_safety} "
                f"the largest admissible step is {bound}"
            )
        dt = config.dt
    else:
        dt = bound
    lam = dt / config.dz**2

    top = config.top_bc
    theta_ext = top.theta_ext if top.theta_ext is not None else setup.theta_ext
    _require(0.0 <= theta_ext <= n0, f"top boundary moisture {theta_ext} outside [0, n0={n0}]")
    robin = isinstance(top, RobinTop)
    kw_dz = top.k_w * config.dz if robin else 0.0

    snapshot_set = sorted(set(config.snapshot_times))
    _require(all(t <= setup.Tf for t in snapshot_set), "snapshot times must not exceed Tf")
    q_req = sorted(set(float(t) for t in (q_times if q_times is not None else ())))
    for t in q_req:
        _require(0.0 <= t <= setup.Tf, f"requested Q time {t} outside [0, Tf={setup.Tf}]")
    events = sorted(set(snapshot_set) | set(q_req) | {float(setup.Tf)})
    snapshots_wanted = set(snapshot_set)

    kind, pvec = _pack_model(model, setup.mu)

    if initial_theta is not None:
        theta = np.array(initial_theta, dtype=float)
        _require(theta.shape == (n_nodes,), f"initial_theta must have shape ({n_nodes},)")
    else:
        theta = np.zeros(n_nodes)
    theta[0] = n0
    theta[-1] = (theta[-2] + kw_dz * theta_ext) / (1.0 + kw_dz) if robin else theta_ext
    work = np.empty_like(theta)
    prev = theta.copy()

    thr = model.s_R if breakthrough_threshold is None else float(breakthrough_threshold)
    bt_theta = thr * n0
    bt_step = -1

    profiles: list[SaturationProfile] = []
    q_t: list[float] = []
    q_v: list[float] = []

    def record(state: np.ndarray, t: float) -> None:
        q_t.append(t)
        q_v.append(absorbed_mass(SaturationProfile(t, state), config.dz, setup.rho))
        if t in snapshots_wanted:
            profiles.append(SaturationProfile(t, state.copy()))

    def run_steps(nsteps: int, step0: int) -> None:
        nonlocal bt_step
        done = 0
        while done < nsteps:
            chunk = min(nsteps - done, _MAX_KERNEL_CHUNK)
            cross, abort = _advance(
                theta, work, lam, chunk, kind, pvec, n0, theta_ext, robin, kw_dz,
                -1.0 if bt_step >= 0 else bt_theta, step0 + done,
            )
            if abort >= 0:
                raise NonFiniteStateError(int(abort))
            if bt_step < 0 and cross >= 0:
                bt_step = int(cross)
            done += chunk

    # Initial state check for the online breakthrough detector.
    if theta[-2] >= bt_theta:
        bt_step = 0

    k = 0  # theta currently holds the state at t = k*dt
    for te in events:
        if te == 0.0:
            record(theta, 0.0)
            continue
        k_target = max(int(np.ceil(te / dt - 1e-9)), 1)
        if k_target > k:
            bulk = k_target - 1 - k
            if bulk > 0:
                run_steps(bulk, k)
                k += bulk
            prev[:] = theta
            run_steps(1, k)
            k += 1
        frac = min(max((te - (k - 1) * dt) / dt, 0.0), 1.0)
        record(prev + frac * (theta - prev), te)

    bt = bt_step * dt if bt_step >= 0 else None
    return SimulationResult(
        profiles=tuple(profiles),
        q_times=np.array(q_t),
        q=np.array(q_v),
        breakthrough_time=bt,
        z=z,
        dz=config.dz,
        n0=n0,
        rho=setup.rho,
    )
