"""File formats, ingestion and result emission.

Time series travel as CSV with ``#``-prefixed metadata lines and a fixed
header row naming columns and units; configuration is a nested YAML
manifest; fitted parameters land in JSON. Numbers are serialized with
repr-level precision so a written file re-ingests to identical values.

Input pressure from MIP instruments is expected in MPa and converted to
CGS (×1e7) on ingestion; everything downstream stays CGS.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .core import (
    ExperimentSetup,
    ImbibitionDataset,
    MaterialSpec,
    MIPDataset,
    ValidationError,
    _require,
)
from .models import CubicParams, KPParams
from .solver import DirichletTop, RobinTop, SimulationResult, SolverConfig

MPA_TO_CGS = 1e7  # 1 MPa = 1e7 g/(cm·s²)

# Pinned output headers (column names and units).
Q_CURVE_HEADER = "t_s,Q_g_per_cm2"
PROFILES_HEADER = "t_s,z_cm,theta"
RETENTION_HEADER = "saturation,P_model,P_mip"
TRACE_HEADER = "phase,evaluation,error"
SENSITIVITY_HEADER = "value,E2"
RAW_IMBIBITION_HEADER = "t_s,w_g"
MIP_HEADER = "P_hg_MPa,V_specific"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def capillary_coefficient(m1: float, m2: float) -> float:
    """Capillary coefficient 0.1·(M2 - M1), g/(cm²·s^½), from the two weighings."""
    if m2 < m1:
        raise ValidationError(f"m2={m2} must not be below m1={m1}")
    return 0.1 * (m2 - m1)


@dataclass(frozen=True)
class RawImbibitionSeries:
    """Raw weighings: dry weight, exposed area, and (t, w) records."""

    w0: float
    area: float
    times: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        _require(self.w0 >= 0.0, f"dry weight must be nonnegative, got {self.w0}")
        _require(self.area > 0.0, f"exposed area must be positive, got {self.area}")
        _require(self.times.size == self.weights.size, "times and weights differ in length")
        _require(self.times.size >= 1, "series must contain at least one record")


def ingest_imbibition(series: RawImbibitionSeries) -> ImbibitionDataset:
    """Convert raw weighings to absorbed mass per area, Q = (w - w0)/A.

    Rejects nonmonotone timestamps and weights below the dry weight,
    reporting 1-based row numbers.
    """
    t = series.times
    w = series.weights
    for i in range(t.size):
        if w[i] < series.w0:
            raise ValidationError(f"row {i + 1}: weight {w[i]} below dry weight {series.w0}")
        if i > 0 and t[i] <= t[i - 1]:
            kind = "duplicate" if t[i] == t[i - 1] else "nonmonotone"
            raise ValidationError(f"row {i + 1}: {kind} timestamp {t[i]} after {t[i - 1]}")
    return ImbibitionDataset(times=t.copy(), q=(w - series.w0) / series.area)


# ---------------------------------------------------------------------------
# CSV primitives

def _write_csv(path, header: str, rows, metadata: dict | None = None) -> None:
    path = Path(path)
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append(header)
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path, expected_header: str):
    path = Path(path)
    metadata: dict[str, str] = {}
    rows: list[list[float]] = []
    header_seen = False
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != expected_header:
                raise ValidationError(
                    f"{path}:{lineno}: expected header '{expected_header}', found '{line}'"
                )
            header_seen = True
            continue
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: malformed row: {line}") from exc
    if not header_seen:
        raise ValidationError(f"{path}: missing header row '{expected_header}'")
    return metadata, np.array(rows, dtype=float) if rows else np.empty((0, 0))


# ---------------------------------------------------------------------------
# Dataset readers/writers

def write_imbibition_csv(path, dataset: ImbibitionDataset, metadata: dict | None = None) -> None:
    _write_csv(path, Q_CURVE_HEADER, zip(dataset.times, dataset.q), metadata)


def read_imbibition_csv(path) -> ImbibitionDataset:
    _meta, rows = _read_csv(path, Q_CURVE_HEADER)
    if rows.size == 0:
        raise ValidationError(f"{path}: no data rows")
    return ImbibitionDataset(times=rows[:, 0], q=rows[:, 1])


def read_raw_imbibition_csv(path) -> RawImbibitionSeries:
    """Raw weighing series; requires ``w0_g`` and ``area_cm2`` metadata lines."""
    meta, rows = _read_csv(path, RAW_IMBIBITION_HEADER)
    for key in ("w0_g", "area_cm2"):
        if key not in meta:
            raise ValidationError(f"{path}: missing metadata line '# {key} = ...'")
    if rows.size == 0:
        raise ValidationError(f"{path}: no data rows")
    return RawImbibitionSeries(
        w0=float(meta["w0_g"]), area=float(meta["area_cm2"]),
        times=rows[:, 0], weights=rows[:, 1],
    )


def write_mip_csv(path, dataset: MIPDataset, metadata: dict | None = None) -> None:
    """Write MIP points with pressure back in MPa (the instrument unit)."""
    meta = {"v_max": _fmt(dataset.v_max)}
    meta.update(metadata or {})
    _write_csv(path, MIP_HEADER, zip(dataset.p_hg / MPA_TO_CGS, dataset.volume), meta)


def read_mip_csv(path) -> MIPDataset:
    """Read MIP points, converting MPa to CGS; requires ``v_max`` metadata."""
    meta, rows = _read_csv(path, MIP_HEADER)
    if "v_max" not in meta:
        raise ValidationError(f"{path}: missing metadata line '# v_max = ...'")
    if rows.size == 0:
        raise ValidationError(f"{path}: no data rows")
    return MIPDataset(p_hg=rows[:, 0] * MPA_TO_CGS, volume=rows[:, 1], v_max=float(meta["v_max"]))


# ---------------------------------------------------------------------------
# Result emitters

def write_q_curve_csv(path, result: SimulationResult, metadata: dict | None = None) -> None:
    _write_csv(path, Q_CURVE_HEADER, zip(result.q_times, result.q), metadata)


def write_profiles_csv(path, result: SimulationResult, metadata: dict | None = None) -> None:
    rows = []
    for profile in result.profiles:
        for z, theta in zip(result.z, profile.theta):
            rows.append((profile.t, z, theta))
    _write_csv(path, PROFILES_HEADER, rows, metadata)


def write_retention_csv(path, s, p_model, p_mip, metadata: dict | None = None) -> None:
    base = {"pressure_unit": "g/(cm s^2)"}
    base.update(metadata or {})
    _write_csv(path, RETENTION_HEADER, zip(s, p_model, p_mip), base)


def write_trace_csv(path, phases_and_traces, metadata: dict | None = None) -> None:
    """Concatenated annealer traces; ``phases_and_traces`` is [(name, trace), ...]."""
    path = Path(path)
    lines = [f"# {k} = {v}" for k, v in (metadata or {}).items()]
    lines.append(TRACE_HEADER)
    for phase, trace in phases_and_traces:
        for idx, err in trace:
            lines.append(f"{phase},{idx},{_fmt(err)}")
    path.write_text("\n".join(lines) + "\n")


def write_sensitivity_csv(path, curve, metadata: dict | None = None) -> None:
    _write_csv(path, SENSITIVITY_HEADER, curve, metadata)


# ---------------------------------------------------------------------------
# Parameter (de)serialization

def params_to_dict(params) -> dict:
    if isinstance(params, CubicParams):
        return {"kind": "cubic", "s_R": params.s_R, "s_S": params.s_S, "D": params.D}
    if isinstance(params, KPParams):
        return {
            "kind": "kp", "s_R": params.s_R, "s_S": params.s_S, "alpha": params.alpha,
            "c": params.c, "K_s": params.K_s, "gamma": params.gamma,
        }
    raise TypeError(f"unsupported parameter object {type(params).__name__}")


def params_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "cubic":
        return CubicParams(s_R=float(d["s_R"]), s_S=float(d["s_S"]), D=float(d["D"]))
    if kind == "kp":
        return KPParams(
            s_R=float(d["s_R"]), s_S=float(d["s_S"]), alpha=float(d["alpha"]),
            c=float(d["c"]), K_s=float(d["K_s"]), gamma=float(d["gamma"]),
        )
    raise ValidationError(f"unknown model kind {kind!r}")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Run manifests

_COMMANDS = ("simulate", "calibrate", "retention", "sensitivity")


@dataclass(frozen=True)
class RunManifest:
    """Parsed manifest: raw mapping plus the directory for relative paths."""

    raw: dict
    base_dir: Path

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def model_kind(self) -> str:
        kind = self._section("model").get("kind")
        if kind not in ("cubic", "kp"):
            raise ValidationError(f"model.kind must be 'cubic' or 'kp', got {kind!r}")
        return kind

    def _section(self, name: str) -> dict:
        sec = self.raw.get(name)
        if not isinstance(sec, dict):
            raise ValidationError(f"manifest is missing the '{name}' section")
        return sec

    def material(self) -> MaterialSpec:
        sec = self._section("material")
        try:
            return MaterialSpec(
                name=str(sec["name"]), n0=float(sec["n0"]),
                tau=float(sec["tau"]) if "tau" in sec else None,
            )
        except KeyError as exc:
            raise ValidationError(f"material section is missing {exc}") from exc

    def setup(self) -> ExperimentSetup:
        sec = self._section("setup")
        try:
            return ExperimentSetup(
                h1=float(sec["h1"]), h2=float(sec["h2"]), rho=float(sec["rho"]),
                mu=float(sec["mu"]), Tf=float(sec["Tf"]), theta_ext=float(sec["theta_ext"]),
                temperature=float(sec["temperature"]) if "temperature" in sec else None,
                UR=float(sec["UR"]) if "UR" in sec else None,
            )
        except KeyError as exc:
            raise ValidationError(f"setup section is missing {exc}") from exc

    def model_params(self):
        sec = self._section("model")
        if "params" not in sec:
            raise ValidationError("model.params is required for this command")
        d = dict(sec["params"])
        d["kind"] = self.model_kind
        return params_from_dict(d)

    def has_model_params(self) -> bool:
        return "params" in self._section("model")

    def model_bounds(self):
        from .calibration import CubicBounds, KPBounds

        sec = self._section("model")
        raw_bounds = sec.get("bounds")
        if raw_bounds is None:
            return None
        pairs = {k: (float(v[0]), float(v[1])) for k, v in raw_bounds.items()}
        if self.model_kind == "cubic":
            return CubicBounds(**pairs)
        return KPBounds(**pairs)

    def solver_config(self, overrides: dict | None = None) -> SolverConfig:
        sec = dict(self._section("solver"))
        sec.update({k: v for k, v in (overrides or {}).items() if v is not None})
        bc = sec.get("top_bc", {"kind": "dirichlet"})
        if isinstance(bc, dict) and bc.get("kind") == "robin":
            top_bc = RobinTop(k_w=float(bc["k_w"]))
        elif isinstance(bc, dict) and bc.get("kind", "dirichlet") == "dirichlet":
            top_bc = DirichletTop()
        else:
            raise ValidationError(f"unknown top_bc {bc!r}")
        try:
            return SolverConfig(
                dz=float(sec["dz"]),
                dt=float(sec["dt"]) if sec.get("dt") is not None else None,
                cfl_safety=float(sec.get("cfl_safety", 0.9)),
                top_bc=top_bc,
                snapshot_times=tuple(float(t) for t in sec.get("snapshots", ())),
            )
        except KeyError as exc:
            raise ValidationError(f"solver section is missing {exc}") from exc

    def data_path(self, key: str) -> Path:
        sec = self.raw.get("data") or {}
        if key not in sec:
            raise ValidationError(f"manifest data.{key} is required for this command")
        path = (self.base_dir / str(sec[key])).resolve()
        if not path.exists():
            raise ValidationError(f"manifest data.{key} points to a missing file: {path}")
        return path

    def has_data(self, key: str) -> bool:
        return key in (self.raw.get("data") or {})

    def annealer(self, seed_offset: int = 0, section: str = "calibration"):
        from .calibration import AnnealerConfig

        sec = (self.raw.get(section) or {}).get("annealer") or {}
        kwargs = {}
        for key in (
            "initial_temperature", "cooling_factor", "iterations_per_temperature",
            "max_evaluations", "neighbor_scale",
        ):
            if key in sec:
                kwargs[key] = sec[key]
        return AnnealerConfig(rng_seed=self.seed + seed_offset, **kwargs)

    def validate_for(self, command: str) -> None:
        if command not in _COMMANDS:
            raise ValidationError(f"unknown command {command!r}; expected one of {_COMMANDS}")
        self.material()
        self.setup()
        has_params = self.has_model_params()
        has_bounds = self._section("model").get("bounds") is not None
        if command == "calibrate":
            if has_params:
                raise ValidationError("calibrate expects model.bounds (or defaults), not model.params")
        else:
            if not has_params:
                raise ValidationError(f"{command} requires model.params")
            if has_bounds:
                raise ValidationError(f"{command} expects model.params only, not model.bounds")


def load_manifest(path) -> RunManifest:
    path = Path(path)
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: manifest must be a mapping")
    return RunManifest(raw=raw, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Reproducibility records

def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_record(manifest_path, data_paths: dict, seed: int, command: str) -> dict:
    import numba

    from . import __version__

    record = {
        "command": command,
        "seed": seed,
        "manifest_sha256": _sha256(manifest_path),
        "inputs": {name: _sha256(p) for name, p in sorted(data_paths.items())},
        "versions": {
            "mortarflow": __version__,
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
    }
    return record
