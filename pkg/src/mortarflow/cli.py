"""Command-line interface: simulate / calibrate / retention / sensitivity / ingest.

Each command reads a YAML manifest (see manifests/ for samples), writes
plot-ready CSV/JSON outputs into --out, and drops a reproducibility
record (input digests, seed, versions). Flags override manifest keys;
precedence is flag > manifest > default. Failures exit nonzero with a
machine-readable JSON error on stderr.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from .calibration import CubicBounds, calibrate_cubic, calibrate_kp, oat_sensitivity
from .core import ValidationError, ambient_moisture_report
from .models import KPParams, kp_capillary_pressure, kp_max_diffusivity
from .retention import LaplaceConstants, build_retention_curve, retention_compare
from .solver import breakthrough_time, simulate

_DEFAULT_N_Q = 100
_DEFAULT_N_SNAPSHOTS = 10


def _with_overrides(manifest: mio.RunManifest, args) -> mio.RunManifest:
    raw = copy.deepcopy(manifest.raw)
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "model", None) is not None:
        raw.setdefault("model", {})["kind"] = args.model
    solver = raw.setdefault("solver", {})
    if getattr(args, "dz", None) is not None:
        solver["dz"] = args.dz
    if getattr(args, "dt", None) is not None:
        solver["dt"] = args.dt
    if getattr(args, "snapshots", None) is not None:
        solver["snapshots"] = [float(t) for t in args.snapshots.split(",") if t.strip()]
    return mio.RunManifest(raw=raw, base_dir=manifest.base_dir)


def _q_grid(manifest: mio.RunManifest, tf: float) -> np.ndarray:
    n_q = int((manifest.raw.get("output") or {}).get("n_q", _DEFAULT_N_Q))
    return np.linspace(tf / n_q, tf, n_q)


def _record(out: Path, manifest_path, manifest: mio.RunManifest, data_paths: dict,
            command: str, extra: dict | None = None) -> Path:
    record = mio.run_record(manifest_path, data_paths, manifest.seed, command)
    record.update(extra or {})
    path = out / "run_record.json"
    mio.write_json(path, record)
    return path


def _cmd_simulate(manifest: mio.RunManifest, manifest_path, out: Path) -> dict:
    material = manifest.material()
    setup = manifest.setup()
    model = manifest.model_params()
    config = manifest.solver_config()
    if not config.snapshot_times:
        snaps = tuple(np.linspace(setup.Tf / _DEFAULT_N_SNAPSHOTS, setup.Tf, _DEFAULT_N_SNAPSHOTS))
        config = mio.SolverConfig(
            dz=config.dz, dt=config.dt, cfl_safety=config.cfl_safety,
            top_bc=config.top_bc, snapshot_times=snaps,
        )
    result = simulate(model, material, setup, config, q_times=_q_grid(manifest, setup.Tf))
    meta = {
        "material": material.name,
        "model": manifest.model_kind,
        "dz_cm": mio._fmt(config.dz),
        "seed": manifest.seed,
    }
    if result.breakthrough_time is not None:
        meta["breakthrough_time_s"] = mio._fmt(result.breakthrough_time)
    outputs = {}
    q_path = out / "q_curve.csv"
    mio.write_q_curve_csv(q_path, result, meta)
    outputs["q_curve"] = q_path
    p_path = out / "profiles.csv"
    mio.write_profiles_csv(p_path, result, meta)
    outputs["profiles"] = p_path
    extra = {}
    moisture = ambient_moisture_report(setup, material)
    if moisture is not None:
        extra["ambient_moisture_check"] = moisture
    outputs["run_record"] = _record(out, manifest_path, manifest, {}, "simulate", extra)
    return outputs


def _cmd_calibrate(manifest: mio.RunManifest, manifest_path, out: Path) -> dict:
    material = manifest.material()
    setup = manifest.setup()
    config = manifest.solver_config()
    data_path = manifest.data_path("imbibition")
    data = mio.read_imbibition_csv(data_path)
    kind = manifest.model_kind
    calib = manifest.raw.get("calibration") or {}

    cubic_bounds = manifest.model_bounds() if kind == "cubic" else None
    step1 = calibrate_cubic(
        data, material, setup, config,
        bounds=cubic_bounds if cubic_bounds is not None else CubicBounds(),
        annealer=manifest.annealer(seed_offset=0),
    )
    phases = [("cubic", step1.trace)]
    payload = {
        "step1": {
            "params": mio.params_to_dict(step1.params),
            "error": step1.error,
            "evaluations": step1.evaluations,
        },
        "seed": manifest.seed,
    }
    data_paths = {"imbibition": data_path}

    if kind == "kp":
        k_s = calib.get("k_s")
        mip = None
        if k_s is None:
            mip_path = manifest.data_path("mip")
            mip = mio.read_mip_csv(mip_path)
            data_paths["mip"] = mip_path
        step2 = calibrate_kp(
            data, material, setup, config,
            warm_start=step1.params,
            bounds=manifest.model_bounds(),
            annealer=manifest.annealer(seed_offset=1),
            k_s=float(k_s) if k_s is not None else None,
            mip=mip,
        )
        phases.append(("kp", step2.trace))
        fitted: KPParams = step2.params
        payload["params"] = mio.params_to_dict(fitted)
        payload["error"] = step2.error
        payload["evaluations"] = step2.evaluations
        payload["derived"] = {
            "C": fitted.C,
            "D_kP": kp_max_diffusivity(fitted, setup.mu),
        }
    else:
        payload["params"] = mio.params_to_dict(step1.params)
        payload["error"] = step1.error
        payload["evaluations"] = step1.evaluations

    outputs = {}
    params_path = out / "params.json"
    mio.write_json(params_path, payload)
    outputs["params"] = params_path
    trace_path = out / "trace.csv"
    mio.write_trace_csv(trace_path, phases, {"seed": manifest.seed})
    outputs["trace"] = trace_path
    outputs["run_record"] = _record(out, manifest_path, manifest, data_paths, "calibrate")
    return outputs


def _cmd_retention(manifest: mio.RunManifest, manifest_path, out: Path) -> dict:
    params = manifest.model_params()
    if not isinstance(params, KPParams):
        raise ValidationError("retention requires model.kind = kp (the cubic family has no capillary pressure)")
    mip_path = manifest.data_path("mip")
    mip = mio.read_mip_csv(mip_path)
    curve = build_retention_curve(mip, LaplaceConstants())
    comparison = retention_compare(curve, params)

    inside = (curve.s > params.s_R) & (curve.s <= params.s_S)
    p_model = np.full_like(curve.p, np.nan)
    p_model[inside] = kp_capillary_pressure(curve.s[inside], params)

    outputs = {}
    ret_path = out / "retention.csv"
    mio.write_retention_csv(ret_path, curve.s, p_model, curve.p, {"material": manifest.material().name})
    outputs["retention"] = ret_path
    report_path = out / "report.json"
    mio.write_json(report_path, {
        "mean_log10_ratio": comparison.mean_log10_ratio,
        "max_abs_log10_ratio": comparison.max_abs_log10_ratio,
        "within_decade_fraction": comparison.within_decade_fraction,
        "n_compared": comparison.n_compared,
        "n_excluded": comparison.n_excluded,
    })
    outputs["report"] = report_path
    outputs["run_record"] = _record(out, manifest_path, manifest, {"mip": mip_path}, "retention")
    return outputs


def _cmd_sensitivity(manifest: mio.RunManifest, manifest_path, out: Path) -> dict:
    params = manifest.model_params()
    if not isinstance(params, KPParams):
        raise ValidationError("sensitivity sweeps are defined for the kp family")
    material = manifest.material()
    setup = manifest.setup()
    config = manifest.solver_config()
    data_path = manifest.data_path("imbibition")
    data = mio.read_imbibition_csv(data_path)
    grids = (manifest.raw.get("sensitivity") or {}).get("parameter_grids")
    if not grids:
        raise ValidationError("manifest sensitivity.parameter_grids is required")
    sweeps = oat_sensitivity(params, data, material, setup, config, grids)
    outputs = {}
    for name, curve in sweeps.items():
        path = out / f"sensitivity_{name}.csv"
        mio.write_sensitivity_csv(path, curve, {"parameter": name})
        outputs[f"sensitivity_{name}"] = path
    outputs["run_record"] = _record(out, manifest_path, manifest, {"imbibition": data_path}, "sensitivity")
    return outputs


_RUNNERS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "retention": _cmd_retention,
    "sensitivity": _cmd_sensitivity,
}


def run_command(manifest: mio.RunManifest, command: str, out_dir, manifest_path=None) -> dict:
    """Execute one manifest-driven command; returns {output name: path}."""
    manifest.validate_for(command)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if manifest_path is None:
        manifest_path = out / "manifest.resolved.yaml"
        import yaml

        Path(manifest_path).write_text(yaml.safe_dump(manifest.raw, sort_keys=True))
    return _RUNNERS[command](manifest, manifest_path, out)


def _cmd_ingest(args) -> dict:
    series = mio.read_raw_imbibition_csv(args.input)
    dataset = mio.ingest_imbibition(series)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "q_series.csv"
    mio.write_imbibition_csv(path, dataset, {
        "w0_g": mio._fmt(series.w0), "area_cm2": mio._fmt(series.area),
    })
    return {"q_series": path}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortarflow",
        description="Capillary water uptake in porous mortars: simulate, calibrate, validate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default="out", help="output directory (default: ./out)")

    def add_manifest_opts(p):
        p.add_argument("--manifest", required=True, help="YAML manifest path")
        p.add_argument("--seed", type=int, default=None, help="override manifest seed")
        p.add_argument("--model", choices=("cubic", "kp"), default=None, help="override model kind")
        p.add_argument("--dz", type=float, default=None, help="override grid spacing, cm")
        p.add_argument("--dt", type=float, default=None, help="override time step, s")
        p.add_argument("--snapshots", default=None, help="override snapshot times, comma-separated seconds")
        add_common(p)

    for name in _RUNNERS:
        p = sub.add_parser(name)
        add_manifest_opts(p)

    p_ingest = sub.add_parser("ingest", help="convert raw weighings to a Q series")
    p_ingest.add_argument("--input", required=True, help="raw imbibition CSV (t_s,w_g with w0/area metadata)")
    add_common(p_ingest)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            outputs = _cmd_ingest(args)
        else:
            manifest = _with_overrides(mio.load_manifest(args.manifest), args)
            outputs = run_command(manifest, args.command, args.out, manifest_path=args.manifest)
        for name, path in outputs.items():
            print(f"{name}: {path}")
        return 0
    except ValidationError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
