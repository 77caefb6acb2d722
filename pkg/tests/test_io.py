"""Ingestion, CSV round-trips, pinned headers, and manifest validation."""

from pathlib import Path

import numpy as np
import pytest

from mortarflow import (
    CubicParams,
    ImbibitionDataset,
    KPParams,
    MIPDataset,
    RawImbibitionSeries,
    ValidationError,
    capillary_coefficient,
    ingest_imbibition,
    load_manifest,
    read_imbibition_csv,
    read_mip_csv,
    read_raw_imbibition_csv,
    write_imbibition_csv,
    write_mip_csv,
)
from mortarflow.io import (
    MIP_HEADER,
    PROFILES_HEADER,
    Q_CURVE_HEADER,
    RAW_IMBIBITION_HEADER,
    RETENTION_HEADER,
    SENSITIVITY_HEADER,
    TRACE_HEADER,
    params_from_dict,
    params_to_dict,
)

REPO = Path(__file__).resolve().parent.parent


class TestCapillaryCoefficient:
    def test_equal_weighings(self):
        assert capillary_coefficient(10.0, 10.0) == 0.0

    def test_hand_value(self):
        assert capillary_coefficient(10.0, 30.0) == pytest.approx(2.0, rel=1e-15)

    def test_negative_difference_rejected(self):
        with pytest.raises(ValidationError):
            capillary_coefficient(30.0, 10.0)


class TestIngestImbibition:
    def test_dry_weight_gives_zero(self):
        series = RawImbibitionSeries(w0=100.0, area=25.0, times=[600.0], weights=[100.0])
        assert ingest_imbibition(series).q[0] == 0.0

    def test_hand_value(self):
        series = RawImbibitionSeries(w0=100.0, area=25.0, times=[600.0], weights=[150.0])
        assert ingest_imbibition(series).q[0] == pytest.approx(2.0, rel=1e-15)

    def test_duplicate_timestamp_reports_row(self):
        series = RawImbibitionSeries(
            w0=100.0, area=25.0, times=[600.0, 600.0], weights=[110.0, 120.0],
        )
        with pytest.raises(ValidationError, match="row 2"):
            ingest_imbibition(series)

    def test_weight_below_dry_reports_row(self):
        series = RawImbibitionSeries(
            w0=100.0, area=25.0, times=[600.0, 5400.0], weights=[110.0, 90.0],
        )
        with pytest.raises(ValidationError, match="row 2"):
            ingest_imbibition(series)


class TestRoundTrips:
    def test_imbibition_dataset(self, tmp_path):
        ds = ImbibitionDataset(
            times=np.array([600.0, 1234.5678901234567, 5400.0]),
            q=np.array([0.123456789012345678, 1.0 / 3.0, 1.9]),
        )
        path = tmp_path / "q.csv"
        write_imbibition_csv(path, ds)
        back = read_imbibition_csv(path)
        np.testing.assert_array_equal(back.times, ds.times)
        np.testing.assert_array_equal(back.q, ds.q)

    def test_mip_dataset(self, tmp_path):
        ds = MIPDataset(
            p_hg=np.array([1.3e5, 2.27e9]), volume=np.array([0.01, 0.28]), v_max=0.3,
        )
        path = tmp_path / "mip.csv"
        write_mip_csv(path, ds)
        back = read_mip_csv(path)
        np.testing.assert_allclose(back.p_hg, ds.p_hg, rtol=1e-12)
        np.testing.assert_array_equal(back.volume, ds.volume)
        assert back.v_max == ds.v_max

    def test_raw_series_reader(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text(
            "# w0_g = 100.0\n# area_cm2 = 25.0\nt_s,w_g\n600,110\n5400,150\n"
        )
        series = read_raw_imbibition_csv(path)
        assert series.w0 == 100.0
        ds = ingest_imbibition(series)
        assert ds.q[1] == 2.0

    def test_params_dict_round_trip(self):
        cubic = CubicParams(s_R=0.12, s_S=0.88, D=5.2e-3)
        assert params_from_dict(params_to_dict(cubic)) == cubic
        kp = KPParams(s_R=0.15, s_S=0.9, alpha=0.3, c=3e5, K_s=1e-9, gamma=1.8)
        assert params_from_dict(params_to_dict(kp)) == kp


class TestHeadersAndErrors:
    def test_pinned_headers(self):
        assert Q_CURVE_HEADER == "t_s,Q_g_per_cm2"
        assert PROFILES_HEADER == "t_s,z_cm,theta"
        assert RETENTION_HEADER == "saturation,P_model,P_mip"
        assert TRACE_HEADER == "phase,evaluation,error"
        assert SENSITIVITY_HEADER == "value,E2"
        assert RAW_IMBIBITION_HEADER == "t_s,w_g"
        assert MIP_HEADER == "P_hg_MPa,V_specific"

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,Q\n1,2\n")
        with pytest.raises(ValidationError, match="expected header"):
            read_imbibition_csv(path)

    def test_missing_metadata_rejected(self, tmp_path):
        path = tmp_path / "mip.csv"
        path.write_text(f"{MIP_HEADER}\n1.0,0.1\n")
        with pytest.raises(ValidationError, match="v_max"):
            read_mip_csv(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text(f"{Q_CURVE_HEADER}\n600,abc\n")
        with pytest.raises(ValidationError, match=":2"):
            read_imbibition_csv(path)


class TestManifests:
    def test_sample_manifests_parse(self):
        for name in ("ghiara", "azolo", "ghiara_cubic", "azolo_cubic"):
            manifest = load_manifest(REPO / "manifests" / f"{name}.yaml")
            material = manifest.material()
            setup = manifest.setup()
            setup.validate_with(material)
            params = manifest.model_params()
            config = manifest.solver_config()
            assert config.dz == 2.5e-2
            manifest.validate_for("simulate")
            if name == "ghiara":
                assert isinstance(params, KPParams)
                assert params.gamma == 1.865
                assert material.n0 == 0.466
            if name == "azolo_cubic":
                assert isinstance(params, CubicParams)
                assert params.D == 4.8e-3

    def test_calibrate_rejects_fixed_params(self):
        manifest = load_manifest(REPO / "manifests" / "ghiara.yaml")
        with pytest.raises(ValidationError):
            manifest.validate_for("calibrate")

    def test_simulate_requires_params(self, tmp_path):
        path = tmp_path / "m.yaml"
        path.write_text(
            "material: {name: x, n0: 0.4}\n"
            "setup: {h1: 1.0, h2: 0.0, rho: 1.0, mu: 8.9e-3, Tf: 100.0, theta_ext: 0.0}\n"
            "model: {kind: cubic}\n"
            "solver: {dz: 0.05}\n"
        )
        manifest = load_manifest(path)
        with pytest.raises(ValidationError):
            manifest.validate_for("simulate")

    def test_unknown_command_rejected(self):
        manifest = load_manifest(REPO / "manifests" / "ghiara.yaml")
        with pytest.raises(ValidationError):
            manifest.validate_for("frobnicate")

    def test_relative_data_paths_resolve(self, tmp_path):
        (tmp_path / "data").mkdir()
        data = tmp_path / "data" / "q.csv"
        data.write_text(f"{Q_CURVE_HEADER}\n600,0.5\n")
        path = tmp_path / "m.yaml"
        path.write_text(
            "material: {name: x, n0: 0.4}\n"
            "setup: {h1: 1.0, h2: 0.0, rho: 1.0, mu: 8.9e-3, Tf: 1000.0, theta_ext: 0.0}\n"
            "model: {kind: cubic}\n"
            "solver: {dz: 0.05}\n"
            "data: {imbibition: data/q.csv}\n"
        )
        manifest = load_manifest(path)
        assert manifest.data_path("imbibition") == data.resolve()

    def test_annealer_section_and_seed(self, tmp_path):
        path = tmp_path / "m.yaml"
        path.write_text(
            "material: {name: x, n0: 0.4}\n"
            "setup: {h1: 1.0, h2: 0.0, rho: 1.0, mu: 8.9e-3, Tf: 100.0, theta_ext: 0.0}\n"
            "model: {kind: cubic}\n"
            "solver: {dz: 0.05}\n"
            "seed: 17\n"
            "calibration: {annealer: {max_evaluations: 123}}\n"
        )
        manifest = load_manifest(path)
        annealer = manifest.annealer(seed_offset=1)
        assert annealer.rng_seed == 18
        assert annealer.max_evaluations == 123
