"""Capillary water uptake in porous mortars: simulation, calibration, validation."""

from .calibration import (
    AnnealerConfig,
    CalibrationError,
    CalibrationResult,
    CubicBounds,
    KPBounds,
    calibrate_cubic,
    calibrate_kp,
    error_functional,
    fit_c_to_retention,
    oat_sensitivity,
    simulated_annealing,
)
from .core import (
    ExperimentSetup,
    ImbibitionDataset,
    MaterialSpec,
    MIPDataset,
    ValidationError,
    ambient_moisture,
    ambient_moisture_report,
    saturated_vapor_density,
)
from .io import (
    RawImbibitionSeries,
    RunManifest,
    capillary_coefficient,
    ingest_imbibition,
    load_manifest,
    read_imbibition_csv,
    read_mip_csv,
    read_raw_imbibition_csv,
    write_imbibition_csv,
    write_mip_csv,
)
from .models import (
    CubicParams,
    KPParams,
    cubic_diffusivity,
    cubic_potential,
    diffusivity,
    kp_capillary_pressure,
    kp_capillary_pressure_deriv,
    kp_diffusivity,
    kp_max_diffusivity,
    kp_permeability,
    kp_potential,
    kp_potential_quadrature,
    max_diffusivity,
    potential,
)
from .retention import (
    LaplaceConstants,
    RetentionComparison,
    RetentionCurve,
    build_retention_curve,
    mip_saturation,
    mip_to_suction,
    retention_compare,
)
from .solver import (
    DirichletTop,
    NonFiniteStateError,
    RobinTop,
    SaturationProfile,
    SimulationResult,
    SolverConfig,
    absorbed_mass,
    breakthrough_time,
    simulate,
    stable_timestep,
)

__version__ = "0.1.0"
