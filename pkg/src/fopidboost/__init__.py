"""Fractional-order PID workbench for a switched boost converter.

Frequency-band rational approximation of s**nu, discrete realization,
FOPID/PID controllers, a switched RK4 plant simulation with PWM latching,
an artificial bee colony tuner, and reporting/CLI glue on top.
"""

from .beecolony import (AbcConfig, FOPID_BOUNDS, OptimizeResult, PENALTY_COST,
                        PID_BOUNDS, TuningResult, TuningSetup, optimize,
                        tune_fopid, tune_pid)
from .config import ConfigError, RunConfig, default_config, load_config
from .controller import (Controller, DEFAULT_U_MAX, FopidParams, build_fopid,
                         build_pid)
from .converter import ConverterParams, ConverterState, PwmModulator
from .discrete import DiscreteFilter, FirstOrderSection, TrapezoidIntegrator, realize
from .oustaloup import (OraConfig, RationalApprox, approximate_power,
                        freq_response, ora_build)
from .reporting import (ComparisonReport, ReportRow, build_report,
                        disturbance_metrics, switch_reduction_pct)
from .simloop import (Disturbance, Scenario, SimResult, plant_timestep,
                      simulate, simulate_fixed_duty)

__all__ = [
    "AbcConfig", "ComparisonReport", "ConfigError", "Controller",
    "ConverterParams", "ConverterState", "DEFAULT_U_MAX", "DiscreteFilter",
    "Disturbance", "FOPID_BOUNDS", "FirstOrderSection", "FopidParams",
    "OptimizeResult", "OraConfig", "PENALTY_COST", "PID_BOUNDS",
    "PwmModulator", "RationalApprox", "ReportRow", "RunConfig", "Scenario",
    "SimResult", "TrapezoidIntegrator", "TuningResult", "TuningSetup",
    "approximate_power", "build_fopid", "build_pid", "build_report",
    "default_config", "disturbance_metrics", "freq_response", "load_config",
    "optimize", "ora_build", "plant_timestep", "realize", "simulate",
    "simulate_fixed_duty", "switch_reduction_pct", "tune_fopid", "tune_pid",
]

__version__ = "0.1.0"
