"""Spectrum of the BF Finsler-Laplacian for Randers metrics."""
from .assembly import OperatorPair, assemble, energy, mass_norm2, read_coordinate, write_coordinate
from .config import ConfigError, SweepConfig, SweepPoint, load_config, parse_config
from .curved import (
    HyperbolicSample,
    RadialBump,
    ball_growth_entropy,
    lower_bound_grid,
    quartic_angle_integral,
    radial_test_rayleigh,
    symbol_lower_bound_check,
)
from .eigensolve import ConvergenceError, SpectrumResult, rayleigh_quotient, smallest_eigenpairs
from .experiments import LengthRefusal, SweepRow, run_lengths, run_sweep
from .geodesics import (
    GeodesicState,
    HomotopyClass,
    class_length,
    curve_length,
    integrate_geodesic,
    line_fit_residual,
)
from .grid import PeriodicGrid
from .metric import (
    BaseMetric,
    InadmissibleMetricError,
    OneFormField,
    RandersMetric,
    dual_norm,
    eval_F,
    make_closed_irrational_form,
    make_constant_form,
    make_h_eps,
    randers,
    zero_form,
)
from .symbol import AngleQuadrature, SymbolField, build_symbol_field, holmes_thompson_density, symbol_at, torus_volume

__version__ = "0.1.0"
