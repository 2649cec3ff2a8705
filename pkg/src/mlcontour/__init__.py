"""Contour-integral solvers and pseudospectral diagnostics for Markov and
Mittag-Leffler master equations with tridiagonal generators."""

from importlib.metadata import PackageNotFoundError, version

from .contours import ContourKind, ContourSpec, QuadratureNodes, build_nodes, hyperbola_nodes, parabola_nodes
from .errors import MLContourError, NumericalError, ValidationError
from .fov import FovBoundary, ParabolaBound, contour_clearance, fov_boundary, parabola_from_coefficients
from .mlsolve import MlProblem, MlSolution, ml_action, ml_scalar, ml_scalar_series
from .models import ModelKind, ModelSpec, TridiagonalGenerator, build_generator, pde_coefficients
from .pseudospectra import ps_grid, resolvent_norm
from .ssa import RngStream, ensemble_histogram, simulate_path

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "ContourKind",
    "ContourSpec",
    "QuadratureNodes",
    "build_nodes",
    "hyperbola_nodes",
    "parabola_nodes",
    "MLContourError",
    "NumericalError",
    "ValidationError",
    "FovBoundary",
    "ParabolaBound",
    "contour_clearance",
    "fov_boundary",
    "parabola_from_coefficients",
    "MlProblem",
    "MlSolution",
    "ml_action",
    "ml_scalar",
    "ml_scalar_series",
    "ModelKind",
    "ModelSpec",
    "TridiagonalGenerator",
    "build_generator",
    "pde_coefficients",
    "ps_grid",
    "resolvent_norm",
    "RngStream",
    "ensemble_histogram",
    "simulate_path",
    "__version__",
]
