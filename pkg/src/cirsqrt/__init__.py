"""cirsqrt: simulation and numerical verification for square roots of
low-dimensional CIR processes.

Subpackages follow the pipeline: params/engine generate coupled paths,
transform maps them to reflected Brownian motion through the scale
function and time change, localtime estimates occupation densities and
evaluates the singular drift term three ways, convergence runs the
Skorokhod-approximation studies, and cli/config is the experiment
harness.
"""

__version__ = "0.1.0"

from .engine import Scheme, simulate_cir, simulate_coupled_family, simulate_rou
from .params import (
    ModelParams,
    ReflectionDecomposition,
    SamplePath,
    TimeGrid,
    sqrt_path,
    validate_params,
)

__all__ = [
    "__version__",
    "ModelParams",
    "TimeGrid",
    "SamplePath",
    "ReflectionDecomposition",
    "Scheme",
    "validate_params",
    "sqrt_path",
    "simulate_cir",
    "simulate_rou",
    "simulate_coupled_family",
]
