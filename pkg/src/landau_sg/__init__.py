"""Deterministic particle solver for the homogeneous Landau equation with
stochastic-Galerkin propagation of uncertain parameters."""

from .benchmarks import (
    AffineMap,
    AnisotropicGaussian,
    BimodalRadial,
    Bkw,
    TriangleGaussians,
    bkw_density,
    fit_decay_rate,
    initial_sg_state,
    sample_initial,
    trubnikov_tau,
)
from .config import ConfigError, RunConfig, parse_config, preset_document
from .diagnostics import (
    DensityField,
    MomentRecord,
    density_field,
    discrete_entropy,
    l2_relative_density_error,
    moments,
    sg_error_m4,
)
from .gpc import (
    Beta,
    GpcBasis,
    TensorGpcBasis,
    Uniform01,
    build_basis,
    evaluate,
    gauss_quadrature,
    project,
    tensor_basis,
)
from .kernels import CollisionParams, collision_apply, mollifier, mollifier_gradient
from .runner import RunResult, run_simulation, sweep_orders
from .solver import (
    ParticleEnsemble,
    SgState,
    VelocityGrid,
    blob_density,
    entropy_variation_antisym,
    entropy_variation_sym,
    euler_step,
    sg_euler_step,
    sg_rhs,
    velocity_field,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
