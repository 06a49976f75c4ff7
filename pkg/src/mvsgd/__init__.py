"""Stochastic gradient approximation of mean-field statistic curves.

The package approximates the curve of expectations gamma(t) = E[phi(X_t)]
of a McKean-Vlasov diffusion with separable coefficients.  The curve is
parametrized on a Lagrange basis at Chebyshev nodes and fitted by SGD on
a projected least-squares objective whose gradient samples come from a
tangent process along simulated paths.  An interacting particle system
provides the reference curve for validation.
"""

from .analysis import l2_norm, relative_error, relative_error_values
from .basis import (
    Clamp,
    LagrangeBasis,
    Penalty,
    chebyshev_nodes,
    clamp_apply,
    default_penalty_radius,
    interpolate_curve,
    penalty_gradient,
    penalty_value,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    build_basis,
    build_clamp,
    build_grid,
    build_model,
    build_penalty,
    build_sgd_config,
    dump_config,
    load_config,
)
from .hermite import (
    HermiteSystem,
    density_reconstruct,
    hermite_functions,
    kernel_coefficients,
    project_kernel,
)
from .models import (
    InitialLaw,
    LiftedCurve,
    SampledCurve,
    SeparableModel,
    check_model,
    linear_oracle_curve,
    make_convolution_projected,
    make_kuramoto,
    make_linear_oracle,
    make_polydrift,
)
from .sgd import (
    IterationRecord,
    RunReport,
    SGDConfig,
    WeightSpec,
    learning_rate,
    minibatch_gradient,
    run,
    sample_gradient,
)
from .simulate import (
    NoiseBundle,
    PathBundle,
    SimulationDivergedError,
    TimeGrid,
    draw_noise_bundle,
    simulate_forward,
    simulate_particle_system,
    simulate_with_tangents,
)

__all__ = [
    "Clamp",
    "ConfigError",
    "ExperimentConfig",
    "HermiteSystem",
    "InitialLaw",
    "IterationRecord",
    "LagrangeBasis",
    "LiftedCurve",
    "NoiseBundle",
    "PathBundle",
    "Penalty",
    "RunReport",
    "SGDConfig",
    "SampledCurve",
    "SeparableModel",
    "SimulationDivergedError",
    "TimeGrid",
    "WeightSpec",
    "build_basis",
    "build_clamp",
    "build_grid",
    "build_model",
    "build_penalty",
    "build_sgd_config",
    "chebyshev_nodes",
    "check_model",
    "clamp_apply",
    "default_penalty_radius",
    "density_reconstruct",
    "draw_noise_bundle",
    "dump_config",
    "hermite_functions",
    "interpolate_curve",
    "kernel_coefficients",
    "l2_norm",
    "learning_rate",
    "linear_oracle_curve",
    "load_config",
    "make_convolution_projected",
    "make_kuramoto",
    "make_linear_oracle",
    "make_polydrift",
    "minibatch_gradient",
    "penalty_gradient",
    "penalty_value",
    "project_kernel",
    "relative_error",
    "relative_error_values",
    "run",
    "sample_gradient",
    "simulate_forward",
    "simulate_particle_system",
    "simulate_with_tangents",
]

__version__ = "0.1.0"
