from .barrier import (
    SeparationResult,
    barrier_check,
    psi_delta,
    psi_delta_flat_derivative,
    psi_delta_separation,
    psi_delta_upper_bound,
    separation_radius,
)
from .derivatives import (
    DerivativeReport,
    GeneratorValue,
    flat_derivative,
    flow_derivative_check,
    flow_quotient,
    generator,
    intrinsic_derivative,
    support_window,
)
from .functionals import (
    MeasureFunctional,
    constant_functional,
    first_moment_functional,
    hamiltonian_functional,
    linear_functional,
    second_moment_functional,
    time_affine_functional,
)
from .oracles import (
    pairwise_envelope,
    pairwise_value_recursion,
    support_enumeration_value,
    transport_cost_lp,
    wasserstein_lp,
)
from .report import CheckReport, CheckRow, REPORT_COLUMNS
from .solutions import (
    comparison_check,
    explicit_solution,
    flow_integral,
    non_revealing_functional,
    quadrature_nodes,
    random_flow_samples,
    subsolution_flow_check,
    truncated_hamiltonian,
    truncation_check,
)

__all__ = [
    'CheckReport',
    'CheckRow',
    'DerivativeReport',
    'GeneratorValue',
    'MeasureFunctional',
    'REPORT_COLUMNS',
    'SeparationResult',
    'barrier_check',
    'comparison_check',
    'constant_functional',
    'explicit_solution',
    'first_moment_functional',
    'flat_derivative',
    'flow_derivative_check',
    'flow_integral',
    'flow_quotient',
    'generator',
    'hamiltonian_functional',
    'intrinsic_derivative',
    'linear_functional',
    'non_revealing_functional',
    'pairwise_envelope',
    'pairwise_value_recursion',
    'psi_delta',
    'psi_delta_flat_derivative',
    'psi_delta_separation',
    'psi_delta_upper_bound',
    'quadrature_nodes',
    'random_flow_samples',
    'second_moment_functional',
    'separation_radius',
    'subsolution_flow_check',
    'support_enumeration_value',
    'support_window',
    'time_affine_functional',
    'transport_cost_lp',
    'truncated_hamiltonian',
    'truncation_check',
    'wasserstein_lp',
]
