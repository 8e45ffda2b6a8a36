"""Husimi phase-space densities from homodyne tomography data.

The Husimi function of a single-mode state is obtained from its rotated
quadrature distributions through the bounded kernel 2 daw'(y), either by
deterministic quadrature or as a Monte Carlo average over homodyne samples.
"""

__version__ = "0.1.0"
INTERFACE_VERSION = "1"

from .errors import ConfigError, HusimiTomoError, NumericError, TruncationError  # noqa: E402
from .inverse import DivergenceScan, divergence_scan, partial_inverse_integral  # noqa: E402
from .kernel import dawson, hermite_poly, kernel_closed, kernel_series  # noqa: E402
from .quadrature import (  # noqa: E402
    QuadratureSample,
    QuadratureScheme,
    SampleBatch,
    SamplerTable,
    build_sampler,
    quad_cdf,
    quad_density,
    sample_eht,
)
from .states import (  # noqa: E402
    DensityMatrix,
    PhasePoint,
    hermite_function,
    husimi_direct,
    make_coherent_state,
    make_mixture,
    make_number_state,
    make_pure_state,
    make_thermal_state,
    wigner,
)
from .transform import (  # noqa: E402
    MCEstimate,
    ScalarField,
    coherent_identity_check,
    hermite_gaussian_moment_check,
    husimi_from_kernel,
    husimi_kernel_field,
    husimi_mc_estimate,
    radon_wigner_check,
)
