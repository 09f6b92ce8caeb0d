"""OAM spiral-spectrum engineering for SPDC photon pairs.

Three pillars: coincidence-spectrum computation for shaped pump beams
(closed forms plus direct quadrature of the overlap integral), design of
the diffractive phase elements that produce those pump shapes, and
high-dimensional two-photon state tomography with the usual entanglement
witnesses.
"""

from .errors import (
    AccuracyError,
    ConvergenceError,
    DegenerateInputError,
    DivergenceError,
    MappingSingularityError,
    NormalizationError,
    SamplingError,
    WindowError,
)
from .pumps import AiryPump, GaussianPump, PumpProfile, TabulatedPump, TruncatedExponentialPump
from .shaping import (
    PhaseProfile,
    RadialIntensity,
    ShaperSystem,
    airy_profile,
    energy_constant,
    fit_exponential_a,
    flattop_phase_reference,
    mapping_residual,
    propagate_fourier,
    solve_phase_ode,
)
from .special import upper_incomplete_gamma_int
from .spectrum import (
    ScanCell,
    SetupParams,
    SpiralSpectrum,
    crosstalk_visibility,
    exponential_spectrum,
    gaussian_spectrum,
    numerical_spectrum,
    overlap_amplitude,
    scan_schmidt,
    schmidt_number,
)
from .tomography import (
    CountsRecord,
    DensityMatrix,
    GeneratorBasis,
    LinearReconstruction,
    MUBSet,
    cglmp_value,
    dimensional_witness,
    fidelity,
    linear_entropy,
    linear_reconstruct,
    mes_state,
    mle_reconstruct,
    mub_bases,
    simulate_counts,
    su_generators,
    theoretical_state,
    tomography_settings,
)

__version__ = "0.1.0"
