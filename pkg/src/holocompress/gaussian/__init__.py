"""Pure Gaussian states of harmonic lattices and their mode-truncation compression."""

from .compression import (
    DecayFit,
    GaussianCapacityError,
    NormalFormData,
    NormalFormError,
    GaussianCompressionReport,
    TruncationResult,
    decay_fit,
    decay_profile,
    gaussian_schmidt_normal_form,
    offdiagonal_norm_bound,
    theorem3_pipeline,
    truncate_normal_form,
    xi_truncate,
)
from .states import (
    CovarianceMatrix,
    GaplessModelError,
    HarmonicModel,
    gaussian_overlap,
    ground_covariance,
    squeezed_vacuum_covariance,
    two_mode_squeezed_covariance,
)
from .symplectic import (
    SymplecticSpectrum,
    interlacing_check,
    perturbation_gap,
    symplectic_eigenvalues,
    symplectic_form,
    symplectic_spectrum,
    williamson,
)
