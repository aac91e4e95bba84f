"""Quantum and classical Fisher information for the separation of two coherent point sources."""

from .classical import (
    IntensityPattern,
    classical_fisher_s,
    intensity_pattern,
    midpoint_curvature,
    sparrow_separation,
)
from .errors import (
    CoherentQfiError,
    DegenerateCriterionError,
    DegenerateStateError,
    DivergingLimitError,
    EstimationFailedError,
    GridCoverageError,
    InvalidParameterError,
    InvalidPsfError,
    NoRootError,
    NotAStateError,
)
from .estimation import (
    EstimationReport,
    McConfig,
    estimation_experiment,
    log_likelihood,
    mle_separation,
    sample_detections,
)
from .psf import (
    GaussianPsf,
    GridPsf,
    OverlapTable,
    PsfModel,
    load_grid_psf,
    make_gaussian_psf,
    make_grid_psf,
    overlap_table,
)
from .qfi import (
    QfiResult,
    qfi_coherent,
    qfi_entangled,
    qfi_incoherent,
    qfi_pure,
    qfi_rank2,
    qfi_small_s_coefficients,
    qfi_sorted_total,
    qfi_zero_separation,
    sld_qfi_matrix,
)
from .states import (
    EntangledState,
    SubEnsemble,
    TwoPointState,
    entangled_state,
    incoherent_mixture,
    make_state,
    rank2_state,
    sub_ensembles,
    superposition_state,
)

__version__ = "0.1.0"
