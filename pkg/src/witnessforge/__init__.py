"""Entanglement witnesses for depolarized bipartite states and noisy twin
beams, local measurement quora, and simulated homodyne tomography."""

from .linalg import (
    ConvergenceError,
    SvdResult,
    complex_svd,
    hermitian_eig,
    hs_inner,
    kron,
    partial_transpose,
    unvectorize,
    vectorize,
)
from .states import (
    BipartiteDensity,
    WitnessOperator,
    maximally_entangled_operator,
    random_product_state,
    random_state_operator,
    schmidt_operator,
)
from .witness_finite import (
    DepolarizedFamily,
    QuorumDecomposition,
    QuorumTerm,
    build_witness,
    depolarized_state,
    detection_threshold,
    evaluate_witness,
    min_eigvec_operator,
    min_pt_eigenvalue,
    quorum_decompose,
)
from .specfn import chf, f00, f01, f11, oscillator_psi, oscillator_psi_table
from .cv import (
    FockTruncation,
    GaussThreshold,
    TruncationError,
    apply_gaussian_noise,
    beam_splitter,
    beam_splitter_unitary,
    cv_witness,
    embed,
    gauss_separability_threshold,
    gauss_witness_expectation,
    gaussian_noise_blocks,
    noise_truncation,
    phase_noisy_twb,
    phase_witness_expectation,
    pt_eigenvalue_diagonal,
    pt_eigenvalue_pair,
    pt_min_eigenvalue,
    pt_spectrum_analytic,
    quadrature_operator,
    single_mode_gaussian_noise,
    squeezing_witness,
    twb_mean_photons,
    twb_state,
)
from .tomography import (
    HomodyneBatch,
    McEstimate,
    joint_quadrature_pdf,
    mc_estimate_witness,
    sample_homodyne,
    witness_kernel,
)

__version__ = "0.1.0"
