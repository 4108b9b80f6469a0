"""Progressive channel estimation and discrete-phase passive beamforming
for a reflecting-surface-aided single-user link.

The library covers the full pipeline: discrete phase alphabets, training
reflection matrix design, subgroup partitions that refine group channels
block by block, Rician link simulation, least-squares progressive
estimation with closed-form error statistics, SINR-maximizing discrete
beamforming, and seeded Monte-Carlo experiments with CSV output.
"""

from .beamforming import (
    BeamformingProblem,
    BeamformingSolution,
    continuous_upper_bound,
    exhaustive_search,
    init_gain_max,
    init_replication,
    init_sdr,
    rate,
    rate_from_sinr,
    sinr,
    sinr_upper_bound,
    successive_refinement,
)
from .channel import (
    ChannelRealization,
    Geometry,
    LinkParams,
    aggregate,
    default_geometry,
    default_link_params,
    path_loss,
    sample_channels,
)
from .estimation import (
    BlockEstimate,
    ProgressiveEstimator,
    closed_form_intra_mse,
    error_covariance,
    ls_per_group,
    resolve_subgroups,
    simulate_training_rx,
)
from .partition import (
    CannotRefineError,
    PartitionState,
    SplitEvent,
    SubgroupTrainingMatrix,
    extend_matrix,
    initial_partition,
    matrix_sequence,
    next_reflection_vector,
    partition_sequence,
    refine_partition,
    training_schedule,
)
from .phases import PhaseAlphabet, product, quantize_phase
from .protocol import (
    BlockResult,
    FrameConfig,
    FrameSimulator,
    run_all_at_once_benchmark,
    run_frame,
    run_random_selection_benchmark,
)
from .sdp import SdpProblem, SdpSolution, SolverFailure, gaussian_randomization, solve_relaxation
from .training import (
    ReflectionMatrix,
    TrainingDesignReport,
    UnsupportedOrderError,
    design_basis_matrix,
    dft_matrix,
    exhaustive_optimal_basis,
    hadamard_matrix,
    naive_matrix,
    normalized_training_mse,
    quantized_dft,
    truncated_hadamard,
)

__version__ = "0.1.0"
