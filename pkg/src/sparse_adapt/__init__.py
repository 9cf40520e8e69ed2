"""Sparse adaptive channel estimation: LMS/NLMS/LMF/NLMF filters with
Lp and approximate-L0 zero-attracting penalties, a sparse MISO channel
simulator and a Monte-Carlo MSE harness."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ChannelRealization,
    NoiseSpec,
    SampleStream,
    generate_channel,
    sigma_from_snr,
    training_stream,
)
from .errors import (  # noqa: E402
    DegenerateRegressorError,
    DimensionError,
    DivergenceError,
    NonFiniteInputError,
    ParameterError,
)
from .filters import (  # noqa: E402
    AlgorithmSpec,
    Family,
    FilterState,
    Penalty,
    StepRecord,
    compute_error,
    l0_penalty_term,
    lp_penalty_term,
    nlmf_step_size,
    parse_label,
    step,
)
from .harness import (  # noqa: E402
    ExperimentConfig,
    MseTrajectory,
    build_config,
    run_experiment,
    run_trial,
    table1_lambda,
)
