"""sedq: exact stationary analysis of a two-server shortest-expected-delay queue."""

from .errors import (
    BoxTooSmall,
    DegenerateEigenvector,
    DegenerateQuadratic,
    DepthExceeded,
    GridExceedsTruncation,
    InvalidParam,
    MissingNeighbor,
    NoConvergenceWithinLmax,
    NonPositiveMass,
    RootCountMismatch,
    SearchExhausted,
    SedqError,
    SingularGenerator,
    SingularSystem,
    UnstableSystem,
)
from .model import (
    InternalState,
    ModelParams,
    QueueState,
    RateMatrices,
    balance_residual,
    build_rate_matrices,
    from_internal,
    to_internal,
    validate_params,
)

__version__ = "0.1.0"
