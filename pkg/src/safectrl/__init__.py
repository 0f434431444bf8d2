"""safectrl: safe multi-agent control with learned dynamics.

Building blocks: Gaussian RBF estimators with offline training and online
concurrent-learning updates (`rbf`), adaptive conformal prediction boxes for
the estimation error (`conformal`), a sampled-data control-barrier-function
filter (`cbf`) solved by an exact 2-variable QP solver (`qp`), a
deterministic world simulator wiring the loop together (`sim`), and
serialization plus run manifests (`persistence`).
"""

__version__ = "0.1.0"

from .cbf import (
    CbfConfig,
    CbfRow,
    ControlBounds,
    EgoState,
    QpProblem,
    assemble_qp,
    cbf_value,
    lie_derivatives,
    margin,
    worst_case_term,
    wrap_angle,
)
from .conformal import (
    AcpState,
    CalibrationWindow,
    PredictionBox,
    coverage_rate,
    covered,
    quantile_width,
    scores,
    update_alpha,
)
from .errors import (
    DegenerateDataError,
    InputError,
    InsufficientCalibrationError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    SafectrlError,
    SchemaError,
)
from .qp import QpSolution, check_kkt, solve
from .rbf import (
    RbfNetwork,
    RecordedDataStore,
    TrainingSample,
    basis,
    estimation_error,
    predict,
    train_offline,
    try_admit,
    update_online,
)
from .sim import (
    AgentPolicy,
    AgentSpec,
    EpisodeConfig,
    EpisodeResult,
    ReferenceSpec,
    TrackerConfig,
    WorldState,
    collect_offline,
    finite_difference,
    reference_tracker,
    run_batch,
    run_episode,
    step_agent,
    step_ego,
    train_from_datasets,
)
