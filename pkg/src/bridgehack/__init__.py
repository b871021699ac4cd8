"""Prior hacking for classical channels and quantum channels, with the
Schrödinger bridges built from hacked priors."""

from .errors import (
    BridgeHackError,
    DimensionTooLarge,
    DivisionSingularity,
    InvalidInput,
    NotDecoherent,
    NotHermitian,
    RankDeficient,
    SupportViolation,
)
from .classical import (
    FeasibilityVerdict,
    HackSolution,
    Status,
    bayes_inverse,
    bayes_update,
    bridge_from_prior,
    check_feasibility,
    is_always_hackable,
    is_primitive,
    make_channel,
    prior_hack_ras,
)
from .quantum import (
    BridgeResult,
    KrausChannel,
    QStatus,
    QuantumHackSolution,
    make_qubit_channel,
    petz_map,
    qsb_hermitian,
    qsb_inference_consistent,
    quantum_prior_hack,
)

__version__ = "0.1.0"
