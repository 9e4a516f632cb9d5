"""Simulator for Sender-Receiver quantum protocols computing matrix operations.

Matrix entries are encoded as amplitudes of single-excitation sender
states; an excitation-preserving unitary W routes the answer into
order-n coherences of the receiver's density matrix.
"""
from .errors import (
    ConstraintConflictError,
    DegenerateDecodeError,
    NormalizationError,
    SenrecError,
    SingularMatrixError,
    SystemSizeError,
    ValidationError,
)
from .evolution import (
    CoherenceElement,
    ReceiverDensity,
    apply_receiver_unitary,
    evolve_dense,
    evolve_sector,
    extract,
    partial_trace,
    run,
)
from .excitation_space import (
    JointState,
    MultiIndex,
    SenderState,
    SystemLayout,
    encode_sender,
    enumerate_sector,
    sector_rank,
    tensor_product,
)
from .protocols import (
    ProtocolPlan,
    ScalePolicy,
    decode,
    plan_determinant,
    plan_inverse,
    plan_linsolve,
    plan_matmul,
    plan_matsum,
    plan_matvec,
)
from .unitary_forge import (
    PartialUnitarySpec,
    add_row_constraint,
    apply_constrained_rows,
    complete,
    complete_sector,
    validate,
)

__version__ = "0.1.0"
