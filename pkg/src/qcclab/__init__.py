"""Numerical laboratory for one-shot quantum channel coding.

Success probabilities of non-signaling assisted and meta-converse coding
programs via semidefinite programming, rounding protocols that turn the
optimizers into entanglement-assisted strategies, and sandwiched Renyi
quantities with their strong converse exponents.
"""

from .channels import (
    ChannelError,
    ChoiMatrix,
    KrausChannel,
    QCChannel,
    amplitude_damping,
    apply,
    choi_of,
    classical,
    computational_povm,
    dephasing,
    depolarizing,
    identity_channel,
    load_channel,
    measurement_channel,
    power,
    random_cptp,
    random_state,
    replacer,
    save_channel,
    tensor,
    trine_povm,
    validate_cptp,
)
from .divergence import (
    MutualInfoCurve,
    MutualInfoResult,
    channel_mutual_info,
    converse_bound_check,
    mutual_info_curve,
    sandwiched,
    sc_exponent,
    umegaki,
)
from .operators import OperatorError
from .protocols import (
    DesignSample,
    FlatteningDecomposition,
    MatrixSampler,
    ProtocolError,
    ProtocolReport,
    design_operator_sampler,
    deterministic_sampler,
    flattening,
    hn_inequality_check,
    hn_protocol,
    matrix_chernoff_check,
    mc_to_ns_lift,
    multiplicative_protocol,
    pauli_one_design,
    qc_sequential_protocol,
)
from .sdp import (
    HermitianSdp,
    NsSolution,
    SdpSolution,
    SolverError,
    hypothesis_test_value,
    mc_success,
    mc_success_dual_fixed,
    mc_success_fixed,
    ns_success,
    ns_success_fixed,
    solve,
    symmetrize_check,
)

__version__ = "0.1.0"
