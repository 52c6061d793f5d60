"""Simulate, verify and certify measurement-and-feedback teleportation protocols on qubit chains."""
from .bounds import BoundReport, check_bounds, fyhl_bound, min_depth, standard_bound
from .builtins import FAMILIES, BuiltinParameterError, BuiltinSpec, build
from .errors import (
    BackendUnsupportedError,
    CanonicalizationError,
    ImpossibleOutcomeError,
    ProtocolError,
    TrivialObservableError,
)
from .gates import Gate
from .observables import InvolutoryObservable, involutory_part
from .pauli import PauliString, parse_pauli
from .protocol import (
    CanonicalProtocol,
    Protocol,
    canonicalize,
    depth_velocity,
    load_protocol,
    parse_protocol,
    task_distance,
    validate_standard,
)
from .stabilizer import Tableau, tableau_from_product
from .statevector import DenseOperator, StateVector, init_product_state
from .stringorder import (
    SPTCertificate,
    StringOrderParameter,
    attachment_map,
    certify_spt,
    end_to_end_sops,
    evaluate_sop,
    segment_regions,
)
from .verifier import (
    VerificationReport,
    commutation_audit,
    feedback_ablation,
    heisenberg_verify,
    verify_state_transfer,
)

__all__ = [
    "BackendUnsupportedError",
    "BoundReport",
    "BuiltinParameterError",
    "BuiltinSpec",
    "CanonicalProtocol",
    "CanonicalizationError",
    "DenseOperator",
    "FAMILIES",
    "Gate",
    "ImpossibleOutcomeError",
    "InvolutoryObservable",
    "PauliString",
    "Protocol",
    "ProtocolError",
    "SPTCertificate",
    "StateVector",
    "StringOrderParameter",
    "Tableau",
    "TrivialObservableError",
    "VerificationReport",
    "attachment_map",
    "build",
    "canonicalize",
    "certify_spt",
    "check_bounds",
    "commutation_audit",
    "depth_velocity",
    "end_to_end_sops",
    "evaluate_sop",
    "feedback_ablation",
    "fyhl_bound",
    "heisenberg_verify",
    "init_product_state",
    "involutory_part",
    "load_protocol",
    "min_depth",
    "parse_pauli",
    "parse_protocol",
    "segment_regions",
    "standard_bound",
    "tableau_from_product",
    "task_distance",
    "validate_standard",
    "verify_state_transfer",
]
