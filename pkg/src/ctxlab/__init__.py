"""Exact contextuality analysis of finite discrete systems of random variables."""
from .model import (
    Alphabet,
    BINARY,
    BunchDistribution,
    Connection,
    Marginal,
    System,
    SystemFormat,
    SystemValidationError,
    connections,
    is_consistently_connected,
    make_system,
    validate_system,
)
from .couplings import COMONOTONIC, IDENTITY, JointDistribution, check_well_fitting, get_rule
from .feasibility import LinearSystem, solve_feasibility, verify_result
from .contextuality import (
    CONTEXTUAL,
    NONCONTEXTUAL,
    build_decision_lp,
    decide_contextual,
    decide_contextual_constrained,
    decide_traditional,
    hull_oracle,
)
from .consistify import consistify, verify_equivalence
from .hvm import hvm_from_witness, hvm_reproduces
from .generators import GeneratorSpec, gen_named, gen_system
from .io import parse_document, parse_system, serialize_system

__version__ = "0.1.0"
