"""Workbench for guarded ontology-mediated queries."""
from .chase import OMQ, TGD, Ontology, eval_omq, run_chase
from .errors import (
    BudgetExceeded,
    BudgetRequired,
    GuardOMQError,
    ParseError,
    PreconditionError,
    SchemaError,
    ThresholdExceeded,
)
from .query import CQ, UCQ, contractions, subqueries
from .relstruct import (
    Fact,
    Homomorphism,
    Schema,
    Structure,
    core_of,
    find_homomorphism,
    is_injective_only,
    product,
)
from .textformat import parse_workspace

__all__ = [
    "BudgetExceeded", "BudgetRequired", "CQ", "Fact", "GuardOMQError", "Homomorphism", "OMQ",
    "Ontology", "ParseError", "PreconditionError", "Schema", "SchemaError", "Structure", "TGD",
    "ThresholdExceeded", "UCQ", "contractions", "core_of", "eval_omq", "find_homomorphism",
    "is_injective_only", "parse_workspace", "product", "run_chase", "subqueries",
]
__version__ = "0.1.0"
