"""Reasoning over object-oriented configuration models and their instantiations."""

from .completion import (
    INPUT_INVALID,
    SAT,
    UNSAT_WITHIN_BOUNDS,
    CompletionConfig,
    CompletionError,
    CompletionResult,
    ConsistencyResult,
    check_model_consistency,
    complete,
)
from .constraints import (
    ConstraintRule,
    ConstraintSyntaxError,
    UnsafeRule,
    evaluate_constraints,
    parse_constraints,
    read_constraint_file,
)
from .ddl import (
    DDLError,
    FactFile,
    Workspace,
    load,
    load_files,
    parse_facts,
    read_fact_file,
    serialize_facts,
)
from .model import (
    Association,
    AttributeDecl,
    IllFormedModel,
    Instantiation,
    Model,
    UnknownIdentifier,
    Violation,
    build_model,
)
from .reconciliation import ChangeSet, CostTable, ReifiedFact, reconcile, reify
from .validation import COMPLETE, PARTIAL, ModelMismatch, ValidationReport, validate

__all__ = [
    "Association", "AttributeDecl", "COMPLETE", "ChangeSet", "CompletionConfig", "CompletionError",
    "CompletionResult", "ConsistencyResult", "ConstraintRule", "ConstraintSyntaxError", "CostTable",
    "DDLError", "FactFile", "INPUT_INVALID", "IllFormedModel", "Instantiation", "Model",
    "ModelMismatch", "PARTIAL", "ReifiedFact", "SAT", "UNSAT_WITHIN_BOUNDS", "UnknownIdentifier",
    "UnsafeRule", "ValidationReport", "Violation", "Workspace", "build_model",
    "check_model_consistency", "complete", "evaluate_constraints", "load", "load_files",
    "parse_constraints", "parse_facts", "read_constraint_file", "read_fact_file", "reconcile",
    "reify", "serialize_facts", "validate",
]
