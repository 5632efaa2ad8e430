"""A generic stratified Datalog engine."""

from .engine import (
    CompiledProgram,
    IllFormedProgramError,
    IntensionalInputError,
    Model,
    Relation,
    ResourceLimitError,
    evaluate,
    query,
    sort_key,
)
from .parse import DatalogSyntaxError, parse_atom, parse_program, parse_rules
from .stratify import Diagnostic, Stratification, StratificationError, Stratum, check_well_formed, stratify
from .terms import Atom, Fact, Literal, Program, Rule, Variable

__all__ = [
    "Atom", "CompiledProgram", "DatalogSyntaxError", "Diagnostic", "Fact", "IllFormedProgramError",
    "IntensionalInputError", "Literal", "Model", "Program", "Relation", "ResourceLimitError", "Rule",
    "Stratification", "StratificationError", "Stratum", "Variable", "check_well_formed", "evaluate",
    "parse_atom", "parse_program", "parse_rules", "query", "sort_key", "stratify",
]
