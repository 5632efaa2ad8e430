"""The security pattern language: parsing, desugaring, evaluation and verdicts."""

from .ast import (
    AllInstr, And, Atom, Binder, Cmp, Exists, ForAll, Implies, Not, Or, PVar, SomeInstr, free_vars, is_core,
)
from .classify import (
    Finding, PropertyConfigError, PropertySpec, PropertyVerdict, Verdict, classify, classify_property,
    load_properties, parse_property,
)
from .desugar import desugar, substitute
from .evaluate import Evaluator, FactContext, PatternEvaluationError, evaluate
from .parser import SEMANTIC, PatternSyntaxError, parse_pattern

__all__ = [
    "AllInstr", "And", "Atom", "Binder", "Cmp", "Evaluator", "Exists", "FactContext", "Finding", "ForAll",
    "Implies", "Not", "Or", "PVar", "PatternEvaluationError", "PatternSyntaxError", "PropertyConfigError",
    "PropertySpec", "PropertyVerdict", "SEMANTIC", "SomeInstr", "Verdict", "classify", "classify_property",
    "desugar", "evaluate", "free_vars", "is_core", "load_properties", "parse_pattern", "parse_property",
    "substitute",
]
