"""Semantic facts about a decompiled contract."""

from .facts import TOP, BaseFactSet, extract_base_facts
from .infer import SemanticModel, analyze_cfg, infer
from .ruleset import builtin_ruleset, instruction_signatures, operand_rules, result_signatures, rules_text

__all__ = [
    "TOP", "BaseFactSet", "SemanticModel", "analyze_cfg", "builtin_ruleset", "extract_base_facts",
    "infer", "instruction_signatures", "operand_rules", "result_signatures", "rules_text",
]
