"""Run the built-in rules over a contract's base facts."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..datalog import Model
from ..datalog.engine import DEFAULT_MAX_FACTS
from ..decompiler.ir import Cfg
from .facts import TAG_KINDS, BaseFactSet, extract_base_facts
from .ruleset import builtin_ruleset


@dataclass
class SemanticModel:
    """Least model of the built-in rules together with the value universes.

    ``labels``, ``vars`` and ``consts`` are what pattern quantifiers range
    over; ``tags`` is the set of symbolic source tags.
    """

    model: Model
    base: BaseFactSet
    labels: frozenset[str] = frozenset()
    vars: frozenset[str] = frozenset()
    consts: frozenset[int] = frozenset()
    tags: frozenset[str] = field(default_factory=lambda: frozenset(TAG_KINDS))

    def holds(self, pred: str, *args) -> bool:
        return self.model.holds(pred, tuple(args))

    def facts(self, pred: str) -> frozenset[tuple]:
        return self.model.facts(pred)

    @property
    def cfg(self) -> Cfg:
        return self.base.cfg


def infer(base: BaseFactSet, max_facts: int = DEFAULT_MAX_FACTS) -> SemanticModel:
    model = builtin_ruleset().evaluate(base.facts, max_facts=max_facts)
    labels = frozenset(t[0] for t in base.get("InBlock"))
    vars_ = frozenset(t[0] for t in base.get("isVar"))
    consts = frozenset(t[0] for t in base.get("isConst"))
    return SemanticModel(model, base, labels, vars_, consts)


def analyze_cfg(cfg: Cfg, max_facts: int = DEFAULT_MAX_FACTS, opaque_offsets: bool = False) -> SemanticModel:
    return infer(extract_base_facts(cfg, opaque_offsets), max_facts)
