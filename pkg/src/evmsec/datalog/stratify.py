"""Well-formedness checks and stratification of Datalog programs."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .terms import Program, Rule


@dataclass(frozen=True)
class Diagnostic:
    rule_index: int
    variable: str | None
    message: str

    def __str__(self) -> str:
        return f"rule {self.rule_index}: {self.message}"


class StratificationError(ValueError):
    def __init__(self, cycle: list[str]):
        super().__init__("negation inside a recursive cycle: " + " -> ".join(cycle))
        self.cycle = cycle


def check_well_formed(program: Program) -> list[Diagnostic]:
    """Head variables must occur in the body; negated variables in a positive literal.

    Also reports predicates used with inconsistent arities. Returns an empty
    list for a well-formed program.
    """
    diags: list[Diagnostic] = []
    arities: dict[str, tuple[int, int]] = {}
    for i, rule in enumerate(program.rules):
        positive = {v.name for l in rule.body if l.positive for v in l.atom.variables()}
        for v in rule.head.variables():
            if v.anonymous:
                diags.append(Diagnostic(i, v.name, "anonymous variable in head"))
            elif v.name not in positive:
                diags.append(Diagnostic(i, v.name, f"{v.name} unbound: occurs in head but in no positive body literal"))
        for lit in rule.body:
            if lit.positive:
                continue
            for v in lit.atom.variables():
                if not v.anonymous and v.name not in positive:
                    diags.append(Diagnostic(i, v.name, f"{v.name} occurs only in negated literal {lit.atom}"))
        for atom in [rule.head] + [l.atom for l in rule.body]:
            seen = arities.setdefault(atom.pred, (atom.arity, i))
            if seen[0] != atom.arity:
                diags.append(Diagnostic(i, None, f"{atom.pred} used with arity {atom.arity} and {seen[0]}"))
    return diags


@dataclass(frozen=True)
class Stratum:
    predicates: frozenset[str]
    rules: tuple[Rule, ...]

    @property
    def recursive(self) -> bool:
        return any(l.atom.pred in self.predicates for r in self.rules for l in r.body)


@dataclass(frozen=True)
class Stratification:
    strata: tuple[Stratum, ...]

    def index_of(self, pred: str) -> int | None:
        for i, s in enumerate(self.strata):
            if pred in s.predicates:
                return i
        return None

    def __len__(self) -> int:
        return len(self.strata)


def dependency_graph(program: Program) -> nx.DiGraph:
    """Edge body-pred -> head-pred; attribute ``negative`` if any such use is negated."""
    g = nx.DiGraph()
    g.add_nodes_from(sorted(program.predicates()))
    for rule in program.rules:
        for lit in rule.body:
            a, b = lit.atom.pred, rule.head.pred
            neg = g.edges[a, b]["negative"] if g.has_edge(a, b) else False
            g.add_edge(a, b, negative=neg or not lit.positive)
    return g


def stratify(program: Program) -> Stratification:
    g = dependency_graph(program)
    cond = nx.condensation(g)
    members = nx.get_node_attributes(cond, "members")
    for node, preds in members.items():
        for a, b, data in g.subgraph(preds).edges(data=True):
            if data["negative"]:
                try:
                    cycle = [u for u, _ in nx.find_cycle(g.subgraph(preds), source=b)]
                except nx.NetworkXNoCycle:
                    cycle = [a]
                raise StratificationError(cycle + [cycle[0]])
    idb = program.idb
    by_head: dict[str, list[Rule]] = {}
    for r in program.rules:
        by_head.setdefault(r.head.pred, []).append(r)
    order = nx.lexicographical_topological_sort(cond, key=lambda n: min(members[n]))
    strata = []
    for node in order:
        preds = frozenset(p for p in members[node] if p in idb)
        if not preds:
            continue
        rules = tuple(r for p in sorted(preds) for r in by_head[p])
        strata.append(Stratum(preds, rules))
    return Stratification(tuple(strata))
