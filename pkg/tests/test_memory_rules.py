"""Memory and storage tag rules on hand-written base facts.

Every case is a short straight-line trace ``l1 -> l2 -> ...`` encoded directly
as base facts. The expected MemTag/StorageTag relations and the dependences
of the loaded value were worked out by hand from the rules, one step at a
time; the derivations are in the comments.
"""

from dataclasses import dataclass, field

import pytest

from evmsec.analysis import TOP, builtin_ruleset


@dataclass
class Case:
    name: str
    insts: list[tuple]                      # instruction facts in program order
    sources: dict = field(default_factory=dict)  # var -> may-source kind
    memtag: set = field(default_factory=set)
    stortag: set = field(default_factory=set)
    stored: set = field(default_factory=set)
    deps: set = field(default_factory=set)  # MayDepOn("y", T)

    def facts(self) -> dict[str, set[tuple]]:
        f: dict[str, set[tuple]] = {}

        def add(p, *a):
            f.setdefault(p, set()).add(a)

        labels = [i[1] for i in self.insts]
        for a, b in zip(labels, labels[1:]):
            add("Follow", a, b)
            add("NextInBlock", a, b)
        for pred, *args in self.insts:
            add(pred, *args)
            for a in args[1:]:
                if isinstance(a, int):
                    add("isConst", a)
                elif a != TOP:
                    add("isVar", a)
            if pred == "calldatacopy":
                add("CopyTag", args[0], "data")
        for v, kind in self.sources.items():
            add("Source", v, kind)
            add("Kind", kind)
        return f


CASES = [
    # mstore(l1, 0, x) writes tag x (and x's source) at 0; l2 inherits through Follow;
    # the constant-offset mload reads the tags at the same offset.
    Case("const-offset",
         [("mstore", "l1", 0, "x"), ("mload", "l2", "y", 0)],
         sources={"x": "caller"},
         memtag={("l1", 0, "x"), ("l1", 0, "caller"), ("l2", 0, "x"), ("l2", 0, "caller")},
         deps={"y", "x", "caller"}),
    # a load at another constant offset sees nothing
    Case("const-offset-other-slot",
         [("mstore", "l1", 0, "x"), ("mload", "l2", "y", 32)],
         sources={"x": "caller"},
         memtag={("l1", 0, "x"), ("l1", 0, "caller"), ("l2", 0, "x"), ("l2", 0, "caller")},
         deps={"y"}),
    # ReassignMem(l2, 0) stops x's tags at l2; only z reaches l3
    Case("kill-same-offset",
         [("mstore", "l1", 0, "x"), ("mstore", "l2", 0, "z"), ("mload", "l3", "y", 0)],
         sources={"x": "caller"},
         memtag={("l1", 0, "x"), ("l1", 0, "caller"), ("l2", 0, "z"), ("l3", 0, "z")},
         deps={"y", "z"}),
    # a write at 32 does not kill offset 0
    Case("no-kill-other-offset",
         [("mstore", "l1", 0, "x"), ("mstore", "l2", 32, "z"), ("mload", "l3", "y", 0)],
         memtag={("l1", 0, "x"), ("l2", 0, "x"), ("l2", 32, "z"), ("l3", 0, "x"), ("l3", 32, "z")},
         deps={"y", "x"}),
    # a store at an unknown offset is recorded under top and read by every load
    Case("top-store-const-load",
         [("mstore", "l1", TOP, "x"), ("mload", "l2", "y", 0)],
         memtag={("l1", TOP, "x"), ("l2", TOP, "x")},
         deps={"y", "x"}),
    # a variable offset is not a constant either, so it lands on top as well;
    # the offset variable o is also an operand of the store but MemTag only tracks the value
    Case("var-offset-store",
         [("mstore", "l1", "o", "x"), ("mload", "l2", "y", 64)],
         memtag={("l1", TOP, "x"), ("l2", TOP, "x")},
         deps={"y", "x"}),
    # a constant store never kills top
    Case("top-survives-const-store",
         [("mstore", "l1", TOP, "x"), ("mstore", "l2", 0, "z"), ("mload", "l3", "y", 32)],
         memtag={("l1", TOP, "x"), ("l2", TOP, "x"), ("l2", 0, "z"), ("l3", TOP, "x"), ("l3", 0, "z")},
         deps={"y", "x"}),
    # a load at an unknown offset reads every offset; its offset operand is a dependence too
    Case("var-offset-load",
         [("mstore", "l1", 0, "x"), ("mstore", "l2", 32, "z"), ("mload", "l3", "y", "o")],
         memtag={("l1", 0, "x"), ("l2", 0, "x"), ("l2", 32, "z"), ("l3", 0, "x"), ("l3", 32, "z")},
         deps={"y", "x", "z", "o"}),
    Case("top-load",
         [("mstore", "l1", 0, "x"), ("mload", "l2", "y", TOP)],
         memtag={("l1", 0, "x"), ("l2", 0, "x")},
         deps={"y", "x"}),
    # calldatacopy contributes its tags at top
    Case("copy-tag",
         [("calldatacopy", "l1", 0, 4, 32), ("mload", "l2", "y", 0)],
         memtag={("l1", TOP, "data"), ("l2", TOP, "data")},
         deps={"y", "data"}),
    Case("mstore8",
         [("mstore8", "l1", 0, "x"), ("mload", "l2", "y", 0)],
         memtag={("l1", 0, "x"), ("l2", 0, "x")},
         deps={"y", "x"}),
    # storage mirrors memory within a transaction
    Case("storage-const",
         [("sstore", "l1", 0, "x"), ("sload", "l2", "y", 0)],
         sources={"x": "caller"},
         stortag={("l1", 0, "x"), ("l1", 0, "caller"), ("l2", 0, "x"), ("l2", 0, "caller")},
         stored={(0, "caller")},
         deps={"y", "x", "caller"}),
    Case("storage-kill",
         [("sstore", "l1", 0, "x"), ("sstore", "l2", 0, "z"), ("sload", "l3", "y", 0)],
         stortag={("l1", 0, "x"), ("l2", 0, "z"), ("l3", 0, "z")},
         deps={"y", "z"}),
    # a store later in the trace still reaches the load through the persisted summary,
    # carrying the source kind but not the variable of the other transaction
    Case("storage-persisted",
         [("sload", "l1", "y", 0), ("sstore", "l2", 0, "x")],
         sources={"x": "caller"},
         stortag={("l2", 0, "x"), ("l2", 0, "caller")},
         stored={(0, "caller")},
         deps={"y", "caller"}),
    Case("storage-persisted-top",
         [("sload", "l1", "y", 0), ("sstore", "l2", "o", "x")],
         sources={"x": "caller"},
         stortag={("l2", TOP, "x"), ("l2", TOP, "caller")},
         stored={(TOP, "caller")},
         deps={"y", "caller"}),
    Case("storage-persisted-other-slot",
         [("sload", "l1", "y", 1), ("sstore", "l2", 0, "x")],
         sources={"x": "caller"},
         stortag={("l2", 0, "x"), ("l2", 0, "caller")},
         stored={(0, "caller")},
         deps={"y"}),
]


@pytest.mark.parametrize("case", CASES, ids=lambda c: c.name)
def test_memory_and_storage_rules(case):
    m = builtin_ruleset().evaluate(case.facts())
    assert set(m.facts("MemTag")) == case.memtag
    assert set(m.facts("StorageTag")) == case.stortag
    assert set(m.facts("Stored")) == case.stored
    assert {t for y, t in m.facts("MayDepOn") if y == "y"} == case.deps


def test_reassign_is_derived_only_for_constant_offsets():
    case = Case("r", [("mstore", "l1", 0, "x"), ("mstore", "l2", TOP, "x"), ("sstore", "l3", "o", "x")])
    m = builtin_ruleset().evaluate(case.facts())
    assert set(m.facts("ReassignMem")) == {("l1", 0)}
    assert set(m.facts("ReassignStor")) == set()
