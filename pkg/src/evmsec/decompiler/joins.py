"""Branch join points from immediate postdominators."""

from __future__ import annotations

import networkx as nx

from .ir import Cfg

EXIT = "<exit>"


def block_graph(cfg: Cfg) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(cfg.blocks)
    g.add_node(EXIT)
    for b in cfg.blocks:
        succs = cfg.edges.get(b, ())
        for s in succs:
            g.add_edge(b, s)
        if not succs:
            g.add_edge(b, EXIT)
    return g


def postdominator_tree(cfg: Cfg) -> dict[str, str]:
    """Immediate postdominator per block (blocks that cannot exit are absent)."""
    rev = block_graph(cfg).reverse(copy=True)
    return nx.immediate_dominators(rev, EXIT)


def first_label_from(cfg: Cfg, bid: str) -> str | None:
    # an empty block with a single way out is transparent
    seen = set()
    while bid != EXIT and bid not in seen:
        seen.add(bid)
        blk = cfg.blocks[bid]
        if blk.instructions:
            return blk.instructions[0].label
        succs = cfg.edges.get(bid, ())
        if len(succs) != 1:
            return None
        bid = succs[0]
    return None


def compute_join_points(cfg: Cfg) -> frozenset[tuple[str, str]]:
    ipdom = postdominator_tree(cfg)
    joins = set()
    for bid, blk in cfg.blocks.items():
        if not blk.instructions or blk.instructions[-1].opcode != "goto":
            continue
        j = ipdom.get(bid)
        if j is None or j == EXIT or j == bid:
            continue
        label = first_label_from(cfg, j)
        if label is not None:
            joins.add((blk.instructions[-1].label, label))
    return frozenset(joins)


def with_join_points(cfg: Cfg) -> Cfg:
    return cfg.with_blocks(cfg.blocks, join_points=compute_join_points(cfg))
